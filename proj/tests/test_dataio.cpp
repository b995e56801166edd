#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "steinprune/dataio.hpp"
#include "steinprune/network.hpp"
#include "steinprune/train.hpp"

using namespace steinprune;

namespace {

std::string tmpdir() {
    static const std::string dir = [] {
        auto d = std::filesystem::temp_directory_path() / "steinprune_dataio_tests";
        std::filesystem::create_directories(d);
        return d.string();
    }();
    return dir;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back((x >> 24) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

std::pair<std::string, std::string> write_idx(std::uint32_t count, std::uint32_t rows,
                                              std::uint32_t cols, unsigned char pixel,
                                              const std::string& tag,
                                              std::uint32_t label_count = 0xffffffff) {
    std::vector<unsigned char> img;
    push_be32(img, 0x803);
    push_be32(img, count);
    push_be32(img, rows);
    push_be32(img, cols);
    img.insert(img.end(), static_cast<std::size_t>(count) * rows * cols, pixel);
    std::vector<unsigned char> lab;
    push_be32(lab, 0x801);
    push_be32(lab, label_count == 0xffffffff ? count : label_count);
    const std::uint32_t n = label_count == 0xffffffff ? count : label_count;
    for (std::uint32_t i = 0; i < n; ++i) lab.push_back(static_cast<unsigned char>(i % 10));
    const std::string ip = tmpdir() + "/" + tag + "_images.idx";
    const std::string lp = tmpdir() + "/" + tag + "_labels.idx";
    write_bytes(ip, img);
    write_bytes(lp, lab);
    return {ip, lp};
}

}  // namespace

TEST_CASE("idx loader") {
    SUBCASE("single max pixel scales to 1.0") {
        const auto [ip, lp] = write_idx(1, 1, 1, 255, "one");
        const DatasetBatch batch = load_idx(ip, lp);
        CHECK(batch.size() == 1);
        CHECK(batch.inputs.at(0, 0) == 1.0);
        CHECK(batch.labels[0] == 0);
    }
    SUBCASE("count mismatch is a format error") {
        const auto [ip, lp] = write_idx(3, 2, 2, 10, "mismatch", 2);
        CHECK_THROWS_AS(load_idx(ip, lp), FormatError);
    }
    SUBCASE("bad magic names byte offset 0") {
        std::vector<unsigned char> img;
        push_be32(img, 0x804);
        push_be32(img, 1);
        push_be32(img, 1);
        push_be32(img, 1);
        img.push_back(0);
        const std::string ip = tmpdir() + "/bad_images.idx";
        write_bytes(ip, img);
        const auto [ip2, lp] = write_idx(1, 1, 1, 0, "goodlab");
        try {
            load_idx(ip, lp);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
        }
    }
    SUBCASE("truncated image payload names the offset") {
        std::vector<unsigned char> img;
        push_be32(img, 0x803);
        push_be32(img, 2);
        push_be32(img, 2);
        push_be32(img, 2);
        img.insert(img.end(), 5, 7);  // should be 8 pixel bytes
        const std::string ip = tmpdir() + "/trunc_images.idx";
        write_bytes(ip, img);
        const auto [ip2, lp] = write_idx(2, 2, 2, 0, "trunclab");
        CHECK_THROWS_AS(load_idx(ip, lp), FormatError);
    }
    SUBCASE("mnist-shaped test header parses to [10000, 784]") {
        const auto [ip, lp] = write_idx(10000, 28, 28, 128, "mnist");
        const DatasetBatch batch = load_idx(ip, lp);
        CHECK(batch.inputs.shape == std::vector<std::size_t>{10000, 784});
        CHECK(batch.inputs.at(0, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
    }
}

TEST_CASE("csv loader") {
    const std::string path = tmpdir() + "/data.csv";
    {
        std::ofstream out(path);
        out << "label,f0,f1\n1,0.5,-2.0\n0,1.5,3.25\n";
    }
    CsvOptions opts;
    opts.has_header = true;
    const DatasetBatch batch = load_csv(path, opts);
    CHECK(batch.size() == 2);
    CHECK(batch.labels[0] == 1);
    CHECK(batch.inputs.at(1, 1) == 3.25);

    const std::string bad = tmpdir() + "/bad.csv";
    {
        std::ofstream out(bad);
        out << "1,0.5\n0,oops\n";
    }
    CHECK_THROWS_AS(load_csv(bad, {}), FormatError);
}

TEST_CASE("blob generation") {
    SUBCASE("deterministic per seed") {
        const DatasetBatch a = generate_blobs(3, 10, 5, 4.0, 99);
        const DatasetBatch b = generate_blobs(3, 10, 5, 4.0, 99);
        CHECK(a.inputs.values == b.inputs.values);
        CHECK(a.labels == b.labels);
        const DatasetBatch c = generate_blobs(3, 10, 5, 4.0, 100);
        CHECK(a.inputs.values != c.inputs.values);
    }
    SUBCASE("centers sit at the requested pairwise separation") {
        const std::size_t per_class = 4000;
        const DatasetBatch batch = generate_blobs(3, per_class, 4, 6.0, 7);
        std::vector<std::vector<double>> means(3, std::vector<double>(4, 0.0));
        for (std::size_t i = 0; i < batch.size(); ++i)
            for (std::size_t j = 0; j < 4; ++j)
                means[batch.labels[i]][j] += batch.inputs.at(i, j) / per_class;
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < 4; ++j)
                    d2 += (means[a][j] - means[b][j]) * (means[a][j] - means[b][j]);
                CHECK(std::sqrt(d2) == doctest::Approx(6.0).epsilon(0.03));
            }
    }
    SUBCASE("a trained linear probe separates 6-sigma blobs") {
        const DatasetBatch data = generate_blobs(2, 500, 20, 6.0, 12);
        const std::vector<LayerSpec> topo = {{20, 2, Activation::SoftmaxOut}};
        RngState rng(1, 1);
        NetworkParams probe = init_network(topo, rng);
        for (int epoch = 0; epoch < 200; ++epoch) {
            const Gradients grads = backward(probe, nullptr, data, LossKind::CrossEntropy);
            sgd_step(probe, grads, 0.5);
        }
        CHECK(accuracy(probe, nullptr, data) >= 0.999);
    }
    SUBCASE("config errors") {
        CHECK_THROWS_AS(generate_blobs(2, 0, 4, 6.0, 1), ConfigError);
        CHECK_THROWS_AS(generate_blobs(5, 10, 3, 6.0, 1), ConfigError);
    }
}

TEST_CASE("gaussian corruption") {
    const DatasetBatch base = generate_blobs(2, 50, 10, 6.0, 55);
    SUBCASE("std 0 is the identity") {
        const DatasetBatch same = corrupt_gaussian(base, 0.0, 1);
        CHECK(same.inputs.values == base.inputs.values);
    }
    SUBCASE("fixed seed is deterministic") {
        const DatasetBatch a = corrupt_gaussian(base, 0.2, 9);
        const DatasetBatch b = corrupt_gaussian(base, 0.2, 9);
        CHECK(a.inputs.values == b.inputs.values);
        CHECK(a.labels == base.labels);
    }
    SUBCASE("noise moments match the requested std") {
        DatasetBatch wide;
        wide.inputs = Tensor::zeros({100, 1000});
        wide.labels.assign(100, 0);
        const DatasetBatch noisy = corrupt_gaussian(wide, 0.2, 31);
        double acc = 0.0;
        for (double v : noisy.inputs.values) acc += v * v;
        const double std_hat = std::sqrt(acc / static_cast<double>(noisy.inputs.values.size()));
        CHECK(std::abs(std_hat - 0.2) < 0.005);
    }
    CHECK_THROWS_AS(corrupt_gaussian(base, -0.1, 1), DomainError);
}

TEST_CASE("standardize and holdout split") {
    DatasetBatch batch = generate_blobs(2, 100, 6, 6.0, 77);
    const Normalization norm = standardize(batch);
    CHECK(norm.shift.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) mean += batch.inputs.at(i, j);
        mean /= static_cast<double>(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const double d = batch.inputs.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(batch.size());
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
    }

    const auto [train_part, holdout_part] = split_holdout(batch, 0.25, 3);
    CHECK(train_part.size() == 150);
    CHECK(holdout_part.size() == 50);
    const auto [t2, h2] = split_holdout(batch, 0.25, 3);
    CHECK(t2.inputs.values == train_part.inputs.values);
    CHECK(h2.size() == 50);
}
