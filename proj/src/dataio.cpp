#include "steinprune/dataio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "steinprune/train.hpp"

namespace steinprune {

namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& path) {
    if (offset + 4 > bytes.size())
        throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

void Normalization::apply(Tensor& inputs) const {
    if (empty()) return;
    const std::size_t d = inputs.cols();
    if (shift.size() != d || scale.size() != d)
        throw ShapeError("normalization dimension mismatch");
    for (std::size_t i = 0; i < inputs.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            inputs.at(i, j) = (inputs.at(i, j) - shift[j]) / scale[j];
}

DatasetBatch load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file_bytes(images_path);
    const auto lab = read_file_bytes(labels_path);

    const std::uint32_t img_magic = read_be32(img, 0, images_path);
    if (img_magic != 0x00000803u)
        throw FormatError(images_path + ": bad image magic at byte offset 0 (got " +
                          std::to_string(img_magic) + ", want 2051)");
    const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
    if (lab_magic != 0x00000801u)
        throw FormatError(labels_path + ": bad label magic at byte offset 0 (got " +
                          std::to_string(lab_magic) + ", want 2049)");

    const std::uint32_t count = read_be32(img, 4, images_path);
    const std::uint32_t rows = read_be32(img, 8, images_path);
    const std::uint32_t cols = read_be32(img, 12, images_path);
    const std::uint32_t lab_count = read_be32(lab, 4, labels_path);
    if (count != lab_count)
        throw FormatError("image/label count mismatch: " + std::to_string(count) + " vs " +
                          std::to_string(lab_count));

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const std::size_t need = 16 + static_cast<std::size_t>(count) * pixels;
    if (img.size() != need)
        throw FormatError(images_path + ": expected " + std::to_string(need) +
                          " bytes, got " + std::to_string(img.size()) +
                          " (truncation at byte offset " + std::to_string(img.size()) + ")");
    if (lab.size() != 8 + static_cast<std::size_t>(count))
        throw FormatError(labels_path + ": expected " + std::to_string(8 + count) +
                          " bytes, got " + std::to_string(lab.size()));
    if (count == 0) throw FormatError(images_path + ": empty dataset");

    DatasetBatch batch;
    batch.inputs = Tensor::zeros({count, pixels});
    batch.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p = 0; p < pixels; ++p)
            batch.inputs.values[i * pixels + p] =
                static_cast<double>(img[16 + i * pixels + p]) / 255.0;
        batch.labels[i] = static_cast<int>(lab[8 + i]);
    }
    return batch;
}

DatasetBatch load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && options.has_header) continue;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            try {
                const double v = std::stod(cell);
                if (first) {
                    const int y = static_cast<int>(std::llround(v));
                    if (y < 0) throw FormatError(path + ":" + std::to_string(lineno) +
                                                 ": negative label");
                    labels.push_back(y);
                    first = false;
                } else {
                    row.push_back(v);
                }
            } catch (const std::invalid_argument&) {
                throw FormatError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                                  cell + "'");
            }
        }
        if (first) throw FormatError(path + ":" + std::to_string(lineno) + ": missing label column");
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError(path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path + ": no data rows");

    DatasetBatch batch;
    const std::size_t d = rows.front().size();
    batch.inputs = Tensor::zeros({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) batch.inputs.at(i, j) = rows[i][j];
    batch.labels = std::move(labels);
    if (!batch.inputs.all_finite()) throw FormatError(path + ": non-finite feature value");
    return batch;
}

namespace {
// Vertices of a regular simplex with `classes` corners and the requested
// pairwise distance, embedded in the first classes-1 coordinates.
std::vector<std::vector<double>> simplex_centers(std::size_t classes, std::size_t dim,
                                                 double separation) {
    // Start from e_i in R^classes (pairwise distance sqrt(2)), center, then
    // project onto an orthonormal basis of the spanned subspace.
    std::vector<std::vector<double>> centered(classes, std::vector<double>(classes, 0.0));
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = 0; j < classes; ++j)
            centered[i][j] = (i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(classes);
    }
    // Gram-Schmidt over the differences v_i - v_0 gives classes-1 basis vectors.
    std::vector<std::vector<double>> basis;
    for (std::size_t i = 1; i < classes; ++i) {
        std::vector<double> v(classes);
        for (std::size_t j = 0; j < classes; ++j) v[j] = centered[i][j] - centered[0][j];
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < classes; ++j) dot += v[j] * b[j];
            for (std::size_t j = 0; j < classes; ++j) v[j] -= dot * b[j];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    const double scale = separation / std::sqrt(2.0);
    std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < classes; ++i)
        for (std::size_t k = 0; k < basis.size(); ++k) {
            double coord = 0.0;
            for (std::size_t j = 0; j < classes; ++j) coord += centered[i][j] * basis[k][j];
            centers[i][k] = scale * coord;
        }
    return centers;
}
}  // namespace

DatasetBatch generate_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                            double separation, std::uint64_t seed) {
    if (classes < 2) throw ConfigError("blobs need at least 2 classes");
    if (per_class == 0) throw ConfigError("per_class must be >= 1");
    if (dim < classes - 1)
        throw ConfigError("blobs need dim >= classes - 1 (got dim=" + std::to_string(dim) +
                          ", classes=" + std::to_string(classes) + ")");
    if (separation < 0.0) throw ConfigError("separation must be >= 0");

    const auto centers = simplex_centers(classes, dim, separation);
    RngState rng(seed, kStreamData);
    DatasetBatch batch;
    batch.inputs = Tensor::zeros({classes * per_class, dim});
    batch.labels.resize(classes * per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            for (std::size_t j = 0; j < dim; ++j)
                batch.inputs.at(row, j) = centers[c][j] + rng.next_gaussian();
            batch.labels[row] = static_cast<int>(c);
        }
    }
    return batch;
}

DatasetBatch generate_linear(std::size_t samples, std::size_t dim, double noise_std,
                             std::uint64_t seed) {
    if (samples == 0) throw ConfigError("samples must be >= 1");
    if (dim == 0) throw ConfigError("dim must be >= 1");
    if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
    RngState rng(seed, kStreamData);
    std::vector<double> w(dim);
    for (double& x : w) x = rng.next_gaussian();
    DatasetBatch batch;
    batch.regression = true;
    batch.inputs = Tensor::zeros({samples, dim});
    batch.targets.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double x = rng.next_gaussian();
            batch.inputs.at(i, j) = x;
            y += w[j] * x;
        }
        batch.targets[i] = y + noise_std * rng.next_gaussian();
    }
    return batch;
}

DatasetBatch corrupt_gaussian(const DatasetBatch& batch, double std_dev, std::uint64_t seed) {
    if (std_dev < 0.0) throw DomainError("std must be >= 0");
    DatasetBatch out = batch;
    if (std_dev == 0.0) return out;
    RngState rng(seed, kStreamCorrupt);
    for (double& v : out.inputs.values) v += std_dev * rng.next_gaussian();
    return out;
}

Normalization standardize(DatasetBatch& batch) {
    const std::size_t n = batch.size(), d = batch.feature_dim();
    Normalization norm;
    norm.shift.assign(d, 0.0);
    norm.scale.assign(d, 1.0);
    if (n == 0) return norm;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += batch.inputs.at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = batch.inputs.at(i, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        norm.shift[j] = mean;
        norm.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    norm.apply(batch.inputs);
    return norm;
}

std::pair<DatasetBatch, DatasetBatch> split_holdout(const DatasetBatch& batch, double fraction,
                                                    std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("holdout fraction must lie in [0,1)");
    RngState rng(seed, kStreamData + 7);
    const auto order = shuffled_indices(batch.size(), rng);
    const std::size_t hold = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(batch.size())));
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(hold));
    std::vector<std::size_t> hold_idx(order.end() - static_cast<std::ptrdiff_t>(hold), order.end());
    if (train_idx.empty()) throw ConfigError("holdout fraction leaves no training data");
    return {batch.select(train_idx), batch.select(hold_idx)};
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd < 0) throw IoError("cannot open " + tmp + ": " + std::strerror(errno));
        std::size_t off = 0;
        while (off < bytes.size()) {
            const ssize_t w = ::write(fd, bytes.data() + off, bytes.size() - off);
            if (w < 0) {
                ::close(fd);
                throw IoError("write failed for " + tmp + ": " + std::strerror(errno));
            }
            off += static_cast<std::size_t>(w);
        }
        if (::fsync(fd) != 0) {
            ::close(fd);
            throw IoError("fsync failed for " + tmp);
        }
        ::close(fd);
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("rename " + tmp + " -> " + path + " failed: " + std::strerror(errno));
}

}  // namespace steinprune
