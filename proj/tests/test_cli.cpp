// End-to-end CLI checks: exit codes, reproducibility of metric records, and
// checkpoint resume. The binary path arrives as the first non-doctest arg.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

std::string g_cli;

std::string fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / "steinprune_cli_tests" / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

int run(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string write_config(const std::string& dir, const std::string& extra = "") {
    const std::string path = dir + "/exp.ini";
    std::ofstream out(path);
    out << R"(
[dataset]
kind = blobs
classes = 2
per_class = 32
dim = 4
separation = 6.0
holdout_fraction = 0.25

[network]
hidden = 12

[train]
epochs = 10
batch_size = 16
beta = 0.1
seed = 9
plateau_epochs = 0
)" << extra;
    return path;
}

// metric records with the wall-clock field stripped
std::vector<std::string> metric_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        j.erase("wall_clock_ms");
        lines.push_back(j.dump());
    }
    return lines;
}

}  // namespace

TEST_CASE("help and usage") {
    CHECK(run("--help") == 0);
    CHECK(run("train --help") == 0);
    CHECK(run("") == 2);
    CHECK(run("nosuchcommand") == 2);
}

TEST_CASE("config errors exit 2") {
    const std::string dir = fresh_dir("badcfg");
    CHECK(run("train /does/not/exist.ini --out " + dir) == 2);
    const std::string bad = dir + "/bad.ini";
    {
        std::ofstream out(bad);
        out << "[dataset]\nkind = csv\n";  // missing dataset.path
    }
    CHECK(run("train " + bad + " --out " + dir) == 2);
    // misspelled sweep kind
    const std::string cfg = write_config(dir);
    CHECK(run("sweep " + cfg + " alleatoric --out " + dir) == 2);
}

TEST_CASE("crlb prints the clean case") {
    const std::string dir = fresh_dir("crlb");
    const std::string out_file = dir + "/crlb.json";
    const std::string cmd =
        g_cli + " crlb --case clean --eps2 1 --json > " + out_file + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::ifstream in(out_file);
    const auto j = nlohmann::json::parse(in);
    CHECK(j["efficiency"].get<double>() == 1.0);
    CHECK(j["crlb"].get<double>() == 1.0);
    CHECK(run("crlb --case model_noise --eps2 1 --alpha2 1") == 0);
    CHECK(run("crlb --case clean --eps2 0") == 2);
}

TEST_CASE("train/prune/analyze pipeline with reproducible records") {
    const std::string dir = fresh_dir("pipeline");
    const std::string cfg = write_config(dir);

    const std::string out_a = dir + "/a";
    const std::string out_b = dir + "/b";
    REQUIRE(run("train " + cfg + " --out " + out_a) == 0);
    REQUIRE(run("train " + cfg + " --out " + out_b) == 0);

    const auto lines_a = metric_lines(out_a + "/trace.jsonl");
    const auto lines_b = metric_lines(out_b + "/trace.jsonl");
    REQUIRE(!lines_a.empty());
    CHECK(lines_a == lines_b);

    // identical checkpoints byte for byte
    std::ifstream fa(out_a + "/checkpoint.dllp", std::ios::binary);
    std::ifstream fb(out_b + "/checkpoint.dllp", std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);

    CHECK(run("prune " + cfg + " " + out_a + "/checkpoint.dllp --method dllp_slab --out " + out_a) ==
          0);
    CHECK(std::filesystem::exists(out_a + "/prune_summary.json"));
    CHECK(run("prune " + cfg + " " + out_a + "/checkpoint.dllp --method magnitude --mode sparsity"
              " --value 0.5 --out " + out_a) == 0);
    CHECK(run("analyze " + out_a + "/checkpoint.dllp --out " + out_a) == 0);
    CHECK(run("export-hist " + out_a + "/checkpoint.dllp --out " + out_a) == 0);
    // prune with a mismatched config exits 2
    const std::string cfg2 = dir + "/other.ini";
    {
        std::ofstream out(cfg2);
        std::ifstream in(cfg);
        out << in.rdbuf() << "\n[train]\n";
    }
    CHECK(run("prune " + cfg + " " + out_a + "/nonexistent.dllp --out " + out_a) == 2);
}

TEST_CASE("env seed override changes the run deterministically") {
    const std::string dir = fresh_dir("envseed");
    const std::string cfg = write_config(dir);
    const std::string out_a = dir + "/a", out_b = dir + "/b", out_c = dir + "/c";
    const std::string base = "STEINPRUNE_SEED=1234 " + g_cli + " train " + cfg;
    REQUIRE(WEXITSTATUS(std::system((base + " --out " + out_a + " >/dev/null 2>&1").c_str())) == 0);
    REQUIRE(WEXITSTATUS(std::system((base + " --out " + out_b + " >/dev/null 2>&1").c_str())) == 0);
    REQUIRE(run("train " + cfg + " --out " + out_c) == 0);
    CHECK(metric_lines(out_a + "/trace.jsonl") == metric_lines(out_b + "/trace.jsonl"));
    CHECK(metric_lines(out_a + "/trace.jsonl") != metric_lines(out_c + "/trace.jsonl"));
}

int main(int argc, char** argv) {
    doctest::Context context;
    std::vector<char*> pass;
    pass.push_back(argv[0]);
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (!arg.empty() && arg[0] != '-' && g_cli.empty())
            g_cli = arg;
        else
            pass.push_back(argv[i]);
    }
    if (g_cli.empty()) {
        std::fprintf(stderr, "usage: test_cli <path-to-steinprune-binary> [doctest args]\n");
        return 1;
    }
    context.applyCommandLine(static_cast<int>(pass.size()), pass.data());
    return context.run();
}
