#include "steinprune/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace steinprune {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_raw(const std::string& text, const std::string& origin) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            raw[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key before any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (raw[section].count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + section +
                              "." + key);
        raw[section][key] = value;
    }
    return raw;
}

struct FieldReader {
    const RawConfig& raw;
    const std::string& origin;
    std::set<std::string> consumed;

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        auto s = raw.find(section);
        if (s == raw.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        consumed.insert(section + "." + key);
        return k->second;
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        auto v = get(section, key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const double d = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigError(origin + ": " + section + "." + key + ": not a number: '" + *v + "'");
        }
    }

    std::uint64_t unsigned_int(const std::string& section, const std::string& key,
                               std::uint64_t fallback) {
        auto v = get(section, key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const long long d = std::stoll(*v, &pos);
            if (pos != v->size() || d < 0) throw std::invalid_argument("bad");
            return static_cast<std::uint64_t>(d);
        } catch (const std::exception&) {
            throw ConfigError(origin + ": " + section + "." + key +
                              ": not a non-negative integer: '" + *v + "'");
        }
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) {
        auto v = get(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw ConfigError(origin + ": " + section + "." + key + ": expected true/false: '" + *v +
                          "'");
    }

    std::string text(const std::string& section, const std::string& key, std::string fallback) {
        auto v = get(section, key);
        return v ? *v : fallback;
    }

    std::vector<double> number_list(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) {
        auto v = get(section, key);
        if (!v) return fallback;
        std::vector<double> out;
        std::stringstream ss(*v);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell = trim(cell);
            if (cell.empty()) continue;
            try {
                out.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(origin + ": " + section + "." + key + ": bad list entry '" +
                                  cell + "'");
            }
        }
        return out;
    }

    std::vector<std::size_t> uint_list(const std::string& section, const std::string& key,
                                       std::vector<std::size_t> fallback) {
        auto v = get(section, key);
        if (!v) return fallback;
        std::vector<std::size_t> out;
        std::stringstream ss(*v);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell = trim(cell);
            if (cell.empty()) continue;
            try {
                const long long d = std::stoll(cell);
                if (d < 1) throw std::invalid_argument("bad");
                out.push_back(static_cast<std::size_t>(d));
            } catch (const std::exception&) {
                throw ConfigError(origin + ": " + section + "." + key + ": bad list entry '" +
                                  cell + "'");
            }
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [section, keys] : raw)
            for (const auto& [key, value] : keys)
                if (!consumed.count(section + "." + key))
                    throw ConfigError(origin + ": unknown key " + section + "." + key);
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<LayerSpec> ExperimentConfig::topology(std::size_t input_dim,
                                                  std::size_t classes) const {
    std::vector<LayerSpec> topo;
    std::size_t fan_in = input_dim;
    for (std::size_t width : hidden) {
        topo.push_back({fan_in, width, Activation::Relu});
        fan_in = width;
    }
    topo.push_back({fan_in, classes, classes > 1 ? Activation::SoftmaxOut : Activation::Identity});
    return topo;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    const RawConfig raw = parse_raw(text, origin);
    FieldReader reader{raw, origin, {}};
    ExperimentConfig cfg;

    const std::string kind = reader.text("dataset", "kind", "blobs");
    if (kind == "blobs")
        cfg.dataset.kind = DatasetKind::Blobs;
    else if (kind == "linear")
        cfg.dataset.kind = DatasetKind::Linear;
    else if (kind == "csv")
        cfg.dataset.kind = DatasetKind::Csv;
    else if (kind == "idx")
        cfg.dataset.kind = DatasetKind::Idx;
    else
        throw ConfigError(origin + ": dataset.kind: unknown kind '" + kind + "'");

    cfg.dataset.classes = reader.unsigned_int("dataset", "classes", cfg.dataset.classes);
    cfg.dataset.per_class = reader.unsigned_int("dataset", "per_class", cfg.dataset.per_class);
    cfg.dataset.dim = reader.unsigned_int("dataset", "dim", cfg.dataset.dim);
    cfg.dataset.separation = reader.number("dataset", "separation", cfg.dataset.separation);
    cfg.dataset.samples = reader.unsigned_int("dataset", "samples", cfg.dataset.samples);
    cfg.dataset.noise_std = reader.number("dataset", "noise_std", cfg.dataset.noise_std);
    cfg.dataset.path = reader.text("dataset", "path", cfg.dataset.path);
    cfg.dataset.has_header = reader.boolean("dataset", "has_header", cfg.dataset.has_header);
    cfg.dataset.images = reader.text("dataset", "images", cfg.dataset.images);
    cfg.dataset.labels = reader.text("dataset", "labels", cfg.dataset.labels);
    cfg.dataset.normalization = reader.text("dataset", "normalization", cfg.dataset.normalization);
    cfg.dataset.holdout_fraction =
        reader.number("dataset", "holdout_fraction", cfg.dataset.holdout_fraction);
    if (cfg.dataset.normalization != "default" && cfg.dataset.normalization != "standardize" &&
        cfg.dataset.normalization != "none")
        throw ConfigError(origin + ": dataset.normalization: expected default|standardize|none");
    if (cfg.dataset.holdout_fraction < 0.0 || cfg.dataset.holdout_fraction >= 1.0)
        throw ConfigError(origin + ": dataset.holdout_fraction: must lie in [0,1)");

    cfg.hidden = reader.uint_list("network", "hidden", cfg.hidden);

    auto& t = cfg.train;
    t.epochs = reader.unsigned_int("train", "epochs", t.epochs);
    t.batch_size = reader.unsigned_int("train", "batch_size", t.batch_size);
    t.beta = reader.number("train", "beta", t.beta);
    t.lr.start = reader.number("train", "lr_start", t.lr.start);
    t.lr.end = reader.number("train", "lr_end", t.lr.end);
    const std::string lr_mode = reader.text("train", "lr_mode", "cosine");
    if (lr_mode == "cosine")
        t.lr.mode = LearningRateSchedule::Mode::Cosine;
    else if (lr_mode == "constant")
        t.lr.mode = LearningRateSchedule::Mode::Constant;
    else
        throw ConfigError(origin + ": train.lr_mode: expected cosine|constant");
    t.seed = reader.unsigned_int("train", "seed", t.seed);
    t.temperature.tau_start = reader.number("train", "tau_start", t.temperature.tau_start);
    t.temperature.tau_end = reader.number("train", "tau_end", t.temperature.tau_end);
    t.particles = reader.unsigned_int("train", "particles", t.particles);
    t.gate_init = reader.number("train", "gate_init", t.gate_init);
    t.gate_learning_rate = reader.number("train", "gate_lr", t.gate_learning_rate);
    t.noise_learning_rate = reader.number("train", "noise_lr", t.noise_learning_rate);
    t.lambda_init = reader.number("train", "lambda_init", t.lambda_init);
    t.d_init = reader.number("train", "d_init", t.d_init);
    t.epsilon_ratio = reader.number("train", "epsilon_ratio", t.epsilon_ratio);
    const std::string bw = reader.text("train", "bandwidth", "median");
    if (bw == "median")
        t.kernel.mode = KernelConfig::Bandwidth::MedianHeuristic;
    else if (bw == "fixed")
        t.kernel.mode = KernelConfig::Bandwidth::Fixed;
    else
        throw ConfigError(origin + ": train.bandwidth: expected median|fixed");
    t.kernel.fixed_bandwidth = reader.number("train", "fixed_bandwidth", t.kernel.fixed_bandwidth);
    t.kernel.heuristic_floor = reader.number("train", "heuristic_floor", t.kernel.heuristic_floor);
    t.plateau_tolerance = reader.number("train", "plateau_tolerance", t.plateau_tolerance);
    t.plateau_epochs = reader.unsigned_int("train", "plateau_epochs", t.plateau_epochs);
    t.scale_likelihood = reader.boolean("train", "scale_likelihood", t.scale_likelihood);
    t.bayes_updates = reader.boolean("train", "bayes_updates", t.bayes_updates);
    t.prior_trust_region = reader.number("train", "prior_trust_region", t.prior_trust_region);
    t.max_update_step = reader.number("train", "max_update_step", t.max_update_step);
    t.gate_samples_per_step =
        reader.unsigned_int("train", "gate_samples_per_step", t.gate_samples_per_step);
    t.checkpoint_every = reader.unsigned_int("train", "checkpoint_every", t.checkpoint_every);

    cfg.gate_threshold = reader.number("prune", "gate_threshold", cfg.gate_threshold);
    cfg.bins = reader.unsigned_int("prune", "bins", cfg.bins);
    if (cfg.gate_threshold < 0.0 || cfg.gate_threshold > 1.0)
        throw ConfigError(origin + ": prune.gate_threshold: must lie in [0,1]");
    if (cfg.bins < 2) throw ConfigError(origin + ": prune.bins: must be >= 2");

    cfg.sweep.aleatoric_levels =
        reader.number_list("sweep", "aleatoric_levels", cfg.sweep.aleatoric_levels);
    cfg.sweep.epistemic_fractions =
        reader.number_list("sweep", "epistemic_fractions", cfg.sweep.epistemic_fractions);

    cfg.output_dir = reader.text("output", "dir", cfg.output_dir);

    reader.reject_unknown();

    try {
        t.validate();
    } catch (const std::exception& e) {
        throw ConfigError(origin + ": train: " + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    // Canonical serialization of the effective config: every field, fixed
    // order, typed formatting. Key order or number spelling in the source
    // file cannot change the hash.
    std::ostringstream s;
    s << "dataset.kind=" << static_cast<int>(c.dataset.kind) << "\n"
      << "dataset.classes=" << c.dataset.classes << "\n"
      << "dataset.per_class=" << c.dataset.per_class << "\n"
      << "dataset.dim=" << c.dataset.dim << "\n"
      << "dataset.separation=" << fmt(c.dataset.separation) << "\n"
      << "dataset.samples=" << c.dataset.samples << "\n"
      << "dataset.noise_std=" << fmt(c.dataset.noise_std) << "\n"
      << "dataset.path=" << c.dataset.path << "\n"
      << "dataset.has_header=" << c.dataset.has_header << "\n"
      << "dataset.images=" << c.dataset.images << "\n"
      << "dataset.labels=" << c.dataset.labels << "\n"
      << "dataset.normalization=" << c.dataset.normalization << "\n"
      << "dataset.holdout_fraction=" << fmt(c.dataset.holdout_fraction) << "\n";
    s << "network.hidden=";
    for (std::size_t w : c.hidden) s << w << ",";
    s << "\n";
    const auto& t = c.train;
    s << "train.epochs=" << t.epochs << "\n"
      << "train.batch_size=" << t.batch_size << "\n"
      << "train.beta=" << fmt(t.beta) << "\n"
      << "train.lr_start=" << fmt(t.lr.start) << "\n"
      << "train.lr_end=" << fmt(t.lr.end) << "\n"
      << "train.lr_mode=" << static_cast<int>(t.lr.mode) << "\n"
      << "train.seed=" << t.seed << "\n"
      << "train.tau_start=" << fmt(t.temperature.tau_start) << "\n"
      << "train.tau_end=" << fmt(t.temperature.tau_end) << "\n"
      << "train.particles=" << t.particles << "\n"
      << "train.gate_init=" << fmt(t.gate_init) << "\n"
      << "train.gate_lr=" << fmt(t.gate_learning_rate) << "\n"
      << "train.noise_lr=" << fmt(t.noise_learning_rate) << "\n"
      << "train.lambda_init=" << fmt(t.lambda_init) << "\n"
      << "train.d_init=" << fmt(t.d_init) << "\n"
      << "train.epsilon_ratio=" << fmt(t.epsilon_ratio) << "\n"
      << "train.bandwidth=" << static_cast<int>(t.kernel.mode) << "\n"
      << "train.fixed_bandwidth=" << fmt(t.kernel.fixed_bandwidth) << "\n"
      << "train.heuristic_floor=" << fmt(t.kernel.heuristic_floor) << "\n"
      << "train.plateau_tolerance=" << fmt(t.plateau_tolerance) << "\n"
      << "train.plateau_epochs=" << t.plateau_epochs << "\n"
      << "train.scale_likelihood=" << t.scale_likelihood << "\n"
      << "train.bayes_updates=" << t.bayes_updates << "\n"
      << "train.prior_trust_region=" << fmt(t.prior_trust_region) << "\n"
      << "train.max_update_step=" << fmt(t.max_update_step) << "\n"
      << "train.gate_samples_per_step=" << t.gate_samples_per_step << "\n"
      << "train.checkpoint_every=" << t.checkpoint_every << "\n";
    s << "prune.gate_threshold=" << fmt(c.gate_threshold) << "\n"
      << "prune.bins=" << c.bins << "\n";
    s << "sweep.aleatoric_levels=";
    for (double v : c.sweep.aleatoric_levels) s << fmt(v) << ",";
    s << "\nsweep.epistemic_fractions=";
    for (double v : c.sweep.epistemic_fractions) s << fmt(v) << ",";
    s << "\noutput.dir=" << c.output_dir << "\n";

    const std::string canon = s.str();
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData data;
    DatasetBatch full;
    bool scale01 = false;
    switch (config.dataset.kind) {
        case DatasetKind::Blobs:
            full = generate_blobs(config.dataset.classes, config.dataset.per_class,
                                  config.dataset.dim, config.dataset.separation, config.train.seed);
            data.classes = config.dataset.classes;
            break;
        case DatasetKind::Linear:
            full = generate_linear(config.dataset.samples, config.dataset.dim,
                                   config.dataset.noise_std, config.train.seed);
            data.classes = 1;
            break;
        case DatasetKind::Csv: {
            if (config.dataset.path.empty()) throw ConfigError("dataset.path: required for csv");
            CsvOptions opts;
            opts.has_header = config.dataset.has_header;
            full = load_csv(config.dataset.path, opts);
            int mx = 0;
            for (int y : full.labels) mx = std::max(mx, y);
            data.classes = static_cast<std::size_t>(mx) + 1;
            break;
        }
        case DatasetKind::Idx: {
            if (config.dataset.images.empty() || config.dataset.labels.empty())
                throw ConfigError("dataset.images/dataset.labels: required for idx");
            full = load_idx(config.dataset.images, config.dataset.labels);
            int mx = 0;
            for (int y : full.labels) mx = std::max(mx, y);
            data.classes = static_cast<std::size_t>(mx) + 1;
            scale01 = true;  // already scaled by the loader
            break;
        }
    }
    if (!full.regression) full.validate(data.classes);

    const bool standardizing = config.dataset.normalization == "standardize" ||
                               (config.dataset.normalization == "default" && !scale01);
    if (standardizing) data.normalization = standardize(full);

    if (config.dataset.holdout_fraction > 0.0 && full.size() > 1) {
        auto [train_split, holdout_split] =
            split_holdout(full, config.dataset.holdout_fraction, config.train.seed);
        data.train = std::move(train_split);
        data.holdout = std::move(holdout_split);
    } else {
        data.train = std::move(full);
    }
    return data;
}

}  // namespace steinprune
