#include "steinprune/steinprune.h"

#include <cstring>
#include <string>

#include "steinprune/checkpoint.hpp"
#include "steinprune/experiment.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

// Translate C++ failures into status codes; anything structural or
// user-facing maps to SP_ERR_CONFIG so the CLI can exit 2.
template <typename Fn>
sp_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const steinprune::DivergenceError& e) {
        set_error(e.what());
        return SP_ERR_DIVERGED;
    } catch (const steinprune::ConfigError& e) {
        set_error(e.what());
        return SP_ERR_CONFIG;
    } catch (const steinprune::FormatError& e) {
        set_error(e.what());
        return SP_ERR_CONFIG;
    } catch (const steinprune::ShapeError& e) {
        set_error(e.what());
        return SP_ERR_CONFIG;
    } catch (const steinprune::DomainError& e) {
        set_error(e.what());
        return SP_ERR_CONFIG;
    } catch (const steinprune::IoError& e) {
        set_error(e.what());
        return SP_ERR_IO;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SP_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return SP_ERR_INTERNAL;
    }
}

std::optional<std::uint64_t> override_of(int has_override, uint64_t value) {
    if (has_override) return value;
    return std::nullopt;
}

}  // namespace

struct sp_config {
    steinprune::ExperimentConfig config;
};

struct sp_checkpoint {
    steinprune::Checkpoint checkpoint;
};

extern "C" {

const char* sp_version(void) { return "steinprune 1.0.0"; }

const char* sp_last_error(void) { return g_last_error.c_str(); }

sp_status sp_config_load(const char* path, sp_config** out) {
    if (!path || !out) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        auto* handle = new sp_config{steinprune::load_config(path)};
        *out = handle;
        return SP_OK;
    });
}

sp_status sp_config_parse(const char* text, sp_config** out) {
    if (!text || !out) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        auto* handle = new sp_config{steinprune::parse_config_text(text)};
        *out = handle;
        return SP_OK;
    });
}

void sp_config_free(sp_config* config) { delete config; }

sp_status sp_config_hash_hex(const sp_config* config, char* buf, size_t buflen) {
    if (!config || !buf || buflen < 17) {
        set_error("buffer too small (need 17 bytes)");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        const std::uint64_t h = steinprune::config_hash(config->config);
        std::snprintf(buf, buflen, "%016llx", static_cast<unsigned long long>(h));
        return SP_OK;
    });
}

sp_status sp_checkpoint_open(const char* path, sp_checkpoint** out) {
    if (!path || !out) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        auto* handle = new sp_checkpoint{steinprune::load_checkpoint(path)};
        *out = handle;
        return SP_OK;
    });
}

sp_status sp_checkpoint_query(const sp_checkpoint* checkpoint, sp_checkpoint_info* out) {
    if (!checkpoint || !out) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    const auto& ck = checkpoint->checkpoint;
    out->format_version = ck.format_version;
    out->particles = static_cast<uint32_t>(ck.ensemble.size());
    out->layers = static_cast<uint32_t>(ck.ensemble.topology.size());
    out->param_count = ck.ensemble.particles.empty()
                           ? 0
                           : ck.ensemble.particles.front().params.scalar_count();
    out->global_step = ck.train_state.global_step;
    out->epoch = ck.train_state.epoch;
    return SP_OK;
}

void sp_checkpoint_free(sp_checkpoint* checkpoint) { delete checkpoint; }

sp_status sp_train(const sp_config* config, const char* resume_checkpoint_or_null,
                   const char* out_dir, int has_seed_override, uint64_t seed_override) {
    if (!config || !out_dir) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        const auto outcome = steinprune::run_train(
            config->config, out_dir,
            resume_checkpoint_or_null ? resume_checkpoint_or_null : "",
            override_of(has_seed_override, seed_override));
        if (outcome.diverged) {
            set_error("training diverged; trace retained at " + outcome.trace_path);
            return SP_ERR_DIVERGED;
        }
        return SP_OK;
    });
}

sp_status sp_prune(const sp_config* config, const char* checkpoint_path, const char* method,
                   const char* mode, double value, const char* out_dir, int has_seed_override,
                   uint64_t seed_override) {
    if (!config || !checkpoint_path || !method || !out_dir) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        steinprune::run_prune(config->config, checkpoint_path, method, mode ? mode : "", value,
                              out_dir, override_of(has_seed_override, seed_override));
        return SP_OK;
    });
}

sp_status sp_analyze(const char* checkpoint_path, uint32_t bins, const char* out_dir) {
    if (!checkpoint_path || !out_dir) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        steinprune::run_analyze(checkpoint_path, bins, out_dir);
        return SP_OK;
    });
}

sp_status sp_sweep(const sp_config* config, const char* kind, const char* out_dir,
                   int has_seed_override, uint64_t seed_override) {
    if (!config || !kind || !out_dir) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        const auto outcome = steinprune::run_sweep(config->config, kind, out_dir,
                                                   override_of(has_seed_override, seed_override));
        if (outcome.succeeded == 0) {
            set_error("all sweep cells failed");
            return SP_ERR_SWEEP_ALL_FAILED;
        }
        return SP_OK;
    });
}

sp_status sp_crlb_eval(const char* noise_case, double eps2, double alpha2, double beta2,
                       sp_efficiency_report* out) {
    if (!noise_case || !out) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        const auto report = steinprune::run_crlb(noise_case, eps2, alpha2, beta2);
        out->crlb = report.crlb;
        out->estimator_variance = report.estimator_variance;
        out->efficiency = report.efficiency;
        return SP_OK;
    });
}

sp_status sp_export_hist(const char* checkpoint_path, uint32_t bins, int32_t layer,
                         const char* out_dir) {
    if (!checkpoint_path || !out_dir) {
        set_error("null argument");
        return SP_ERR_CONFIG;
    }
    return guarded([&] {
        steinprune::run_export_hist(checkpoint_path, bins, layer, out_dir);
        return SP_OK;
    });
}

}  // extern "C"
