#include "relugd.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "gd.hpp"
#include "labels.hpp"
#include "oracles.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
    g_last_error = what;
    return code;
}

relugd::WeightVector make_wv(size_t d, const double* w, double bias) {
    relugd::WeightVector out;
    out.w_tilde.assign(w, w + d);
    out.bias = bias;
    return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const relugd::ConfigError& e) {
        return fail(RGD_CONFIG_ERROR, e.what());
    } catch (const relugd::OracleIncompatibility& e) {
        return fail(RGD_ORACLE_INCOMPATIBLE, e.what());
    } catch (const std::exception& e) {
        return fail(RGD_INVALID_ARGUMENT, e.what());
    }
}

relugd::CommandOptions make_options(const char* config_path, const char* out_dir, int has_seed,
                                    uint64_t seed, int jobs) {
    relugd::CommandOptions opts;
    opts.config_path = config_path ? config_path : "";
    opts.out_dir = out_dir ? out_dir : "";
    if (has_seed) opts.seed = seed;
    if (jobs > 0) opts.jobs = jobs;
    return opts;
}

// command exit codes double as API status codes (the tables match by design)
template <int (*Cmd)(const relugd::CommandOptions&)>
int run_command(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
                int jobs) {
    if (!config_path) return fail(RGD_INVALID_ARGUMENT, "config_path is null");
    // the command layer prints details on stderr and maps exceptions itself
    return guarded([&] {
        const int code = Cmd(make_options(config_path, out_dir, has_seed, seed, jobs));
        switch (code) {
            case RGD_LEMMA_VIOLATION: g_last_error = "lemma violation"; break;
            case RGD_CONFIG_ERROR: g_last_error = "configuration error"; break;
            case RGD_ORACLE_INCOMPATIBLE: g_last_error = "oracle incompatibility"; break;
            default: break;
        }
        return code;
    });
}

} // namespace

extern "C" {

struct rgd_instance {
    relugd::Instance instance;
};

const char* rgd_version(void) { return "1.0.0"; }

const char* rgd_last_error(void) { return g_last_error.c_str(); }

int rgd_run(const char* c, const char* o, int hs, uint64_t s, int j) {
    return run_command<relugd::cmd_run>(c, o, hs, s, j);
}
int rgd_sweep(const char* c, const char* o, int hs, uint64_t s, int j) {
    return run_command<relugd::cmd_sweep>(c, o, hs, s, j);
}
int rgd_verify_lemmas(const char* c, const char* o, int hs, uint64_t s, int j) {
    return run_command<relugd::cmd_verify_lemmas>(c, o, hs, s, j);
}
int rgd_estimate_regularity(const char* c, const char* o, int hs, uint64_t s, int j) {
    return run_command<relugd::cmd_estimate_regularity>(c, o, hs, s, j);
}
int rgd_init_study(const char* c, const char* o, int hs, uint64_t s, int j) {
    return run_command<relugd::cmd_init_study>(c, o, hs, s, j);
}

int rgd_population_f_gauss(size_t d, const double* w, double bw, const double* v, double bv,
                           size_t nodes, double* out) {
    if (!w || !v || !out || d == 0) return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = relugd::population_F_gauss(make_wv(d, w, bw), make_wv(d, v, bv),
                                          nodes ? nodes : 80);
        return RGD_OK;
    });
}

int rgd_population_f0_gauss(size_t d, const double* v, double bv, double* out) {
    if (!v || !out || d == 0) return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = relugd::population_F0_gauss(make_wv(d, v, bv));
        return RGD_OK;
    });
}

int rgd_population_grad_f_gauss(size_t d, const double* w, double bw, const double* v, double bv,
                                size_t nodes, double* grad_out, double* grad_bias_out) {
    if (!w || !v || !grad_out || !grad_bias_out || d == 0)
        return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto g = relugd::population_gradF_gauss(make_wv(d, w, bw), make_wv(d, v, bv),
                                                      nodes ? nodes : 80);
        std::memcpy(grad_out, g.vector.w_tilde.data(), d * sizeof(double));
        *grad_bias_out = g.vector.bias;
        return RGD_OK;
    });
}

int rgd_joint_orthant_prob_gauss(size_t d, const double* w, double bw, const double* v,
                                 double bv, size_t nodes, double* out) {
    if (!w || !v || !out || d == 0) return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = relugd::joint_orthant_prob_gauss(make_wv(d, w, bw), make_wv(d, v, bv),
                                                nodes ? nodes : 80);
        return RGD_OK;
    });
}

rgd_instance* rgd_instance_create(int family, size_t d, const double* v_tilde, double bv,
                                  int label_model, double noise_param) {
    if (!v_tilde || d == 0 || family < 0 || family > 2 || label_model < 0 || label_model > 2) {
        g_last_error = "invalid instance parameters";
        return nullptr;
    }
    try {
        auto* handle = new rgd_instance;
        handle->instance.marginal.family = static_cast<relugd::MarginalFamily>(family);
        handle->instance.marginal.dim = d;
        handle->instance.teacher = make_wv(d, v_tilde, bv);
        switch (label_model) {
            case 0: handle->instance.label_model = relugd::LabelModel::realizable(); break;
            case 1: handle->instance.label_model = relugd::LabelModel::gaussian_noise(noise_param); break;
            case 2: handle->instance.label_model = relugd::LabelModel::uniform_noise(noise_param); break;
        }
        const double norm = handle->instance.teacher.tilde_norm();
        handle->instance.hypothesis_set = relugd::HypothesisSet(
            std::max({3.0, norm, norm > 0.0 ? 1.0 / norm : 3.0}), std::max(2.0, std::fabs(bv)));
        handle->instance.validate();
        g_last_error.clear();
        return handle;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

void rgd_instance_free(rgd_instance* instance) { delete instance; }

int rgd_opt_value(const rgd_instance* instance, double* out) {
    if (!instance || !out) return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = relugd::opt_reference(instance->instance).value;
        return RGD_OK;
    });
}

int rgd_mc_loss(const rgd_instance* instance, const double* w, double bw, size_t n,
                uint64_t seed, double* estimate_out, double* std_err_out) {
    if (!instance || !w || !estimate_out || n == 0)
        return fail(RGD_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto stat = relugd::mc_loss(make_wv(instance->instance.marginal.dim, w, bw),
                                          instance->instance, n, seed);
        *estimate_out = stat.estimate;
        if (std_err_out) *std_err_out = stat.std_err;
        return RGD_OK;
    });
}

} // extern "C"
