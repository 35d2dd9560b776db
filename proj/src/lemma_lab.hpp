#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "gd.hpp"
#include "labels.hpp"

namespace relugd {

struct LemmaCheckResult {
    std::string lemma_id;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    bool vacuous = false;  // premise failed; not a counterexample
    double slack = 0.0;
    std::string config_digest;
    std::optional<double> fitted_constant;
};

// Pr[w.x >= 0, v.x >= 0] >= delta^2 / (c ||w||^4 ||v||^4) with
// delta = max(F(0) - F(w), 0). fitted_constant records the per-point
// requirement delta^2 / (lhs ||w||^4 ||v||^4).
LemmaCheckResult check_jointprob(const WeightVector& w, const WeightVector& v,
                                 std::size_t nodes = 80);

// <grad F(w), w - v> >= gamma ||w - v||^2; reports gamma_emp and holds iff
// gamma_emp >= -1e-8.
LemmaCheckResult check_inner_product_lb(const WeightVector& w, const WeightVector& v,
                                        std::size_t nodes = 80);

// If ||grad F(w)|| <= c_g sqrt(OPT) then ||w - v|| <= (c_g / gamma_min) sqrt(OPT).
LemmaCheckResult check_grad_opt(const WeightVector& w, const WeightVector& v, double opt_value,
                                double c_g, double gamma_min, std::size_t nodes = 80);

// F(w) <= ||w - v||^2 (+1e-9 tolerance).
LemmaCheckResult check_f_lipschitz(const WeightVector& w, const WeightVector& v,
                                   std::size_t nodes = 80);

// L(w) <= 2 F(w) + 2 OPT within 4 MC standard errors.
LemmaCheckResult check_loss_decomposition(const WeightVector& w, const Instance& instance,
                                          std::size_t mc_n, std::uint64_t seed);

struct SmoothnessParams {
    double c_lower = 0.3;  // C_ell
    double c_upper = 3.0;  // C_u
    double c_prime = 1.0;
    std::size_t dim = 2;

    double ell() const {
        const double d = static_cast<double>(dim);
        return d * (1.0 + 8.0 * (c_upper + 1.0) * c_prime * d / c_lower);
    }
};

// ||grad F(w) - grad F(w')|| <= ell ||w - w'||; vacuous unless the segment
// stays inside the [C_ell, C_u] norm shell (lambda grid 0, 0.1, ..., 1).
LemmaCheckResult check_smoothness(const WeightVector& w, const WeightVector& w_prime,
                                  const WeightVector& v, const SmoothnessParams& params,
                                  std::size_t nodes = 80);

// F(w + s) <= F(w) + <grad F(w), s> + (ell/2)||s||^2.
LemmaCheckResult check_descent_expansion(const WeightVector& w, const WeightVector& step_vector,
                                         double ell, const WeightVector& v,
                                         std::size_t nodes = 80);

struct ScalingDeviation {
    double max_rel_dev = 0.0;     // max_t ||w'_t - alpha w_t|| / ||alpha w_t||
    double loss_ratio_dev = 0.0;  // max_t |L'_t - alpha^2 L_t| / (alpha^2 L_t)
};

// Runs GD on the instance and on the alpha-scaled instance (labels times
// alpha, init times alpha) with shared seeds.
ScalingDeviation check_scaling_equivariance(const Instance& instance, double alpha,
                                            const WeightVector& w0, const GDConfig& config,
                                            std::uint64_t seed);

Instance scale_instance(const Instance& instance, double alpha);

struct SlopeEstimate {
    double slope = 0.0;
    double ci = 0.0;
};

// log-log regression slope of median ||zeta|| vs n across probe points.
SlopeEstimate check_zeta_slope(const Instance& instance,
                               const std::vector<WeightVector>& probes,
                               const std::vector<std::size_t>& n_list, std::size_t trials,
                               std::uint64_t seed);

// ----- sweep harness -----

struct LemmaSweep {
    std::string lemma_id;
    std::size_t points = 0;
    std::size_t violations = 0;
    std::size_t vacuous = 0;
    double fitted_constant = 0.0;  // lemma-specific (jointprob: c; inner_product: min gamma)
    std::string csv;
    std::vector<LemmaCheckResult> violating;
};

// Random H-bounded pairs ||w||, ||v|| <= 3, biases in [-2, 2], d = 3.
WeightVector random_sweep_point(Rng& rng, std::size_t d, double max_norm, double bias_range);

LemmaSweep sweep_jointprob(std::size_t points, std::uint64_t seed, std::size_t nodes = 80);
LemmaSweep sweep_inner_product_lb(std::size_t points, std::uint64_t seed, std::size_t nodes = 80);
LemmaSweep sweep_f_lipschitz(std::size_t points, std::uint64_t seed, std::size_t nodes = 80);
LemmaSweep sweep_loss_decomposition(const Instance& instance, std::size_t points,
                                    std::size_t mc_n, std::uint64_t seed);
LemmaSweep sweep_smoothness(std::size_t points, const SmoothnessParams& params,
                            std::uint64_t seed, std::size_t nodes = 80);

} // namespace relugd
