#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace relugd {

enum class MarginalFamily { StandardGaussian, UniformCube, LaplaceProduct };

// The non-Gaussian families are pinned to per-coordinate variance 1:
// UniformCube has half-width sqrt(3), LaplaceProduct has scale 1/sqrt(2).
struct MarginalSpec {
    MarginalFamily family = MarginalFamily::StandardGaussian;
    std::size_t dim = 1;
};

const char* family_name(MarginalFamily f);

// Streams i.i.d. rows; row order matches sample_marginal for the same seed.
class MarginalSampler {
public:
    MarginalSampler(const MarginalSpec& spec, std::uint64_t seed)
        : spec_(spec), rng_(seed) {}

    void draw_row(std::span<double> out);

private:
    MarginalSpec spec_;
    Rng rng_;
};

// n x d row-major draws, deterministic given (spec, n, seed).
std::vector<double> sample_marginal(const MarginalSpec& spec, std::size_t n, std::uint64_t seed);

struct MomentEstimate {
    double m2 = 0.0, m4 = 0.0;
    double m2_se = 0.0, m4_se = 0.0;
};

// Empirical E[(u.x)^2], E[(u.x)^4] along a unit direction.
MomentEstimate estimate_directional_moments(const MarginalSpec& spec,
                                            std::span<const double> u,
                                            std::size_t n, std::uint64_t seed);

// max over t_grid of Pr[u.x in (t - delta, t + delta)] / delta.
double estimate_anticoncentration(const MarginalSpec& spec, std::span<const double> u,
                                  double delta, std::span<const double> t_grid,
                                  std::size_t n, std::uint64_t seed);

struct MeanEstimate {
    double mean = 0.0, se = 0.0;
};

// Empirical E[relu(v_hat.x + b)].
MeanEstimate estimate_beta0(const MarginalSpec& spec, std::span<const double> v_hat,
                            double b, std::size_t n, std::uint64_t seed);

// min over equal-mass bins of u2.x (central 99% mass) of the binned
// conditional mean of relu(u1.x) divided by its unconditional mean.
double estimate_beta5(const MarginalSpec& spec, std::span<const double> u1,
                      std::span<const double> u2, std::size_t n_bins,
                      std::size_t n, std::uint64_t seed);

struct RegularityReport {
    double beta2_lo = 0.0, beta2_hi = 0.0;
    double beta4 = 0.0;
    double beta3 = 0.0;
    std::vector<std::pair<double, double>> beta0_curve;  // (bias, estimate)
    double beta5 = 0.0;
    // half-widths in the order beta2_lo, beta2_hi, beta4, beta3, beta0..., beta5
    std::vector<double> ci_halfwidths;
    std::size_t trials = 0, n = 0;
    std::uint64_t seed = 0;
};

// Worst case over `trials` random directions; beta0 at b in {0, 0.5, 1, 2}.
RegularityReport regularity_report(const MarginalSpec& spec, std::size_t trials,
                                   std::size_t n, std::uint64_t seed);

std::string regularity_report_csv(const MarginalSpec& spec, const RegularityReport& r);

} // namespace relugd
