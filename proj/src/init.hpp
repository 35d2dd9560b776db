#pragma once

#include <cstdint>
#include <optional>

#include "core.hpp"

namespace relugd {

// Randomized initializer: zero bias, uniform direction, half-normal radius.
// UnknownScale multiplies the radius by 2^j with j uniform on
// {-ceil(log2 m), ..., ceil(log2 m)}.
struct InitSpec {
    enum class Mode { KnownScale, UnknownScale };
    Mode mode = Mode::KnownScale;
    double scale = 1.0;  // KnownScale: ||v_tilde||
    double beta = 1.0;   // radius is |N(0, beta^2)|, beta in [1, 2]
    double m = 1024.0;   // UnknownScale: ||v_tilde|| assumed in [1/m, m]
};

struct InitOutcome {
    WeightVector w0;  // bias always 0
    double rho = 0.0;
    std::optional<int> j;  // UnknownScale only
};

InitOutcome draw_init(const InitSpec& spec, std::size_t d, std::uint64_t seed);

// F(w0) <= F(0) - delta ||v_tilde||^2  and  ||w0 - v|| <= c3 ||v_tilde||,
// evaluated with the Gaussian population oracles.
bool init_success_check(const WeightVector& w0, const WeightVector& v, double delta, double c3);

struct RateEstimate {
    double rate = 0.0;
    double ci_lo = 0.0;  // Wilson 95%
    double ci_hi = 0.0;
};

RateEstimate estimate_init_success_rate(const InitSpec& spec, const WeightVector& v,
                                        double delta, double c3, std::size_t trials,
                                        std::uint64_t seed);

} // namespace relugd
