#include "init.hpp"

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "rng.hpp"

namespace relugd {

InitOutcome draw_init(const InitSpec& spec, std::size_t d, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("draw_init: d >= 1 required");
    if (spec.beta < 1.0 || spec.beta > 2.0)
        throw std::invalid_argument("draw_init: beta must lie in [1, 2]");
    Rng rng(seed);

    // uniform unit direction via normalized Gaussian
    std::vector<double> dir(d);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& x : dir) {
            x = rng.normal();
            n2 += x * x;
        }
    } while (n2 == 0.0);
    const double inv_norm = 1.0 / std::sqrt(n2);

    InitOutcome out;
    double rho = std::fabs(spec.beta * rng.normal());
    double radius = 0.0;
    if (spec.mode == InitSpec::Mode::KnownScale) {
        radius = rho * spec.scale;
    } else {
        if (spec.m < 1.0) throw std::invalid_argument("draw_init: m >= 1 required");
        const int j_cap = static_cast<int>(std::ceil(std::log2(std::max(spec.m, 1.0))));
        const int j = static_cast<int>(rng.below(2 * j_cap + 1)) - j_cap;
        rho *= std::ldexp(1.0, j);
        radius = rho;
        out.j = j;
    }
    out.rho = rho;
    out.w0.w_tilde.resize(d);
    for (std::size_t i = 0; i < d; ++i) out.w0.w_tilde[i] = radius * dir[i] * inv_norm;
    out.w0.bias = 0.0;
    return out;
}

bool init_success_check(const WeightVector& w0, const WeightVector& v, double delta, double c3) {
    const double nv2 = v.tilde_norm2();
    const double F0 = population_F0_gauss(v);
    const double Fw = population_F_gauss(w0, v);
    return Fw <= F0 - delta * nv2 && wv_distance(w0, v) <= c3 * std::sqrt(nv2);
}

RateEstimate estimate_init_success_rate(const InitSpec& spec, const WeightVector& v,
                                        double delta, double c3, std::size_t trials,
                                        std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("estimate_init_success_rate: trials >= 100");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto init = draw_init(spec, v.dim(), derive_seed(seed, {0x1234, i}));
        if (init_success_check(init.w0, v, delta, c3)) ++hits;
    }
    RateEstimate est;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    est.rate = p;
    const double z = 1.959963984540054;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    est.ci_lo = std::max(0.0, center - half);
    est.ci_hi = std::min(1.0, center + half);
    return est;
}

} // namespace relugd
