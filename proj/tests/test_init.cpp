#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "init.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace relugd;

TEST_CASE("every draw has zero bias and the declared radius law") {
    InitSpec spec;
    spec.scale = 1.0;
    spec.beta = 1.0;

    double mean_norm = 0.0;
    std::vector<double> mean_dir(3, 0.0);
    std::vector<double> rhos;
    const std::size_t trials = 100000;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto out = draw_init(spec, 3, derive_seed(1, {i}));
        REQUIRE(out.w0.bias == 0.0);
        REQUIRE(out.w0.dim() == 3);
        const double n = out.w0.tilde_norm();
        CHECK(std::fabs(n - out.rho * spec.scale) < 1e-12);
        mean_norm += n;
        for (int j = 0; j < 3; ++j) mean_dir[j] += out.w0.w_tilde[j] / n;
        rhos.push_back(out.rho);
    }
    mean_norm /= static_cast<double>(trials);
    CHECK(std::fabs(mean_norm - std::sqrt(2.0 / M_PI)) < 0.01);  // half-normal mean

    // spherical symmetry: the mean direction vanishes
    double dir2 = 0.0;
    for (double m : mean_dir) dir2 += (m / trials) * (m / trials);
    CHECK(std::sqrt(dir2) <= 0.02);

    // Kolmogorov-Smirnov distance to the half-normal CDF
    std::sort(rhos.begin(), rhos.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        const double cdf = std::erf(rhos[i] / std::sqrt(2.0));
        const double emp_hi = static_cast<double>(i + 1) / trials;
        const double emp_lo = static_cast<double>(i) / trials;
        ks = std::max({ks, std::fabs(emp_hi - cdf), std::fabs(emp_lo - cdf)});
    }
    CHECK(ks <= 0.01);
}

TEST_CASE("draw_init is deterministic and validates beta") {
    InitSpec spec;
    const auto a = draw_init(spec, 4, 99);
    const auto b = draw_init(spec, 4, 99);
    CHECK(a.w0.w_tilde == b.w0.w_tilde);
    CHECK(a.rho == b.rho);

    spec.beta = 0.5;
    CHECK_THROWS(draw_init(spec, 4, 1));
    spec.beta = 2.5;
    CHECK_THROWS(draw_init(spec, 4, 1));
}

TEST_CASE("unknown scale draws j uniformly over the ladder") {
    InitSpec spec;
    spec.mode = InitSpec::Mode::UnknownScale;
    spec.m = 1024.0;  // ceil(log2 m) = 10 -> j in {-10..10}
    std::map<int, std::size_t> counts;
    const std::size_t trials = 84000;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto out = draw_init(spec, 2, derive_seed(5, {i}));
        REQUIRE(out.j.has_value());
        REQUIRE(*out.j >= -10);
        REQUIRE(*out.j <= 10);
        counts[*out.j]++;
        CHECK(std::fabs(out.w0.tilde_norm() - out.rho) < 1e-12);
    }
    CHECK(counts.size() == 21);
    // chi-square against uniform over 21 cells; 1% critical value for 20 dof
    const double expected = static_cast<double>(trials) / 21.0;
    double chi2 = 0.0;
    for (const auto& [j, c] : counts) {
        const double dev = static_cast<double>(c) - expected;
        chi2 += dev * dev / expected;
    }
    CHECK(chi2 < 37.57);
}

TEST_CASE("init_success_check known outcomes") {
    const WeightVector v({1.0, 0.0}, 0.0);
    CHECK(init_success_check(v, v, 0.01, 5.0));

    WeightVector minus_v({-1.0, 0.0}, 0.0);
    CHECK_FALSE(init_success_check(minus_v, v, 0.01, 5.0));  // F(-v) = 1/2 > F(0) = 1/4

    WeightVector tiny({1e-6, 0.0}, 0.0);
    CHECK_FALSE(init_success_check(tiny, v, 0.01, 5.0));  // F barely below F(0)

    // the distance condition can fail alone
    WeightVector near({0.9, 0.0}, 0.0);
    CHECK(init_success_check(near, v, 0.01, 5.0));
    CHECK_FALSE(init_success_check(near, v, 0.01, 0.05));
}

TEST_CASE("success rates behave like the theory says") {
    const WeightVector v({1.0, 0.0}, 0.0);
    InitSpec spec;
    spec.scale = 1.0;

    const auto rate = estimate_init_success_rate(spec, v, 0.01, 5.0, 2000, 7);
    CHECK(rate.rate >= 0.02);
    CHECK(rate.ci_lo >= 0.0);
    CHECK(rate.ci_hi <= 1.0);
    CHECK(rate.ci_lo <= rate.rate);
    CHECK(rate.rate <= rate.ci_hi);

    // monotone in delta with shared seeds
    const auto loose = estimate_init_success_rate(spec, v, 0.005, 5.0, 2000, 7);
    const auto tight = estimate_init_success_rate(spec, v, 0.05, 5.0, 2000, 7);
    CHECK(loose.rate >= rate.rate);
    CHECK(rate.rate >= tight.rate);

    // impossible threshold: delta above F(0)/||v||^2
    const auto zero = estimate_init_success_rate(spec, v, 0.3, 5.0, 500, 7);
    CHECK(zero.rate == 0.0);

    CHECK_THROWS(estimate_init_success_rate(spec, v, 0.01, 5.0, 50, 7));  // trials >= 100
}

TEST_CASE("unknown scale pays at most the ladder factor") {
    const WeightVector v({1.0, 0.0}, 0.0);
    InitSpec known;
    known.scale = 1.0;
    InitSpec unknown;
    unknown.mode = InitSpec::Mode::UnknownScale;
    unknown.m = 1024.0;

    const auto kr = estimate_init_success_rate(known, v, 0.01, 5.0, 4000, 11);
    const auto ur = estimate_init_success_rate(unknown, v, 0.01, 5.0, 20000, 12);
    CHECK(kr.rate > 0.0);
    CHECK(ur.rate >= kr.rate / 42.0);  // 2 (2 ceil(log2 M) + 1) with M = 2^10
}
