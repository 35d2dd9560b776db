#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core.hpp"
#include "rng.hpp"

using namespace relugd;

TEST_CASE("relu clamps and passes through") {
    CHECK(relu(-3.0) == 0.0);
    CHECK(relu(0.0) == 0.0);
    CHECK(relu(2.5) == 2.5);
}

TEST_CASE("relu_prime uses the sigma'(0) = 1 convention") {
    CHECK(relu_prime(0.0) == 1.0);
    CHECK(relu_prime(-1e-12) == 0.0);
    CHECK(relu_prime(7.0) == 1.0);
}

TEST_CASE("affine_eval") {
    WeightVector e1({1.0, 0.0}, 0.0);
    const double x1[] = {3.0, 5.0};
    CHECK(affine_eval(e1, x1) == 3.0);

    WeightVector bias_only({0.0, 0.0}, 1.5);
    CHECK(affine_eval(bias_only, x1) == 1.5);

    WeightVector w({1.0, 2.0}, -1.0);
    const double x2[] = {1.0, 1.0};
    CHECK(affine_eval(w, x2) == 2.0);

    WeightVector wrong_dim({1.0}, 0.0);
    CHECK_THROWS(affine_eval(wrong_dim, x2));
}

TEST_CASE("wv_distance includes the bias coordinate") {
    WeightVector a({1.0, 0.0}, 0.0), zero({0.0, 0.0}, 0.0);
    CHECK(wv_distance(a, a) == 0.0);
    CHECK(wv_distance(a, zero) == 1.0);
    WeightVector c({1.0, 0.0}, 1.0), d({-1.0, 0.0}, 0.0);
    CHECK(wv_distance(c, d) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    WeightVector e({1.0}, 0.0);
    CHECK_THROWS(wv_distance(a, e));
}

TEST_CASE("hypothesis set membership and norm bound") {
    HypothesisSet h(2.0, 1.0);
    CHECK(h.contains(WeightVector({1.0, 0.0}, 0.5)));
    CHECK(h.contains(WeightVector({0.5, 0.0}, -1.0)));
    CHECK(!h.contains(WeightVector({0.4, 0.0}, 0.0)));   // below 1/c1
    CHECK(!h.contains(WeightVector({2.5, 0.0}, 0.0)));   // above c1
    CHECK(!h.contains(WeightVector({1.0, 0.0}, 1.5)));   // bias too large
    CHECK(h.norm_bound() == doctest::Approx(std::sqrt(5.0)));
    CHECK_THROWS(HypothesisSet(0.5, 1.0));
}

TEST_CASE("relu identities on random draws") {
    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        const double z = rng.uniform(-10.0, 10.0);
        CHECK(relu(z) - relu(-z) == doctest::Approx(z).epsilon(1e-15));
        const double a = rng.uniform(-10.0, 10.0), b = rng.uniform(-10.0, 10.0);
        CHECK(std::fabs(relu(a) - relu(b)) <= std::fabs(a - b) + 1e-15);
    }
}

TEST_CASE("wv_distance triangle inequality on random triples") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        auto draw = [&rng]() {
            WeightVector w({rng.normal(), rng.normal(), rng.normal()}, rng.normal());
            return w;
        };
        const auto a = draw(), b = draw(), c = draw();
        CHECK(wv_distance(a, c) <= wv_distance(a, b) + wv_distance(b, c) + 1e-12);
    }
}

TEST_CASE("rng reproducibility and basic moments") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng rng(99);
    double mean = 0.0, var = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        mean += z;
        var += z * z;
    }
    mean /= n;
    var /= n;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}
