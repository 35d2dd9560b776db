#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core.hpp"
#include "labels.hpp"

namespace relugd {

// The five scalars that determine every Gaussian population quantity
// involving relu(w.x) and relu(v.x).
struct GaussianPairGeometry {
    double nw2 = 0.0;  // ||w_tilde||^2
    double wv = 0.0;   // <w_tilde, v_tilde>
    double nv2 = 0.0;  // ||v_tilde||^2
    double bw = 0.0;
    double bv = 0.0;

    static GaussianPairGeometry of(const WeightVector& w, const WeightVector& v);
    void validate() const;  // Gram PSD within tolerance
};

struct PairIntegrals {
    double F = 0.0;    // (1/2) E[(relu(A) - relu(B))^2]
    double Eh = 0.0;   // E[h],   h = (relu(A) - relu(B)) 1[A >= 0]
    double Eha = 0.0;  // E[h (w_tilde . x_tilde)]
    double Ehb = 0.0;  // E[h (v_tilde . x_tilde)]
};

// Core quadrature pass. The 2-D Gaussian in span(w_tilde, v_tilde) is reduced
// to a 1-D outer integral: the inner coordinate integrates in closed form
// (piecewise-quadratic integrands against a Gaussian weight), the outer is
// Gauss-Legendre on panels split at the relu kinks, graded near the boundary
// layer that appears when the correlation approaches +-1.
PairIntegrals gauss_pair_integrals(const GaussianPairGeometry& g, std::size_t nodes = 80);

double population_F_gauss(const WeightVector& w, const WeightVector& v, std::size_t nodes = 80);

// F(0) = (1/2) E[relu(v.x)^2] in closed form.
double population_F0_gauss(const WeightVector& v);

enum class GradientMode { Quadrature, MonteCarlo, Empirical };

struct GradientEstimate {
    WeightVector vector;
    GradientMode mode = GradientMode::Quadrature;
    std::optional<double> std_err;        // norm-level, MC only
    std::vector<double> coord_std_err;    // per coordinate + bias, MC only
    std::size_t n = 0;                    // sample count (MC / empirical)

    double norm() const { return vector.norm(); }
};

GradientEstimate population_gradF_gauss(const WeightVector& w, const WeightVector& v,
                                        std::size_t nodes = 80);

// Pr[w.x >= 0, v.x >= 0] under the standard Gaussian.
double joint_orthant_prob_gauss(const WeightVector& w, const WeightVector& v,
                                std::size_t nodes = 80);

struct McStat {
    double estimate = 0.0;
    double std_err = 0.0;
};

McStat mc_loss(const WeightVector& w, const Instance& instance, std::size_t n, std::uint64_t seed);

// MC estimate of F(w) = (1/2)E[(relu(w.x) - relu(v.x))^2] under the instance marginal.
McStat mc_F(const WeightVector& w, const Instance& instance, std::size_t n, std::uint64_t seed);

GradientEstimate mc_grad_loss(const WeightVector& w, const Instance& instance,
                              std::size_t n, std::uint64_t seed);

GradientEstimate empirical_grad(const WeightVector& w, const Dataset& data);

// || population grad - empirical grad ||. Population side is quadrature when
// the instance admits it (Gaussian marginal, v optimal), MC(n_pop) otherwise.
double zeta_deviation(const WeightVector& w, const Instance& instance, const Dataset& data,
                      std::size_t n_pop, std::uint64_t seed);

// Whether the population gradient of L has an exact quadrature route.
bool has_quadrature_oracle(const Instance& instance);

} // namespace relugd
