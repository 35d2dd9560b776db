#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace relugd {

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// Subgradient convention: sigma'(0) = 1.
inline double relu_prime(double z) { return z >= 0.0 ? 1.0 : 0.0; }

// Hypothesis w = (w_tilde, bias). The augmentation coordinate (the constant 1
// appended to x_tilde) is virtual: inputs stay d-dimensional and the bias is
// carried explicitly.
struct WeightVector {
    std::vector<double> w_tilde;
    double bias = 0.0;

    WeightVector() = default;
    WeightVector(std::vector<double> w, double b) : w_tilde(std::move(w)), bias(b) {}

    std::size_t dim() const { return w_tilde.size(); }

    bool finite() const {
        if (!std::isfinite(bias)) return false;
        for (double x : w_tilde)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double tilde_norm2() const {
        double s = 0.0;
        for (double x : w_tilde) s += x * x;
        return s;
    }
    double tilde_norm() const { return std::sqrt(tilde_norm2()); }

    // full R^{d+1} norm, bias included
    double norm() const { return std::sqrt(tilde_norm2() + bias * bias); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// w_tilde . x_tilde + bias
inline double affine_eval(const WeightVector& w, std::span<const double> x_tilde) {
    return dot(w.w_tilde, x_tilde) + w.bias;
}

// Euclidean distance in R^{d+1} including the bias coordinate.
inline double wv_distance(const WeightVector& a, const WeightVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("wv_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double diff = a.w_tilde[i] - b.w_tilde[i];
        s += diff * diff;
    }
    const double db = a.bias - b.bias;
    return std::sqrt(s + db * db);
}

inline double inner_product(const WeightVector& a, const WeightVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner_product: dimension mismatch");
    return dot(a.w_tilde, b.w_tilde) + a.bias * b.bias;
}

// H = { w : ||w_tilde|| in [1/c1, c1], |bias| <= c2 }
struct HypothesisSet {
    double c1 = 1.0;
    double c2 = 1.0;

    HypothesisSet() = default;
    HypothesisSet(double c1_, double c2_) : c1(c1_), c2(c2_) {
        if (c1 < 1.0 || c2 <= 0.0) throw std::invalid_argument("HypothesisSet: need c1 >= 1, c2 > 0");
    }

    bool contains(const WeightVector& w) const {
        const double n = w.tilde_norm();
        return n >= 1.0 / c1 && n <= c1 && std::fabs(w.bias) <= c2;
    }

    // B = sqrt(c1^2 + c2^2), the norm bound over H
    double norm_bound() const { return std::sqrt(c1 * c1 + c2 * c2); }
};

// Fixed dataset of (x_tilde, y) pairs, row-major features.
struct Dataset {
    std::size_t d = 0;
    std::vector<double> x;  // n * d
    std::vector<double> y;  // n

    std::size_t size() const { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

} // namespace relugd
