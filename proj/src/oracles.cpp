#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gauss.hpp"
#include "rng.hpp"

namespace relugd {

GaussianPairGeometry GaussianPairGeometry::of(const WeightVector& w, const WeightVector& v) {
    if (w.dim() != v.dim()) throw std::invalid_argument("GaussianPairGeometry: dimension mismatch");
    GaussianPairGeometry g;
    g.nw2 = w.tilde_norm2();
    g.nv2 = v.tilde_norm2();
    g.wv = dot(w.w_tilde, v.w_tilde);
    g.bw = w.bias;
    g.bv = v.bias;
    return g;
}

void GaussianPairGeometry::validate() const {
    if (nw2 < 0.0 || nv2 < 0.0) throw std::invalid_argument("geometry: negative squared norm");
    if (std::fabs(wv) > std::sqrt(nw2 * nv2) + 1e-12)
        throw std::invalid_argument("geometry: Gram matrix not PSD");
}

namespace {

constexpr double kOuterCut = 8.6;  // |g1| truncation; tail mass is ~1e-17

struct InnerMoments {
    double m1;  // E[relu(c0 + c1 g)]
    double m2;  // E[relu(c0 + c1 g)^2]
    double mg;  // E[relu(c0 + c1 g) g]
};

inline InnerMoments inner_moments(double c0, double c1) {
    if (c1 <= 0.0) {
        const double r = relu(c0);
        return {r, r * r, 0.0};
    }
    const double t0 = -c0 / c1;
    const double P = norm_cdf(-t0);
    const double p = norm_pdf(t0);
    const double tail2 = P + t0 * p;  // E[g^2 1[g >= t0]]
    return {c0 * P + c1 * p,
            c0 * c0 * P + 2.0 * c0 * c1 * p + c1 * c1 * tail2,
            c0 * p + c1 * tail2};
}

// Panel endpoints for the outer integral: the relu(A) kink, plus a graded
// mesh around the inner boundary layer (width c1/|a_coef|) so that accuracy
// is uniform as the correlation approaches +-1.
std::vector<double> outer_breakpoints(double sw, double bw, double a_coef, double bv, double c1) {
    std::vector<double> pts{-kOuterCut, kOuterCut};
    auto add = [&pts](double x) {
        if (x > -kOuterCut && x < kOuterCut) pts.push_back(x);
    };
    if (sw > 0.0) add(-bw / sw);
    if (a_coef != 0.0) {
        const double center = -bv / a_coef;
        add(center);
        const double width = std::max(c1 / std::fabs(a_coef), 1e-14);
        for (double m : {1.0, 4.0, 16.0, 64.0, 256.0}) {
            add(center - m * width);
            add(center + m * width);
        }
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

} // namespace

PairIntegrals gauss_pair_integrals(const GaussianPairGeometry& g, std::size_t nodes) {
    g.validate();
    const double sw = std::sqrt(g.nw2);
    const double sv = std::sqrt(g.nv2);

    if (sw == 0.0 && sv == 0.0) {
        const double diff = relu(g.bw) - relu(g.bv);
        PairIntegrals out;
        out.F = 0.5 * diff * diff;
        out.Eh = g.bw >= 0.0 ? diff : 0.0;
        return out;
    }

    double rho = 0.0;
    if (sw > 0.0 && sv > 0.0) rho = std::clamp(g.wv / (sw * sv), -1.0, 1.0);
    const double a_coef = sv * rho;
    const double c1 = sv * std::sqrt(std::max(0.0, 1.0 - rho * rho));

    const auto pts = outer_breakpoints(sw, g.bw, a_coef, g.bv, c1);
    const QuadRule& rule = gauss_legendre(nodes);

    PairIntegrals out;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        const double lo = pts[p], hi = pts[p + 1];
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double g1 = half * rule.nodes[i] + mid;
            const double wq = half * rule.weights[i] * norm_pdf(g1);
            const double A = sw * g1 + g.bw;
            const double c0 = a_coef * g1 + g.bv;
            const auto im = inner_moments(c0, c1);
            const double sA = relu(A);
            out.F += wq * (sA * sA - 2.0 * sA * im.m1 + im.m2);
            if (A >= 0.0) {
                const double h1 = sA - im.m1;
                out.Eh += wq * h1;
                out.Eha += wq * h1 * sw * g1;
                out.Ehb += wq * (sA * a_coef * g1 - (im.m1 * a_coef * g1 + c1 * im.mg));
            }
        }
    }
    out.F *= 0.5;
    return out;
}

double population_F_gauss(const WeightVector& w, const WeightVector& v, std::size_t nodes) {
    return gauss_pair_integrals(GaussianPairGeometry::of(w, v), nodes).F;
}

double population_F0_gauss(const WeightVector& v) {
    const double s = v.tilde_norm();
    const double b = v.bias;
    if (s == 0.0) {
        const double r = relu(b);
        return 0.5 * r * r;
    }
    const double z = b / s;
    return 0.5 * ((s * s + b * b) * norm_cdf(z) + s * b * norm_pdf(z));
}

GradientEstimate population_gradF_gauss(const WeightVector& w, const WeightVector& v,
                                        std::size_t nodes) {
    const auto g = GaussianPairGeometry::of(w, v);
    const auto I = gauss_pair_integrals(g, nodes);
    const std::size_t d = w.dim();

    GradientEstimate est;
    est.mode = GradientMode::Quadrature;
    est.vector.w_tilde.assign(d, 0.0);
    est.vector.bias = I.Eh;

    const double sw2 = g.nw2, sv2 = g.nv2;
    double cw = 0.0, cv = 0.0;
    const double det = sw2 * sv2 - g.wv * g.wv;
    const double near_singular = 1e-8 * sw2 * sv2;
    if (sw2 == 0.0 && sv2 == 0.0) {
        // bias-only pair: no x_tilde component
    } else if (sv2 == 0.0) {
        cw = I.Eha / sw2;
    } else if (sw2 == 0.0) {
        cv = I.Ehb / sv2;
    } else if (det <= near_singular) {
        // collinear tilde parts: the gradient lives on the shared direction
        cw = I.Eha / sw2;
    } else {
        cw = (I.Eha * sv2 - I.Ehb * g.wv) / det;
        cv = (sw2 * I.Ehb - g.wv * I.Eha) / det;
    }
    for (std::size_t i = 0; i < d; ++i)
        est.vector.w_tilde[i] = cw * w.w_tilde[i] + cv * v.w_tilde[i];
    return est;
}

double joint_orthant_prob_gauss(const WeightVector& w, const WeightVector& v, std::size_t nodes) {
    const auto g = GaussianPairGeometry::of(w, v);
    g.validate();
    const double sw = std::sqrt(g.nw2);
    const double sv = std::sqrt(g.nv2);

    // deterministic events for bias-only directions
    if (sw == 0.0 && sv == 0.0) return (g.bw >= 0.0 && g.bv >= 0.0) ? 1.0 : 0.0;
    if (sw == 0.0) return g.bw >= 0.0 ? norm_cdf(g.bv / sv) : 0.0;
    if (sv == 0.0) return g.bv >= 0.0 ? norm_cdf(g.bw / sw) : 0.0;

    const double rho = std::clamp(g.wv / (sw * sv), -1.0, 1.0);
    const double a_coef = sv * rho;
    const double c1 = sv * std::sqrt(std::max(0.0, 1.0 - rho * rho));

    const auto pts = outer_breakpoints(sw, g.bw, a_coef, g.bv, c1);
    const QuadRule& rule = gauss_legendre(nodes);
    double prob = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        const double lo = pts[p], hi = pts[p + 1];
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double g1 = half * rule.nodes[i] + mid;
            if (sw * g1 + g.bw < 0.0) continue;
            const double c0 = a_coef * g1 + g.bv;
            const double inner = c1 > 0.0 ? norm_cdf(c0 / c1) : (c0 >= 0.0 ? 1.0 : 0.0);
            prob += half * rule.weights[i] * norm_pdf(g1) * inner;
        }
    }
    return prob;
}

namespace {

constexpr std::size_t kBatches = 10;

double batch_se(const double* means, std::size_t k, double overall) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = means[i] - overall;
        s += d * d;
    }
    return std::sqrt(s / (static_cast<double>(k) * (k - 1)));
}

// Streams the same (x, y) sequence as generate_dataset for the same seed.
template <typename Body>
void stream_samples(const Instance& instance, std::size_t n, std::uint64_t seed, Body&& body) {
    instance.validate();
    MarginalSampler sampler(instance.marginal, derive_seed(seed, {0x7a}));
    Rng label_rng(derive_seed(seed, {0x7b}));
    std::vector<double> row(instance.marginal.dim);
    for (std::size_t i = 0; i < n; ++i) {
        sampler.draw_row(row);
        const double y = draw_label(instance, row, label_rng);
        body(i, std::span<const double>(row), y);
    }
}

} // namespace

McStat mc_loss(const WeightVector& w, const Instance& instance, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("mc_loss: n >= 2 required");
    double sum = 0.0, batches[kBatches] = {};
    const std::size_t per = n / kBatches;
    stream_samples(instance, n, seed, [&](std::size_t i, std::span<const double> x, double y) {
        const double r = relu(affine_eval(w, x)) - y;
        const double val = 0.5 * r * r;
        sum += val;
        batches[std::min(per > 0 ? i / per : std::size_t{0}, kBatches - 1)] += val;
    });
    McStat out;
    out.estimate = sum / n;
    if (per > 0) {
        double means[kBatches];
        for (std::size_t k = 0; k < kBatches; ++k) {
            const std::size_t sz = (k == kBatches - 1) ? n - per * (kBatches - 1) : per;
            means[k] = batches[k] / sz;
        }
        out.std_err = batch_se(means, kBatches, out.estimate);
    }
    return out;
}

McStat mc_F(const WeightVector& w, const Instance& instance, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("mc_F: n >= 2 required");
    double sum = 0.0, batches[kBatches] = {};
    const std::size_t per = n / kBatches;
    stream_samples(instance, n, seed, [&](std::size_t i, std::span<const double> x, double) {
        const double r = relu(affine_eval(w, x)) - relu(affine_eval(instance.teacher, x));
        const double val = 0.5 * r * r;
        sum += val;
        batches[std::min(per > 0 ? i / per : std::size_t{0}, kBatches - 1)] += val;
    });
    McStat out;
    out.estimate = sum / n;
    if (per > 0) {
        double means[kBatches];
        for (std::size_t k = 0; k < kBatches; ++k) {
            const std::size_t sz = (k == kBatches - 1) ? n - per * (kBatches - 1) : per;
            means[k] = batches[k] / sz;
        }
        out.std_err = batch_se(means, kBatches, out.estimate);
    }
    return out;
}

GradientEstimate mc_grad_loss(const WeightVector& w, const Instance& instance,
                              std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("mc_grad_loss: n >= 2 required");
    const std::size_t d = w.dim();
    std::vector<double> sum(d + 1, 0.0);
    std::vector<double> batch(kBatches * (d + 1), 0.0);
    const std::size_t per = n / kBatches;
    stream_samples(instance, n, seed, [&](std::size_t i, std::span<const double> x, double y) {
        const double z = affine_eval(w, x);
        if (z < 0.0) return;  // relu_prime = 0
        const double h = relu(z) - y;
        const std::size_t b = std::min(per > 0 ? i / per : std::size_t{0}, kBatches - 1);
        double* bp = batch.data() + b * (d + 1);
        for (std::size_t j = 0; j < d; ++j) {
            sum[j] += h * x[j];
            bp[j] += h * x[j];
        }
        sum[d] += h;
        bp[d] += h;
    });
    GradientEstimate est;
    est.mode = GradientMode::MonteCarlo;
    est.n = n;
    est.vector.w_tilde.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) est.vector.w_tilde[j] = sum[j] / n;
    est.vector.bias = sum[d] / n;
    if (per > 0) {
        est.coord_std_err.assign(d + 1, 0.0);
        double se2_total = 0.0;
        for (std::size_t j = 0; j <= d; ++j) {
            double means[kBatches];
            const double overall = sum[j] / n;
            for (std::size_t k = 0; k < kBatches; ++k) {
                const std::size_t sz = (k == kBatches - 1) ? n - per * (kBatches - 1) : per;
                means[k] = batch[k * (d + 1) + j] / sz;
            }
            est.coord_std_err[j] = batch_se(means, kBatches, overall);
            se2_total += est.coord_std_err[j] * est.coord_std_err[j];
        }
        est.std_err = std::sqrt(se2_total);
    }
    return est;
}

GradientEstimate empirical_grad(const WeightVector& w, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empirical_grad: empty dataset");
    if (data.d != w.dim()) throw std::invalid_argument("empirical_grad: dimension mismatch");
    const std::size_t d = data.d;
    GradientEstimate est;
    est.mode = GradientMode::Empirical;
    est.n = data.size();
    est.vector.w_tilde.assign(d, 0.0);
    double bias_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        const double z = affine_eval(w, x);
        if (z < 0.0) continue;
        const double h = relu(z) - data.y[i];
        for (std::size_t j = 0; j < d; ++j) est.vector.w_tilde[j] += h * x[j];
        bias_sum += h;
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (double& gj : est.vector.w_tilde) gj *= inv_n;
    est.vector.bias = bias_sum * inv_n;
    return est;
}

bool has_quadrature_oracle(const Instance& instance) {
    return instance.marginal.family == MarginalFamily::StandardGaussian &&
           is_v_optimal_for(instance);
}

double zeta_deviation(const WeightVector& w, const Instance& instance, const Dataset& data,
                      std::size_t n_pop, std::uint64_t seed) {
    const GradientEstimate pop = has_quadrature_oracle(instance)
                                     ? population_gradF_gauss(w, instance.teacher)
                                     : mc_grad_loss(w, instance, n_pop, seed);
    const GradientEstimate emp = empirical_grad(w, data);
    double s = 0.0;
    for (std::size_t j = 0; j < w.dim(); ++j) {
        const double diff = pop.vector.w_tilde[j] - emp.vector.w_tilde[j];
        s += diff * diff;
    }
    const double db = pop.vector.bias - emp.vector.bias;
    return std::sqrt(s + db * db);
}

} // namespace relugd
