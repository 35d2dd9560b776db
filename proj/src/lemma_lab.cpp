#include "lemma_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"
#include "oracles.hpp"
#include "rng.hpp"

namespace relugd {

namespace {

WeightVector diff(const WeightVector& a, const WeightVector& b) {
    WeightVector out;
    out.w_tilde.resize(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) out.w_tilde[j] = a.w_tilde[j] - b.w_tilde[j];
    out.bias = a.bias - b.bias;
    return out;
}

WeightVector axpy(const WeightVector& a, double s, const WeightVector& b) {
    WeightVector out;
    out.w_tilde.resize(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) out.w_tilde[j] = a.w_tilde[j] + s * b.w_tilde[j];
    out.bias = a.bias + s * b.bias;
    return out;
}

WeightVector scaled(const WeightVector& a, double s) {
    WeightVector out = a;
    for (auto& x : out.w_tilde) x *= s;
    out.bias *= s;
    return out;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// OLS slope of y against x
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

LemmaCheckResult check_jointprob(const WeightVector& w, const WeightVector& v,
                                 std::size_t nodes) {
    LemmaCheckResult res;
    res.lemma_id = "jointprob";
    const double F0 = population_F0_gauss(v);
    const double Fw = population_F_gauss(w, v, nodes);
    const double delta = std::max(F0 - Fw, 0.0);
    res.lhs = joint_orthant_prob_gauss(w, v, nodes);
    {
        std::ostringstream os;
        os << "delta=" << fmt17(delta) << ";norm_w=" << fmt17(w.norm())
           << ";norm_v=" << fmt17(v.norm());
        res.config_digest = os.str();
    }
    // delta at rounding scale means F(w) = F(0) up to quadrature noise
    if (delta <= 1e-12 * std::max(1.0, F0)) {
        res.vacuous = true;
        res.holds = true;
        res.rhs = 0.0;
        res.slack = res.lhs;
        return res;
    }
    const double denom = std::pow(w.norm(), 4) * std::pow(v.norm(), 4);
    // smallest c for which delta^2 / (c ||w||^4 ||v||^4) <= lhs
    const double c_req = (res.lhs > 0.0 && denom > 0.0)
                             ? delta * delta / (res.lhs * denom)
                             : std::numeric_limits<double>::infinity();
    res.fitted_constant = c_req;
    res.holds = std::isfinite(c_req);
    res.rhs = res.holds ? delta * delta / (c_req * denom) : 0.0;
    res.slack = res.lhs - res.rhs;
    return res;
}

LemmaCheckResult check_inner_product_lb(const WeightVector& w, const WeightVector& v,
                                        std::size_t nodes) {
    LemmaCheckResult res;
    res.lemma_id = "inner_product_lb";
    const double dist = wv_distance(w, v);
    if (dist == 0.0) {
        res.vacuous = true;
        res.holds = true;
        res.config_digest = "w=v";
        return res;
    }
    const auto grad = population_gradF_gauss(w, v, nodes);
    res.lhs = inner_product(grad.vector, diff(w, v));
    const double gamma_emp = res.lhs / (dist * dist);
    res.fitted_constant = gamma_emp;
    res.rhs = -1e-8 * dist * dist;
    res.holds = gamma_emp >= -1e-8;
    res.slack = res.lhs - res.rhs;
    {
        std::ostringstream os;
        os << "gamma_emp=" << fmt17(gamma_emp) << ";dist=" << fmt17(dist);
        res.config_digest = os.str();
    }
    return res;
}

LemmaCheckResult check_grad_opt(const WeightVector& w, const WeightVector& v, double opt_value,
                                double c_g, double gamma_min, std::size_t nodes) {
    if (opt_value < 0.0 || c_g <= 0.0 || gamma_min <= 0.0)
        throw std::invalid_argument("check_grad_opt: need opt >= 0, c_g > 0, gamma_min > 0");
    LemmaCheckResult res;
    res.lemma_id = "grad_opt";
    const double grad_norm = population_gradF_gauss(w, v, nodes).norm();
    const double root_opt = std::sqrt(opt_value);
    {
        std::ostringstream os;
        os << "grad_norm=" << fmt17(grad_norm) << ";c_g=" << fmt17(c_g)
           << ";gamma_min=" << fmt17(gamma_min) << ";opt=" << fmt17(opt_value);
        res.config_digest = os.str();
    }
    if (grad_norm > c_g * root_opt) {
        res.vacuous = true;  // premise fails; the conditional says nothing here
        res.holds = true;
        return res;
    }
    res.lhs = wv_distance(w, v);
    res.rhs = (c_g / gamma_min) * root_opt;
    res.holds = res.lhs <= res.rhs + 1e-12;
    res.slack = res.rhs - res.lhs;
    return res;
}

LemmaCheckResult check_f_lipschitz(const WeightVector& w, const WeightVector& v,
                                   std::size_t nodes) {
    LemmaCheckResult res;
    res.lemma_id = "f_lipschitz";
    res.lhs = population_F_gauss(w, v, nodes);
    const double dist = wv_distance(w, v);
    res.rhs = dist * dist;
    res.holds = res.lhs <= res.rhs + 1e-9;
    res.slack = res.rhs - res.lhs;
    return res;
}

LemmaCheckResult check_loss_decomposition(const WeightVector& w, const Instance& instance,
                                          std::size_t mc_n, std::uint64_t seed) {
    const auto opt = opt_reference(instance);
    if (opt.mode != OptReference::Mode::Exact)
        throw std::invalid_argument("check_loss_decomposition: instance needs an exact OPT");
    LemmaCheckResult res;
    res.lemma_id = "loss_decomposition";
    const auto loss = mc_loss(w, instance, mc_n, seed);
    double F;
    if (has_quadrature_oracle(instance)) {
        F = population_F_gauss(w, instance.teacher);
    } else {
        F = mc_F(w, instance, mc_n, derive_seed(seed, {0x1f})).estimate;
    }
    res.lhs = loss.estimate;
    res.rhs = 2.0 * F + 2.0 * opt.value + 4.0 * loss.std_err;
    res.holds = res.lhs <= res.rhs;
    res.slack = res.rhs - res.lhs;
    {
        std::ostringstream os;
        os << "F=" << fmt17(F) << ";opt=" << fmt17(opt.value) << ";se=" << fmt17(loss.std_err);
        res.config_digest = os.str();
    }
    return res;
}

LemmaCheckResult check_smoothness(const WeightVector& w, const WeightVector& w_prime,
                                  const WeightVector& v, const SmoothnessParams& params,
                                  std::size_t nodes) {
    LemmaCheckResult res;
    res.lemma_id = "smoothness";
    // segment must stay inside the [C_ell, C_u] norm shell
    bool inside = true;
    for (int k = 0; k <= 10; ++k) {
        const double lam = 0.1 * k;
        const double n = axpy(scaled(w, 1.0 - lam), lam, w_prime).norm();
        if (n < params.c_lower || n > params.c_upper) {
            inside = false;
            break;
        }
    }
    const double dist = wv_distance(w, w_prime);
    {
        std::ostringstream os;
        os << "ell=" << fmt17(params.ell()) << ";c_lower=" << fmt17(params.c_lower)
           << ";c_upper=" << fmt17(params.c_upper) << ";dist=" << fmt17(dist);
        res.config_digest = os.str();
    }
    if (!inside) {
        res.vacuous = true;
        res.holds = true;
        return res;
    }
    const auto g1 = population_gradF_gauss(w, v, nodes);
    const auto g2 = population_gradF_gauss(w_prime, v, nodes);
    res.lhs = wv_distance(g1.vector, g2.vector);
    res.rhs = params.ell() * dist;
    res.holds = res.lhs <= res.rhs + 1e-9;
    res.slack = res.rhs - res.lhs;
    if (dist > 0.0) res.fitted_constant = res.lhs / dist;  // local Lipschitz ratio
    return res;
}

LemmaCheckResult check_descent_expansion(const WeightVector& w, const WeightVector& step_vector,
                                         double ell, const WeightVector& v, std::size_t nodes) {
    LemmaCheckResult res;
    res.lemma_id = "descent_expansion";
    const auto w_next = axpy(w, 1.0, step_vector);
    const double s2 = step_vector.tilde_norm2() + step_vector.bias * step_vector.bias;
    const auto grad = population_gradF_gauss(w, v, nodes);
    res.lhs = population_F_gauss(w_next, v, nodes);
    res.rhs = population_F_gauss(w, v, nodes) + inner_product(grad.vector, step_vector) +
              0.5 * ell * s2;
    res.holds = res.lhs <= res.rhs + 1e-8;
    res.slack = res.rhs - res.lhs;
    {
        std::ostringstream os;
        os << "ell=" << fmt17(ell) << ";step_norm=" << fmt17(std::sqrt(s2));
        res.config_digest = os.str();
    }
    return res;
}

Instance scale_instance(const Instance& instance, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("scale_instance: alpha > 0 required");
    Instance out = instance;
    out.teacher = scaled(instance.teacher, alpha);
    if (out.label_model.kind == LabelModel::Kind::AdditiveNoise)
        out.label_model.noise_param *= alpha;
    if (out.label_model.kind == LabelModel::Kind::MisspecifiedTeacher)
        out.label_model.v_alt = scaled(out.label_model.v_alt, alpha);
    if (out.label_model.clip_bound) out.label_model.clip_bound = *out.label_model.clip_bound * alpha;
    // widen H so the scaled teacher stays admissible
    const double stretch = std::max(alpha, 1.0 / alpha);
    out.hypothesis_set = HypothesisSet(instance.hypothesis_set.c1 * stretch,
                                       instance.hypothesis_set.c2 * std::max(alpha, 1.0));
    return out;
}

ScalingDeviation check_scaling_equivariance(const Instance& instance, double alpha,
                                            const WeightVector& w0, const GDConfig& config,
                                            std::uint64_t seed) {
    const Instance scaled_inst = scale_instance(instance, alpha);

    Dataset base_data, scaled_data;
    const Dataset* base_ptr = nullptr;
    const Dataset* scaled_ptr = nullptr;
    if (config.grad_source == GradSource::Empirical) {
        const std::uint64_t data_seed = derive_seed(seed, {0xda7a});
        base_data = generate_dataset(instance, config.grad_mc_n, data_seed);
        scaled_data = generate_dataset(scaled_inst, config.grad_mc_n, data_seed);
        base_ptr = &base_data;
        scaled_ptr = &scaled_data;
    }

    const auto base = run_gd(w0, config, instance, seed, base_ptr);
    const auto other = run_gd(scaled(w0, alpha), config, scaled_inst, seed, scaled_ptr);

    ScalingDeviation dev;
    const std::size_t steps = std::min(base.records.size(), other.records.size());
    for (std::size_t t = 0; t < steps; ++t) {
        const auto target = scaled(base.records[t].w, alpha);
        const double rel = wv_distance(other.records[t].w, target) / std::max(target.norm(), 1e-12);
        dev.max_rel_dev = std::max(dev.max_rel_dev, rel);
        const double l_target = alpha * alpha * base.records[t].L;
        const double l_dev =
            std::fabs(other.records[t].L - l_target) / std::max(l_target, 1e-12);
        dev.loss_ratio_dev = std::max(dev.loss_ratio_dev, l_dev);
    }
    return dev;
}

SlopeEstimate check_zeta_slope(const Instance& instance,
                               const std::vector<WeightVector>& probes,
                               const std::vector<std::size_t>& n_list, std::size_t trials,
                               std::uint64_t seed) {
    if (n_list.size() < 3) throw std::invalid_argument("check_zeta_slope: need >= 3 sizes");
    if (probes.empty() || trials == 0)
        throw std::invalid_argument("check_zeta_slope: need probes and trials");
    const double span = static_cast<double>(*std::max_element(n_list.begin(), n_list.end())) /
                        static_cast<double>(*std::min_element(n_list.begin(), n_list.end()));
    if (span < 100.0) throw std::invalid_argument("check_zeta_slope: sizes must span >= 2 decades");

    constexpr std::size_t kPopMcN = 400000;
    // zetas[k][i] = per-trial values at n_list[i], pooled over probes
    std::vector<std::vector<std::vector<double>>> zetas(
        trials, std::vector<std::vector<double>>(n_list.size()));
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        for (std::size_t k = 0; k < trials; ++k) {
            for (std::size_t p = 0; p < probes.size(); ++p) {
                const std::uint64_t s = derive_seed(seed, {0x2e7a, i, k, p});
                const Dataset data = generate_dataset(instance, n_list[i], s);
                const double z = zeta_deviation(probes[p], instance, data, kPopMcN,
                                                derive_seed(s, {0x90}));
                if (z > 0.0) zetas[k][i].push_back(z);  // zeta == 0 carries no scale info
            }
        }
    }

    // pooled slope: median over all probes and trials at each n
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        std::vector<double> pool;
        for (std::size_t k = 0; k < trials; ++k)
            pool.insert(pool.end(), zetas[k][i].begin(), zetas[k][i].end());
        if (pool.empty()) continue;
        lx.push_back(std::log(static_cast<double>(n_list[i])));
        ly.push_back(std::log(median_of(std::move(pool))));
    }
    SlopeEstimate est;
    if (lx.size() < 3) return est;  // degenerate (e.g. zeta identically zero)
    est.slope = ols_slope(lx, ly);

    // spread of per-trial slopes -> confidence halfwidth that shrinks with trials
    std::vector<double> trial_slopes;
    for (std::size_t k = 0; k < trials; ++k) {
        std::vector<double> tx, ty;
        for (std::size_t i = 0; i < n_list.size(); ++i) {
            if (zetas[k][i].empty()) continue;
            tx.push_back(std::log(static_cast<double>(n_list[i])));
            ty.push_back(std::log(median_of(zetas[k][i])));
        }
        if (tx.size() >= 3) trial_slopes.push_back(ols_slope(tx, ty));
    }
    if (trial_slopes.size() >= 2) {
        double mean = 0.0;
        for (double s : trial_slopes) mean += s;
        mean /= static_cast<double>(trial_slopes.size());
        double var = 0.0;
        for (double s : trial_slopes) var += (s - mean) * (s - mean);
        var /= static_cast<double>(trial_slopes.size() - 1);
        est.ci = 1.959963984540054 * std::sqrt(var / static_cast<double>(trial_slopes.size()));
    }
    return est;
}

// ----- sweep harness -----

WeightVector random_sweep_point(Rng& rng, std::size_t d, double max_norm, double bias_range) {
    WeightVector w;
    w.w_tilde.resize(d);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& x : w.w_tilde) {
            x = rng.normal();
            n2 += x * x;
        }
    } while (n2 == 0.0);
    const double radius = rng.uniform(0.05, max_norm);
    const double scale = radius / std::sqrt(n2);
    for (auto& x : w.w_tilde) x *= scale;
    w.bias = rng.uniform(-bias_range, bias_range);
    return w;
}

namespace {

void append_csv_row(std::ostringstream& os, const LemmaCheckResult& r, std::size_t index,
                    double fitted, std::uint64_t seed) {
    os << r.lemma_id << ',' << index << ',' << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ','
       << fmt17(r.slack) << ',' << (r.holds ? 1 : 0) << ',' << fmt17(fitted) << ',' << seed
       << "\n";
}

std::ostringstream sweep_header() {
    std::ostringstream os;
    os << "lemma_id,point,lhs,rhs,slack,holds,fitted_constant,seed\n";
    return os;
}

} // namespace

LemmaSweep sweep_jointprob(std::size_t points, std::uint64_t seed, std::size_t nodes) {
    LemmaSweep sweep;
    sweep.lemma_id = "jointprob";
    sweep.points = points;
    std::vector<LemmaCheckResult> results;
    results.reserve(points);
    double c_fit = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(seed, {0x10b, i}));
        const auto w = random_sweep_point(rng, 3, 3.0, 2.0);
        const auto v = random_sweep_point(rng, 3, 3.0, 2.0);
        auto r = check_jointprob(w, v, nodes);
        if (r.vacuous)
            ++sweep.vacuous;
        else if (r.fitted_constant)
            c_fit = std::max(c_fit, *r.fitted_constant);
        results.push_back(std::move(r));
    }
    sweep.fitted_constant = c_fit;  // smallest c validating every point
    auto os = sweep_header();
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        if (!r.vacuous) {
            // re-evaluate the bound against the fitted sweep-wide constant
            r.rhs = c_fit > 0.0 ? r.rhs * (r.fitted_constant.value_or(c_fit) / c_fit) : 0.0;
            r.holds = r.lhs >= r.rhs - 1e-15;
            r.slack = r.lhs - r.rhs;
        }
        if (!r.holds && !r.vacuous) {
            ++sweep.violations;
            sweep.violating.push_back(r);
        }
        append_csv_row(os, r, i, c_fit, seed);
    }
    sweep.csv = os.str();
    return sweep;
}

LemmaSweep sweep_inner_product_lb(std::size_t points, std::uint64_t seed, std::size_t nodes) {
    LemmaSweep sweep;
    sweep.lemma_id = "inner_product_lb";
    sweep.points = points;
    auto os = sweep_header();
    double gamma_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(seed, {0x1bb, i}));
        const auto w = random_sweep_point(rng, 3, 3.0, 2.0);
        const auto v = random_sweep_point(rng, 3, 3.0, 2.0);
        const auto r = check_inner_product_lb(w, v, nodes);
        if (r.vacuous) {
            ++sweep.vacuous;
        } else {
            // sweep minimum of gamma_emp under the improvement premise
            const double F0 = population_F0_gauss(v);
            const double Fw = population_F_gauss(w, v, nodes);
            if (Fw <= F0 - 0.05 && w.norm() <= 3.0 && v.norm() <= 3.0)
                gamma_min = std::min(gamma_min, *r.fitted_constant);
            if (!r.holds) {
                ++sweep.violations;
                sweep.violating.push_back(r);
            }
        }
        append_csv_row(os, r, i, r.fitted_constant.value_or(0.0), seed);
    }
    sweep.fitted_constant = std::isfinite(gamma_min) ? gamma_min : 0.0;
    sweep.csv = os.str();
    return sweep;
}

LemmaSweep sweep_f_lipschitz(std::size_t points, std::uint64_t seed, std::size_t nodes) {
    LemmaSweep sweep;
    sweep.lemma_id = "f_lipschitz";
    sweep.points = points;
    auto os = sweep_header();
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(seed, {0xf11, i}));
        const auto w = random_sweep_point(rng, 3, 3.0, 2.0);
        const auto v = random_sweep_point(rng, 3, 3.0, 2.0);
        const auto r = check_f_lipschitz(w, v, nodes);
        if (r.rhs > 0.0) worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
        if (!r.holds) {
            ++sweep.violations;
            sweep.violating.push_back(r);
        }
        append_csv_row(os, r, i, worst_ratio, seed);
    }
    sweep.fitted_constant = worst_ratio;
    sweep.csv = os.str();
    return sweep;
}

LemmaSweep sweep_loss_decomposition(const Instance& instance, std::size_t points,
                                    std::size_t mc_n, std::uint64_t seed) {
    instance.validate();
    LemmaSweep sweep;
    sweep.lemma_id = "loss_decomposition";
    sweep.points = points;
    auto os = sweep_header();
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(seed, {0x10d, i}));
        const auto w = random_sweep_point(rng, instance.marginal.dim, 3.0, 2.0);
        const auto r = check_loss_decomposition(w, instance, mc_n, derive_seed(seed, {0x10e, i}));
        if (!r.holds) {
            ++sweep.violations;
            sweep.violating.push_back(r);
        }
        append_csv_row(os, r, i, 0.0, seed);
    }
    sweep.csv = os.str();
    return sweep;
}

LemmaSweep sweep_smoothness(std::size_t points, const SmoothnessParams& params,
                            std::uint64_t seed, std::size_t nodes) {
    LemmaSweep sweep;
    sweep.lemma_id = "smoothness";
    sweep.points = points;
    WeightVector v;
    v.w_tilde.assign(params.dim, 0.0);
    v.w_tilde[0] = 1.0;
    auto os = sweep_header();
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(seed, {0x500, i}));
        // a point inside the shell plus a small perturbation keeps the segment inside
        auto w = random_sweep_point(rng, params.dim, 0.8 * params.c_upper, 0.0);
        const double n = w.norm();
        if (n < 1.2 * params.c_lower) {
            const double s = 1.2 * params.c_lower / n;
            for (auto& x : w.w_tilde) x *= s;
        }
        WeightVector w_prime = w;
        for (auto& x : w_prime.w_tilde) x += 0.05 * rng.normal();
        w_prime.bias += 0.05 * rng.normal();
        const auto r = check_smoothness(w, w_prime, v, params, nodes);
        if (r.vacuous) {
            ++sweep.vacuous;
        } else {
            if (r.fitted_constant) worst_ratio = std::max(worst_ratio, *r.fitted_constant);
            if (!r.holds) {
                ++sweep.violations;
                sweep.violating.push_back(r);
            }
        }
        append_csv_row(os, r, i, worst_ratio, seed);
    }
    sweep.fitted_constant = worst_ratio;
    sweep.csv = os.str();
    return sweep;
}

} // namespace relugd
