#include "gd.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"
#include "init.hpp"
#include "rng.hpp"

namespace relugd {

WeightVector Trajectory::gradient_at(std::size_t t) const {
    if (t + 1 >= records.size()) throw std::out_of_range("gradient_at: no successor record");
    const auto& a = records[t].w;
    const auto& b = records[t + 1].w;
    WeightVector g;
    g.w_tilde.resize(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) g.w_tilde[j] = (a.w_tilde[j] - b.w_tilde[j]) / eta;
    g.bias = (a.bias - b.bias) / eta;
    return g;
}

namespace {

WeightVector diff(const WeightVector& a, const WeightVector& b) {
    WeightVector out;
    out.w_tilde.resize(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) out.w_tilde[j] = a.w_tilde[j] - b.w_tilde[j];
    out.bias = a.bias - b.bias;
    return out;
}

} // namespace

Trajectory run_gd(const WeightVector& w0, const GDConfig& config, const Instance& instance,
                  std::uint64_t seed, const Dataset* dataset) {
    instance.validate();
    if (!w0.finite() || w0.dim() != instance.marginal.dim)
        throw std::invalid_argument("run_gd: bad initial point");
    if (config.t_max < 1) throw std::invalid_argument("run_gd: t_max >= 1 required");

    const bool quad_ok = has_quadrature_oracle(instance);
    if (config.grad_source == GradSource::PopulationQuadrature && !quad_ok)
        throw OracleIncompatibility(
            "population quadrature gradients need a Gaussian marginal with v-optimal labels");
    if (config.grad_source == GradSource::Empirical && (dataset == nullptr || dataset->size() == 0))
        throw OracleIncompatibility("empirical gradients need a nonempty dataset");

    const auto opt = opt_reference(instance);
    const WeightVector& v = instance.teacher;
    const double F0 = quad_ok ? population_F0_gauss(v) : 0.0;
    const double eta = config.step(instance.marginal.dim);

    Trajectory traj;
    traj.config = config;
    traj.instance_descriptor = instance.label_model.describe();
    traj.w0 = w0;
    traj.eta = eta;
    traj.opt_value = opt.value;
    traj.seed = seed;
    traj.records.reserve(std::min<std::size_t>(config.t_max + 1, 1 << 20));

    WeightVector w = w0;
    double stall_ref = std::numeric_limits<double>::infinity();
    std::size_t stall_at = 0;

    for (std::size_t t = 0; t <= config.t_max; ++t) {
        TrajectoryRecord rec;
        rec.t = t;
        rec.w = w;
        rec.dist_to_v = wv_distance(w, v);

        GradientEstimate grad_F;
        if (quad_ok) {
            rec.F = population_F_gauss(w, v, config.quad_nodes);
            grad_F = population_gradF_gauss(w, v, config.quad_nodes);
            rec.L = rec.F + opt.value;  // L = F + OPT for independent zero-mean noise
            rec.F0_minus_F = F0 - rec.F;
        } else {
            const auto Fmc = mc_F(w, instance, config.telemetry_mc_n, derive_seed(seed, {0xF0, t}));
            rec.F = Fmc.estimate;
            grad_F = mc_grad_loss(w, instance, config.grad_mc_n, derive_seed(seed, {0x6e, t}));
            rec.L = mc_loss(w, instance, config.telemetry_mc_n, derive_seed(seed, {0x77, t})).estimate;
            rec.F0_minus_F = std::numeric_limits<double>::quiet_NaN();
        }
        rec.grad_F_norm = grad_F.norm();
        rec.inner_gradF_wv = inner_product(grad_F.vector, diff(w, v));

        // the update gradient g_t (for quadrature sources grad L == grad F)
        GradientEstimate g_t;
        switch (config.grad_source) {
            case GradSource::PopulationQuadrature:
                g_t = grad_F;
                break;
            case GradSource::PopulationMC:
                g_t = quad_ok ? mc_grad_loss(w, instance, config.grad_mc_n,
                                             derive_seed(seed, {0x9d, t}))
                              : grad_F;  // telemetry gradient is already the MC estimate
                break;
            case GradSource::Empirical:
                g_t = empirical_grad(w, *dataset);
                if (config.track_zeta && quad_ok) {
                    const auto& pop = grad_F.vector;
                    rec.zeta_norm = wv_distance(pop, g_t.vector);
                }
                break;
        }

        traj.records.push_back(std::move(rec));
        if (t == config.t_max) break;

        const double dist2 = traj.records.back().dist_to_v * traj.records.back().dist_to_v;
        if (config.stop_radius2 && dist2 <= *config.stop_radius2) break;
        if (config.stall_check) {
            if (dist2 < stall_ref * (1.0 - 1e-10)) {
                stall_ref = dist2;
                stall_at = t;
            } else if (t - stall_at >= 2000) {
                break;  // distance has flatlined; this run is going nowhere new
            }
        }

        for (std::size_t j = 0; j < w.dim(); ++j) w.w_tilde[j] -= eta * g_t.vector.w_tilde[j];
        w.bias -= eta * g_t.vector.bias;
    }
    return traj;
}

Selection select_best_iterate(const Trajectory& traj, const Instance& instance,
                              std::size_t holdout_n, std::uint64_t seed, std::size_t stride) {
    if (traj.records.empty()) throw std::invalid_argument("select_best_iterate: empty trajectory");
    if (stride == 0) stride = 1;
    // one fixed holdout (common random numbers across iterates)
    const Dataset holdout = generate_dataset(instance, holdout_n, seed);
    Selection best;
    best.holdout_loss = std::numeric_limits<double>::infinity();
    auto eval = [&](const WeightVector& w) {
        double s = 0.0;
        for (std::size_t i = 0; i < holdout.size(); ++i) {
            const double r = relu(affine_eval(w, holdout.row(i))) - holdout.y[i];
            s += 0.5 * r * r;
        }
        return s / static_cast<double>(holdout.size());
    };
    for (std::size_t t = 0; t < traj.records.size(); t += stride) {
        const double loss = eval(traj.records[t].w);
        if (loss < best.holdout_loss) {
            best.holdout_loss = loss;
            best.T = t;
            best.w = traj.records[t].w;
        }
    }
    const std::size_t last = traj.records.size() - 1;
    if (last % stride != 0) {
        const double loss = eval(traj.records[last].w);
        if (loss < best.holdout_loss) {
            best.holdout_loss = loss;
            best.T = last;
            best.w = traj.records[last].w;
        }
    }
    return best;
}

RestartResult multi_restart(const GDConfig& config, const InitSpec& init_spec,
                            const Instance& instance, std::size_t k_restarts, std::uint64_t seed,
                            std::size_t select_stride, std::optional<double> stop_at_loss) {
    if (k_restarts < 1) throw std::invalid_argument("multi_restart: k >= 1 required");
    const std::uint64_t holdout_seed = derive_seed(seed, {0x401d});
    RestartResult best;
    best.selection.holdout_loss = std::numeric_limits<double>::infinity();
    Dataset dataset;
    const Dataset* dataset_ptr = nullptr;
    for (std::size_t r = 0; r < k_restarts; ++r) {
        const auto init = draw_init(init_spec, instance.marginal.dim,
                                    derive_seed(seed, {0x1717, r}));
        if (config.grad_source == GradSource::Empirical) {
            // fresh training set per restart, derived seed
            dataset = generate_dataset(instance, config.grad_mc_n, derive_seed(seed, {0xda7a, r}));
            dataset_ptr = &dataset;
        }
        auto traj = run_gd(init.w0, config, instance, derive_seed(seed, {0x9d, r}), dataset_ptr);
        auto sel = select_best_iterate(traj, instance, config.holdout_n, holdout_seed, select_stride);
        traj.selected_T = sel.T;
        traj.selected_holdout_loss = sel.holdout_loss;
        if (sel.holdout_loss < best.selection.holdout_loss) {
            best.trajectory = std::move(traj);
            best.selection = std::move(sel);
            best.restart_index = r;
        }
        best.restarts_run = r + 1;
        if (stop_at_loss && best.selection.holdout_loss <= *stop_at_loss) break;
    }
    return best;
}

StepReport check_descent_step(const Trajectory& traj, std::size_t t, const Instance& instance,
                              double opt_value, const StepReportParams& params) {
    if (t + 1 >= traj.records.size())
        throw std::out_of_range("check_descent_step: t+1 outside trajectory");
    const auto& cur = traj.records[t];
    const auto& next = traj.records[t + 1];
    const double F0 = population_F0_gauss(instance.teacher);
    const double dist2 = cur.dist_to_v * cur.dist_to_v;
    const double threshold2 =
        params.c_p * params.c_p * (opt_value + traj.config.eps) / params.gamma;

    StepReport rep;
    rep.hypotheses_held = (cur.F <= F0 - params.delta) && (dist2 > threshold2);
    rep.decrease = dist2 - next.dist_to_v * next.dist_to_v;
    rep.decreased = rep.decrease > 0.0;

    const auto g = traj.gradient_at(t);
    const auto wmv = [&] {
        WeightVector d;
        d.w_tilde.resize(cur.w.dim());
        for (std::size_t j = 0; j < cur.w.dim(); ++j)
            d.w_tilde[j] = cur.w.w_tilde[j] - instance.teacher.w_tilde[j];
        d.bias = cur.w.bias - instance.teacher.bias;
        return d;
    }();
    const double gn2 = g.tilde_norm2() + g.bias * g.bias;
    rep.predicted_decrease =
        2.0 * traj.eta * inner_product(g, wmv) - traj.eta * traj.eta * gn2;
    return rep;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "# eta=" << fmt17(traj.eta) << " c_eta=" << fmt17(traj.config.c_eta)
       << " t_max=" << traj.config.t_max << " eps=" << fmt17(traj.config.eps)
       << " quad_nodes=" << traj.config.quad_nodes << " seed=" << traj.seed << "\n";
    os << "# instance=" << traj.instance_descriptor << " opt=" << fmt17(traj.opt_value)
       << " selected_T=" << traj.selected_T
       << " selected_holdout_loss=" << fmt17(traj.selected_holdout_loss) << "\n";
    const std::size_t d = traj.w0.dim();
    os << "t,";
    for (std::size_t j = 0; j < d; ++j) os << "w_" << (j + 1) << ',';
    os << "bias,L,F,dist_to_v,grad_F_norm,inner_gradF_wv,F0_minus_F,zeta_norm\n";
    for (const auto& r : traj.records) {
        os << r.t << ',';
        for (std::size_t j = 0; j < d; ++j) os << fmt17(r.w.w_tilde[j]) << ',';
        os << fmt17(r.w.bias) << ',' << fmt17(r.L) << ',' << fmt17(r.F) << ','
           << fmt17(r.dist_to_v) << ',' << fmt17(r.grad_F_norm) << ','
           << fmt17(r.inner_gradF_wv) << ',' << fmt17(r.F0_minus_F) << ',';
        if (r.zeta_norm) os << fmt17(*r.zeta_norm);
        os << "\n";
    }
    return os.str();
}

} // namespace relugd
