#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gd.hpp"
#include "init.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace relugd;

namespace {

Instance gaussian_instance(WeightVector v, LabelModel model = LabelModel::realizable()) {
    Instance inst;
    inst.marginal.family = MarginalFamily::StandardGaussian;
    inst.marginal.dim = v.dim();
    inst.teacher = std::move(v);
    inst.label_model = std::move(model);
    inst.hypothesis_set = HypothesisSet(3.0, 2.0);
    return inst;
}

} // namespace

TEST_CASE("w0 = v is a fixed point under population quadrature") {
    const WeightVector v({1.0, 0.0}, 0.5);
    const auto inst = gaussian_instance(v);
    GDConfig cfg;
    cfg.t_max = 20;
    const auto traj = run_gd(v, cfg, inst, 1);
    REQUIRE(traj.records.size() == 21);
    for (const auto& r : traj.records) {
        CHECK(wv_distance(r.w, v) < 1e-10);
        CHECK(r.F < 1e-18);
    }
}

TEST_CASE("update identity holds for every gradient source") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const WeightVector w0({0.4, 0.6}, -0.2);
    GDConfig cfg;
    cfg.t_max = 30;
    for (const auto source : {GradSource::PopulationQuadrature, GradSource::PopulationMC,
                              GradSource::Empirical}) {
        auto inst = gaussian_instance(v, LabelModel::gaussian_noise(0.1));
        cfg.grad_source = source;
        cfg.grad_mc_n = 5000;
        Dataset data;
        const Dataset* ptr = nullptr;
        if (source == GradSource::Empirical) {
            data = generate_dataset(inst, 5000, 77);
            ptr = &data;
        }
        const auto traj = run_gd(w0, cfg, inst, 42, ptr);
        for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
            const auto g = traj.gradient_at(t);
            const double d0 = traj.records[t].dist_to_v;
            const double d1 = traj.records[t + 1].dist_to_v;
            WeightVector wmv = traj.records[t].w;
            for (std::size_t j = 0; j < wmv.dim(); ++j) wmv.w_tilde[j] -= v.w_tilde[j];
            wmv.bias -= v.bias;
            const double predicted = 2.0 * traj.eta * inner_product(g, wmv) -
                                     traj.eta * traj.eta *
                                         (g.tilde_norm2() + g.bias * g.bias);
            const double actual = d0 * d0 - d1 * d1;
            CHECK(std::fabs(actual - predicted) <=
                  1e-10 * std::max({1.0, std::fabs(actual), std::fabs(predicted)}));
        }
    }
}

TEST_CASE("identical seeds give bit-identical trajectories") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v, LabelModel::gaussian_noise(0.1));
    GDConfig cfg;
    cfg.grad_source = GradSource::PopulationMC;
    cfg.grad_mc_n = 2000;
    cfg.t_max = 25;
    const WeightVector w0({0.2, 0.1}, 0.0);
    const auto a = run_gd(w0, cfg, inst, 9);
    const auto b = run_gd(w0, cfg, inst, 9);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t t = 0; t < a.records.size(); ++t) {
        CHECK(a.records[t].w.w_tilde == b.records[t].w.w_tilde);
        CHECK(a.records[t].w.bias == b.records[t].w.bias);
        CHECK(a.records[t].L == b.records[t].L);
    }
}

TEST_CASE("monotone F and distance from a good init") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v, LabelModel::gaussian_noise(0.1));  // OPT = 0.005
    const double opt = opt_reference(inst).value;
    GDConfig cfg;
    cfg.t_max = 2000;
    const WeightVector w0({0.6, 0.3}, 0.0);  // F(w0) well below F(0)
    REQUIRE(population_F_gauss(w0, v) <= population_F0_gauss(v) - 0.05);
    const auto traj = run_gd(w0, cfg, inst, 3);
    for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
        if (traj.records[t].dist_to_v * traj.records[t].dist_to_v <= 25.0 * (opt + cfg.eps))
            break;
        CHECK(traj.records[t + 1].F <= traj.records[t].F + 1e-9);
        CHECK(traj.records[t + 1].dist_to_v <= traj.records[t].dist_to_v + 1e-9);
    }
    // convergence within the spec'd radius
    CHECK(traj.records.back().dist_to_v * traj.records.back().dist_to_v <= 10.0 * (opt + cfg.eps));
}

TEST_CASE("quadrature source rejects incompatible instances") {
    WeightVector v({1.0, 0.0}, 0.0);
    auto inst = gaussian_instance(v);
    inst.marginal.family = MarginalFamily::UniformCube;
    GDConfig cfg;
    CHECK_THROWS_AS(run_gd(v, cfg, inst, 1), OracleIncompatibility);

    auto flip = gaussian_instance(v);
    flip.label_model.kind = LabelModel::Kind::RegionFlip;
    flip.label_model.flip_radius = 1.0;
    flip.label_model.flip_magnitude = 0.5;
    CHECK_THROWS_AS(run_gd(v, cfg, flip, 1), OracleIncompatibility);

    cfg.grad_source = GradSource::Empirical;
    CHECK_THROWS_AS(run_gd(v, cfg, gaussian_instance(v), 1), OracleIncompatibility);
}

TEST_CASE("select_best_iterate picks the argmin with ties at smallest t") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v);
    GDConfig cfg;
    cfg.t_max = 600;
    const WeightVector w0({0.5, 0.2}, 0.0);
    const auto traj = run_gd(w0, cfg, inst, 4);
    const auto sel = select_best_iterate(traj, inst, 5000, 11);
    // realizable + quadrature converges monotonically, so late iterates win
    CHECK(sel.T > 300);
    CHECK(sel.holdout_loss <= 1e-4);
    const auto again = select_best_iterate(traj, inst, 5000, 11);
    CHECK(again.T == sel.T);
    CHECK(again.holdout_loss == sel.holdout_loss);

    // stride subsampling still evaluates the final iterate
    const auto strided = select_best_iterate(traj, inst, 5000, 11, 17);
    CHECK(strided.holdout_loss <= sel.holdout_loss * 1.5 + 1e-6);
}

TEST_CASE("trajectory containing v selects it with zero loss") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v);
    GDConfig cfg;
    cfg.t_max = 5;
    const auto traj = run_gd(v, cfg, inst, 2);
    const auto sel = select_best_iterate(traj, inst, 2000, 3);
    CHECK(sel.T == 0);  // everything ties at loss 0; smallest t wins
    CHECK(sel.holdout_loss == 0.0);
}

TEST_CASE("multi_restart improves with more restarts and can stop early") {
    const WeightVector v({1.0, 0.0}, 0.7);
    const auto inst = gaussian_instance(v, LabelModel::gaussian_noise(0.1));
    GDConfig cfg;
    cfg.t_max = 400;
    InitSpec init;
    init.scale = 1.0;

    const auto one = multi_restart(cfg, init, inst, 1, 5);
    const auto five = multi_restart(cfg, init, inst, 5, 5);
    CHECK(five.selection.holdout_loss <= one.selection.holdout_loss);
    CHECK(five.restarts_run == 5);

    const auto stopped = multi_restart(cfg, init, inst, 5, 5, 1, 1e9);
    CHECK(stopped.restarts_run == 1);  // absurd target satisfied immediately

    const auto again = multi_restart(cfg, init, inst, 5, 5);
    CHECK(again.selection.holdout_loss == five.selection.holdout_loss);
    CHECK(again.restart_index == five.restart_index);
}

TEST_CASE("check_descent_step reports regime and the algebraic decrease") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v, LabelModel::gaussian_noise(0.05));
    GDConfig cfg;
    cfg.t_max = 100;
    const WeightVector w0({0.6, 0.4}, 0.0);
    const auto traj = run_gd(w0, cfg, inst, 8);
    const double opt = opt_reference(inst).value;
    StepReportParams params;
    const auto rep = check_descent_step(traj, 0, inst, opt, params);
    CHECK(rep.hypotheses_held);
    CHECK(rep.decreased);
    CHECK(std::fabs(rep.decrease - rep.predicted_decrease) < 1e-12);

    // at the teacher the distance hypothesis fails
    const auto fixed = run_gd(v, cfg, inst, 8);
    const auto out = check_descent_step(fixed, 0, inst, opt, params);
    CHECK_FALSE(out.hypotheses_held);
}

TEST_CASE("stop_radius2 and stall_check cut runs short") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v);
    GDConfig cfg;
    cfg.t_max = 5000;
    cfg.stop_radius2 = 1e-4;
    const WeightVector w0({0.5, 0.2}, 0.0);
    const auto traj = run_gd(w0, cfg, inst, 6);
    CHECK(traj.records.size() < 5001);
    CHECK(traj.records.back().dist_to_v * traj.records.back().dist_to_v <= 1e-4);

    GDConfig stalled;
    stalled.t_max = 10000;
    stalled.stall_check = true;
    const auto fixed = run_gd(v, stalled, inst, 6);
    CHECK(fixed.records.size() < 2200);  // flatlines at t = 0 and stops after the window
}

TEST_CASE("trajectory CSV has metadata lines and the full column set") {
    const WeightVector v({1.0, 0.0}, 0.0);
    const auto inst = gaussian_instance(v);
    GDConfig cfg;
    cfg.t_max = 3;
    const auto traj = run_gd(v, cfg, inst, 2);
    const auto csv = trajectory_csv(traj);
    CHECK(csv.rfind("#", 0) == 0);
    CHECK(csv.find("t,w_1,w_2,bias,L,F,dist_to_v,grad_F_norm,inner_gradF_wv,F0_minus_F,zeta_norm") !=
          std::string::npos);
    CHECK(csv.find("seed=2") != std::string::npos);
}
