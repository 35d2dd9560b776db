#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "labels.hpp"
#include "oracles.hpp"

namespace relugd {

// Raised when a gradient source cannot serve the given instance; maps to a
// dedicated CLI exit code.
struct OracleIncompatibility : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GradSource { PopulationQuadrature, PopulationMC, Empirical };

struct GDConfig {
    double c_eta = 0.1;                   // step = c_eta / d
    std::size_t t_max = 1000;
    GradSource grad_source = GradSource::PopulationQuadrature;
    std::size_t grad_mc_n = 100000;       // PopulationMC: fresh samples per step
    std::size_t holdout_n = 10000;
    double eps = 1e-4;
    std::optional<double> stop_radius2;   // diagnostics: stop once ||w_t - v||^2 below
    bool stall_check = false;             // diagnostics: stop when distance stops moving
    std::size_t quad_nodes = 80;
    std::size_t telemetry_mc_n = 20000;   // population F/L estimates when no quadrature
    bool track_zeta = false;              // Empirical source: record ||zeta_t||

    double step(std::size_t d) const { return c_eta / static_cast<double>(d); }
};

struct TrajectoryRecord {
    std::size_t t = 0;
    WeightVector w;
    double L = 0.0;
    double F = 0.0;
    double dist_to_v = 0.0;
    double grad_F_norm = 0.0;
    double inner_gradF_wv = 0.0;  // <grad F(w_t), w_t - v>
    double F0_minus_F = 0.0;
    std::optional<double> zeta_norm;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    GDConfig config;
    std::string instance_descriptor;
    WeightVector w0;
    double eta = 0.0;
    double opt_value = 0.0;
    std::uint64_t seed = 0;
    std::size_t selected_T = 0;
    double selected_holdout_loss = 0.0;

    // gradient applied at step t, recovered from consecutive iterates
    WeightVector gradient_at(std::size_t t) const;
};

// w_{t+1} = w_t - eta * g_t with full telemetry. `dataset` is required for
// the Empirical source and ignored otherwise.
Trajectory run_gd(const WeightVector& w0, const GDConfig& config, const Instance& instance,
                  std::uint64_t seed, const Dataset* dataset = nullptr);

struct Selection {
    std::size_t T = 0;
    WeightVector w;
    double holdout_loss = 0.0;
};

// Smallest holdout loss over recorded iterates (ties -> smallest t).
// stride > 1 subsamples the candidate set (final iterate always included).
Selection select_best_iterate(const Trajectory& traj, const Instance& instance,
                              std::size_t holdout_n, std::uint64_t seed, std::size_t stride = 1);

struct InitSpec;  // init.hpp

struct RestartResult {
    Trajectory trajectory;
    Selection selection;
    std::size_t restart_index = 0;
    std::size_t restarts_run = 0;
};

// Best of k independent init + run + select pipelines with derived seeds.
// stop_at_loss short-circuits once a restart reaches the target.
RestartResult multi_restart(const GDConfig& config, const InitSpec& init_spec,
                            const Instance& instance, std::size_t k_restarts, std::uint64_t seed,
                            std::size_t select_stride = 1,
                            std::optional<double> stop_at_loss = std::nullopt);

struct StepReportParams {
    double delta = 0.05;
    double c_p = 1.0;
    double gamma = 0.1;
};

struct StepReport {
    bool hypotheses_held = false;  // F(w_t) <= F(0) - delta and dist^2 > c_p^2 (OPT+eps)/gamma
    bool decreased = false;        // dist_{t+1} < dist_t
    double decrease = 0.0;         // dist_t^2 - dist_{t+1}^2
    double predicted_decrease = 0.0;  // 2 eta <g, w-v> - eta^2 ||g||^2
};

StepReport check_descent_step(const Trajectory& traj, std::size_t t, const Instance& instance,
                              double opt_value, const StepReportParams& params);

std::string trajectory_csv(const Trajectory& traj);

} // namespace relugd
