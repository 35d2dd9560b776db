#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "gd.hpp"
#include "init.hpp"
#include "lemma_lab.hpp"
#include "marginals.hpp"
#include "oracles.hpp"
#include "rng.hpp"

namespace relugd {

namespace {

namespace fs = std::filesystem;

// collects everything written so a failing command leaves no partial outputs
struct OutputTracker {
    std::vector<fs::path> written;

    void write(const fs::path& path, const std::string& content) {
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + path.string());
        written.push_back(path);
    }

    void discard_all() {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        written.clear();
    }
};

MarginalFamily parse_family(const std::string& name, const Config& cfg,
                            const std::string& section, const std::string& key) {
    if (name == "gaussian") return MarginalFamily::StandardGaussian;
    if (name == "uniform_cube") return MarginalFamily::UniformCube;
    if (name == "laplace") return MarginalFamily::LaplaceProduct;
    // reuse get_choice purely for its line-numbered error message
    cfg.get_choice(section, key, name, {"gaussian", "uniform_cube", "laplace"});
    throw ConfigError("unreachable family '" + name + "'");
}

WeightVector make_teacher(std::size_t d, double norm, double bias,
                          std::optional<std::uint64_t> direction_seed) {
    WeightVector v;
    v.w_tilde.assign(d, 0.0);
    v.bias = bias;
    if (direction_seed) {
        Rng rng(*direction_seed);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (auto& x : v.w_tilde) {
                x = rng.normal();
                n2 += x * x;
            }
        } while (n2 == 0.0);
        const double s = norm / std::sqrt(n2);
        for (auto& x : v.w_tilde) x *= s;
    } else {
        v.w_tilde[0] = norm;
    }
    return v;
}

Instance build_instance(const Config& cfg) {
    Instance inst;
    const std::string family = cfg.get_choice("instance", "family", "gaussian",
                                              {"gaussian", "uniform_cube", "laplace"});
    inst.marginal.family = parse_family(family, cfg, "instance", "family");
    const long long d = cfg.get_int("instance", "d", 2);
    if (d < 1) throw ConfigError("instance.d must be >= 1");
    inst.marginal.dim = static_cast<std::size_t>(d);

    const double norm = cfg.get_real("instance", "teacher_norm", 1.0);
    if (!(norm > 0.0)) throw ConfigError("instance.teacher_norm must be positive");
    const double b_v = cfg.get_real("instance", "b_v", 0.0);
    std::optional<std::uint64_t> dir_seed;
    if (cfg.has("instance", "teacher_seed"))
        dir_seed = cfg.get_u64("instance", "teacher_seed", 0);
    inst.teacher = make_teacher(inst.marginal.dim, norm, b_v, dir_seed);

    const std::string model =
        cfg.get_choice("instance", "label_model", "realizable",
                       {"realizable", "gauss_noise", "uniform_noise", "misspecified",
                        "region_flip"});
    if (model == "realizable") {
        inst.label_model = LabelModel::realizable();
    } else if (model == "gauss_noise") {
        inst.label_model = LabelModel::gaussian_noise(cfg.get_real("instance", "noise_std", 0.1));
    } else if (model == "uniform_noise") {
        inst.label_model =
            LabelModel::uniform_noise(cfg.get_real("instance", "noise_half_width", 0.1));
    } else if (model == "misspecified") {
        inst.label_model.kind = LabelModel::Kind::MisspecifiedTeacher;
        inst.label_model.mix_prob = cfg.get_real("instance", "mix_prob", 0.1);
        inst.label_model.v_alt = inst.teacher;
        inst.label_model.v_alt.bias += 1.0;
    } else {
        inst.label_model.kind = LabelModel::Kind::RegionFlip;
        inst.label_model.flip_radius = cfg.get_real("instance", "flip_radius", 1.0);
        inst.label_model.flip_magnitude = cfg.get_real("instance", "flip_magnitude", 0.5);
    }
    if (cfg.has("instance", "clip_bound"))
        inst.label_model.clip_bound = cfg.get_real("instance", "clip_bound", 0.0);

    const double c1_default = std::max({3.0, norm, 1.0 / norm});
    const double c2_default = std::max(2.0, std::fabs(b_v));
    inst.hypothesis_set =
        HypothesisSet(cfg.get_real("instance", "c1", c1_default),
                      cfg.get_real("instance", "c2", c2_default));
    inst.validate();
    return inst;
}

GDConfig build_gd_config(const Config& cfg) {
    GDConfig gd;
    gd.c_eta = cfg.get_real("gd", "c_eta", 0.1);
    gd.t_max = static_cast<std::size_t>(cfg.get_int("gd", "t_max", 2000));
    const std::string source =
        cfg.get_choice("gd", "grad_source", "quadrature", {"quadrature", "mc", "empirical"});
    gd.grad_source = source == "quadrature" ? GradSource::PopulationQuadrature
                     : source == "mc"       ? GradSource::PopulationMC
                                            : GradSource::Empirical;
    gd.grad_mc_n = static_cast<std::size_t>(cfg.get_int("gd", "grad_mc_n", 100000));
    gd.holdout_n = static_cast<std::size_t>(cfg.get_int("gd", "holdout_n", 10000));
    gd.eps = cfg.get_real("gd", "eps", 1e-4);
    gd.quad_nodes = static_cast<std::size_t>(cfg.get_int("gd", "quad_nodes", 80));
    if (gd.grad_source == GradSource::Empirical)
        gd.grad_mc_n = static_cast<std::size_t>(
            cfg.get_int("gd", "train_n", static_cast<long long>(gd.grad_mc_n)));
    return gd;
}

InitSpec build_init_spec(const Config& cfg, const Instance& inst) {
    InitSpec spec;
    const std::string mode =
        cfg.get_choice("init", "mode", "known_scale", {"known_scale", "unknown_scale"});
    spec.mode = mode == "known_scale" ? InitSpec::Mode::KnownScale : InitSpec::Mode::UnknownScale;
    spec.scale = inst.teacher.tilde_norm();
    spec.beta = cfg.get_real("init", "beta", 1.0);
    spec.m = cfg.get_real("init", "m", 1024.0);
    return spec;
}

int effective_jobs(const Config& cfg, const CommandOptions& options) {
    if (options.jobs && *options.jobs > 0) return *options.jobs;
    if (const char* env = std::getenv("RELU_GD_LAB_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) return j;
    }
    const long long j = cfg.get_int("run", "jobs", 1);
    return j > 0 ? static_cast<int>(j) : 1;
}

std::uint64_t master_seed(const Config& cfg, const CommandOptions& options) {
    if (options.seed) return *options.seed;
    return cfg.get_u64("run", "master_seed", 12345);
}

fs::path out_dir(const Config& cfg, const CommandOptions& options) {
    const std::string dir =
        !options.out_dir.empty() ? options.out_dir : cfg.get_string("output", "dir", ".");
    return fs::path(dir);
}

// fixed-order parallel map: results land by index, so output never depends on
// scheduling
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const int n_threads = std::min<std::size_t>(jobs, count);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

const char* kSummaryHeader =
    "d,family,b_v,opt,c_eta,restarts,best_holdout_loss,ratio,selected_T,init_success_rate,seed\n";

struct SummaryRow {
    std::size_t d = 0;
    std::string family;
    double b_v = 0.0;
    double opt = 0.0;
    double c_eta = 0.0;
    std::size_t restarts = 0;
    double best_holdout_loss = 0.0;
    double ratio = 0.0;
    std::size_t selected_T = 0;
    double init_success_rate = 0.0;
    std::uint64_t seed = 0;

    std::string csv() const {
        std::ostringstream os;
        os << d << ',' << family << ',' << fmt17(b_v) << ',' << fmt17(opt) << ',' << fmt17(c_eta)
           << ',' << restarts << ',' << fmt17(best_holdout_loss) << ',' << fmt17(ratio) << ','
           << selected_T << ',' << fmt17(init_success_rate) << ',' << seed << "\n";
        return os.str();
    }
};

SummaryRow run_cell(const Instance& inst, const GDConfig& gd, const InitSpec& init_spec,
                    std::size_t restarts, std::uint64_t seed, double eps,
                    Trajectory* trajectory_out = nullptr) {
    const auto result = multi_restart(gd, init_spec, inst, restarts, seed);

    SummaryRow row;
    row.d = inst.marginal.dim;
    row.family = family_name(inst.marginal.family);
    row.b_v = inst.teacher.bias;
    row.opt = opt_reference(inst).value;
    row.c_eta = gd.c_eta;
    row.restarts = restarts;
    row.best_holdout_loss = result.selection.holdout_loss;
    row.ratio = row.opt > 0.0 ? (row.best_holdout_loss - eps) / row.opt
                              : std::numeric_limits<double>::quiet_NaN();
    row.selected_T = result.selection.T;
    row.seed = seed;

    // success rate of the init draws actually used, when the quadrature
    // oracle can judge them
    if (has_quadrature_oracle(inst)) {
        std::size_t ok = 0;
        for (std::size_t r = 0; r < result.restarts_run; ++r) {
            const auto init = draw_init(init_spec, inst.marginal.dim,
                                        derive_seed(seed, {0x1717, r}));
            if (init_success_check(init.w0, inst.teacher, 0.01, 5.0)) ++ok;
        }
        row.init_success_rate =
            static_cast<double>(ok) / static_cast<double>(result.restarts_run);
    } else {
        row.init_success_rate = std::numeric_limits<double>::quiet_NaN();
    }
    if (trajectory_out) *trajectory_out = result.trajectory;
    return row;
}

int guarded(OutputTracker& outputs, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        outputs.discard_all();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const OracleIncompatibility& e) {
        outputs.discard_all();
        std::cerr << "oracle incompatibility: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        outputs.discard_all();
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int cmd_run(const CommandOptions& options) {
    OutputTracker outputs;
    return guarded(outputs, [&] {
        const Config cfg = Config::parse_file(options.config_path);
        const Instance inst = build_instance(cfg);
        const GDConfig gd = build_gd_config(cfg);
        const InitSpec init_spec = build_init_spec(cfg, inst);
        const std::size_t restarts =
            static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("init", "restarts", 5)));
        const std::uint64_t seed = master_seed(cfg, options);
        const fs::path dir = out_dir(cfg, options);

        Trajectory trajectory;
        const SummaryRow row = run_cell(inst, gd, init_spec, restarts,
                                        derive_seed(seed, {0x5eed}), gd.eps, &trajectory);

        std::ostringstream summary;
        summary << "# master_seed=" << seed << "\n" << kSummaryHeader << row.csv();
        outputs.write(dir / "summary.csv", summary.str());
        if (cfg.get_bool("output", "write_trajectories", false))
            outputs.write(dir / "trajectory.csv", trajectory_csv(trajectory));

        std::cout << "run: best_holdout_loss=" << fmt17(row.best_holdout_loss)
                  << " selected_T=" << row.selected_T << " ratio=" << fmt17(row.ratio) << "\n";
        return 0;
    });
}

int cmd_sweep(const CommandOptions& options) {
    OutputTracker outputs;
    return guarded(outputs, [&] {
        const Config cfg = Config::parse_file(options.config_path);
        const GDConfig gd_base = build_gd_config(cfg);
        const auto d_list = cfg.get_int_list("sweep", "d_list", {2, 10});
        const auto opt_list = cfg.get_real_list("sweep", "opt_list", {1e-3, 1e-2});
        const auto b_v_list = cfg.get_real_list("sweep", "b_v_list", {0.0});
        const auto families = cfg.get_string_list("sweep", "family_list", {"gaussian"});
        const long long replicates = std::max<long long>(1, cfg.get_int("sweep", "replicates", 3));
        const std::size_t restarts =
            static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("init", "restarts", 5)));
        const std::uint64_t seed = master_seed(cfg, options);
        const int jobs = effective_jobs(cfg, options);
        const fs::path dir = out_dir(cfg, options);
        for (const auto& f : families)
            parse_family(f, cfg, "sweep", "family_list");  // fail fast before spawning work

        struct Task {
            std::size_t di, oi, bi, fi;
            long long rep;
        };
        std::vector<Task> tasks;
        for (std::size_t fi = 0; fi < families.size(); ++fi)
            for (std::size_t di = 0; di < d_list.size(); ++di)
                for (std::size_t oi = 0; oi < opt_list.size(); ++oi)
                    for (std::size_t bi = 0; bi < b_v_list.size(); ++bi)
                        for (long long rep = 0; rep < replicates; ++rep)
                            tasks.push_back({di, oi, bi, fi, rep});

        std::vector<SummaryRow> rows(tasks.size());
        parallel_for(tasks.size(), jobs, [&](std::size_t i) {
            const Task& t = tasks[i];
            Instance inst;
            inst.marginal.family = parse_family(families[t.fi], cfg, "sweep", "family_list");
            inst.marginal.dim = static_cast<std::size_t>(d_list[t.di]);
            inst.teacher = make_teacher(inst.marginal.dim, 1.0, b_v_list[t.bi], std::nullopt);
            // calibrate the noise so the cell's OPT is exact: OPT = s^2 / 2
            const double opt = opt_list[t.oi];
            if (!(opt > 0.0)) throw ConfigError("sweep.opt_list entries must be positive");
            inst.label_model = LabelModel::gaussian_noise(std::sqrt(2.0 * opt));
            inst.hypothesis_set = HypothesisSet(3.0, 2.0);
            inst.validate();

            InitSpec init_spec = build_init_spec(cfg, inst);
            const std::uint64_t cell_seed =
                derive_seed(seed, {t.di, t.oi, t.bi, t.fi, static_cast<std::uint64_t>(t.rep)});
            rows[i] = run_cell(inst, gd_base, init_spec, restarts, cell_seed, gd_base.eps);
        });

        std::ostringstream summary;
        summary << "# master_seed=" << seed << " replicates=" << replicates << "\n"
                << kSummaryHeader;
        for (const auto& row : rows) summary << row.csv();
        outputs.write(dir / "sweep_summary.csv", summary.str());

        // dimension dependence: median and max ratio per d
        std::ostringstream agg;
        agg << "# master_seed=" << seed << "\nd,median_ratio,max_ratio,rows\n";
        for (const auto d : d_list) {
            std::vector<double> ratios;
            for (const auto& row : rows)
                if (row.d == static_cast<std::size_t>(d) && std::isfinite(row.ratio))
                    ratios.push_back(row.ratio);
            if (ratios.empty()) continue;
            std::sort(ratios.begin(), ratios.end());
            const double median = ratios.size() % 2
                                      ? ratios[ratios.size() / 2]
                                      : 0.5 * (ratios[ratios.size() / 2 - 1] +
                                               ratios[ratios.size() / 2]);
            agg << d << ',' << fmt17(median) << ',' << fmt17(ratios.back()) << ','
                << ratios.size() << "\n";
        }
        outputs.write(dir / "sweep_aggregate.csv", agg.str());
        std::cout << "sweep: " << rows.size() << " rows -> " << (dir / "sweep_summary.csv").string()
                  << "\n";
        return 0;
    });
}

int cmd_verify_lemmas(const CommandOptions& options) {
    OutputTracker outputs;
    return guarded(outputs, [&] {
        const Config cfg = Config::parse_file(options.config_path);
        const std::uint64_t seed = master_seed(cfg, options);
        const fs::path dir = out_dir(cfg, options);
        const std::size_t points =
            static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("lemmas", "points", 500)));
        const std::size_t mc_n =
            static_cast<std::size_t>(std::max<long long>(100, cfg.get_int("lemmas", "mc_n", 20000)));

        Instance inst = build_instance(cfg);
        if (inst.marginal.family != MarginalFamily::StandardGaussian)
            throw OracleIncompatibility("lemma verification needs a Gaussian marginal");
        if (opt_reference(inst).mode != OptReference::Mode::Exact)
            throw OracleIncompatibility("lemma verification needs a label model with exact OPT");

        std::vector<LemmaSweep> sweeps;
        sweeps.push_back(sweep_jointprob(points, derive_seed(seed, {1})));
        sweeps.push_back(sweep_inner_product_lb(points, derive_seed(seed, {2})));
        sweeps.push_back(sweep_f_lipschitz(points, derive_seed(seed, {3})));
        sweeps.push_back(
            sweep_loss_decomposition(inst, std::min<std::size_t>(points, 200), mc_n,
                                     derive_seed(seed, {4})));
        SmoothnessParams smooth;
        smooth.dim = 2;
        sweeps.push_back(sweep_smoothness(std::min<std::size_t>(points, 1000), smooth,
                                          derive_seed(seed, {5})));

        std::size_t total_violations = 0;
        std::ostringstream banner;
        for (const auto& s : sweeps) {
            outputs.write(dir / (s.lemma_id + ".csv"), s.csv);
            total_violations += s.violations;
            banner << s.lemma_id << ": " << (s.violations == 0 ? "PASS" : "FAIL") << " ("
                   << s.points << " points, " << s.violations << " violations, " << s.vacuous
                   << " vacuous, fitted=" << fmt17(s.fitted_constant) << ")\n";
            if (s.violations > 0) {
                for (const auto& bad : s.violating) {
                    banner << "  violation: lhs=" << fmt17(bad.lhs) << " rhs=" << fmt17(bad.rhs)
                           << " " << bad.config_digest << "\n";
                }
            }
        }
        outputs.write(dir / "lemma_banner.txt", banner.str());
        std::cout << banner.str();
        std::cout << (total_violations == 0 ? "all lemma sweeps passed\n"
                                            : "lemma violations found\n");
        return total_violations == 0 ? 0 : 1;
    });
}

int cmd_estimate_regularity(const CommandOptions& options) {
    OutputTracker outputs;
    return guarded(outputs, [&] {
        const Config cfg = Config::parse_file(options.config_path);
        const std::uint64_t seed = master_seed(cfg, options);
        const fs::path dir = out_dir(cfg, options);
        const auto families = cfg.get_string_list("regularity", "family_list",
                                                  {"gaussian", "uniform_cube", "laplace"});
        const std::size_t trials =
            static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("regularity", "trials", 3)));
        const std::size_t n = static_cast<std::size_t>(
            std::max<long long>(10000, cfg.get_int("regularity", "n", 200000)));
        const long long d = cfg.get_int("instance", "d", 5);
        if (d < 2) throw ConfigError("instance.d must be >= 2 for regularity estimation");

        for (std::size_t fi = 0; fi < families.size(); ++fi) {
            MarginalSpec spec;
            spec.family = parse_family(families[fi], cfg, "regularity", "family_list");
            spec.dim = static_cast<std::size_t>(d);
            const auto report = regularity_report(spec, trials, n, derive_seed(seed, {0x4e9, fi}));
            outputs.write(dir / ("regularity_" + families[fi] + ".csv"),
                          regularity_report_csv(spec, report));
            std::cout << families[fi] << ": beta2=[" << fmt17(report.beta2_lo) << ","
                      << fmt17(report.beta2_hi) << "] beta4=" << fmt17(report.beta4)
                      << " beta5=" << fmt17(report.beta5) << "\n";
        }
        return 0;
    });
}

int cmd_init_study(const CommandOptions& options) {
    OutputTracker outputs;
    return guarded(outputs, [&] {
        const Config cfg = Config::parse_file(options.config_path);
        const std::uint64_t seed = master_seed(cfg, options);
        const fs::path dir = out_dir(cfg, options);
        const auto d_list = cfg.get_int_list("init", "d_list", {2, 10});
        const auto b_v_list = cfg.get_real_list("init", "b_v_list", {0.0, 1.0});
        const std::size_t trials =
            static_cast<std::size_t>(std::max<long long>(100, cfg.get_int("init", "trials", 2000)));
        const double delta = cfg.get_real("init", "delta", 0.01);
        const double c3 = cfg.get_real("init", "c3", 5.0);
        const double m = cfg.get_real("init", "m", 1024.0);
        const double beta = cfg.get_real("init", "beta", 1.0);

        std::ostringstream os;
        os << "# master_seed=" << seed << " trials=" << trials << " delta=" << fmt17(delta)
           << " c3=" << fmt17(c3) << " m=" << fmt17(m) << "\n";
        os << "mode,d,b_v,m,delta,c3,trials,rate,ci_lo,ci_hi,known_unknown_ratio,seed\n";
        for (std::size_t di = 0; di < d_list.size(); ++di) {
            for (std::size_t bi = 0; bi < b_v_list.size(); ++bi) {
                const auto v = make_teacher(static_cast<std::size_t>(d_list[di]), 1.0,
                                            b_v_list[bi], std::nullopt);
                InitSpec known;
                known.mode = InitSpec::Mode::KnownScale;
                known.scale = 1.0;
                known.beta = beta;
                InitSpec unknown = known;
                unknown.mode = InitSpec::Mode::UnknownScale;
                unknown.m = m;

                const std::uint64_t cell = derive_seed(seed, {0x171, di, bi});
                const auto kr = estimate_init_success_rate(known, v, delta, c3, trials, cell);
                const auto ur = estimate_init_success_rate(unknown, v, delta, c3, trials,
                                                           derive_seed(cell, {1}));
                const double ratio =
                    kr.rate > 0.0 ? ur.rate / kr.rate : std::numeric_limits<double>::quiet_NaN();
                const std::string shared = std::string(",") + fmt17(delta) + ',' + fmt17(c3) +
                                           ',' + std::to_string(trials) + ',';
                os << "known_scale," << d_list[di] << ',' << fmt17(b_v_list[bi]) << ','
                   << fmt17(m) << shared << fmt17(kr.rate) << ',' << fmt17(kr.ci_lo) << ','
                   << fmt17(kr.ci_hi) << ",," << cell << "\n";
                os << "unknown_scale," << d_list[di] << ',' << fmt17(b_v_list[bi]) << ','
                   << fmt17(m) << shared << fmt17(ur.rate) << ',' << fmt17(ur.ci_lo) << ','
                   << fmt17(ur.ci_hi) << ',' << fmt17(ratio) << ',' << cell << "\n";
            }
        }
        outputs.write(dir / "init_study.csv", os.str());
        std::cout << "init-study: wrote " << (dir / "init_study.csv").string() << "\n";
        return 0;
    });
}

} // namespace relugd
