#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string binary() {
    const char* bin = std::getenv("RELU_GD_LAB_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path make_dir(const char* name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const char* name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("run subcommand produces a summary and reruns byte-identically") {
    const auto dir = make_dir("relugd_cli_run");
    const auto cfg = write_config(dir, "run.cfg",
                                  "[instance]\nfamily = gaussian\nd = 2\n"
                                  "[gd]\nt_max = 200\n"
                                  "[init]\nrestarts = 3\n"
                                  "[output]\nwrite_trajectories = true\n"
                                  "[run]\nmaster_seed = 2024\n");
    const auto out1 = dir / "out1";
    const auto out2 = dir / "out2";
    REQUIRE(run("run --config " + cfg + " --out " + out1.string()) == 0);
    REQUIRE(run("run --config " + cfg + " --out " + out2.string()) == 0);
    REQUIRE(fs::exists(out1 / "summary.csv"));
    REQUIRE(fs::exists(out1 / "trajectory.csv"));
    CHECK(slurp(out1 / "summary.csv") == slurp(out2 / "summary.csv"));
    CHECK(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));

    // realizable d = 2 converges hard
    const auto summary = slurp(out1 / "summary.csv");
    CHECK(summary.find("best_holdout_loss") != std::string::npos);

    // a different seed changes the bytes
    const auto out3 = dir / "out3";
    REQUIRE(run("run --config " + cfg + " --out " + out3.string() + " --seed 999") == 0);
    CHECK(slurp(out3 / "summary.csv") != slurp(out1 / "summary.csv"));
    fs::remove_all(dir);
}

TEST_CASE("config errors exit 2 and leave no partial outputs") {
    const auto dir = make_dir("relugd_cli_bad");
    const auto bad = write_config(dir, "bad.cfg", "[instance]\nfamily = cauchy\n");
    const auto out = dir / "out";
    CHECK(run("run --config " + bad + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out / "summary.csv"));

    const auto unknown = write_config(dir, "unknown.cfg", "[instance]\nwat = 1\n");
    CHECK(run("run --config " + unknown + " --out " + out.string()) == 2);

    CHECK(run("run --config /nonexistent.cfg") == 2);
    fs::remove_all(dir);
}

TEST_CASE("oracle incompatibility exits 3") {
    const auto dir = make_dir("relugd_cli_oracle");
    const auto cfg = write_config(dir, "oracle.cfg",
                                  "[instance]\nfamily = uniform_cube\nd = 2\n"
                                  "[gd]\ngrad_source = quadrature\nt_max = 10\n");
    CHECK(run("run --config " + cfg + " --out " + (dir / "out").string()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("verify-lemmas writes per-lemma CSVs") {
    const auto dir = make_dir("relugd_cli_lemmas");
    const auto cfg = write_config(dir, "lemmas.cfg",
                                  "[instance]\nfamily = gaussian\nd = 2\n"
                                  "label_model = gauss_noise\nnoise_std = 0.1\n"
                                  "[lemmas]\npoints = 150\nmc_n = 5000\n"
                                  "[run]\nmaster_seed = 7\n");
    const auto out = dir / "out";
    REQUIRE(run("verify-lemmas --config " + cfg + " --out " + out.string()) == 0);
    for (const char* name : {"jointprob.csv", "inner_product_lb.csv", "f_lipschitz.csv",
                             "loss_decomposition.csv", "smoothness.csv", "lemma_banner.txt"})
        CHECK(fs::exists(out / name));
    CHECK(slurp(out / "jointprob.csv").find("lemma_id,point,lhs,rhs") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("estimate-regularity and init-study produce their reports") {
    const auto dir = make_dir("relugd_cli_reports");
    const auto reg = write_config(dir, "reg.cfg",
                                  "[instance]\nd = 3\n"
                                  "[regularity]\ntrials = 1\nn = 50000\n"
                                  "family_list = gaussian, uniform_cube\n");
    const auto out = dir / "reg_out";
    REQUIRE(run("estimate-regularity --config " + reg + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "regularity_gaussian.csv"));
    CHECK(fs::exists(out / "regularity_uniform_cube.csv"));

    const auto init = write_config(dir, "init.cfg",
                                   "[init]\ntrials = 400\nd_list = 2\nb_v_list = 0\n"
                                   "[run]\nmaster_seed = 5\n");
    const auto iout = dir / "init_out";
    REQUIRE(run("init-study --config " + init + " --out " + iout.string()) == 0);
    const auto csv = slurp(iout / "init_study.csv");
    CHECK(csv.find("known_scale") != std::string::npos);
    CHECK(csv.find("unknown_scale") != std::string::npos);
    CHECK(csv.find("known_unknown_ratio") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sweep respects the jobs flag and writes aggregates") {
    const auto dir = make_dir("relugd_cli_sweep");
    const auto cfg = write_config(dir, "sweep.cfg",
                                  "[sweep]\nd_list = 2\nopt_list = 1e-2\nb_v_list = 0\n"
                                  "replicates = 2\n"
                                  "[gd]\nt_max = 100\n"
                                  "[init]\nrestarts = 2\n"
                                  "[run]\nmaster_seed = 99\n");
    const auto out = dir / "out";
    REQUIRE(run("sweep --config " + cfg + " --out " + out.string() + " --jobs 2") == 0);
    REQUIRE(fs::exists(out / "sweep_summary.csv"));
    REQUIRE(fs::exists(out / "sweep_aggregate.csv"));

    // jobs must not change the bytes
    const auto out2 = dir / "out2";
    REQUIRE(run("sweep --config " + cfg + " --out " + out2.string() + " --jobs 1") == 0);
    CHECK(slurp(out / "sweep_summary.csv") == slurp(out2 / "sweep_summary.csv"));
    fs::remove_all(dir);
}

TEST_CASE("usage errors are nonzero") {
    CHECK(run("") != 0);
    CHECK(run("run") == 2);          // missing --config
    CHECK(run("frobnicate") != 0);   // unknown subcommand
}
