#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "config.hpp"

using namespace relugd;

TEST_CASE("parses sections, values, comments and defaults") {
    const auto cfg = Config::parse_string(
        "# experiment\n"
        "[instance]\n"
        "family = gaussian\n"
        "d = 10   # dimension\n"
        "teacher_norm = 1.5\n"
        "\n"
        "[gd]\n"
        "c_eta = 0.05\n"
        "t_max = 500\n"
        "[run]\n"
        "master_seed = 777\n");
    CHECK(cfg.get_string("instance", "family", "") == "gaussian");
    CHECK(cfg.get_int("instance", "d", 0) == 10);
    CHECK(cfg.get_real("instance", "teacher_norm", 0.0) == 1.5);
    CHECK(cfg.get_real("gd", "c_eta", 0.0) == 0.05);
    CHECK(cfg.get_u64("run", "master_seed", 0) == 777);

    // defaults for absent keys
    CHECK(cfg.get_real("gd", "eps", 1e-4) == 1e-4);
    CHECK(cfg.get_bool("output", "write_trajectories", false) == false);
    CHECK_FALSE(cfg.has("instance", "b_v"));
}

TEST_CASE("unknown keys are hard errors with line numbers") {
    try {
        Config::parse_string("[instance]\nfamily = gaussian\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line_number == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }

    // keys in the wrong section are unknown too
    CHECK_THROWS_AS(Config::parse_string("[gd]\nfamily = gaussian\n"), ConfigError);
}

TEST_CASE("malformed lines are rejected") {
    CHECK_THROWS_AS(Config::parse_string("[instance\nd = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[instance]\nno_equals_here\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("d = 2\n"), ConfigError);  // outside any section
    CHECK_THROWS_AS(Config::parse_string("[instance]\nd = 2\nd = 3\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[]\n"), ConfigError);
}

TEST_CASE("typed getters validate values") {
    const auto cfg = Config::parse_string(
        "[instance]\nd = abc\nteacher_norm = 1.5x\n[run]\nmaster_seed = -4\n"
        "[output]\nwrite_trajectories = maybe\n");
    CHECK_THROWS_AS(cfg.get_int("instance", "d", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_real("instance", "teacher_norm", 0.0), ConfigError);
    CHECK_THROWS_AS(cfg.get_u64("run", "master_seed", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("output", "write_trajectories", false), ConfigError);
}

TEST_CASE("lists and choices") {
    const auto cfg = Config::parse_string(
        "[sweep]\nd_list = 2, 10, 50\nopt_list = 1e-4,1e-3\nfamily_list = gaussian, laplace\n"
        "[gd]\ngrad_source = mc\n");
    CHECK(cfg.get_int_list("sweep", "d_list", {}) == std::vector<long long>{2, 10, 50});
    CHECK(cfg.get_real_list("sweep", "opt_list", {}) == std::vector<double>{1e-4, 1e-3});
    CHECK(cfg.get_string_list("sweep", "family_list", {}) ==
          std::vector<std::string>{"gaussian", "laplace"});
    CHECK(cfg.get_choice("gd", "grad_source", "quadrature", {"quadrature", "mc", "empirical"}) ==
          "mc");
    CHECK_THROWS_AS(
        cfg.get_choice("gd", "grad_source", "quadrature", {"quadrature", "empirical"}),
        ConfigError);
}

TEST_CASE("missing file and required keys") {
    CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), ConfigError);
    const auto cfg = Config::parse_string("[instance]\nd = 2\n");
    CHECK_THROWS_AS(cfg.require_string("instance", "family"), ConfigError);
    CHECK(cfg.require_string("instance", "d") == "2");
}
