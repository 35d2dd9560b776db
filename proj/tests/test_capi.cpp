#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "relugd.h"

namespace {

std::filesystem::path temp_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_config(const std::filesystem::path& dir, const std::string& text) {
    const auto path = dir / "config.cfg";
    std::ofstream(path) << text;
    return path.string();
}

} // namespace

TEST_CASE("version and error strings exist") {
    REQUIRE(rgd_version() != nullptr);
    CHECK(std::strlen(rgd_version()) > 0);
    REQUIRE(rgd_last_error() != nullptr);
}

TEST_CASE("population oracles through the C surface") {
    const double e1[2] = {1.0, 0.0};

    double f = -1.0;
    REQUIRE(rgd_population_f_gauss(2, e1, 0.0, e1, 0.0, 0, &f) == RGD_OK);
    CHECK(std::fabs(f) < 1e-15);

    double f0 = 0.0;
    REQUIRE(rgd_population_f0_gauss(2, e1, 1.0, &f0) == RGD_OK);
    CHECK(f0 == doctest::Approx(0.96233010832811464).epsilon(1e-12));

    double orthant = 0.0;
    REQUIRE(rgd_joint_orthant_prob_gauss(2, e1, 0.0, e1, 0.0, 0, &orthant) == RGD_OK);
    CHECK(orthant == doctest::Approx(0.5).epsilon(1e-10));

    double grad[2] = {9.0, 9.0};
    double grad_bias = 9.0;
    REQUIRE(rgd_population_grad_f_gauss(2, e1, 0.0, e1, 0.0, 0, grad, &grad_bias) == RGD_OK);
    CHECK(std::fabs(grad[0]) < 1e-12);
    CHECK(std::fabs(grad[1]) < 1e-12);
    CHECK(std::fabs(grad_bias) < 1e-12);

    CHECK(rgd_population_f_gauss(0, e1, 0.0, e1, 0.0, 0, &f) == RGD_INVALID_ARGUMENT);
    CHECK(rgd_population_f_gauss(2, nullptr, 0.0, e1, 0.0, 0, &f) == RGD_INVALID_ARGUMENT);
    CHECK(std::strlen(rgd_last_error()) > 0);
}

TEST_CASE("instance handles expose OPT and MC loss") {
    const double v[2] = {1.0, 0.0};
    rgd_instance* inst = rgd_instance_create(0, 2, v, 0.0, 1, 0.2);
    REQUIRE(inst != nullptr);

    double opt = 0.0;
    REQUIRE(rgd_opt_value(inst, &opt) == RGD_OK);
    CHECK(opt == doctest::Approx(0.02).epsilon(1e-12));

    double loss = 0.0, se = 0.0;
    REQUIRE(rgd_mc_loss(inst, v, 0.0, 200000, 42, &loss, &se) == RGD_OK);
    CHECK(std::fabs(loss - opt) < 4.0 * se);

    double loss2 = 0.0;
    REQUIRE(rgd_mc_loss(inst, v, 0.0, 200000, 42, &loss2, nullptr) == RGD_OK);
    CHECK(loss2 == loss);

    rgd_instance_free(inst);
    CHECK(rgd_instance_create(7, 2, v, 0.0, 0, 0.0) == nullptr);
    CHECK(rgd_mc_loss(nullptr, v, 0.0, 10, 1, &loss, &se) == RGD_INVALID_ARGUMENT);
}

TEST_CASE("commands run through the C surface with exit-code mapping") {
    const auto dir = temp_dir("relugd_capi_test");
    const auto cfg = write_config(dir,
                                  "[instance]\n"
                                  "family = gaussian\n"
                                  "d = 2\n"
                                  "[gd]\n"
                                  "t_max = 50\n"
                                  "[init]\n"
                                  "restarts = 2\n");
    CHECK(rgd_run(cfg.c_str(), dir.string().c_str(), 1, 31337, 1) == RGD_OK);
    CHECK(std::filesystem::exists(dir / "summary.csv"));

    CHECK(rgd_run("/nonexistent.cfg", dir.string().c_str(), 0, 0, 1) == RGD_CONFIG_ERROR);
    CHECK(std::strlen(rgd_last_error()) > 0);
    CHECK(rgd_run(nullptr, nullptr, 0, 0, 0) == RGD_INVALID_ARGUMENT);

    const auto bad = write_config(dir,
                                  "[instance]\n"
                                  "family = uniform_cube\n"
                                  "[gd]\n"
                                  "grad_source = quadrature\n"
                                  "t_max = 10\n");
    CHECK(rgd_run(bad.c_str(), dir.string().c_str(), 0, 0, 1) == RGD_ORACLE_INCOMPATIBLE);

    std::filesystem::remove_all(dir);
}
