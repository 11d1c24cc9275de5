#include <doctest.h>

#include <cmath>
#include <limits>

#include "imcdse/errors.hpp"
#include "imcdse/explorer.hpp"
#include "support.hpp"

using namespace imcdse;

namespace {

CornerMetrics row(double tau_ns, double v0, double vfs, double eps, double e_fj, double sigma = 0) {
    CornerMetrics c;
    c.config.tau0 = tau_ns * 1e-9;
    c.config.v_dac0 = v0;
    c.config.v_dac_fs = vfs;
    c.eps_mul = eps;
    c.e_mul = e_fj * 1e-15;
    c.fom = fom_of(eps, c.e_mul);
    c.sigma_max = sigma;
    return c;
}

std::vector<CornerMetrics> table_fixture() {
    return {row(0.16, 0.3, 1.0, 4.78, 44), row(0.16, 0.3, 0.7, 15, 37), row(0.24, 0.4, 1.0, 9.6, 69.8)};
}

bool same_corner(const CornerMetrics& c, double tau_ns, double v0, double vfs) {
    return std::abs(c.config.tau0 - tau_ns * 1e-9) < 1e-15 && c.config.v_dac0 == v0 && c.config.v_dac_fs == vfs;
}

} // namespace

TEST_CASE("figure of merit") {
    CHECK(fom_of(4.78, 44e-15) == doctest::Approx(1.0 / (4.78 * 44e-15)));
    CHECK(fom_of(4.78, 44e-15) == doctest::Approx(4.755e12).epsilon(1e-3));
    CHECK(std::isinf(fom_of(0.0, 44e-15)));
}

TEST_CASE("selection on the reference corner rows") {
    auto sel = select_corners(table_fixture());
    CHECK(same_corner(sel.fom, 0.16, 0.3, 1.0));
    CHECK(same_corner(sel.power, 0.16, 0.3, 0.7));

    auto scaled = table_fixture();
    for (auto& c : scaled) {
        c.e_mul *= 1000;
        c.fom = fom_of(c.eps_mul, c.e_mul);
    }
    auto s2 = select_corners(scaled);
    CHECK(same_corner(s2.fom, 0.16, 0.3, 1.0));
    CHECK(same_corner(s2.power, 0.16, 0.3, 0.7));
}

TEST_CASE("tie-break chain") {
    std::vector<CornerMetrics> same{row(0.24, 0.3, 0.9, 2, 50, 1e-3), row(0.16, 0.3, 1.0, 2, 50, 1e-3),
                                    row(0.16, 0.3, 0.8, 2, 50, 1e-3)};
    auto sel = select_corners(same);
    for (const auto* c : {&sel.fom, &sel.power, &sel.variation}) CHECK(same_corner(*c, 0.16, 0.3, 0.8));

    // equal FOM, different energy: smaller energy wins
    std::vector<CornerMetrics> eq{row(0.16, 0.3, 1.0, 2, 50), row(0.20, 0.3, 1.0, 1, 100)};
    CHECK(same_corner(select_corners(eq).fom, 0.16, 0.3, 1.0));

    // variation picks the smallest sigma
    std::vector<CornerMetrics> v{row(0.16, 0.3, 1.0, 2, 50, 2e-3), row(0.20, 0.35, 0.9, 3, 60, 1e-3)};
    CHECK(same_corner(select_corners(v).variation, 0.20, 0.35, 0.9));
    CHECK_THROWS(select_corners({}));
}

TEST_CASE("corner sweep over the default grid") {
    auto m = testsupport::truth_model();
    CircuitConfig base;
    base.seed = 5;
    auto g = GridSpec3::defaults();
    CHECK(g.size() == 48);
    auto a = sweep_corners(g, base, m, 50, 1);
    auto b = sweep_corners(g, base, m, 50, 3);
    REQUIRE(a.metrics.size() + a.skipped.size() == 48);
    CHECK(a.skipped.empty());
    for (size_t i = 1; i < a.metrics.size(); ++i) CHECK(a.metrics[i - 1].fom >= a.metrics[i].fom);
    bool same = a.metrics.size() == b.metrics.size();
    for (size_t i = 0; same && i < a.metrics.size(); ++i)
        same = a.metrics[i].eps_mul == b.metrics[i].eps_mul && a.metrics[i].sigma_max == b.metrics[i].sigma_max &&
               a.metrics[i].config.tau0 == b.metrics[i].config.tau0;
    CHECK(same);
    for (const auto& c : a.metrics) {
        CircuitConfig k = c.config;
        auto s = exhaustive_error(k, m, calibrate_adc(k, m), Mode::Nominal);
        CHECK(c.eps_mul == s.eps_mul);
        CHECK(c.fom == doctest::Approx(1.0 / (s.eps_mul * s.e_mul_avg)));
    }
}

TEST_CASE("corners outside the model are skipped, not fatal") {
    auto m = testsupport::truth_model();
    GridSpec3 g{{0.16e-9, 0.5e-9}, {0.3}, {1.0}};
    auto r = sweep_corners(g, CircuitConfig{}, m, 10);
    CHECK(r.metrics.size() == 1);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].config.tau0 == 0.5e-9);
    CHECK_FALSE(r.skipped[0].reason.empty());
}

TEST_CASE("pvt sweep keeps calibration at nominal") {
    auto m = testsupport::truth_model();
    auto c = preset_corner("fom");
    auto pts = pvt_sweep(c, {1.08, 1.2, 1.32}, {253, 300, 358}, m, 2);
    REQUIRE(pts.size() == 6);
    auto nominal = exhaustive_error(c, m, calibrate_adc(c, m), Mode::Nominal);
    CHECK(pts[1].eps_mul == nominal.eps_mul);
    CHECK(pts[4].eps_mul == nominal.eps_mul);
    CHECK(pts[0].axis == "v_dd");
    CHECK(pts[5].axis == "temp");
    auto out = pvt_sweep(c, {1.5}, {}, m);
    CHECK_FALSE(out[0].error.empty());
    CHECK(std::isnan(out[0].eps_mul));
}

TEST_CASE("mismatch summary") {
    auto m = testsupport::truth_model();
    auto c = preset_corner("variation");
    c.seed = 3;
    auto s = mismatch_mc(c, 2000, m);
    double var = 0;
    for (int i = 0; i < 4; ++i) var += std::pow(m.sigma((1 << i) * c.tau0, c.v_dac_fs), 2);
    CHECK(s.sigma_model_max == doctest::Approx(std::sqrt(var) / 4));
    CHECK(s.sweep.n_mc == 2000);
}

TEST_CASE("named presets") {
    auto f = preset_corner("fom");
    CHECK(f.tau0 == 0.16e-9);
    CHECK(f.v_dac0 == 0.3);
    CHECK(f.v_dac_fs == 1.0);
    CHECK(preset_corner("power").v_dac_fs == 0.7);
    CHECK(preset_corner("variation").tau0 == 0.24e-9);
    CHECK_THROWS_AS(preset_corner("fastest"), UsageError);
}
