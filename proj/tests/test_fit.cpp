#include <doctest.h>

#include <cmath>

#include "imcdse/als.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/fit.hpp"
#include "imcdse/model.hpp"
#include "imcdse/poly.hpp"
#include "support.hpp"

using namespace imcdse;

TEST_CASE("lstsq recovers an exact polynomial with badly scaled columns") {
    std::vector<double> a, y;
    size_t rows = 0;
    for (int i = 0; i < 40; ++i) {
        double x = i * 0.05e-9;
        for (double p : {1.0, x, x * x, x * x * x}) a.push_back(p);
        y.push_back(0.3 - 2e8 * x + 7e17 * x * x - 1e26 * x * x * x);
        ++rows;
    }
    auto c = lstsq(a, rows, 4, y);
    CHECK(c[0] == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(c[1] == doctest::Approx(-2e8).epsilon(1e-7));
    CHECK(c[2] == doctest::Approx(7e17).epsilon(1e-6));
    CHECK(c[3] == doctest::Approx(-1e26).epsilon(1e-5));
}

TEST_CASE("rank-1 fit reproduces a separable product") {
    PolyCoeffs f({0.5, 1.0, -0.3}), g({0.0, -2.0, 0.4});
    AlsFactor a{{}, 2, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor b{{}, 2, 0.0, SignRule::LinearNonPositive};
    std::vector<double> y;
    for (int i = 0; i < 7; ++i)
        for (int j = 1; j <= 6; ++j) {
            double x1 = 0.2 * i, x2 = 0.3 * j;
            a.x.push_back(x1);
            b.x.push_back(x2);
            y.push_back(f(x1) * g(x2));
        }
    auto r = fit_rank1({a, b}, y);
    REQUIRE(r.factors.size() == 2);
    double worst = 0;
    for (size_t k = 0; k < y.size(); ++k) worst = std::max(worst, std::abs(r.factors[0](a.x[k]) * r.factors[1](b.x[k]) - y[k]));
    CHECK(worst < 1e-12);
    CHECK(r.factors[1].c[0] == 0.0);
    CHECK(r.factors[1].c[1] <= 0.0);
    double norm = 0;
    for (double c : r.factors[1].c) norm += c * c;
    CHECK(norm == doctest::Approx(1.0));
    CHECK(r.iterations <= 20);
}

TEST_CASE("rank-1 fit rejects degenerate inputs") {
    AlsFactor a{{1, 1, 1, 1}, 2, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor b{{1, 2, 3, 4}, 1, std::nullopt, SignRule::PositiveAtMax};
    CHECK_THROWS_AS(fit_rank1({a, b}, {1, 2, 3, 4}), FitError);
}

TEST_CASE("the fitted family is recovered from data generated by it") {
    auto truth = testsupport::truth_model();
    auto g = GridSpec::defaults();
    g.t.resize(32);
    g.v_wl = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
    auto d = testsupport::synthetic_dataset(truth, g);
    FitReport r;
    Model m = fit_model(d, nullptr, r);
    double wv = 0, ws = 0, we = 0;
    for (const auto& row : d.rows) {
        wv = std::max(wv, std::abs(m.vbl(row.t, row.v_wl, row.v_dd, row.temp) - truth.vbl(row.t, row.v_wl, row.v_dd, row.temp)));
        ws = std::max(ws, std::abs(m.sigma(row.t, row.v_wl) - truth.sigma(row.t, row.v_wl)));
        we = std::max(we, std::abs(m.e_write(row.v_dd, row.temp) / row.e_wr - 1));
        we = std::max(we, std::abs(m.e_discharge(row.dv, row.v_dd, row.temp) / row.e_dc - 1));
    }
    CHECK(wv < 1e-9);
    CHECK(ws < 1e-9);
    CHECK(we < 1e-9);
    CHECK(m.discharge.base_time.c[0] == 0.0);
    CHECK(m.discharge.supply.c[0] == 1.0);
    CHECK(r.warnings.empty());
}

TEST_CASE("supply fit degrades gracefully") {
    auto truth = testsupport::truth_model();
    GridSpec g;
    g.t = {0.5e-9, 1e-9, 1.5e-9, 2e-9};
    g.v_wl = {0.4, 0.55, 0.7, 0.85, 1.0, 1.15};
    g.temp = {253, 300, 358};
    g.v_dd = {1.2};
    auto one = testsupport::synthetic_dataset(truth, g);
    std::vector<std::string> w;
    auto base = fit_discharge_base(one, 0.3);
    DischargeModel dm = truth.discharge;
    dm.base_vod = base.vod;
    dm.base_time = base.time;
    CHECK(fit_supply(one, dm, &w) == PolyCoeffs({1.0, 0.0, 0.0}));
    CHECK(w.size() == 1);
    g.v_dd = {1.14, 1.2};
    CHECK_THROWS_AS(fit_supply(testsupport::synthetic_dataset(truth, g), dm), FitError);
}

TEST_CASE("fit report scores a holdout") {
    auto truth = testsupport::truth_model();
    GridSpec g;
    g.t = {0.2e-9, 0.6e-9, 1.0e-9, 1.4e-9, 1.8e-9, 2.2e-9};
    g.v_wl = {0.3, 0.5, 0.7, 0.9, 1.1};
    g.v_dd = {1.08, 1.2, 1.32};
    g.temp = {253, 300, 358};
    auto d = testsupport::synthetic_dataset(truth, g);
    auto h = testsupport::synthetic_dataset(truth, g.holdout(1.2, 300));
    FitReport r;
    fit_model(d, &h, r);
    CHECK(r.has_holdout);
    CHECK(r.h_base.rows > 0);
    CHECK(r.h_base.rms < 1e-6);
    auto j = r.to_json();
    CHECK(j["holdout"]["base"]["unit"] == "mV");
    CHECK(j["train"]["write"]["unit"] == "fJ");
}

TEST_CASE("model JSON round trip and schema checks") {
    testsupport::TempDir tmp("model");
    auto m = testsupport::truth_model();
    save_model(m, tmp / "m.json");
    auto back = load_model(tmp / "m.json");
    CHECK(back.discharge.base_vod == m.discharge.base_vod);
    CHECK(back.energy.dc_dv == m.energy.dc_dv);
    CHECK(back.domain.t.hi == m.domain.t.hi);
    CHECK(model_to_json(back) == model_to_json(m));

    auto j = model_to_json(m);
    j["version"] = 99;
    try {
        model_from_json(j);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    j = model_to_json(m);
    j["discharge"]["supply"] = {0.9, 0.0, 0.0};
    CHECK_THROWS_AS(model_from_json(j), SchemaError);
    j = model_to_json(m);
    j["discharge"]["base_vod"] = {1.0, 2.0};
    CHECK_THROWS_AS(model_from_json(j), SchemaError);
    CHECK_THROWS(load_model(tmp / "missing.json"));
}

TEST_CASE("model evaluation enforces its domain") {
    auto m = testsupport::truth_model();
    CHECK_NOTHROW(eval_vbl(m, 1e-9, 0.8, 1.2, 300));
    CHECK_THROWS_AS(eval_vbl(m, 3e-9, 0.8, 1.2, 300), DomainError);
    CHECK_THROWS_AS(eval_vbl(m, 1e-9, 1.3, 1.2, 300), DomainError);
    CHECK_THROWS_AS(eval_vbl(m, 1e-9, 0.8, 1.0, 300), DomainError);
    CHECK_THROWS_AS(eval_vbl(m, 1e-9, 0.8, 1.2, 400), DomainError);
    CHECK(eval_vbl(m, 0.0, 0.8, 1.2, 300) == doctest::Approx(1.2));
}
