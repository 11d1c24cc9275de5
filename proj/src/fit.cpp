#include "imcdse/fit.hpp"

#include <cmath>
#include <set>

#include "imcdse/als.hpp"
#include "imcdse/errors.hpp"

namespace imcdse {

using json = nlohmann::json;

namespace {

bool nominal_vdd(const OracleDataset& d, const DataRow& r) { return r.v_dd == d.device.v_dd_nom; }
bool nominal_t(const OracleDataset& d, const DataRow& r) { return r.temp == d.device.t_nom; }

template <class F>
size_t distinct(const std::vector<const DataRow*>& rows, F f) {
    std::set<double> s;
    for (auto* r : rows) s.insert(f(*r));
    return s.size();
}

struct Acc {
    double ss = 0, mx = 0;
    size_t n = 0;
    void add(double e) {
        ss += e * e;
        mx = std::max(mx, std::abs(e));
        ++n;
    }
    ErrorStat stat() const { return {n ? std::sqrt(ss / double(n)) : 0.0, mx, n}; }
};

json stat_json(const ErrorStat& s, const char* unit) {
    return json{{"rms", s.rms}, {"max_abs", s.max_abs}, {"rows", s.rows}, {"unit", unit}};
}

} // namespace

BaseFit fit_discharge_base(const OracleDataset& d, double v_th) {
    std::vector<const DataRow*> rows;
    for (const auto& r : d.rows)
        if (nominal_vdd(d, r) && nominal_t(d, r)) rows.push_back(&r);
    if (rows.empty()) throw FitError("base fit: no rows at nominal V_DD and T");
    if (distinct(rows, [](const DataRow& r) { return r.t; }) < 2 ||
        distinct(rows, [](const DataRow& r) { return r.v_wl; }) < 2)
        throw FitError("base fit: degenerate grid (needs several t and V_WL values)");
    AlsFactor fv{{}, 4, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor ft{{}, 2, 0.0, SignRule::LinearNonPositive};
    std::vector<double> y;
    for (auto* r : rows) {
        fv.x.push_back(r->v_wl - v_th);
        ft.x.push_back(r->t);
        y.push_back(-r->dv);
    }
    auto res = fit_rank1({fv, ft}, y);
    return BaseFit{res.factors[0], res.factors[1], res.objective, res.iterations};
}

PolyCoeffs fit_supply(const OracleDataset& d, const DischargeModel& base, std::vector<std::string>* warnings) {
    bool any = false;
    for (double c : base.base_vod.c) any = any || c != 0.0;
    for (double c : base.base_time.c) any = any || c != 0.0;
    if (!any) throw UsageError("supply fit: base factors missing");
    std::vector<const DataRow*> rows;
    for (const auto& r : d.rows)
        if (nominal_t(d, r)) rows.push_back(&r);
    size_t nv = distinct(rows, [](const DataRow& r) { return r.v_dd; });
    if (nv <= 1) {
        if (warnings) warnings->push_back("supply fit: data at a single V_DD, supply factor left at identity");
        return PolyCoeffs({1.0, 0.0, 0.0});
    }
    if (nv < 3) throw FitError("supply fit: needs at least 3 V_DD values");
    // discharge term r = b (1 + s1 x + s2 x^2) with x = V_DD - V_DD,nom
    std::vector<double> a, y;
    for (auto* r : rows) {
        double x = r->v_dd - base.v_dd_nom;
        double b = base.base_vod(r->v_wl - base.v_th) * base.base_time(r->t);
        a.push_back(b * x);
        a.push_back(b * x * x);
        y.push_back(-r->dv - b);
    }
    auto s = lstsq(a, y.size(), 2, y);
    return PolyCoeffs({1.0, s[0], s[1]});
}

PolyCoeffs fit_temperature(const OracleDataset& d, const DischargeModel& m) {
    std::set<double> temps;
    for (const auto& r : d.rows)
        if (r.temp != m.t_nom) temps.insert(r.temp);
    if (temps.size() < 2) throw FitError("temperature fit: needs at least 2 non-nominal temperatures");
    Model tmp;
    tmp.discharge = m;
    // residual = t (T - T_nom) p3(V_WL), solved on absolute residuals
    std::vector<double> a, y;
    for (const auto& r : d.rows) {
        double w = r.t * (r.temp - m.t_nom);
        if (std::abs(w) < 1e-20) continue;
        double res = -r.dv - tmp.discharge_term(r.t, r.v_wl, r.v_dd);
        double p = w;
        for (int j = 0; j < 4; ++j) {
            a.push_back(p);
            p *= r.v_wl;
        }
        y.push_back(res);
    }
    if (y.empty()) throw FitError("temperature fit: no usable rows");
    return PolyCoeffs(lstsq(a, y.size(), 4, y));
}

SigmaFit fit_mismatch_sigma(const OracleDataset& d) {
    std::vector<const DataRow*> rows;
    for (const auto& r : d.rows)
        if (!std::isnan(r.sigma_dv)) rows.push_back(&r);
    if (rows.empty()) throw UsageError("sigma fit: dataset has no sigma_dv column values (generate with mc > 1)");
    if (distinct(rows, [](const DataRow& r) { return r.t; }) < 4 ||
        distinct(rows, [](const DataRow& r) { return r.v_wl; }) < 4)
        throw FitError("sigma fit: needs at least a 4 x 4 (t, V_WL) grid");
    AlsFactor fv{{}, 3, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor ft{{}, 3, std::nullopt, SignRule::PositiveAtMax};
    std::vector<double> y;
    for (auto* r : rows) {
        fv.x.push_back(r->v_wl);
        ft.x.push_back(r->t);
        y.push_back(r->sigma_dv);
    }
    auto res = fit_rank1({fv, ft}, y);
    return SigmaFit{res.factors[1], res.factors[0], res.objective, res.iterations};
}

EnergyModel fit_energy(const OracleDataset& d, int* it_write, int* it_discharge) {
    if (d.rows.empty()) throw UsageError("energy fit: empty dataset");
    AlsFactor wv{{}, 2, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor wt{{}, 1, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor fdv{{}, 3, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor fvdd{{}, 1, std::nullopt, SignRule::PositiveAtMax};
    AlsFactor ftemp{{}, 1, std::nullopt, SignRule::PositiveAtMax};
    std::vector<double> yw, yd;
    for (const auto& r : d.rows) {
        if (std::isnan(r.e_wr) || std::isnan(r.e_dc)) throw UsageError("energy fit: energy columns not populated");
        wv.x.push_back(r.v_dd);
        wt.x.push_back(r.temp);
        yw.push_back(r.e_wr);
        fdv.x.push_back(r.dv);
        fvdd.x.push_back(r.v_dd);
        ftemp.x.push_back(r.temp);
        yd.push_back(r.e_dc);
    }
    auto w = fit_rank1({wv, wt}, yw);
    auto e = fit_rank1({fdv, fvdd, ftemp}, yd);
    if (it_write) *it_write = w.iterations;
    if (it_discharge) *it_discharge = e.iterations;
    EnergyModel m;
    m.wr_vdd = w.factors[0];
    m.wr_temp = w.factors[1];
    m.dc_dv = e.factors[0];
    m.dc_vdd = e.factors[1];
    m.dc_temp = e.factors[2];
    return m;
}

void score(const Model& m, const OracleDataset& d, ErrorStat& base, ErrorStat& supply, ErrorStat& temperature,
           ErrorStat& sigma, ErrorStat& write, ErrorStat& discharge) {
    Acc ab, as, at, ag, aw, ad;
    const double vdd0 = m.discharge.v_dd_nom, t0 = m.discharge.t_nom;
    for (const auto& r : d.rows) {
        m.check_domain(r.t, r.v_wl, r.v_dd, r.temp);
        double err_mv = (m.vbl(r.t, r.v_wl, r.v_dd, r.temp) - (r.v_dd - r.dv)) * 1e3;
        if (r.temp == t0) {
            if (r.v_dd == vdd0) ab.add(err_mv);
            as.add(err_mv);
        }
        at.add(err_mv);
        if (!std::isnan(r.sigma_dv)) ag.add((m.sigma(r.t, r.v_wl) - r.sigma_dv) * 1e3);
        aw.add((m.e_write(r.v_dd, r.temp) - r.e_wr) * 1e15);
        ad.add((m.e_discharge(r.dv, r.v_dd, r.temp) - r.e_dc) * 1e15);
    }
    base = ab.stat();
    supply = as.stat();
    temperature = at.stat();
    sigma = ag.stat();
    write = aw.stat();
    discharge = ad.stat();
}

FitReport rms_report(const Model& m, const OracleDataset& holdout) {
    if (holdout.rows.empty()) throw UsageError("rms_report: empty holdout");
    FitReport r;
    r.has_holdout = true;
    score(m, holdout, r.h_base, r.h_supply, r.h_temperature, r.h_sigma, r.h_write, r.h_discharge);
    return r;
}

Model fit_model(const OracleDataset& train, const OracleDataset* holdout, FitReport& report) {
    if (train.rows.empty()) throw UsageError("fit: empty dataset");
    Model m;
    auto& dm = m.discharge;
    dm.v_th = train.device.v_th0;
    dm.v_dd_nom = train.device.v_dd_nom;
    dm.t_nom = train.device.t_nom;

    auto base = fit_discharge_base(train, dm.v_th);
    dm.base_vod = base.vod;
    dm.base_time = base.time;
    report.it_base = base.iterations;
    dm.supply = fit_supply(train, dm, &report.warnings);
    dm.temp_vwl = fit_temperature(train, dm);
    json sigma_meta = nullptr;
    if (train.has_sigma()) {
        auto s = fit_mismatch_sigma(train);
        dm.sigma_time = s.time;
        dm.sigma_vwl = s.vwl;
        report.it_sigma = s.iterations;
        sigma_meta = s.objective;
    } else {
        report.warnings.push_back("dataset has no sigma values; mismatch sigma model left at zero");
    }
    m.energy = fit_energy(train, &report.it_write, &report.it_discharge);

    const auto& g = train.grid;
    auto mm = [](const std::vector<double>& a) { return Range{*std::min_element(a.begin(), a.end()), *std::max_element(a.begin(), a.end())}; };
    m.domain.t = {0.0, mm(g.t).hi};
    m.domain.t_min_fit = mm(g.t).lo;
    m.domain.v_wl = mm(g.v_wl);
    m.domain.v_dd = mm(g.v_dd);
    m.domain.temp = mm(g.temp);
    m.oracle_seed = train.seed;

    score(m, train, report.base, report.supply, report.temperature, report.sigma, report.write, report.discharge);
    if (holdout) {
        if (holdout->rows.empty()) throw UsageError("fit: empty holdout");
        report.has_holdout = true;
        score(m, *holdout, report.h_base, report.h_supply, report.h_temperature, report.h_sigma, report.h_write,
              report.h_discharge);
    }
    m.fit_meta = json{{"base_objective", base.objective},
                      {"sigma_objective", sigma_meta},
                      {"report", report.to_json()},
                      {"oracle_mc_samples", train.mc_samples}};
    return m;
}

json FitReport::to_json() const {
    json j;
    j["train"] = {{"base", stat_json(base, "mV")},         {"supply", stat_json(supply, "mV")},
                  {"temperature", stat_json(temperature, "mV")}, {"sigma", stat_json(sigma, "mV")},
                  {"write", stat_json(write, "fJ")},       {"discharge", stat_json(discharge, "fJ")}};
    if (has_holdout)
        j["holdout"] = {{"base", stat_json(h_base, "mV")},         {"supply", stat_json(h_supply, "mV")},
                        {"temperature", stat_json(h_temperature, "mV")}, {"sigma", stat_json(h_sigma, "mV")},
                        {"write", stat_json(h_write, "fJ")},       {"discharge", stat_json(h_discharge, "fJ")}};
    j["iterations"] = {{"base", it_base}, {"sigma", it_sigma}, {"write", it_write}, {"discharge", it_discharge}};
    j["warnings"] = warnings;
    return j;
}

} // namespace imcdse
