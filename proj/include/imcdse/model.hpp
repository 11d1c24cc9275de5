#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "imcdse/poly.hpp"

namespace imcdse {

struct Range {
    double lo = 0, hi = 0;
    bool contains(double v, double tol = 1e-9) const { double s = tol * std::max(std::abs(lo), std::abs(hi));
        return v >= lo - s && v <= hi + s; }
};

struct Domain {
    Range t, v_wl, v_dd, temp;
    double t_min_fit = 0; // smallest fitted sample time; t in (0, t_min_fit) is interpolation towards V_DD
};

struct DischargeModel {
    PolyCoeffs base_vod = PolyCoeffs::zeros(4);
    PolyCoeffs base_time = PolyCoeffs::zeros(2);
    PolyCoeffs supply = PolyCoeffs({1.0, 0.0, 0.0});
    PolyCoeffs temp_vwl = PolyCoeffs::zeros(3);
    PolyCoeffs sigma_time = PolyCoeffs::zeros(3);
    PolyCoeffs sigma_vwl = PolyCoeffs::zeros(3);
    double v_th = 0.3, v_dd_nom = 1.2, t_nom = 300.0;
};

struct EnergyModel {
    PolyCoeffs wr_vdd = PolyCoeffs::zeros(2);
    PolyCoeffs wr_temp = PolyCoeffs::zeros(1);
    PolyCoeffs dc_vdd = PolyCoeffs::zeros(1);
    PolyCoeffs dc_dv = PolyCoeffs::zeros(3);
    PolyCoeffs dc_temp = PolyCoeffs::zeros(1);
};

struct Model {
    DischargeModel discharge;
    EnergyModel energy;
    Domain domain;
    uint64_t oracle_seed = 0;
    nlohmann::json fit_meta = nlohmann::json::object();

    void check_domain(double t, double v_wl, double v_dd, double temp) const;

    // unchecked forms; callers validate once per corner
    double discharge_term(double t, double v_wl, double v_dd) const;
    double vbl(double t, double v_wl, double v_dd, double temp) const;
    double sigma(double t, double v_wl) const;
    double e_write(double v_dd, double temp) const;
    double e_discharge(double dv, double v_dd, double temp) const;
};

constexpr int kModelSchemaVersion = 1;

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

// full bit-line voltage; throws DomainError outside the validity domain
double eval_vbl(const Model& m, double t, double v_wl, double v_dd, double temp);

} // namespace imcdse
