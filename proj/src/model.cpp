#include "imcdse/model.hpp"

#include <cmath>

#include "imcdse/csv.hpp"
#include "imcdse/errors.hpp"

namespace imcdse {

using json = nlohmann::json;

void Model::check_domain(double t, double v_wl, double v_dd, double temp) const {
    auto chk = [](const char* name, double v, const Range& r) {
        if (!std::isfinite(v) || !r.contains(v))
            throw DomainError(std::string(name) + " = " + fmt_num(v) + " outside model domain [" + fmt_num(r.lo) +
                              ", " + fmt_num(r.hi) + "]");
    };
    chk("t", t, domain.t);
    chk("v_wl", v_wl, domain.v_wl);
    chk("v_dd", v_dd, domain.v_dd);
    chk("temp", temp, domain.temp);
}

double Model::discharge_term(double t, double v_wl, double v_dd) const {
    const auto& d = discharge;
    return d.base_vod(v_wl - d.v_th) * d.base_time(t) * d.supply(v_dd - d.v_dd_nom);
}

double Model::vbl(double t, double v_wl, double v_dd, double temp) const {
    const auto& d = discharge;
    return v_dd + discharge_term(t, v_wl, v_dd) + (t * (temp - d.t_nom)) * d.temp_vwl(v_wl);
}

double Model::sigma(double t, double v_wl) const {
    return std::max(0.0, discharge.sigma_time(t) * discharge.sigma_vwl(v_wl));
}

double Model::e_write(double v_dd, double temp) const {
    return std::max(0.0, energy.wr_vdd(v_dd) * energy.wr_temp(temp));
}

double Model::e_discharge(double dv, double v_dd, double temp) const {
    return std::max(0.0, energy.dc_vdd(v_dd) * energy.dc_dv(dv) * energy.dc_temp(temp));
}

double eval_vbl(const Model& m, double t, double v_wl, double v_dd, double temp) {
    m.check_domain(t, v_wl, v_dd, temp);
    return m.vbl(t, v_wl, v_dd, temp);
}

json model_to_json(const Model& m) {
    const auto& d = m.discharge;
    const auto& e = m.energy;
    auto r = [](const Range& x) { return json::array({x.lo, x.hi}); };
    return json{{"schema", "imcdse.model"},
                {"version", kModelSchemaVersion},
                {"discharge",
                 {{"base_vod", d.base_vod.c},
                  {"base_time", d.base_time.c},
                  {"supply", d.supply.c},
                  {"temp_vwl", d.temp_vwl.c},
                  {"sigma_time", d.sigma_time.c},
                  {"sigma_vwl", d.sigma_vwl.c},
                  {"v_th", d.v_th},
                  {"v_dd_nom", d.v_dd_nom},
                  {"t_nom", d.t_nom}}},
                {"energy",
                 {{"wr_vdd", e.wr_vdd.c},
                  {"wr_temp", e.wr_temp.c},
                  {"dc_vdd", e.dc_vdd.c},
                  {"dc_dv", e.dc_dv.c},
                  {"dc_temp", e.dc_temp.c}}},
                {"domain",
                 {{"t_s", r(m.domain.t)},
                  {"v_wl_v", r(m.domain.v_wl)},
                  {"v_dd_v", r(m.domain.v_dd)},
                  {"t_k", r(m.domain.temp)},
                  {"t_min_fit_s", m.domain.t_min_fit}}},
                {"oracle_seed", m.oracle_seed},
                {"fit", m.fit_meta}};
}

namespace {

PolyCoeffs poly_at(const json& j, const char* key, int degree) {
    if (!j.contains(key)) throw SchemaError(std::string("model: missing '") + key + "'");
    auto c = j.at(key).get<std::vector<double>>();
    if (int(c.size()) != degree + 1)
        throw SchemaError(std::string("model: '") + key + "' needs " + std::to_string(degree + 1) + " coefficients");
    for (double v : c)
        if (!std::isfinite(v)) throw SchemaError(std::string("model: '") + key + "' has a non-finite coefficient");
    return PolyCoeffs(std::move(c));
}

Range range_at(const json& j, const char* key) {
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2 || !(v[0] <= v[1])) throw SchemaError(std::string("model: bad domain range '") + key + "'");
    return {v[0], v[1]};
}

} // namespace

Model model_from_json(const json& j) {
    if (j.value("schema", "") != "imcdse.model") throw SchemaError("not a model file (schema != imcdse.model)");
    int ver = j.value("version", -1);
    if (ver != kModelSchemaVersion)
        throw SchemaError("model schema version " + std::to_string(ver) + ", this build reads version " +
                          std::to_string(kModelSchemaVersion) + "; refit with this build");
    try {
        Model m;
        const auto& d = j.at("discharge");
        m.discharge.base_vod = poly_at(d, "base_vod", 4);
        m.discharge.base_time = poly_at(d, "base_time", 2);
        m.discharge.supply = poly_at(d, "supply", 2);
        m.discharge.temp_vwl = poly_at(d, "temp_vwl", 3);
        m.discharge.sigma_time = poly_at(d, "sigma_time", 3);
        m.discharge.sigma_vwl = poly_at(d, "sigma_vwl", 3);
        m.discharge.v_th = d.at("v_th").get<double>();
        m.discharge.v_dd_nom = d.at("v_dd_nom").get<double>();
        m.discharge.t_nom = d.at("t_nom").get<double>();
        if (m.discharge.base_time.c[0] != 0.0) throw SchemaError("model: base_time constant term must be 0");
        if (m.discharge.supply.c[0] != 1.0) throw SchemaError("model: supply constant term must be 1");
        const auto& e = j.at("energy");
        m.energy.wr_vdd = poly_at(e, "wr_vdd", 2);
        m.energy.wr_temp = poly_at(e, "wr_temp", 1);
        m.energy.dc_vdd = poly_at(e, "dc_vdd", 1);
        m.energy.dc_dv = poly_at(e, "dc_dv", 3);
        m.energy.dc_temp = poly_at(e, "dc_temp", 1);
        const auto& dom = j.at("domain");
        m.domain.t = range_at(dom, "t_s");
        m.domain.v_wl = range_at(dom, "v_wl_v");
        m.domain.v_dd = range_at(dom, "v_dd_v");
        m.domain.temp = range_at(dom, "t_k");
        m.domain.t_min_fit = dom.value("t_min_fit_s", 0.0);
        m.oracle_seed = j.value("oracle_seed", uint64_t(0));
        m.fit_meta = j.value("fit", json::object());
        return m;
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("model: ") + ex.what());
    }
}

void save_model(const Model& m, const std::string& path) { write_text(path, model_to_json(m).dump(2) + "\n"); }

Model load_model(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace imcdse
