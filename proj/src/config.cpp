#include "imcdse/config.hpp"

#include <cmath>

#include "imcdse/errors.hpp"

namespace imcdse {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw SchemaError(std::string(what) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw SchemaError(std::string("unknown key '") + it.key() + "' in " + what);
    }
}

#define IMCDSE_DEVICE_FIELDS(X) \
    X(v_th0) X(k_gain) X(lambda_cl) X(i_sub0) X(n_sub) X(c_bl) X(v_dd_nom) X(t_nom) X(alpha_vth) X(mu_exp) \
    X(sigma_vth) X(sigma_k_rel) X(leak_beta) X(theta_vsat) X(k_pd_ratio)

void to_json(json& j, const DeviceParams& p) {
    j = json::object();
#define X(f) j[#f] = p.f;
    IMCDSE_DEVICE_FIELDS(X)
#undef X
}

void from_json(const json& j, DeviceParams& p) { p = device_from(j, p); }

DeviceParams device_from(const json& j, DeviceParams p) {
#define X(f) #f,
    require_keys(j, {IMCDSE_DEVICE_FIELDS(X)}, "device");
#undef X
    auto get = [&](const char* k, double& v) {
        if (!j.contains(k)) return;
        if (!j[k].is_number()) throw SchemaError(std::string("device.") + k + " must be a number");
        v = j[k].get<double>();
    };
#define X(f) get(#f, p.f);
    IMCDSE_DEVICE_FIELDS(X)
#undef X
    return p;
}

std::vector<double> axis_from(const json& j, const char* name) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw SchemaError(std::string(name) + ": axis entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    if (j.is_object()) {
        require_keys(j, {"start", "stop", "count"}, name);
        double a = j.at("start").get<double>(), b = j.at("stop").get<double>();
        int n = j.at("count").get<int>();
        if (n < 1) throw SchemaError(std::string(name) + ": count must be >= 1");
        for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
        return out;
    }
    throw SchemaError(std::string(name) + ": axis must be a list or {start, stop, count}");
}

void to_json(json& j, const GridSpec& g) { j = json{{"t_s", g.t}, {"v_wl_v", g.v_wl}, {"v_dd_v", g.v_dd}, {"t_k", g.temp}}; }

void from_json(const json& j, GridSpec& g) {
    require_keys(j, {"t_s", "v_wl_v", "v_dd_v", "t_k"}, "grid");
    if (j.contains("t_s")) g.t = axis_from(j["t_s"], "grid.t_s");
    if (j.contains("v_wl_v")) g.v_wl = axis_from(j["v_wl_v"], "grid.v_wl_v");
    if (j.contains("v_dd_v")) g.v_dd = axis_from(j["v_dd_v"], "grid.v_dd_v");
    if (j.contains("t_k")) g.temp = axis_from(j["t_k"], "grid.t_k");
}

} // namespace imcdse
