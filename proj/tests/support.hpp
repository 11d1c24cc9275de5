#pragma once
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "imcdse/dataset.hpp"
#include "imcdse/model.hpp"

namespace testsupport {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("imcdse_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

inline std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string first_line(const std::string& p) {
    std::ifstream in(p);
    std::string l;
    std::getline(in, l);
    return l;
}

struct Proc {
    int code = -1;
    std::string out; // stdout and stderr
};

inline Proc run(const std::string& cmd) {
    Proc r;
    FILE* f = ::popen((cmd + " 2>&1").c_str(), "r");
    if (!f) return r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), n);
    int st = ::pclose(f);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

// A model with hand-picked coefficients in the shape of the fitted family and
// magnitudes of a 1.2 V bit line discharging over a few nanoseconds.
inline imcdse::Model truth_model() {
    using imcdse::PolyCoeffs;
    imcdse::Model m;
    auto& d = m.discharge;
    d.v_th = 0.3;
    d.v_dd_nom = 1.2;
    d.t_nom = 300;
    d.base_vod = PolyCoeffs({0.01, 0.6, 0.3, -0.1, 0.02});
    d.base_time = PolyCoeffs({0.0, -0.45e9, 0.02e18});
    d.supply = PolyCoeffs({1.0, 0.8, -0.5});
    d.temp_vwl = PolyCoeffs({2e4, 1e4, -3e3, 500});
    d.sigma_time = PolyCoeffs({0.01, 0.2e9, 0.0, 1e24});
    d.sigma_vwl = PolyCoeffs({1e-3, 1e-3, 0.5e-3, 0.0});
    auto& e = m.energy;
    e.wr_vdd = PolyCoeffs({0.0, 1e-14, 3e-13});
    e.wr_temp = PolyCoeffs({0.85, 5e-4});
    e.dc_vdd = PolyCoeffs({0.1, 1.0});
    e.dc_dv = PolyCoeffs({0.0, 3.6e-13, 1e-14, 2e-15});
    e.dc_temp = PolyCoeffs({0.85, 5e-4});
    m.domain.t = {0.0, 2.56e-9};
    m.domain.t_min_fit = 0.02e-9;
    m.domain.v_wl = {0.3, 1.2};
    m.domain.v_dd = {1.08, 1.32};
    m.domain.temp = {253, 358};
    return m;
}

// rows generated straight from the model; sigma only at nominal V_DD and T,
// as the transient oracle produces it
inline imcdse::OracleDataset synthetic_dataset(const imcdse::Model& m, const imcdse::GridSpec& g) {
    imcdse::OracleDataset d;
    d.grid = g;
    d.device.v_th0 = m.discharge.v_th;
    d.device.v_dd_nom = m.discharge.v_dd_nom;
    d.device.t_nom = m.discharge.t_nom;
    d.mc_samples = 2;
    for (double T : g.temp)
        for (double vdd : g.v_dd)
            for (double vwl : g.v_wl)
                for (double t : g.t) {
                    double dv = vdd - m.vbl(t, vwl, vdd, T);
                    bool nom = vdd == m.discharge.v_dd_nom && T == m.discharge.t_nom;
                    d.rows.push_back({t, vwl, vdd, T, dv, nom ? m.sigma(t, vwl) : std::nan(""), m.e_write(vdd, T),
                                      m.e_discharge(dv, vdd, T)});
                }
    return d;
}

// small patch over the default config: coarse oracle grid, few MC draws.
// Keeps every stage quick while exercising the same code paths.
inline nlohmann::json tiny_patch(const std::string& out) {
    return {
        {"out", out},
        {"oracle",
         {{"grid",
           {{"t_s", {{"start", 0.16e-9}, {"stop", 2.56e-9}, {"count", 16}}},
            {"v_wl_v", {{"start", 0.3}, {"stop", 1.2}, {"count", 7}}},
            {"v_dd_v", {1.08, 1.2, 1.32}},
            {"t_k", {253.0, 300.0, 358.0}}}},
          {"mc_samples", 40}}},
        {"explore", {{"n_mc", 20}}},
        {"pvt", {{"v_dd_v", {1.08, 1.2, 1.32}}, {"t_k", {253.0, 300.0, 358.0}}}},
        {"mc", {{"n", 200}}},
        {"dnn", {{"task", {{"n_test", 300}}}}},
        {"bench", {{"n_mc", 20}, {"min_time_s", 0.01}}},
    };
}

} // namespace testsupport
