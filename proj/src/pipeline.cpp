#include "imcdse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "imcdse/config.hpp"
#include "imcdse/csv.hpp"
#include "imcdse/dataset.hpp"
#include "imcdse/dnn.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/explorer.hpp"
#include "imcdse/fastsim.hpp"
#include "imcdse/fit.hpp"
#include "imcdse/model.hpp"
#include "imcdse/rng.hpp"

namespace imcdse {

namespace fs = std::filesystem;

const char* const kStages[9] = {"oracle-gen", "fit", "eval", "explore", "pvt", "mc", "dnn", "bench", "report"};

bool is_stage(const std::string& name) {
    return std::find_if(std::begin(kStages), std::end(kStages), [&](const char* s) { return name == s; }) !=
           std::end(kStages);
}

json default_config() {
    json dev, grid;
    to_json(dev, DeviceParams{});
    to_json(grid, GridSpec::defaults());
    CircuitConfig c;
    auto g3 = GridSpec3::defaults();
    TaskSpec t;
    return json{
        {"seed", 1},
        {"jobs", 1},
        {"out", "out"},
        {"inputs", {{"dataset", ""}, {"holdout", ""}, {"model", ""}}},
        {"device", dev},
        {"oracle", {{"grid", grid}, {"mc_samples", 10000}, {"holdout", true}}},
        {"circuit",
         {{"tau0_s", c.tau0}, {"v_dac0_v", c.v_dac0}, {"v_dac_fs_v", c.v_dac_fs}, {"v_dd_v", c.v_dd}, {"t_k", c.temp},
          {"adc_bits", c.adc_bits}}},
        {"corners", {"fom", "power", "variation"}},
        {"explore", {{"tau0_s", g3.tau0}, {"v_dac0_v", g3.v_dac0}, {"v_dac_fs_v", g3.v_dac_fs}, {"n_mc", 200}}},
        {"pvt", {{"v_dd_v", {1.08, 1.12, 1.16, 1.2, 1.24, 1.28, 1.32}}, {"t_k", {253.0, 273.0, 300.0, 328.0, 358.0}}}},
        {"mc", {{"n", 10000}}},
        {"dnn",
         {{"task",
           {{"classes", t.classes}, {"dim", t.dim}, {"n_train", t.n_train}, {"n_test", t.n_test},
            {"separation", t.separation}, {"density_lo", t.density_lo}, {"seed", t.seed}}},
          {"stochastic", false}}},
        {"bench", {{"n_mc", 1000}, {"min_time_s", 0.2}}},
    };
}

namespace {

void check_known(const json& patch, const json& ref, const std::string& where) {
    if (!patch.is_object()) throw SchemaError("config" + where + " must be a JSON object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        std::string key = where + "." + it.key();
        if (!ref.contains(it.key())) throw SchemaError("unknown config key '" + key.substr(1) + "'");
        const json& r = ref[it.key()];
        if (r.is_object() && it->is_object()) check_known(*it, r, key);
    }
}

} // namespace

json merge_config(const json& base, const json& patch) {
    check_known(patch, default_config(), "");
    json out = base;
    out.merge_patch(patch);
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Ctx {
    const json& cfg;
    fs::path out;
    int jobs = 1;
    uint64_t seed = 0;
    json inputs = json::array(), outputs = json::array(), seeds = json::object(), summary = json::object(),
         timings = json::object();

    explicit Ctx(const json& c) : cfg(c) {
        out = c.at("out").get<std::string>();
        if (out.empty()) throw UsageError("output directory must not be empty");
        jobs = c.at("jobs").get<int>();
        if (jobs < 0) throw UsageError("jobs must be >= 0 (0 = all cores)");
        seed = c.at("seed").get<uint64_t>();
        seeds["seed"] = seed;
    }

    std::string path(const std::string& name) const { return (out / name).string(); }
    void wrote(const std::string& p) { outputs.push_back(p); }

    std::string input(const char* key, const char* fallback, const char* hint) {
        std::string p = cfg.at("inputs").at(key).get<std::string>();
        if (p.empty()) p = path(fallback);
        if (!fs::exists(p)) throw UsageError("missing input file " + p + "; " + hint);
        inputs.push_back(p);
        return p;
    }
};

void write_json(Ctx& cx, const std::string& name, const json& j) {
    std::string p = cx.path(name);
    write_text(p, j.dump(2) + "\n");
    cx.wrote(p);
}

json schema(const char* kind) { return json{{"schema", std::string("imcdse.") + kind}, {"version", 1}}; }

CircuitConfig circuit_from(const json& c) {
    CircuitConfig k;
    k.tau0 = c.at("tau0_s").get<double>();
    k.v_dac0 = c.at("v_dac0_v").get<double>();
    k.v_dac_fs = c.at("v_dac_fs_v").get<double>();
    k.v_dd = c.at("v_dd_v").get<double>();
    k.temp = c.at("t_k").get<double>();
    k.adc_bits = c.at("adc_bits").get<int>();
    return k;
}

json circuit_json(const CircuitConfig& k) {
    return json{{"tau0_s", k.tau0},   {"v_dac0_v", k.v_dac0}, {"v_dac_fs_v", k.v_dac_fs},
                {"v_dd_v", k.v_dd},   {"t_k", k.temp},        {"adc_bits", k.adc_bits}};
}

struct NamedCorner {
    std::string name;
    CircuitConfig cfg;
};

// "custom" takes the circuit section as given; presets replace its timing and DAC range
std::vector<NamedCorner> corners_from(const json& cfg) {
    CircuitConfig base = circuit_from(cfg.at("circuit"));
    std::vector<NamedCorner> out;
    std::set<std::string> seen;
    for (const auto& n : cfg.at("corners")) {
        std::string name = n.get<std::string>();
        if (!seen.insert(name).second) throw UsageError("corner '" + name + "' listed twice");
        CircuitConfig c = base;
        if (name != "custom") {
            CircuitConfig p = preset_corner(name);
            c.tau0 = p.tau0;
            c.v_dac0 = p.v_dac0;
            c.v_dac_fs = p.v_dac_fs;
        }
        c.validate();
        out.push_back({name, c});
    }
    if (out.empty()) throw UsageError("no corners selected");
    return out;
}

json corner_json(const CornerMetrics& c) {
    json j = circuit_json(c.config);
    j["eps_mul_lsb"] = c.eps_mul;
    j["e_mul_j"] = c.e_mul;
    j["fom"] = c.fom_infinite ? json(nullptr) : json(c.fom);
    j["fom_infinite"] = c.fom_infinite;
    j["sigma_max_v"] = c.sigma_max;
    j["eps_mc_lsb"] = c.eps_mc;
    return j;
}

Model load_input_model(Ctx& cx) {
    return load_model(cx.input("model", "model.json", "run `fit` first or pass inputs.model"));
}

// ---------------------------------------------------------------------------

void stage_oracle_gen(Ctx& cx) {
    const json& o = cx.cfg.at("oracle");
    require_keys(o, {"grid", "mc_samples", "holdout"}, "oracle");
    DeviceParams p = device_from(cx.cfg.at("device"));
    GridSpec g;
    from_json(o.at("grid"), g);
    int64_t mc = o.at("mc_samples").get<int64_t>();
    if (mc < 1 || mc > 10000000) throw UsageError("oracle.mc_samples must be in [1, 1e7]");

    auto t0 = Clock::now();
    uint64_t s_train = mix_seed(cx.seed, 1);
    auto d = generate_dataset(g, p, uint32_t(mc), s_train, cx.jobs);
    write_dataset(d, cx.path("dataset.csv"));
    cx.wrote(cx.path("dataset.csv"));
    cx.wrote(cx.path("dataset.csv.json"));
    cx.seeds["dataset"] = s_train;
    cx.timings["dataset"] = since(t0);
    cx.summary["dataset_rows"] = d.rows.size();

    if (o.at("holdout").get<bool>()) {
        auto t1 = Clock::now();
        uint64_t s_hold = mix_seed(cx.seed, 2);
        auto h = generate_dataset(g.holdout(p.v_dd_nom, p.t_nom), p, uint32_t(mc), s_hold, cx.jobs);
        write_dataset(h, cx.path("holdout.csv"));
        cx.wrote(cx.path("holdout.csv"));
        cx.wrote(cx.path("holdout.csv.json"));
        cx.seeds["holdout"] = s_hold;
        cx.timings["holdout"] = since(t1);
        cx.summary["holdout_rows"] = h.rows.size();
    }
    cx.summary["mc_samples"] = mc;
}

void stage_fit(Ctx& cx) {
    auto train = read_dataset(cx.input("dataset", "dataset.csv", "run `oracle-gen` first or pass inputs.dataset"));
    std::optional<OracleDataset> hold;
    std::string hp = cx.cfg.at("inputs").at("holdout").get<std::string>();
    if (!hp.empty() || fs::exists(cx.path("holdout.csv")))
        hold = read_dataset(cx.input("holdout", "holdout.csv", "pass an existing holdout dataset"));

    auto t0 = Clock::now();
    FitReport r;
    Model m = fit_model(train, hold ? &*hold : nullptr, r);
    cx.timings["fit"] = since(t0);

    save_model(m, cx.path("model.json"));
    cx.wrote(cx.path("model.json"));
    json rep = schema("fit_report");
    rep.update(r.to_json());
    write_json(cx, "fit_report.json", rep);
    cx.summary = r.to_json();

    // oracle against model on the scoring set, for plotting
    const OracleDataset& d = hold ? *hold : train;
    std::string pp = cx.path("fit_points.csv");
    CsvWriter w(pp, "set,t_s,v_wl_v,v_dd_v,t_k,dv_v,dv_model_v,sigma_dv_v,sigma_model_v,e_wr_j,e_wr_model_j,e_dc_j,"
                    "e_dc_model_j");
    std::string set = hold ? "holdout" : "train";
    for (const auto& row : d.rows) {
        double dvm = row.v_dd - m.vbl(row.t, row.v_wl, row.v_dd, row.temp);
        double sgm = std::isnan(row.sigma_dv) ? std::nan("") : m.sigma(row.t, row.v_wl);
        w.col(set).col(row.t).col(row.v_wl).col(row.v_dd).col(row.temp).col(row.dv).col(dvm).col(row.sigma_dv)
            .col(sgm).col(row.e_wr).col(m.e_write(row.v_dd, row.temp)).col(row.e_dc)
            .col(m.e_discharge(row.dv, row.v_dd, row.temp));
        w.end_row();
    }
    w.close();
    cx.wrote(pp);
}

void stage_eval(Ctx& cx) {
    Model m = load_input_model(cx);
    json res = schema("eval");
    res["corners"] = json::object();
    auto t0 = Clock::now();
    for (const auto& c : corners_from(cx.cfg)) {
        auto cal = calibrate_adc(c.cfg, m);
        auto s = exhaustive_error(c.cfg, m, cal, Mode::Nominal, 0, cx.jobs);
        std::string p = cx.path("pairs_" + c.name + ".csv");
        write_pairs_csv(s, p);
        cx.wrote(p);
        json j = circuit_json(c.cfg);
        j["eps_mul_lsb"] = s.eps_mul;
        j["e_mul_j"] = s.e_mul_avg;
        j["e_mul_discharge_j"] = s.e_mul_only;
        j["dv_fullscale_v"] = cal.dv_fullscale;
        j["lsb_v"] = cal.lsb_volt;
        j["code_15_15"] = s.pairs[255].code;
        res["corners"][c.name] = j;
    }
    cx.timings["eval"] = since(t0);
    write_json(cx, "eval.json", res);
    cx.summary = res["corners"];
}

void stage_explore(Ctx& cx) {
    Model m = load_input_model(cx);
    const json& e = cx.cfg.at("explore");
    GridSpec3 g;
    g.tau0 = axis_from(e.at("tau0_s"), "explore.tau0_s");
    g.v_dac0 = axis_from(e.at("v_dac0_v"), "explore.v_dac0_v");
    g.v_dac_fs = axis_from(e.at("v_dac_fs_v"), "explore.v_dac_fs_v");
    int64_t n_mc = e.at("n_mc").get<int64_t>();
    if (n_mc < 2 || n_mc > 1000000) throw UsageError("explore.n_mc must be in [2, 1e6]");
    CircuitConfig base = circuit_from(cx.cfg.at("circuit"));
    base.seed = mix_seed(cx.seed, 3);
    cx.seeds["explore"] = base.seed;

    auto t0 = Clock::now();
    auto sw = sweep_corners(g, base, m, uint32_t(n_mc), cx.jobs);
    cx.timings["explore"] = since(t0);

    std::string p = cx.path("explore.csv");
    CsvWriter w(p, "tau0_s,v_dac0_v,v_dac_fs_v,eps_mul_lsb,e_mul_j,fom,sigma_max_v");
    for (const auto& c : sw.metrics) {
        w.col(c.config.tau0).col(c.config.v_dac0).col(c.config.v_dac_fs).col(c.eps_mul).col(c.e_mul).col(c.fom)
            .col(c.sigma_max);
        w.end_row();
    }
    w.close();
    cx.wrote(p);

    json res = schema("explore");
    res["n_corners"] = g.size();
    res["n_evaluated"] = sw.metrics.size();
    res["n_mc"] = n_mc;
    res["skipped"] = json::array();
    for (const auto& s : sw.skipped) {
        json j = circuit_json(s.config);
        j["reason"] = s.reason;
        res["skipped"].push_back(j);
    }
    if (!sw.metrics.empty()) {
        auto sel = select_corners(sw.metrics);
        res["selected"] = {{"fom", corner_json(sel.fom)},
                           {"power", corner_json(sel.power)},
                           {"variation", corner_json(sel.variation)}};
    }
    write_json(cx, "selected.json", res);
    cx.summary = res;
}

void stage_pvt(Ctx& cx) {
    Model m = load_input_model(cx);
    const json& pv = cx.cfg.at("pvt");
    auto vdd = axis_from(pv.at("v_dd_v"), "pvt.v_dd_v");
    auto temp = axis_from(pv.at("t_k"), "pvt.t_k");
    std::string p = cx.path("pvt.csv");
    CsvWriter w(p, "corner,axis,value,eps_mul_lsb,e_mul_j,error");
    json res = schema("pvt");
    res["corners"] = json::object();
    auto t0 = Clock::now();
    for (const auto& c : corners_from(cx.cfg)) {
        auto pts = pvt_sweep(c.cfg, vdd, temp, m, cx.jobs);
        CircuitConfig nom_cfg = c.cfg;
        nom_cfg.v_dd = m.discharge.v_dd_nom;
        nom_cfg.temp = m.discharge.t_nom;
        auto nom = exhaustive_error(nom_cfg, m, calibrate_adc(c.cfg, m), Mode::Nominal);
        std::map<std::string, std::pair<double, double>> span;
        for (const auto& q : pts) {
            w.col(c.name).col(q.axis).col(q.value).col(q.eps_mul).col(q.e_mul).col(q.error);
            w.end_row();
            if (!q.error.empty()) continue;
            auto [it, fresh] = span.try_emplace(q.axis, q.eps_mul, q.eps_mul);
            if (!fresh) {
                it->second.first = std::min(it->second.first, q.eps_mul);
                it->second.second = std::max(it->second.second, q.eps_mul);
            }
        }
        json j = circuit_json(c.cfg);
        j["eps_nominal_lsb"] = nom.eps_mul;
        for (const char* ax : {"v_dd", "temp"}) {
            auto it = span.find(ax);
            j[std::string("spread_") + ax + "_lsb"] = it == span.end() ? json(nullptr) : json(it->second.second - it->second.first);
        }
        res["corners"][c.name] = j;
    }
    w.close();
    cx.wrote(p);
    cx.timings["pvt"] = since(t0);
    write_json(cx, "pvt.json", res);
    cx.summary = res["corners"];
}

void stage_mc(Ctx& cx) {
    Model m = load_input_model(cx);
    int64_t n = cx.cfg.at("mc").at("n").get<int64_t>();
    if (n < 2 || n > 10000000) throw UsageError("mc.n must be in [2, 1e7]");
    std::string p = cx.path("mc.csv");
    CsvWriter w(p, "corner,n_mc,sigma_max_v,sigma_max_a,sigma_max_b,sigma_model_v,eps_mc_lsb");
    json res = schema("mc");
    res["corners"] = json::object();
    auto t0 = Clock::now();
    auto corners = corners_from(cx.cfg);
    for (size_t i = 0; i < corners.size(); ++i) {
        CircuitConfig c = corners[i].cfg;
        c.seed = mix_seed(cx.seed, 4, i);
        cx.seeds["mc_" + corners[i].name] = c.seed;
        auto s = mismatch_mc(c, uint32_t(n), m, cx.jobs);
        std::string pp = cx.path("mc_" + corners[i].name + ".csv");
        write_pairs_csv(s.sweep, pp);
        cx.wrote(pp);
        w.col(corners[i].name).col(int64_t(n)).col(s.sweep.sigma_max).col(s.sweep.sigma_max_a).col(s.sweep.sigma_max_b)
            .col(s.sigma_model_max).col(s.sweep.eps_mul);
        w.end_row();
        json j = circuit_json(c);
        j["n_mc"] = n;
        j["sigma_max_v"] = s.sweep.sigma_max;
        j["sigma_max_pair"] = {s.sweep.sigma_max_a, s.sweep.sigma_max_b};
        j["sigma_model_v"] = s.sigma_model_max;
        j["sigma_15_15_v"] = s.sweep.pairs[255].sigma_dv;
        j["eps_mc_lsb"] = s.sweep.eps_mul;
        res["corners"][corners[i].name] = j;
    }
    w.close();
    cx.wrote(p);
    cx.timings["mc"] = since(t0);
    write_json(cx, "mc.json", res);
    cx.summary = res["corners"];
}

void stage_dnn(Ctx& cx) {
    Model m = load_input_model(cx);
    const json& d = cx.cfg.at("dnn");
    const json& t = d.at("task");
    TaskSpec ts;
    ts.classes = t.at("classes").get<int>();
    ts.dim = t.at("dim").get<int>();
    ts.n_train = t.at("n_train").get<int>();
    ts.n_test = t.at("n_test").get<int>();
    ts.separation = t.at("separation").get<double>();
    ts.density_lo = t.at("density_lo").get<double>();
    ts.seed = t.at("seed").get<uint64_t>();
    cx.seeds["task"] = ts.seed;

    auto t0 = Clock::now();
    Task task = make_task(ts);
    std::vector<MulBackend> bes{MulBackend::exact()};
    auto corners = corners_from(cx.cfg);
    for (const auto& c : corners) {
        auto s = exhaustive_error(c.cfg, m, calibrate_adc(c.cfg, m), Mode::Nominal, 0, cx.jobs);
        bes.push_back(MulBackend::from_lut(c.name, s));
        std::string p = cx.path("lut_" + c.name + ".csv");
        write_lut_csv(bes.back(), p);
        cx.wrote(p);
    }
    if (d.at("stochastic").get<bool>())
        for (size_t i = 0; i < corners.size(); ++i) {
            uint64_t s = mix_seed(cx.seed, 5, i);
            cx.seeds["dnn_" + corners[i].name + "_mc"] = s;
            bes.push_back(MulBackend::stochastic(corners[i].name + "_mc", corners[i].cfg, m, s));
        }
    auto acc = infer_and_score(task, bes, cx.jobs);
    acc.insert(acc.begin(), Accuracy{"float", task.real_top1, task.real_topk, 5});
    cx.timings["dnn"] = since(t0);

    std::string p = cx.path("accuracy.csv");
    write_accuracy_csv(acc, p);
    cx.wrote(p);
    json res = schema("accuracy");
    res["rows"] = json::array();
    for (const auto& a : acc) res["rows"].push_back({{"backend", a.backend}, {"top1", a.top1}, {"top5", a.topk}});
    write_json(cx, "accuracy.json", res);
    cx.summary = res["rows"];
}

// ---------------------------------------------------------------------------
// bench: the same multiplier evaluated through the fitted model and through
// the transient device solver, single worker, wall clock

template <class F>
double time_per_call(F&& f, double min_time) {
    int reps = 0;
    auto t0 = Clock::now();
    do {
        f();
        ++reps;
    } while (since(t0) < min_time);
    return since(t0) / reps;
}

struct OracleSweep {
    double eps = 0, e_op = 0, sigma_max = 0;
};

int adc_code(double dv_comb, double lsb, int bits) {
    double c = std::round(dv_comb / (lsb / 4.0));
    return int(std::clamp(c, 0.0, double((1 << bits) - 1)));
}

// nominal: one trajectory per WL code, sampled at the four pulse widths
OracleSweep oracle_sweep(const CircuitConfig& c, const DeviceParams& p) {
    std::vector<double> times{c.tau0, 2 * c.tau0, 4 * c.tau0, 8 * c.tau0};
    double dv[16][4];
    for (int b = 0; b < 16; ++b) {
        auto v = discharge_at(times, dac_voltage(b, c), p, c.v_dd, c.temp);
        for (int i = 0; i < 4; ++i) dv[b][i] = std::clamp(c.v_dd - v[i], 0.0, c.v_dd);
    }
    double fs = dv[15][0] + dv[15][1] + dv[15][2] + dv[15][3];
    double lsb = fs / 225.0;
    double e_wr = oracle_energies(0.0, c.v_dd, c.temp, p).e_write;
    OracleSweep r;
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            double s = 0, e = 4 * e_wr;
            for (int i = 0; i < 4; ++i)
                if (a >> i & 1) {
                    s += dv[b][i];
                    e += oracle_energies(dv[b][i], c.v_dd, c.temp, p).e_discharge;
                }
            r.eps += std::abs(adc_code(s / 4.0, lsb, c.adc_bits) - a * b);
            r.e_op += e;
        }
    r.eps /= 256.0;
    r.e_op /= 256.0;
    return r;
}

// Monte-Carlo: each bit-line cell of draw k has its own mismatch, shared by
// every pair (the same common-random-number layout as the fast path)
OracleSweep oracle_mc(const CircuitConfig& c, const DeviceParams& p, uint32_t n, double lsb) {
    std::vector<double> dv(size_t(n) * 16 * 4);
    for (uint32_t k = 0; k < n; ++k)
        for (int i = 0; i < 4; ++i) {
            Gauss g(mix_seed(c.seed, k, i));
            Mismatch mm{p.sigma_vth * g(), p.sigma_k_rel * g()};
            std::vector<double> ti{double(1 << i) * c.tau0};
            for (int b = 0; b < 16; ++b) {
                auto v = discharge_at(ti, dac_voltage(b, c), p, c.v_dd, c.temp, mm);
                dv[(size_t(k) * 16 + b) * 4 + i] = std::clamp(c.v_dd - v[0], 0.0, c.v_dd);
            }
        }
    OracleSweep r;
    double e_wr = oracle_energies(0.0, c.v_dd, c.temp, p).e_write;
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            double mean = 0, m2 = 0;
            for (uint32_t k = 0; k < n; ++k) {
                double s = 0, e = 4 * e_wr;
                for (int i = 0; i < 4; ++i)
                    if (a >> i & 1) {
                        double x = dv[(size_t(k) * 16 + b) * 4 + i];
                        s += x;
                        e += oracle_energies(x, c.v_dd, c.temp, p).e_discharge;
                    }
                double comb = s / 4.0, d = comb - mean;
                mean += d / (k + 1);
                m2 += d * (comb - mean);
                r.eps += std::abs(adc_code(comb, lsb, c.adc_bits) - a * b);
                r.e_op += e;
            }
            r.sigma_max = std::max(r.sigma_max, std::sqrt(m2 / (n - 1)));
        }
    r.eps /= 256.0 * n;
    r.e_op /= 256.0 * n;
    return r;
}

void stage_bench(Ctx& cx) {
    Model m = load_input_model(cx);
    DeviceParams p = device_from(cx.cfg.at("device"));
    const json& b = cx.cfg.at("bench");
    int64_t n = b.at("n_mc").get<int64_t>();
    double min_time = b.at("min_time_s").get<double>();
    if (n < 2 || n > 100000) throw UsageError("bench.n_mc must be in [2, 1e5]");
    if (!(min_time >= 0)) throw UsageError("bench.min_time_s must be >= 0");
    auto corner = corners_from(cx.cfg).front();
    CircuitConfig c = corner.cfg;
    c.seed = mix_seed(cx.seed, 6);
    cx.seeds["bench"] = c.seed;

    SweepResult fast_nom, fast_mc;
    AdcCalibration cal;
    double t_fast = time_per_call([&] {
        cal = calibrate_adc(c, m);
        fast_nom = exhaustive_error(c, m, cal, Mode::Nominal, 0, 1);
    }, min_time);
    OracleSweep or_nom;
    double t_or = time_per_call([&] { or_nom = oracle_sweep(c, p); }, min_time);

    double t_fast_mc = time_per_call([&] {
        cal = calibrate_adc(c, m);
        fast_mc = exhaustive_error(c, m, cal, Mode::MonteCarlo, uint32_t(n), 1);
    }, min_time);
    double lsb_or = 0;
    {
        std::vector<double> times{c.tau0, 2 * c.tau0, 4 * c.tau0, 8 * c.tau0};
        auto v = discharge_at(times, dac_voltage(15, c), p, c.v_dd, c.temp);
        for (double x : v) lsb_or += (c.v_dd - x) / 225.0;
    }
    OracleSweep or_mc;
    double t_or_mc = time_per_call([&] { or_mc = oracle_mc(c, p, uint32_t(n), lsb_or); }, 0.0);

    json res = schema("bench");
    res["corner"] = corner.name;
    res["config"] = circuit_json(c);
    res["workers"] = 1;
    res["sweep"] = {{"fast_s", t_fast},
                    {"oracle_s", t_or},
                    {"speedup", t_or / t_fast},
                    {"fast_eps_lsb", fast_nom.eps_mul},
                    {"oracle_eps_lsb", or_nom.eps},
                    {"fast_e_mul_j", fast_nom.e_mul_avg},
                    {"oracle_e_mul_j", or_nom.e_op}};
    res["mc"] = {{"n_mc", n},
                 {"fast_s", t_fast_mc},
                 {"oracle_s", t_or_mc},
                 {"speedup", t_or_mc / t_fast_mc},
                 {"fast_eps_lsb", fast_mc.eps_mul},
                 {"oracle_eps_lsb", or_mc.eps},
                 {"fast_sigma_max_v", fast_mc.sigma_max},
                 {"oracle_sigma_max_v", or_mc.sigma_max}};
    cx.timings["bench"] = t_fast + t_or + t_fast_mc + t_or_mc;
    // timings differ run to run, so bench.json is not part of the bit-identity contract
    write_json(cx, "bench.json", res);
    cx.summary = res;
}

// ---------------------------------------------------------------------------
// report: tables assembled from stored outputs only

std::optional<json> read_json_if(Ctx& cx, const std::string& name) {
    std::string p = cx.path(name);
    if (!fs::exists(p)) return std::nullopt;
    cx.inputs.push_back(p);
    try {
        return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
        throw SchemaError(p + ": not valid JSON (" + e.what() + ")");
    }
}

std::optional<CsvTable> read_csv_if(Ctx& cx, const std::string& name) {
    std::string p = cx.path(name);
    if (!fs::exists(p)) return std::nullopt;
    cx.inputs.push_back(p);
    return read_csv(p);
}

void expect_schema(const json& j, const char* kind, const std::string& file) {
    if (j.value("schema", "") != std::string("imcdse.") + kind || j.value("version", 0) != 1)
        throw SchemaError(file + ": expected schema imcdse." + kind + " version 1; regenerate it with this tool version");
}

std::string num(const json& v, int prec = 4) {
    if (v.is_null()) return "inf";
    std::ostringstream s;
    s.precision(prec);
    s << v.get<double>();
    return s.str();
}

void stage_report(Ctx& cx) {
    std::ostringstream md;
    json res = schema("report");
    bool any = false;

    if (auto j = read_json_if(cx, "fit_report.json")) {
        expect_schema(*j, "fit_report", "fit_report.json");
        any = true;
        md << "## Fit\n\n| model | train RMS | holdout RMS | unit |\n|---|---|---|---|\n";
        for (const char* k : {"base", "supply", "temperature", "sigma", "write", "discharge"}) {
            const json& tr = (*j)["train"][k];
            md << "| " << k << " | " << num(tr["rms"]) << " | "
               << (j->contains("holdout") ? num((*j)["holdout"][k]["rms"]) : std::string("-")) << " | "
               << tr["unit"].get<std::string>() << " |\n";
        }
        md << "\n";
        res["fit"] = *j;
    }
    if (auto j = read_json_if(cx, "selected.json")) {
        expect_schema(*j, "explore", "selected.json");
        any = true;
        md << "## Selected corners (" << (*j)["n_evaluated"] << " of " << (*j)["n_corners"] << " evaluated)\n\n"
           << "| corner | tau0 (ns) | V_DAC,0 (V) | V_DAC,FS (V) | eps (LSB) | E_mul (fJ) | FOM | sigma_max (mV) |\n"
           << "|---|---|---|---|---|---|---|---|\n";
        if (j->contains("selected"))
            for (const char* k : {"fom", "power", "variation"}) {
                const json& c = (*j)["selected"][k];
                md << "| " << k << " | " << num(json(c["tau0_s"].get<double>() * 1e9)) << " | " << num(c["v_dac0_v"])
                   << " | " << num(c["v_dac_fs_v"]) << " | " << num(c["eps_mul_lsb"]) << " | "
                   << num(json(c["e_mul_j"].get<double>() * 1e15)) << " | " << num(c["fom"]) << " | "
                   << num(json(c["sigma_max_v"].get<double>() * 1e3)) << " |\n";
            }
        md << "\n";
        res["explore"] = *j;
    }
    if (auto j = read_json_if(cx, "eval.json")) {
        expect_schema(*j, "eval", "eval.json");
        any = true;
        md << "## Multiplier\n\n| corner | eps (LSB) | E_mul (fJ) | code(15,15) |\n|---|---|---|---|\n";
        for (auto it = (*j)["corners"].begin(); it != (*j)["corners"].end(); ++it)
            md << "| " << it.key() << " | " << num((*it)["eps_mul_lsb"]) << " | "
               << num(json((*it)["e_mul_j"].get<double>() * 1e15)) << " | " << (*it)["code_15_15"] << " |\n";
        md << "\n";
        res["eval"] = *j;
    }
    if (auto j = read_json_if(cx, "pvt.json")) {
        expect_schema(*j, "pvt", "pvt.json");
        any = true;
        md << "## PVT\n\n| corner | eps nominal | spread over V_DD | spread over T |\n|---|---|---|---|\n";
        for (auto it = (*j)["corners"].begin(); it != (*j)["corners"].end(); ++it)
            md << "| " << it.key() << " | " << num((*it)["eps_nominal_lsb"]) << " | " << num((*it)["spread_v_dd_lsb"])
               << " | " << num((*it)["spread_temp_lsb"]) << " |\n";
        md << "\n";
        res["pvt"] = *j;
    }
    if (auto j = read_json_if(cx, "mc.json")) {
        expect_schema(*j, "mc", "mc.json");
        any = true;
        md << "## Monte-Carlo\n\n| corner | n | sigma_max (mV) | at (a,b) | model (mV) | eps (LSB) |\n"
           << "|---|---|---|---|---|---|\n";
        for (auto it = (*j)["corners"].begin(); it != (*j)["corners"].end(); ++it)
            md << "| " << it.key() << " | " << (*it)["n_mc"] << " | "
               << num(json((*it)["sigma_max_v"].get<double>() * 1e3)) << " | (" << (*it)["sigma_max_pair"][0] << ","
               << (*it)["sigma_max_pair"][1] << ") | " << num(json((*it)["sigma_model_v"].get<double>() * 1e3))
               << " | " << num((*it)["eps_mc_lsb"]) << " |\n";
        md << "\n";
        res["mc"] = *j;
    }
    if (auto t = read_csv_if(cx, "accuracy.csv")) {
        any = true;
        size_t cb = t->column("backend"), c1 = t->column("top1"), c5 = t->column("top5");
        md << "## Classifier\n\n| backend | top-1 | top-5 |\n|---|---|---|\n";
        res["accuracy"] = json::array();
        for (size_t r = 0; r < t->rows.size(); ++r) {
            md << "| " << t->rows[r][cb] << " | " << t->rows[r][c1] << " | " << t->rows[r][c5] << " |\n";
            res["accuracy"].push_back({{"backend", t->rows[r][cb]}, {"top1", t->num(r, c1)}, {"top5", t->num(r, c5)}});
        }
        md << "\n";
    }
    if (auto j = read_json_if(cx, "bench.json")) {
        expect_schema(*j, "bench", "bench.json");
        any = true;
        md << "## Speed (single worker)\n\n| workload | fast (s) | oracle (s) | speedup |\n|---|---|---|---|\n"
           << "| 256-pair sweep | " << num((*j)["sweep"]["fast_s"]) << " | " << num((*j)["sweep"]["oracle_s"]) << " | "
           << num((*j)["sweep"]["speedup"]) << " |\n"
           << "| " << (*j)["mc"]["n_mc"] << "-draw MC | " << num((*j)["mc"]["fast_s"]) << " | "
           << num((*j)["mc"]["oracle_s"]) << " | " << num((*j)["mc"]["speedup"]) << " |\n\n";
        res["bench"] = *j;
    }
    if (!any) throw UsageError("nothing to report in " + cx.out.string() + "; run the other stages first");

    std::string p = cx.path("report.md");
    write_text(p, "# imcdse report\n\n" + md.str());
    cx.wrote(p);
    write_json(cx, "report.json", res);
}

} // namespace

json run_stage(const std::string& name, const json& cfg) {
    if (!is_stage(name)) throw UsageError("unknown subcommand '" + name + "'");
    try {
        check_known(cfg, default_config(), "");
        Ctx cx(cfg);
        fs::create_directories(cx.out);
        auto t0 = Clock::now();
        if (name == "oracle-gen") stage_oracle_gen(cx);
        else if (name == "fit") stage_fit(cx);
        else if (name == "eval") stage_eval(cx);
        else if (name == "explore") stage_explore(cx);
        else if (name == "pvt") stage_pvt(cx);
        else if (name == "mc") stage_mc(cx);
        else if (name == "dnn") stage_dnn(cx);
        else if (name == "bench") stage_bench(cx);
        else stage_report(cx);
        cx.timings["total"] = since(t0);
        return json{{"inputs", cx.inputs},   {"outputs", cx.outputs}, {"seeds", cx.seeds},
                    {"summary", cx.summary}, {"timings_s", cx.timings}};
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    } catch (const fs::filesystem_error& e) {
        throw IoError(e.what());
    }
}

} // namespace imcdse
