// Command-line front end. Talks to the library through the C API only.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "imcdse.h"

using nlohmann::json;

namespace {

struct Failure {
    int code;
    std::string msg;
};

int exit_code(imc_status s) { return s == IMC_ERR_USAGE ? 2 : 1; }

// owns a string returned by the library
std::string take(char* s) {
    std::string out = s ? s : "";
    imc_string_free(s);
    return out;
}

json call_json(imc_status s, char*& out, int usage_code = -1) {
    if (s != IMC_OK) throw Failure{usage_code >= 0 ? usage_code : exit_code(s), imc_last_error()};
    return json::parse(take(out));
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

std::string fmt(const json& v) { return v.is_number() ? fmt(v.get<double>()) : std::string("-"); }

void print_fit(const json& r) {
    const json& src = r.contains("holdout") ? r["holdout"] : r["train"];
    std::printf("RMS (%s):\n", r.contains("holdout") ? "holdout" : "train");
    for (const char* k : {"base", "supply", "temperature", "sigma", "write", "discharge"})
        std::printf("  %-12s %s %s\n", k, fmt(src[k]["rms"].get<double>()).c_str(),
                    src[k]["unit"].get<std::string>().c_str());
    for (const auto& w : r["warnings"]) std::printf("warning: %s\n", w.get<std::string>().c_str());
}

void print_summary(const std::string& stage, const json& s) {
    if (stage == "fit") return print_fit(s);
    if (stage == "eval")
        for (auto it = s.begin(); it != s.end(); ++it)
            std::printf("%-10s eps_mul %s LSB  E_mul %s fJ\n", it.key().c_str(),
                        fmt((*it)["eps_mul_lsb"].get<double>()).c_str(),
                        fmt((*it)["e_mul_j"].get<double>() * 1e15).c_str());
    if (stage == "explore" && s.contains("selected"))
        for (const char* k : {"fom", "power", "variation"}) {
            const json& c = s["selected"][k];
            std::printf("%-10s tau0 %s ns  V_DAC,0 %s V  V_DAC,FS %s V  eps %s LSB  E_mul %s fJ\n", k,
                        fmt(c["tau0_s"].get<double>() * 1e9).c_str(), fmt(c["v_dac0_v"].get<double>()).c_str(),
                        fmt(c["v_dac_fs_v"].get<double>()).c_str(), fmt(c["eps_mul_lsb"].get<double>()).c_str(),
                        fmt(c["e_mul_j"].get<double>() * 1e15).c_str());
        }
    if (stage == "pvt")
        for (auto it = s.begin(); it != s.end(); ++it)
            std::printf("%-10s eps nominal %s  spread V_DD %s  spread T %s LSB\n", it.key().c_str(),
                        fmt((*it)["eps_nominal_lsb"].get<double>()).c_str(),
                        fmt((*it)["spread_v_dd_lsb"]).c_str(), fmt((*it)["spread_temp_lsb"]).c_str());
    if (stage == "mc")
        for (auto it = s.begin(); it != s.end(); ++it)
            std::printf("%-10s sigma_max %s mV at (%d,%d)  model %s mV\n", it.key().c_str(),
                        fmt((*it)["sigma_max_v"].get<double>() * 1e3).c_str(), (*it)["sigma_max_pair"][0].get<int>(),
                        (*it)["sigma_max_pair"][1].get<int>(), fmt((*it)["sigma_model_v"].get<double>() * 1e3).c_str());
    if (stage == "dnn")
        for (const auto& r : s)
            std::printf("%-14s top1 %.3f  top5 %.3f\n", r["backend"].get<std::string>().c_str(), r["top1"].get<double>(),
                        r["top5"].get<double>());
    if (stage == "bench")
        for (const char* k : {"sweep", "mc"})
            std::printf("%-6s fast %s s  oracle %s s  speedup %sx\n", k, fmt(s[k]["fast_s"].get<double>()).c_str(),
                        fmt(s[k]["oracle_s"].get<double>()).c_str(), fmt(s[k]["speedup"].get<double>(), 3).c_str());
}

int run(int argc, char** argv) {
    CLI::App app{"In-SRAM multiplier modeling and design-space exploration"};
    app.fallthrough();
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(imc_version()));

    std::string config_path, out_dir, corner, dataset, holdout, model;
    std::optional<uint64_t> seed;
    std::optional<int> jobs;
    std::optional<double> tau0_ns, vdac0, vdacfs;
    std::optional<int64_t> n_mc;
    app.add_option("--config", config_path, "JSON config file layered over the built-in defaults")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "root seed (default 1)");
    app.add_option("--jobs", jobs, "worker threads, 0 = all cores (default 1)");
    app.add_option("--out", out_dir, "output directory (default ./out)");
    app.add_option("--corner", corner, "fom, power, variation or custom");
    app.add_option("--tau0", tau0_ns, "unit pulse width in ns (custom corner)");
    app.add_option("--vdac0", vdac0, "DAC voltage of code 0 in V (custom corner)");
    app.add_option("--vdacfs", vdacfs, "DAC full-scale voltage in V (custom corner)");
    app.add_option("--n-mc", n_mc, "Monte-Carlo draws: per grid point (oracle-gen), per corner (explore, mc, bench)");
    app.add_option("--dataset", dataset, "training dataset CSV (fit)");
    app.add_option("--holdout", holdout, "holdout dataset CSV (fit)");
    app.add_option("--model", model, "model JSON (eval, explore, pvt, mc, dnn, bench)");

    const char* help[] = {"generate the transient-oracle dataset and holdout",
                          "fit the behavioral model",
                          "evaluate all 256 products per corner",
                          "sweep the design-corner grid and select corners",
                          "supply and temperature sweeps per corner",
                          "mismatch Monte-Carlo per corner",
                          "classifier accuracy with multiplier backends",
                          "time the fast path against the oracle",
                          "summary tables from stored outputs"};
    const char* names[] = {"oracle-gen", "fit", "eval", "explore", "pvt", "mc", "dnn", "bench", "report"};
    for (int i = 0; i < 9; ++i) app.add_subcommand(names[i], help[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    std::string stage = app.get_subcommands().front()->get_name();

    char* raw = nullptr;
    imc_status st = imc_config_default(&raw);
    json cfg = call_json(st, raw);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        raw = nullptr;
        imc_status s = imc_config_merge(cfg.dump().c_str(), text.c_str(), &raw);
        if (s != IMC_OK) throw Failure{2, config_path + ": " + imc_last_error()};
        cfg = json::parse(take(raw));
    }

    json patch = json::object();
    if (seed) patch["seed"] = *seed;
    if (jobs) patch["jobs"] = *jobs;
    if (!out_dir.empty()) patch["out"] = out_dir;
    if (!dataset.empty()) patch["inputs"]["dataset"] = dataset;
    if (!holdout.empty()) patch["inputs"]["holdout"] = holdout;
    if (!model.empty()) patch["inputs"]["model"] = model;
    bool custom = tau0_ns || vdac0 || vdacfs;
    if (custom && !corner.empty() && corner != "custom")
        throw Failure{2, "--tau0/--vdac0/--vdacfs define the custom corner; drop --corner or use --corner custom"};
    if (tau0_ns) patch["circuit"]["tau0_s"] = *tau0_ns * 1e-9;
    if (vdac0) patch["circuit"]["v_dac0_v"] = *vdac0;
    if (vdacfs) patch["circuit"]["v_dac_fs_v"] = *vdacfs;
    if (!corner.empty()) patch["corners"] = json::array({corner});
    else if (custom) patch["corners"] = json::array({"custom"});
    if (n_mc) {
        if (stage == "oracle-gen") patch["oracle"]["mc_samples"] = *n_mc;
        else if (stage == "explore") patch["explore"]["n_mc"] = *n_mc;
        else if (stage == "mc") patch["mc"]["n"] = *n_mc;
        else if (stage == "bench") patch["bench"]["n_mc"] = *n_mc;
        else throw Failure{2, "--n-mc does not apply to " + stage};
    }
    raw = nullptr;
    st = imc_config_merge(cfg.dump().c_str(), patch.dump().c_str(), &raw);
    cfg = call_json(st, raw, 2);

    raw = nullptr;
    st = imc_run_stage(stage.c_str(), cfg.dump().c_str(), &raw);
    json res = call_json(st, raw);

    namespace fs = std::filesystem;
    fs::path mpath = fs::path(cfg["out"].get<std::string>()) / ("manifest_" + stage + ".json");
    json manifest = {{"schema", "imcdse.manifest"},
                     {"version", 1},
                     {"subcommand", stage},
                     {"tool_version", imc_version()},
                     {"config", cfg},
                     {"inputs", res["inputs"]},
                     {"outputs", res["outputs"]},
                     {"seeds", res["seeds"]},
                     {"timings_s", res["timings_s"]}};
    std::ofstream mf(mpath);
    mf << manifest.dump(2) << "\n";
    if (!mf) throw Failure{1, "cannot write " + mpath.string()};

    print_summary(stage, res["summary"]);
    for (const auto& o : res["outputs"]) std::printf("wrote %s\n", o.get<std::string>().c_str());
    std::printf("wrote %s\n", mpath.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Failure& f) {
        std::fprintf(stderr, "imcdse: %s\n", f.msg.c_str());
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "imcdse: %s\n", e.what());
        return 1;
    }
}
