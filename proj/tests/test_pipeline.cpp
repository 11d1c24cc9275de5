#include <doctest.h>

#include <map>

#include "imcdse/csv.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/pipeline.hpp"
#include "support.hpp"

using namespace imcdse;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json run_all(const std::string& out, int jobs, std::map<std::string, json>* results = nullptr) {
    json cfg = merge_config(default_config(), testsupport::tiny_patch(out));
    cfg["jobs"] = jobs;
    for (const char* s : kStages) {
        json r = run_stage(s, cfg);
        if (results) (*results)[s] = r;
    }
    return cfg;
}

// bench.json holds wall-clock timings, and the report quotes them
bool timed(const std::string& f) { return f == "bench.json" || f == "report.md" || f == "report.json"; }

std::map<std::string, std::string> files_of(const std::string& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string f = e.path().filename().string();
        if (!timed(f)) m[f] = testsupport::slurp(e.path().string());
    }
    return m;
}

json load(const std::string& p) { return json::parse(testsupport::slurp(p)); }

} // namespace

TEST_CASE("every stage runs and the outputs do not depend on the worker count") {
    testsupport::TempDir a("pipe_a"), b("pipe_b");
    std::map<std::string, json> res;
    run_all(a.path.string(), 1, &res);
    json cfg_b = run_all(b.path.string(), 3);

    auto fa = files_of(a.path.string()), fb = files_of(b.path.string());
    CHECK(fa.size() == fb.size());
    for (const auto& [name, bytes] : fa) {
        INFO(name);
        REQUIRE(fb.count(name));
        CHECK(bytes == fb[name]);
    }

    for (const char* f : {"dataset.csv", "dataset.csv.json", "holdout.csv", "model.json", "fit_report.json",
                          "fit_points.csv", "pairs_fom.csv", "pairs_power.csv", "pairs_variation.csv", "eval.json",
                          "explore.csv", "selected.json", "pvt.csv", "pvt.json", "mc_fom.csv", "mc.csv", "mc.json",
                          "lut_fom.csv", "accuracy.csv", "accuracy.json", "bench.json", "report.md", "report.json"}) {
        INFO(f);
        CHECK(fs::exists(a / f));
    }

    CHECK(testsupport::first_line(a / "explore.csv") == "tau0_s,v_dac0_v,v_dac_fs_v,eps_mul_lsb,e_mul_j,fom,sigma_max_v");
    CHECK(testsupport::first_line(a / "pvt.csv") == "corner,axis,value,eps_mul_lsb,e_mul_j,error");
    CHECK(testsupport::first_line(a / "mc.csv") ==
          "corner,n_mc,sigma_max_v,sigma_max_a,sigma_max_b,sigma_model_v,eps_mc_lsb");
    CHECK(testsupport::first_line(a / "fit_points.csv").rfind("set,t_s,v_wl_v,v_dd_v,t_k,dv_v,dv_model_v", 0) == 0);
    CHECK(testsupport::first_line(a / "accuracy.csv") == "backend,top1,top5");

    CHECK(load(a / "fit_report.json")["schema"] == "imcdse.fit_report");
    auto sel = load(a / "selected.json");
    CHECK(sel["schema"] == "imcdse.explore");
    CHECK(sel["n_corners"] == 48);
    CHECK(sel["n_evaluated"].get<int>() + sel["skipped"].size() == 48);
    CHECK(sel.contains("selected"));
    CHECK(load(a / "eval.json")["corners"].contains("fom"));
    CHECK(load(a / "mc.json")["schema"] == "imcdse.mc");
    CHECK(load(a / "bench.json")["schema"] == "imcdse.bench");
    CHECK(load(a / "report.json")["schema"] == "imcdse.report");

    // explore rows are sorted by FOM
    auto ex = read_csv(a / "explore.csv");
    for (size_t i = 1; i < ex.rows.size(); ++i) CHECK(ex.num(i - 1, 5) >= ex.num(i, 5));

    // accuracy rows: float, exact, then one per corner
    auto acc = read_csv(a / "accuracy.csv");
    REQUIRE(acc.rows.size() == 5);
    CHECK(acc.rows[0][0] == "float");
    CHECK(acc.rows[1][0] == "exact");

    // without timing data the report is reproducible too
    auto md = testsupport::slurp(a / "report.md");
    fs::remove(a / "bench.json");
    fs::remove(b / "bench.json");
    json cfg_a = cfg_b;
    cfg_a["out"] = a.path.string();
    run_stage("report", cfg_a);
    run_stage("report", cfg_b);
    CHECK(testsupport::slurp(a / "report.md") == testsupport::slurp(b / "report.md"));
    CHECK(testsupport::slurp(a / "report.json") == testsupport::slurp(b / "report.json"));

    for (const char* h : {"## Fit", "## Selected corners"}) CHECK(md.find(h) != std::string::npos);

    // result records list seeds and outputs
    CHECK(res["oracle-gen"]["seeds"].contains("dataset"));
    CHECK(res["fit"]["outputs"].size() >= 3);
    CHECK(res["explore"]["inputs"].size() == 1);
}

TEST_CASE("stages name their missing inputs") {
    testsupport::TempDir t("pipe_missing");
    json cfg = merge_config(default_config(), testsupport::tiny_patch(t.path.string()));
    try {
        run_stage("eval", cfg);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("model.json") != std::string::npos);
    }
    CHECK_THROWS_AS(run_stage("fit", cfg), UsageError);
    CHECK_THROWS_AS(run_stage("plot", cfg), UsageError);
}

TEST_CASE("a custom corner takes the circuit section") {
    testsupport::TempDir t("pipe_custom");
    json cfg = merge_config(default_config(), testsupport::tiny_patch(t.path.string()));
    run_stage("oracle-gen", cfg);
    run_stage("fit", cfg);
    cfg = merge_config(cfg, json{{"corners", {"custom"}}, {"circuit", {{"tau0_s", 0.2e-9}, {"v_dac_fs_v", 0.9}}}});
    run_stage("eval", cfg);
    auto e = load(t / "eval.json")["corners"];
    REQUIRE(e.contains("custom"));
    CHECK(e["custom"]["tau0_s"] == 0.2e-9);
    CHECK(e["custom"]["v_dac_fs_v"] == 0.9);
    CHECK(fs::exists(t / "pairs_custom.csv"));

    cfg["circuit"]["tau0_s"] = 1e-9; // 8 tau0 past the fitted time range
    CHECK_THROWS_AS(run_stage("eval", cfg), DomainError);
}
