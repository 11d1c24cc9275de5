#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "support.hpp"

using json = nlohmann::json;
using testsupport::run;

namespace {

const std::string kCli = IMCDSE_CLI_PATH;

std::string q(const std::string& s) { return "'" + s + "'"; }

void write_file(const std::string& p, const std::string& text) {
    std::ofstream o(p);
    o << text;
}

json load(const std::string& p) { return json::parse(testsupport::slurp(p)); }

// oracle-gen and fit on the tiny grid, shared by the cases below
struct Fitted {
    testsupport::TempDir dir{"cli_fitted"};
    std::string cfg = dir / "tiny.json";
    Fitted() {
        write_file(cfg, testsupport::tiny_patch(dir.path.string()).dump());
        auto a = run(kCli + " oracle-gen --config " + q(cfg));
        REQUIRE_MESSAGE(a.code == 0, a.out);
        auto b = run(kCli + " fit --config " + q(cfg));
        REQUIRE_MESSAGE(b.code == 0, b.out);
    }
};

} // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run(kCli + " frobnicate").code == 2);
    CHECK(run(kCli).code == 2);
    CHECK(run(kCli + " eval --jobs many").code == 2);
    CHECK(run(kCli + " eval --config /nonexistent/c.json").code == 2);

    testsupport::TempDir t("cli_usage");
    auto r = run(kCli + " eval --out " + q(t.path.string()));
    CHECK(r.code == 2);
    CHECK(r.out.find("model.json") != std::string::npos);

    write_file(t / "bad.json", R"({"oracle": {"mc_sample": 5}})");
    r = run(kCli + " fit --config " + q(t / "bad.json"));
    CHECK(r.code == 2);
    CHECK(r.out.find("oracle.mc_sample") != std::string::npos);

    write_file(t / "broken.json", "{");
    CHECK(run(kCli + " fit --config " + q(t / "broken.json")).code == 2);

    CHECK(run(kCli + " eval --corner fom --tau0 0.2 --out " + q(t.path.string())).code == 2);
    CHECK(run(kCli + " eval --n-mc 5 --out " + q(t.path.string())).code == 2);
    CHECK(run(kCli + " --help").code == 0);
    CHECK(run(kCli + " --version").code == 0);
}

TEST_CASE("runtime failures exit with 1") {
    Fitted f;
    const std::string out = f.dir.path.string();

    // operating point beyond the fitted time range
    auto r = run(kCli + " eval --config " + q(f.cfg) + " --tau0 1.0");
    CHECK(r.code == 1);
    CHECK(r.out.find("exceeds") != std::string::npos);

    // model written by a different schema version
    json m = load(f.dir / "model.json");
    m["version"] = 99;
    write_file(f.dir / "old_model.json", m.dump());
    r = run(kCli + " eval --config " + q(f.cfg) + " --model " + q(f.dir / "old_model.json"));
    CHECK(r.code == 1);
    CHECK(r.out.find("version") != std::string::npos);

    write_file(f.dir / "junk.json", "not json");
    CHECK(run(kCli + " eval --config " + q(f.cfg) + " --model " + q(f.dir / "junk.json")).code == 1);
}

TEST_CASE("flags override the config file, which overrides the defaults") {
    Fitted f;
    write_file(f.dir / "seeded.json", json{{"seed", 11}, {"out", f.dir.path.string()}, {"explore", {{"n_mc", 10}}}}.dump());

    auto r = run(kCli + " explore --config " + q(f.dir / "seeded.json") + " --jobs 2");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    auto man = load(f.dir / "manifest_explore.json");
    CHECK(man["schema"] == "imcdse.manifest");
    CHECK(man["subcommand"] == "explore");
    CHECK(man["config"]["seed"] == 11);
    CHECK(man["config"]["jobs"] == 2);
    CHECK(man["config"]["explore"]["n_mc"] == 10);
    CHECK(man["config"]["mc"]["n"] == 10000); // untouched default
    CHECK(man["tool_version"].get<std::string>().size() > 0);
    CHECK(man["seeds"].contains("explore"));
    CHECK(man["outputs"].size() >= 2);
    CHECK(man["inputs"].size() == 1);
    CHECK(man.contains("timings_s"));
    auto seed11 = man["seeds"]["explore"];

    r = run(kCli + " explore --config " + q(f.dir / "seeded.json") + " --seed 12 --n-mc 12");
    REQUIRE(r.code == 0);
    man = load(f.dir / "manifest_explore.json");
    CHECK(man["config"]["seed"] == 12);
    CHECK(man["config"]["explore"]["n_mc"] == 12);
    CHECK(man["seeds"]["explore"] != seed11);
}

TEST_CASE("custom corner from flags") {
    Fitted f;
    auto r = run(kCli + " eval --config " + q(f.cfg) + " --tau0 0.2 --vdacfs 0.9");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    auto e = load(f.dir / "eval.json")["corners"];
    REQUIRE(e.contains("custom"));
    CHECK(e["custom"]["tau0_s"].get<double>() == doctest::Approx(0.2e-9));
    CHECK(e["custom"]["v_dac_fs_v"] == 0.9);
    CHECK(r.out.find("custom") != std::string::npos);
    CHECK(r.out.find("wrote") != std::string::npos);
}
