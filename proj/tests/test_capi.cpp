#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include <json.hpp>

#include "imcdse.h"
#include "support.hpp"

using json = nlohmann::json;

namespace {

std::string take(char* s) {
    std::string r = s ? s : "";
    imc_string_free(s);
    return r;
}

} // namespace

TEST_CASE("config entry points") {
    char* out = nullptr;
    REQUIRE(imc_config_default(&out) == IMC_OK);
    json d = json::parse(take(out));
    CHECK(d["seed"] == 1);
    CHECK(std::strlen(imc_last_error()) == 0);

    REQUIRE(imc_config_merge(d.dump().c_str(), R"({"jobs": 4})", &out) == IMC_OK);
    CHECK(json::parse(take(out))["jobs"] == 4);

    out = nullptr;
    CHECK(imc_config_merge(d.dump().c_str(), R"({"job": 4})", &out) == IMC_ERR_SCHEMA);
    CHECK(out == nullptr);
    CHECK(std::string(imc_last_error()).find("job") != std::string::npos);
    CHECK(imc_config_merge(d.dump().c_str(), "{", &out) == IMC_ERR_SCHEMA);
    CHECK(imc_config_merge(nullptr, "{}", &out) == IMC_ERR_USAGE);
    CHECK(imc_config_default(nullptr) == IMC_ERR_USAGE);
    CHECK(std::string(imc_version()).size() > 0);
}

TEST_CASE("stage runs, dataset and model handles") {
    testsupport::TempDir t("capi");
    char* out = nullptr;
    REQUIRE(imc_config_default(&out) == IMC_OK);
    std::string def = take(out);
    REQUIRE(imc_config_merge(def.c_str(), testsupport::tiny_patch(t.path.string()).dump().c_str(), &out) == IMC_OK);
    std::string cfg = take(out);

    CHECK(imc_run_stage("eval", cfg.c_str(), &out) == IMC_ERR_USAGE);
    CHECK(imc_run_stage("nope", cfg.c_str(), &out) == IMC_ERR_USAGE);
    REQUIRE(imc_run_stage("oracle-gen", cfg.c_str(), &out) == IMC_OK);
    json r = json::parse(take(out));
    CHECK(r["outputs"].size() == 4);

    imc_dataset *train = nullptr, *hold = nullptr;
    REQUIRE(imc_dataset_load((t / "dataset.csv").c_str(), &train) == IMC_OK);
    REQUIRE(imc_dataset_load((t / "holdout.csv").c_str(), &hold) == IMC_OK);
    CHECK(imc_dataset_rows(train) == 16 * 7 * 3 * 3);
    CHECK(imc_dataset_load((t / "none.csv").c_str(), &train) != IMC_OK);

    imc_model* m = nullptr;
    char* rep = nullptr;
    REQUIRE(imc_model_fit(train, hold, &m, &rep) == IMC_OK);
    CHECK(json::parse(take(rep))["holdout"]["base"]["unit"] == "mV");
    REQUIRE(imc_model_save(m, (t / "m.json").c_str()) == IMC_OK);
    imc_model* m2 = nullptr;
    REQUIRE(imc_model_load((t / "m.json").c_str(), &m2) == IMC_OK);

    double v1 = 0, v2 = 0;
    REQUIRE(imc_model_vbl(m, 1e-9, 0.8, 1.2, 300, &v1) == IMC_OK);
    REQUIRE(imc_model_vbl(m2, 1e-9, 0.8, 1.2, 300, &v2) == IMC_OK);
    CHECK(v1 == v2);
    CHECK(v1 < 1.2);
    CHECK(imc_model_vbl(m, 5e-9, 0.8, 1.2, 300, &v1) == IMC_ERR_DOMAIN);
    CHECK(std::string(imc_last_error()).find("t =") != std::string::npos);
    double s = 0;
    CHECK(imc_model_sigma(m, 1e-9, 0.8, &s) == IMC_OK);
    CHECK(s > 0);

    imc_circuit c;
    REQUIRE(imc_circuit_preset("fom", &c) == IMC_OK);
    CHECK(c.tau0_s == 0.16e-9);
    CHECK(c.adc_bits == 8);
    CHECK(imc_circuit_preset("fast", &c) == IMC_ERR_USAGE);
    imc_circuit_preset("fom", &c);
    imc_product p;
    REQUIRE(imc_multiply(m, &c, 15, 15, &p) == IMC_OK);
    CHECK(p.exact == 225);
    CHECK(p.code == 225);
    CHECK(p.e_op_j > p.e_mul_j);
    REQUIRE(imc_multiply(m, &c, 0, 9, &p) == IMC_OK);
    CHECK(p.code == 0);
    CHECK(p.e_mul_j == 0.0);
    CHECK(imc_multiply(m, &c, 16, 1, &p) == IMC_ERR_DOMAIN);
    CHECK(imc_multiply(nullptr, &c, 1, 1, &p) == IMC_ERR_USAGE);

    json bad = json::parse(testsupport::slurp(t / "m.json"));
    bad["version"] = 2;
    {
        std::ofstream o(t / "bad.json");
        o << bad.dump();
    }
    CHECK(imc_model_load((t / "bad.json").c_str(), &m2) == IMC_ERR_SCHEMA);

    imc_model_free(m);
    imc_model_free(m2);
    imc_dataset_free(train);
    imc_dataset_free(hold);
    imc_model_free(nullptr);
}
