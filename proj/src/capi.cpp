#include "imcdse.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "imcdse/dataset.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/explorer.hpp"
#include "imcdse/fastsim.hpp"
#include "imcdse/fit.hpp"
#include "imcdse/model.hpp"
#include "imcdse/pipeline.hpp"

#ifndef IMCDSE_VERSION
#define IMCDSE_VERSION "0.0.0"
#endif

struct imc_model {
    imcdse::Model m;
};
struct imc_dataset {
    imcdse::OracleDataset d;
};

namespace {

thread_local std::string g_error;

imc_status fail(imc_status s, const char* msg) {
    g_error = msg;
    return s;
}

template <class F>
imc_status guard(F&& f) {
    try {
        f();
        g_error.clear();
        return IMC_OK;
    } catch (const imcdse::UsageError& e) {
        return fail(IMC_ERR_USAGE, e.what());
    } catch (const imcdse::DomainError& e) {
        return fail(IMC_ERR_DOMAIN, e.what());
    } catch (const imcdse::FitError& e) {
        return fail(IMC_ERR_FIT, e.what());
    } catch (const imcdse::NumericError& e) {
        return fail(IMC_ERR_NUMERIC, e.what());
    } catch (const imcdse::IoError& e) {
        return fail(IMC_ERR_IO, e.what());
    } catch (const imcdse::SchemaError& e) {
        return fail(IMC_ERR_SCHEMA, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(IMC_ERR_SCHEMA, e.what());
    } catch (const std::bad_alloc&) {
        return fail(IMC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(IMC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(IMC_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* what) {
    if (!p) throw imcdse::UsageError(std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

nlohmann::json parse(const char* text, const char* what) {
    need(text, what);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw imcdse::SchemaError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

imcdse::CircuitConfig to_cfg(const imc_circuit* c) {
    imcdse::CircuitConfig k;
    k.tau0 = c->tau0_s;
    k.v_dac0 = c->v_dac0_v;
    k.v_dac_fs = c->v_dac_fs_v;
    k.v_dd = c->v_dd_v;
    k.temp = c->t_k;
    k.adc_bits = c->adc_bits;
    return k;
}

} // namespace

extern "C" {

const char* imc_version(void) { return IMCDSE_VERSION; }

const char* imc_last_error(void) { return g_error.c_str(); }

void imc_string_free(char* s) { std::free(s); }

imc_status imc_config_default(char** out_json) {
    return guard([&] {
        need(out_json, "out_json");
        *out_json = dup(imcdse::default_config().dump());
    });
}

imc_status imc_config_merge(const char* base_json, const char* patch_json, char** out_json) {
    return guard([&] {
        need(out_json, "out_json");
        auto merged = imcdse::merge_config(parse(base_json, "base config"), parse(patch_json, "config patch"));
        *out_json = dup(merged.dump());
    });
}

imc_status imc_run_stage(const char* stage, const char* config_json, char** out_json) {
    return guard([&] {
        need(stage, "stage");
        need(out_json, "out_json");
        auto res = imcdse::run_stage(stage, parse(config_json, "config"));
        *out_json = dup(res.dump());
    });
}

imc_status imc_dataset_load(const char* csv_path, imc_dataset** out) {
    return guard([&] {
        need(csv_path, "csv_path");
        need(out, "out");
        *out = new imc_dataset{imcdse::read_dataset(csv_path)};
    });
}

size_t imc_dataset_rows(const imc_dataset* d) { return d ? d->d.rows.size() : 0; }

void imc_dataset_free(imc_dataset* d) { delete d; }

imc_status imc_model_fit(const imc_dataset* train, const imc_dataset* holdout, imc_model** out, char** report_json) {
    return guard([&] {
        need(train, "train");
        need(out, "out");
        imcdse::FitReport r;
        auto m = imcdse::fit_model(train->d, holdout ? &holdout->d : nullptr, r);
        if (report_json) *report_json = dup(r.to_json().dump());
        *out = new imc_model{std::move(m)};
    });
}

imc_status imc_model_load(const char* path, imc_model** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new imc_model{imcdse::load_model(path)};
    });
}

imc_status imc_model_save(const imc_model* m, const char* path) {
    return guard([&] {
        need(m, "model");
        need(path, "path");
        imcdse::save_model(m->m, path);
    });
}

void imc_model_free(imc_model* m) { delete m; }

imc_status imc_model_vbl(const imc_model* m, double t_s, double v_wl_v, double v_dd_v, double t_k, double* out_v) {
    return guard([&] {
        need(m, "model");
        need(out_v, "out_v");
        *out_v = imcdse::eval_vbl(m->m, t_s, v_wl_v, v_dd_v, t_k);
    });
}

imc_status imc_model_sigma(const imc_model* m, double t_s, double v_wl_v, double* out_v) {
    return guard([&] {
        need(m, "model");
        need(out_v, "out_v");
        m->m.check_domain(t_s, v_wl_v, m->m.discharge.v_dd_nom, m->m.discharge.t_nom);
        *out_v = m->m.sigma(t_s, v_wl_v);
    });
}

imc_status imc_circuit_preset(const char* name, imc_circuit* out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        auto c = imcdse::preset_corner(name);
        *out = imc_circuit{c.tau0, c.v_dac0, c.v_dac_fs, c.v_dd, c.temp, c.adc_bits};
    });
}

imc_status imc_multiply(const imc_model* m, const imc_circuit* c, int a, int b, imc_product* out) {
    return guard([&] {
        need(m, "model");
        need(c, "circuit");
        need(out, "out");
        auto cfg = to_cfg(c);
        auto cal = imcdse::calibrate_adc(cfg, m->m);
        auto r = imcdse::multiply(a, b, cfg, m->m, cal, imcdse::Mode::Nominal);
        *out = imc_product{r.code, r.exact, r.dv_comb, r.e_mul, r.e_op};
    });
}

} // extern "C"
