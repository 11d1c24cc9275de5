#ifndef IMCDSE_H
#define IMCDSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define IMC_API __declspec(dllexport)
#else
#define IMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum imc_status {
    IMC_OK = 0,
    IMC_ERR_USAGE = 1,   /* bad argument, unknown key, missing input */
    IMC_ERR_DOMAIN = 2,  /* operating point outside the model or device domain */
    IMC_ERR_FIT = 3,
    IMC_ERR_NUMERIC = 4,
    IMC_ERR_IO = 5,
    IMC_ERR_SCHEMA = 6,  /* malformed or version-mismatched file or config */
    IMC_ERR_INTERNAL = 7
} imc_status;

typedef struct imc_model imc_model;
typedef struct imc_dataset imc_dataset;

typedef struct imc_circuit {
    double tau0_s;
    double v_dac0_v;
    double v_dac_fs_v;
    double v_dd_v;
    double t_k;
    int adc_bits;
} imc_circuit;

typedef struct imc_product {
    int code;
    int exact;
    double dv_comb_v;
    double e_mul_j; /* discharge energy of the active bit lines */
    double e_op_j;  /* e_mul_j plus the four writes */
} imc_product;

IMC_API const char* imc_version(void);

/* Message of the last failed call on this thread; empty after a success. */
IMC_API const char* imc_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
IMC_API void imc_string_free(char* s);

/* Configuration documents are JSON text. */
IMC_API imc_status imc_config_default(char** out_json);
IMC_API imc_status imc_config_merge(const char* base_json, const char* patch_json, char** out_json);

/* Runs one pipeline stage ("oracle-gen", "fit", "eval", "explore", "pvt",
   "mc", "dnn", "bench", "report") with a resolved config. The result JSON
   lists inputs, outputs, seeds, a summary and timings. */
IMC_API imc_status imc_run_stage(const char* stage, const char* config_json, char** out_json);

IMC_API imc_status imc_dataset_load(const char* csv_path, imc_dataset** out);
IMC_API size_t imc_dataset_rows(const imc_dataset* d);
IMC_API void imc_dataset_free(imc_dataset* d);

IMC_API imc_status imc_model_fit(const imc_dataset* train, const imc_dataset* holdout, imc_model** out,
                                 char** report_json);
IMC_API imc_status imc_model_load(const char* path, imc_model** out);
IMC_API imc_status imc_model_save(const imc_model* m, const char* path);
IMC_API void imc_model_free(imc_model* m);

/* Bit-line voltage after a pulse of length t_s; IMC_ERR_DOMAIN outside the fitted domain. */
IMC_API imc_status imc_model_vbl(const imc_model* m, double t_s, double v_wl_v, double v_dd_v, double t_k,
                                 double* out_v);
IMC_API imc_status imc_model_sigma(const imc_model* m, double t_s, double v_wl_v, double* out_v);

IMC_API imc_status imc_circuit_preset(const char* name, imc_circuit* out);

/* Nominal 4x4-bit product; ADC calibrated at the model's nominal supply and temperature. */
IMC_API imc_status imc_multiply(const imc_model* m, const imc_circuit* c, int a, int b, imc_product* out);

#ifdef __cplusplus
}
#endif

#endif
