#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "imcdse/model.hpp"
#include "imcdse/rng.hpp"

namespace imcdse {

struct CircuitConfig {
    double tau0 = 0.16e-9;
    double v_dac0 = 0.3;
    double v_dac_fs = 1.0;
    double v_dd = 1.2;
    double temp = 300.0;
    int adc_bits = 8;
    uint64_t seed = 0;

    void validate() const;
};

struct AdcCalibration {
    double dv_fullscale = 0; // summed bit-line discharge at a = b = 15, nominal, no mismatch
    double lsb_volt = 0;     // dv_fullscale / 225
};

enum class Mode { Nominal, MonteCarlo };

struct MulResult {
    int code = 0;
    double dv_comb = 0;
    std::array<double, 4> dv_per_bit{};
    double e_mul = 0, e_op = 0;
    int exact = 0;
    int err_lsb = 0;
};

double dac_voltage(int code, const CircuitConfig& cfg);

// model plus N(0, sigma) draw, clamped to [0, v_dd]
double sample_vbl(const Model& m, double t, double v_wl, double v_dd, double temp, Gauss& rng);

// calibration always uses the model's nominal V_DD and T
AdcCalibration calibrate_adc(const CircuitConfig& cfg, const Model& m);

// rng is used in MonteCarlo mode only; four normals are consumed per call
MulResult multiply(int a, int b, const CircuitConfig& cfg, const Model& m, const AdcCalibration& cal, Mode mode,
                   Gauss* rng = nullptr);

struct PairStats {
    int a = 0, b = 0, exact = 0;
    int code = 0, err_lsb = 0; // nominal evaluation
    double dv_comb = 0, e_mul = 0, e_op = 0;
    // Monte-Carlo columns, filled when n_mc > 0
    double mean_code = 0, sigma_code = 0, mean_dv = 0, sigma_dv = 0, mean_abs_err = 0;
};

struct SweepResult {
    double eps_mul = 0;   // LSB; mean |code - a b| (over draws too in mc mode)
    double e_mul_avg = 0; // J, mean e_op over pairs
    double e_mul_only = 0; // J, mean e_mul over pairs
    double sigma_max = 0; // V, largest sigma of dv_comb over pairs (mc mode)
    int sigma_max_a = 0, sigma_max_b = 0;
    Mode mode = Mode::Nominal;
    uint32_t n_mc = 0;
    std::vector<PairStats> pairs; // index a*16 + b
};

// Draw k of bit-line i uses the same normal for every (a, b) pair, so pair
// statistics are compared on common random numbers.
SweepResult exhaustive_error(const CircuitConfig& cfg, const Model& m, const AdcCalibration& cal, Mode mode,
                             uint32_t n_mc = 0, int jobs = 1);

void write_pairs_csv(const SweepResult& r, const std::string& path);

// draw normals for Monte-Carlo mode: z[k*4 + i]
std::vector<double> mc_normals(uint64_t seed, uint32_t n);

} // namespace imcdse
