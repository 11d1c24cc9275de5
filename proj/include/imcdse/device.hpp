#pragma once
#include <cstdint>
#include <optional>
#include <vector>

namespace imcdse {

constexpr double kBoltzmannOverQ = 8.617333262e-5; // V/K

struct DeviceParams {
    double v_th0 = 0.30;
    double k_gain = 250e-6;
    double lambda_cl = 0.1;
    double i_sub0 = 0.0; // 0 selects (k_gain/2)(n_sub V_T(t_nom))^2
    double n_sub = 1.5;
    double c_bl = 300e-15;
    double v_dd_nom = 1.2;
    double t_nom = 300.0;
    double alpha_vth = 1e-3;
    double mu_exp = -1.5;
    double sigma_vth = 0.02;
    double sigma_k_rel = 0.04;
    double leak_beta = 5e-4;
    double theta_vsat = 5.0;  // 1/V, velocity saturation of the access device
    double k_pd_ratio = 0.5;  // pull-down gain relative to k_gain; 0 = single device

    void validate() const;
    double isub0_effective() const;
};

struct Mismatch {
    double dvth = 0.0;
    double dk = 0.0;
};

struct DischargeTrace {
    std::vector<double> times;
    std::vector<double> voltages;
    double v_wl = 0, v_dd = 0, temp = 0;
    Mismatch draw;
};

double thermal_voltage(double temp);

// checked single-device drain current
double transistor_current(double v_gs, double v_ds, const DeviceParams& p, double temp);

// bit-line current through the access/pull-down stack at bit-line voltage v_bl
double cell_current(double v_wl, double v_bl, double v_dd, double temp, const DeviceParams& p,
                    const Mismatch& mm = {});

DischargeTrace simulate_discharge(double v_wl, double duration, const DeviceParams& p, double v_dd,
                                  double temp, std::optional<Mismatch> draw = std::nullopt);

// Bit-line voltage at each of the ascending sample times (t >= 0). The step is
// t_back/256 with t_back = last sample time, subdivided so every sample is a node.
std::vector<double> discharge_at(const std::vector<double>& times, double v_wl, const DeviceParams& p,
                                 double v_dd, double temp, const Mismatch& mm = {});

struct OracleEnergy {
    double e_write;
    double e_discharge;
};
OracleEnergy oracle_energies(double delta_v, double v_dd, double temp, const DeviceParams& p);

} // namespace imcdse
