#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "imcdse/dataset.hpp"
#include "imcdse/model.hpp"

namespace imcdse {

struct ErrorStat {
    double rms = 0, max_abs = 0;
    size_t rows = 0;
};

struct FitReport {
    // training and holdout stats; voltages in mV, energies in fJ
    ErrorStat base, supply, temperature, sigma, write, discharge;
    ErrorStat h_base, h_supply, h_temperature, h_sigma, h_write, h_discharge;
    bool has_holdout = false;
    int it_base = 0, it_sigma = 0, it_write = 0, it_discharge = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct BaseFit {
    PolyCoeffs vod, time;
    std::vector<double> objective;
    int iterations = 0;
};

struct SigmaFit {
    PolyCoeffs time, vwl;
    std::vector<double> objective;
    int iterations = 0;
};

BaseFit fit_discharge_base(const OracleDataset& d, double v_th);
PolyCoeffs fit_supply(const OracleDataset& d, const DischargeModel& base, std::vector<std::string>* warnings = nullptr);
PolyCoeffs fit_temperature(const OracleDataset& d, const DischargeModel& base_plus_supply);
SigmaFit fit_mismatch_sigma(const OracleDataset& d);
EnergyModel fit_energy(const OracleDataset& d, int* it_write = nullptr, int* it_discharge = nullptr);

// full pipeline: fit on train, score on train and optional holdout
Model fit_model(const OracleDataset& train, const OracleDataset* holdout, FitReport& report);

// per-model stats of a fitted model on a dataset (holdout must lie in the domain)
void score(const Model& m, const OracleDataset& d, ErrorStat& base, ErrorStat& supply, ErrorStat& temperature,
           ErrorStat& sigma, ErrorStat& write, ErrorStat& discharge);
FitReport rms_report(const Model& m, const OracleDataset& holdout);

} // namespace imcdse
