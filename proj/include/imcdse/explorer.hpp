#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imcdse/fastsim.hpp"

namespace imcdse {

struct GridSpec3 {
    std::vector<double> tau0, v_dac0, v_dac_fs;

    static GridSpec3 defaults();
    size_t size() const { return tau0.size() * v_dac0.size() * v_dac_fs.size(); }
};

struct CornerMetrics {
    CircuitConfig config;
    double eps_mul = 0;  // LSB, nominal mode
    double e_mul = 0;    // J, mean e_op
    double fom = 0;      // 1/(LSB J); +inf when eps_mul == 0
    double sigma_max = 0; // V
    double eps_mc = 0;   // LSB, mean over Monte-Carlo draws
    bool fom_infinite = false;
};

struct SkippedCorner {
    CircuitConfig config;
    std::string reason;
};

struct SweepOutput {
    std::vector<CornerMetrics> metrics; // descending FOM
    std::vector<SkippedCorner> skipped;
};

double fom_of(double eps_mul, double e_mul);

// base: operating point and seed; corner c uses seed mix_seed(base.seed, c)
SweepOutput sweep_corners(const GridSpec3& grid, const CircuitConfig& base, const Model& m, uint32_t n_mc,
                          int jobs = 1);

struct Selection {
    CornerMetrics fom, power, variation;
};
Selection select_corners(const std::vector<CornerMetrics>& metrics);

struct PvtPoint {
    std::string axis; // "v_dd" or "temp"
    double value = 0;
    double eps_mul = 0;
    double e_mul = 0;
    std::string error; // domain failure, point skipped
};

// calibration stays at the nominal point while the operating point moves
std::vector<PvtPoint> pvt_sweep(const CircuitConfig& corner, const std::vector<double>& v_dd_axis,
                                const std::vector<double>& temp_axis, const Model& m, int jobs = 1);

struct McSummary {
    SweepResult sweep;
    double sigma_model_max = 0; // sigma of dv_comb at (15, 15) propagated from the sigma model
};
McSummary mismatch_mc(const CircuitConfig& corner, uint32_t n, const Model& m, int jobs = 1);

// published corner parameters, used as named presets
CircuitConfig preset_corner(const std::string& name);

} // namespace imcdse
