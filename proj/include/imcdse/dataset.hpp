#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "imcdse/device.hpp"

namespace imcdse {

struct GridSpec {
    std::vector<double> t;    // seconds
    std::vector<double> v_wl; // volts
    std::vector<double> v_dd; // volts
    std::vector<double> temp; // kelvin

    static GridSpec defaults();
    // midpoints of every axis; nominal V_DD and T are kept so the base and
    // supply subsets stay populated
    GridSpec holdout(double v_dd_nom, double t_nom) const;
    size_t size() const { return t.size() * v_wl.size() * v_dd.size() * temp.size(); }
};

struct DataRow {
    double t, v_wl, v_dd, temp;
    double dv;
    double sigma_dv; // NaN when not sampled
    double e_wr, e_dc;
};

struct OracleDataset {
    std::vector<DataRow> rows;
    GridSpec grid;
    DeviceParams device;
    uint64_t seed = 0;
    uint32_t mc_samples = 1;

    bool has_sigma() const;
};

// sigma columns are filled at the nominal (V_DD, T) rows only
OracleDataset generate_dataset(const GridSpec& grid, const DeviceParams& p, uint32_t mc_samples, uint64_t seed,
                               int jobs = 1);

// CSV with the fixed header plus "<path>.json" sidecar (grid, device, seed)
void write_dataset(const OracleDataset& d, const std::string& csv_path);
OracleDataset read_dataset(const std::string& csv_path);

extern const char* const kDatasetHeader;

} // namespace imcdse
