#include "imcdse/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "imcdse/config.hpp"
#include "imcdse/csv.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/parallel.hpp"
#include "imcdse/rng.hpp"

namespace imcdse {

const char* const kDatasetHeader = "t_s,v_wl_v,v_dd_v,t_k,dv_v,sigma_dv_v,e_wr_j,e_dc_j";

namespace {

constexpr uint32_t kDrawBlock = 512;

void check_axis(const std::vector<double>& a, const char* name) {
    if (a.empty()) throw UsageError(std::string("grid axis ") + name + " is empty");
    for (size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i])) throw UsageError(std::string("grid axis ") + name + " has a non-finite value");
        if (i && !(a[i] > a[i - 1])) throw UsageError(std::string("grid axis ") + name + " must be strictly ascending");
    }
}

std::vector<double> midpoints(const std::vector<double>& a) {
    if (a.size() < 2) return a;
    std::vector<double> m;
    for (size_t i = 1; i < a.size(); ++i) m.push_back(0.5 * (a[i - 1] + a[i]));
    return m;
}

std::vector<double> with_value(std::vector<double> a, double v) {
    if (std::find(a.begin(), a.end(), v) == a.end()) {
        a.push_back(v);
        std::sort(a.begin(), a.end());
    }
    return a;
}

long index_of(const std::vector<double>& a, double v) {
    auto it = std::find(a.begin(), a.end(), v);
    return it == a.end() ? -1 : long(it - a.begin());
}

struct Moments {
    std::vector<double> mean, m2;
    double n = 0;
};

// Chan et al. pairwise combination of block moments
void merge(Moments& acc, const Moments& b) {
    if (b.n == 0) return;
    if (acc.n == 0) { acc = b; return; }
    double n = acc.n + b.n;
    for (size_t i = 0; i < acc.mean.size(); ++i) {
        double d = b.mean[i] - acc.mean[i];
        acc.mean[i] += d * b.n / n;
        acc.m2[i] += b.m2[i] + d * d * acc.n * b.n / n;
    }
    acc.n = n;
}

} // namespace

GridSpec GridSpec::defaults() {
    GridSpec g;
    for (int i = 1; i <= 128; ++i) g.t.push_back(i * 0.02e-9);
    for (int i = 0; i <= 18; ++i) g.v_wl.push_back(0.30 + 0.05 * i);
    g.v_dd = {1.08, 1.14, 1.20, 1.26, 1.32};
    g.temp = {253.0, 300.0, 358.0};
    return g;
}

GridSpec GridSpec::holdout(double v_dd_nom, double t_nom) const {
    GridSpec h;
    h.t = midpoints(t);
    h.v_wl = midpoints(v_wl);
    h.v_dd = with_value(midpoints(v_dd), v_dd_nom);
    h.temp = with_value(midpoints(temp), t_nom);
    return h;
}

bool OracleDataset::has_sigma() const {
    for (const auto& r : rows)
        if (!std::isnan(r.sigma_dv)) return true;
    return false;
}

OracleDataset generate_dataset(const GridSpec& grid, const DeviceParams& p, uint32_t mc_samples, uint64_t seed,
                               int jobs) {
    p.validate();
    check_axis(grid.t, "t");
    check_axis(grid.v_wl, "v_wl");
    check_axis(grid.v_dd, "v_dd");
    check_axis(grid.temp, "temp");
    if (grid.t.front() < 0) throw UsageError("grid axis t must be >= 0");
    if (mc_samples == 0) throw UsageError("mc_samples must be >= 1");

    OracleDataset d;
    d.grid = grid;
    d.device = p;
    d.seed = seed;
    d.mc_samples = mc_samples;
    const size_t nt = grid.t.size(), nw = grid.v_wl.size(), nv = grid.v_dd.size(), nT = grid.temp.size();
    d.rows.resize(grid.size());

    // one trajectory per (T, V_DD, V_WL); row order is T, V_DD, V_WL, t (t fastest)
    parallel_for(nT * nv * nw, jobs, [&](size_t c) {
        size_t iw = c % nw, iv = (c / nw) % nv, iT = c / (nw * nv);
        double vwl = grid.v_wl[iw], vdd = grid.v_dd[iv], T = grid.temp[iT];
        auto v = discharge_at(grid.t, vwl, p, vdd, T);
        for (size_t it = 0; it < nt; ++it) {
            double dv = std::clamp(vdd - v[it], 0.0, vdd);
            auto e = oracle_energies(dv, vdd, T, p);
            d.rows[c * nt + it] = DataRow{grid.t[it], vwl, vdd, T, dv, std::nan(""), e.e_write, e.e_discharge};
        }
    });

    long iv0 = index_of(grid.v_dd, p.v_dd_nom), iT0 = index_of(grid.temp, p.t_nom);
    if (mc_samples > 1 && iv0 >= 0 && iT0 >= 0) {
        uint32_t nblocks = (mc_samples + kDrawBlock - 1) / kDrawBlock;
        std::vector<Moments> blocks(nw * nblocks);
        parallel_for(blocks.size(), jobs, [&](size_t job) {
            size_t iw = job / nblocks, blk = job % nblocks;
            uint32_t k0 = uint32_t(blk) * kDrawBlock, k1 = std::min(mc_samples, k0 + kDrawBlock);
            Moments m;
            m.mean.assign(nt, 0.0);
            m.m2.assign(nt, 0.0);
            for (uint32_t k = k0; k < k1; ++k) {
                Gauss g(mix_seed(seed, iw, k));
                Mismatch mm{p.sigma_vth * g(), p.sigma_k_rel * g()};
                auto v = discharge_at(grid.t, grid.v_wl[iw], p, p.v_dd_nom, p.t_nom, mm);
                m.n += 1;
                for (size_t it = 0; it < nt; ++it) {
                    double x = p.v_dd_nom - v[it];
                    double dx = x - m.mean[it];
                    m.mean[it] += dx / m.n;
                    m.m2[it] += dx * (x - m.mean[it]);
                }
            }
            blocks[job] = std::move(m);
        });
        for (size_t iw = 0; iw < nw; ++iw) {
            Moments acc;
            for (uint32_t b = 0; b < nblocks; ++b) merge(acc, blocks[iw * nblocks + b]);
            size_t c = (size_t(iT0) * nv + size_t(iv0)) * nw + iw;
            for (size_t it = 0; it < nt; ++it) d.rows[c * nt + it].sigma_dv = std::sqrt(acc.m2[it] / (acc.n - 1));
        }
    }
    return d;
}

void write_dataset(const OracleDataset& d, const std::string& csv_path) {
    CsvWriter w(csv_path, kDatasetHeader);
    for (const auto& r : d.rows) {
        w.col(r.t).col(r.v_wl).col(r.v_dd).col(r.temp).col(r.dv).col(r.sigma_dv).col(r.e_wr).col(r.e_dc);
        w.end_row();
    }
    w.close();
    json side = {{"schema", "imcdse.dataset"},
                 {"version", 1},
                 {"header", kDatasetHeader},
                 {"rows", d.rows.size()},
                 {"grid", d.grid},
                 {"device", d.device},
                 {"seed", d.seed},
                 {"mc_samples", d.mc_samples},
                 {"sigma_rows", "nominal v_dd and t"}};
    write_text(csv_path + ".json", side.dump(2) + "\n");
}

OracleDataset read_dataset(const std::string& csv_path) {
    CsvTable t = read_csv(csv_path);
    std::string header;
    for (size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
    if (header != kDatasetHeader)
        throw SchemaError(csv_path + ": unexpected header, expected " + std::string(kDatasetHeader));
    json side;
    try {
        side = json::parse(read_text(csv_path + ".json"));
    } catch (const json::exception& e) {
        throw SchemaError(csv_path + ".json: " + e.what());
    }
    if (side.value("schema", "") != "imcdse.dataset" || side.value("version", 0) != 1)
        throw SchemaError(csv_path + ".json: expected schema imcdse.dataset version 1");
    OracleDataset d;
    from_json(side.at("grid"), d.grid);
    d.device = device_from(side.at("device"));
    d.seed = side.at("seed").get<uint64_t>();
    d.mc_samples = side.at("mc_samples").get<uint32_t>();
    d.rows.reserve(t.rows.size());
    for (size_t r = 0; r < t.rows.size(); ++r)
        d.rows.push_back(DataRow{t.num(r, 0), t.num(r, 1), t.num(r, 2), t.num(r, 3), t.num(r, 4), t.num(r, 5),
                                 t.num(r, 6), t.num(r, 7)});
    return d;
}

} // namespace imcdse
