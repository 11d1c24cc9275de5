#include "imcdse/explorer.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "imcdse/errors.hpp"
#include "imcdse/parallel.hpp"

namespace imcdse {

GridSpec3 GridSpec3::defaults() {
    return {{0.16e-9, 0.20e-9, 0.24e-9, 0.28e-9}, {0.30, 0.35, 0.40}, {0.70, 0.80, 0.90, 1.00}};
}

double fom_of(double eps_mul, double e_mul) {
    if (eps_mul == 0) return std::numeric_limits<double>::infinity();
    return 1.0 / (eps_mul * e_mul);
}

SweepOutput sweep_corners(const GridSpec3& grid, const CircuitConfig& base, const Model& m, uint32_t n_mc, int jobs) {
    if (grid.size() == 0) throw UsageError("corner grid is empty");
    if (n_mc < 2) throw UsageError("sweep needs n_mc >= 2 for sigma_max");
    const size_t n = grid.size();
    std::vector<std::optional<CornerMetrics>> out(n);
    std::vector<std::string> why(n);
    parallel_for(n, jobs, [&](size_t c) {
        size_t k = c % grid.v_dac_fs.size();
        size_t j = (c / grid.v_dac_fs.size()) % grid.v_dac0.size();
        size_t i = c / (grid.v_dac_fs.size() * grid.v_dac0.size());
        CircuitConfig cfg = base;
        cfg.tau0 = grid.tau0[i];
        cfg.v_dac0 = grid.v_dac0[j];
        cfg.v_dac_fs = grid.v_dac_fs[k];
        cfg.seed = mix_seed(base.seed, c);
        try {
            auto cal = calibrate_adc(cfg, m);
            auto nom = exhaustive_error(cfg, m, cal, Mode::Nominal);
            auto mc = exhaustive_error(cfg, m, cal, Mode::MonteCarlo, n_mc);
            CornerMetrics cm;
            cm.config = cfg;
            cm.eps_mul = nom.eps_mul;
            cm.e_mul = nom.e_mul_avg;
            cm.fom = fom_of(cm.eps_mul, cm.e_mul);
            cm.fom_infinite = std::isinf(cm.fom);
            cm.sigma_max = mc.sigma_max;
            cm.eps_mc = mc.eps_mul;
            out[c] = cm;
        } catch (const DomainError& e) {
            why[c] = e.what();
        }
    });
    SweepOutput res;
    for (size_t c = 0; c < n; ++c) {
        if (out[c]) {
            res.metrics.push_back(*out[c]);
        } else {
            CircuitConfig cfg = base;
            cfg.tau0 = grid.tau0[c / (grid.v_dac_fs.size() * grid.v_dac0.size())];
            cfg.v_dac0 = grid.v_dac0[(c / grid.v_dac_fs.size()) % grid.v_dac0.size()];
            cfg.v_dac_fs = grid.v_dac_fs[c % grid.v_dac_fs.size()];
            res.skipped.push_back({cfg, why[c]});
        }
    }
    std::stable_sort(res.metrics.begin(), res.metrics.end(), [](const CornerMetrics& x, const CornerMetrics& y) {
        if (x.fom != y.fom) return x.fom > y.fom;
        return std::tie(x.e_mul, x.config.tau0, x.config.v_dac_fs) < std::tie(y.e_mul, y.config.tau0, y.config.v_dac_fs);
    });
    return res;
}

Selection select_corners(const std::vector<CornerMetrics>& metrics) {
    if (metrics.empty()) throw UsageError("select_corners: no metrics");
    auto tie = [](const CornerMetrics& c) { return std::make_tuple(c.e_mul, c.config.tau0, c.config.v_dac_fs); };
    const CornerMetrics *f = &metrics[0], *p = &metrics[0], *v = &metrics[0];
    for (const auto& c : metrics) {
        if (c.fom > f->fom || (c.fom == f->fom && tie(c) < tie(*f))) f = &c;
        if (c.e_mul < p->e_mul || (c.e_mul == p->e_mul && tie(c) < tie(*p))) p = &c;
        if (c.sigma_max < v->sigma_max || (c.sigma_max == v->sigma_max && tie(c) < tie(*v))) v = &c;
    }
    return {*f, *p, *v};
}

std::vector<PvtPoint> pvt_sweep(const CircuitConfig& corner, const std::vector<double>& v_dd_axis,
                                const std::vector<double>& temp_axis, const Model& m, int jobs) {
    auto cal = calibrate_adc(corner, m);
    std::vector<PvtPoint> pts;
    for (double v : v_dd_axis) pts.push_back({"v_dd", v, 0, 0, ""});
    for (double t : temp_axis) pts.push_back({"temp", t, 0, 0, ""});
    parallel_for(pts.size(), jobs, [&](size_t i) {
        CircuitConfig cfg = corner;
        cfg.v_dd = m.discharge.v_dd_nom;
        cfg.temp = m.discharge.t_nom;
        if (pts[i].axis == "v_dd") cfg.v_dd = pts[i].value;
        else cfg.temp = pts[i].value;
        try {
            auto r = exhaustive_error(cfg, m, cal, Mode::Nominal);
            pts[i].eps_mul = r.eps_mul;
            pts[i].e_mul = r.e_mul_avg;
        } catch (const DomainError& e) {
            pts[i].error = e.what();
            pts[i].eps_mul = std::nan("");
            pts[i].e_mul = std::nan("");
        }
    });
    return pts;
}

McSummary mismatch_mc(const CircuitConfig& corner, uint32_t n, const Model& m, int jobs) {
    if (n < 2) throw UsageError("mismatch_mc needs n >= 2");
    auto cal = calibrate_adc(corner, m);
    McSummary s;
    s.sweep = exhaustive_error(corner, m, cal, Mode::MonteCarlo, n, jobs);
    double vfs = dac_voltage(15, corner), var = 0;
    for (int i = 0; i < 4; ++i) {
        double sg = m.sigma(double(1 << i) * corner.tau0, vfs);
        var += sg * sg;
    }
    s.sigma_model_max = std::sqrt(var) / 4.0;
    return s;
}

CircuitConfig preset_corner(const std::string& name) {
    CircuitConfig c;
    if (name == "fom") {
        c.tau0 = 0.16e-9; c.v_dac0 = 0.3; c.v_dac_fs = 1.0;
    } else if (name == "power") {
        c.tau0 = 0.16e-9; c.v_dac0 = 0.3; c.v_dac_fs = 0.7;
    } else if (name == "variation") {
        c.tau0 = 0.24e-9; c.v_dac0 = 0.4; c.v_dac_fs = 1.0;
    } else {
        throw UsageError("unknown corner '" + name + "' (expected fom, power or variation)");
    }
    return c;
}

} // namespace imcdse
