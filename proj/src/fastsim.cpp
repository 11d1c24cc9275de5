#include "imcdse/fastsim.hpp"

#include <algorithm>
#include <cmath>

#include "imcdse/csv.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/parallel.hpp"

namespace imcdse {

void CircuitConfig::validate() const {
    if (!(tau0 > 0) || !std::isfinite(tau0)) throw DomainError("tau0 must be > 0");
    if (!(v_dac0 >= 0)) throw DomainError("v_dac0 must be >= 0");
    if (!(v_dac0 < v_dac_fs)) throw DomainError("v_dac0 must be below v_dac_fs");
    if (!(v_dac_fs <= v_dd)) throw DomainError("v_dac_fs must not exceed v_dd");
    if (adc_bits < 8 || adc_bits > 24) throw DomainError("adc_bits must be in [8, 24]");
}

double dac_voltage(int code, const CircuitConfig& cfg) {
    if (code < 0 || code > 15) throw DomainError("DAC code " + std::to_string(code) + " outside 0..15");
    return cfg.v_dac0 + code * (cfg.v_dac_fs - cfg.v_dac0) / 15.0;
}

double sample_vbl(const Model& m, double t, double v_wl, double v_dd, double temp, Gauss& rng) {
    double v = eval_vbl(m, t, v_wl, v_dd, temp);
    return std::clamp(v + m.sigma(t, v_wl) * rng(), 0.0, v_dd);
}

namespace {

void check_times(const CircuitConfig& cfg, const Model& m) {
    if (cfg.tau0 < m.domain.t_min_fit * (1 - 1e-9))
        throw DomainError("tau0 = " + fmt_num(cfg.tau0) + " s is below the smallest fitted time " +
                          fmt_num(m.domain.t_min_fit) + " s");
    if (!m.domain.t.contains(8 * cfg.tau0))
        throw DomainError("8 tau0 = " + fmt_num(8 * cfg.tau0) + " s exceeds the model time range " +
                          fmt_num(m.domain.t.hi) + " s");
}

// per-code nominal bit-line discharge and sigma, [b][i]
struct Table {
    double dv[16][4];
    double sg[16][4];
    double e_wr;
};

Table build(const CircuitConfig& cfg, const Model& m) {
    cfg.validate();
    check_times(cfg, m);
    m.check_domain(8 * cfg.tau0, cfg.v_dac0, cfg.v_dd, cfg.temp);
    m.check_domain(8 * cfg.tau0, cfg.v_dac_fs, cfg.v_dd, cfg.temp);
    Table t;
    for (int b = 0; b < 16; ++b) {
        double vwl = dac_voltage(b, cfg);
        for (int i = 0; i < 4; ++i) {
            double ti = double(1 << i) * cfg.tau0;
            t.dv[b][i] = std::clamp(cfg.v_dd - m.vbl(ti, vwl, cfg.v_dd, cfg.temp), 0.0, cfg.v_dd);
            t.sg[b][i] = m.sigma(ti, vwl);
        }
    }
    t.e_wr = m.e_write(cfg.v_dd, cfg.temp);
    return t;
}

int quantize(double dv_comb, const AdcCalibration& cal, int bits) {
    double c = std::round(dv_comb / (cal.lsb_volt / 4.0));
    double top = double((1 << bits) - 1);
    return int(std::clamp(c, 0.0, top));
}

} // namespace

AdcCalibration calibrate_adc(const CircuitConfig& cfg, const Model& m) {
    CircuitConfig nom = cfg;
    nom.v_dd = m.discharge.v_dd_nom;
    nom.temp = m.discharge.t_nom;
    Table t = build(nom, m);
    AdcCalibration cal;
    for (int i = 0; i < 4; ++i) cal.dv_fullscale += t.dv[15][i];
    if (!(cal.dv_fullscale > 0)) throw DomainError("calibration point produces no discharge");
    cal.lsb_volt = cal.dv_fullscale / 225.0;
    return cal;
}

MulResult multiply(int a, int b, const CircuitConfig& cfg, const Model& m, const AdcCalibration& cal, Mode mode,
                   Gauss* rng) {
    if (a < 0 || a > 15) throw DomainError("stored word a = " + std::to_string(a) + " outside 0..15");
    if (b < 0 || b > 15) throw DomainError("WL code b = " + std::to_string(b) + " outside 0..15");
    if (mode == Mode::MonteCarlo && !rng) throw UsageError("multiply: Monte-Carlo mode needs an rng");
    if (!(cal.lsb_volt > 0)) throw UsageError("multiply: invalid calibration");
    cfg.validate();
    check_times(cfg, m);
    double vwl = dac_voltage(b, cfg);
    MulResult r;
    r.exact = a * b;
    double sum = 0;
    for (int i = 0; i < 4; ++i) {
        double ti = double(1 << i) * cfg.tau0;
        double z = mode == Mode::MonteCarlo ? (*rng)() : 0.0;
        if (!(a >> i & 1)) continue;
        double v = mode == Mode::MonteCarlo ? std::clamp(eval_vbl(m, ti, vwl, cfg.v_dd, cfg.temp) + m.sigma(ti, vwl) * z, 0.0, cfg.v_dd)
                                            : eval_vbl(m, ti, vwl, cfg.v_dd, cfg.temp);
        double dv = std::clamp(cfg.v_dd - v, 0.0, cfg.v_dd);
        r.dv_per_bit[i] = dv;
        sum += dv;
        r.e_mul += m.e_discharge(dv, cfg.v_dd, cfg.temp);
    }
    r.dv_comb = sum / 4.0;
    r.code = quantize(r.dv_comb, cal, cfg.adc_bits);
    r.err_lsb = r.code - r.exact;
    r.e_op = r.e_mul + 4.0 * m.e_write(cfg.v_dd, cfg.temp);
    return r;
}

std::vector<double> mc_normals(uint64_t seed, uint32_t n) {
    std::vector<double> z(size_t(n) * 4);
    for (uint32_t k = 0; k < n; ++k) {
        Gauss g(mix_seed(seed, k));
        for (int i = 0; i < 4; ++i) z[size_t(k) * 4 + i] = g();
    }
    return z;
}

SweepResult exhaustive_error(const CircuitConfig& cfg, const Model& m, const AdcCalibration& cal, Mode mode,
                             uint32_t n_mc, int jobs) {
    if (!(cal.lsb_volt > 0)) throw UsageError("exhaustive_error: invalid calibration");
    if (mode == Mode::MonteCarlo && n_mc < 2) throw UsageError("Monte-Carlo sweep needs n_mc >= 2");
    Table t = build(cfg, m);
    SweepResult res;
    res.mode = mode;
    res.n_mc = mode == Mode::MonteCarlo ? n_mc : 0;
    res.pairs.resize(256);
    std::vector<double> z;
    if (mode == Mode::MonteCarlo) z = mc_normals(cfg.seed, n_mc);
    double e_wr4 = 4.0 * t.e_wr;

    parallel_for(256, jobs, [&](size_t idx) {
        int a = int(idx / 16), b = int(idx % 16);
        PairStats& p = res.pairs[idx];
        p.a = a;
        p.b = b;
        p.exact = a * b;
        double sum = 0, em = 0;
        for (int i = 0; i < 4; ++i)
            if (a >> i & 1) {
                sum += t.dv[b][i];
                em += m.e_discharge(t.dv[b][i], cfg.v_dd, cfg.temp);
            }
        p.dv_comb = sum / 4.0;
        p.code = quantize(p.dv_comb, cal, cfg.adc_bits);
        p.err_lsb = p.code - p.exact;
        p.e_mul = em;
        p.e_op = em + e_wr4;
        if (mode != Mode::MonteCarlo) return;
        // Welford over draws, fixed order
        double mc = 0, m2c = 0, md = 0, m2d = 0, abs_err = 0, e_acc = 0;
        for (uint32_t k = 0; k < n_mc; ++k) {
            double s = 0, e = 0;
            for (int i = 0; i < 4; ++i) {
                if (!(a >> i & 1)) continue;
                double v = std::clamp(cfg.v_dd - t.dv[b][i] + t.sg[b][i] * z[size_t(k) * 4 + i], 0.0, cfg.v_dd);
                double dv = cfg.v_dd - v;
                s += dv;
                e += m.e_discharge(dv, cfg.v_dd, cfg.temp);
            }
            double comb = s / 4.0;
            int code = quantize(comb, cal, cfg.adc_bits);
            double n = double(k + 1);
            double dc = code - mc;
            mc += dc / n;
            m2c += dc * (code - mc);
            double dd = comb - md;
            md += dd / n;
            m2d += dd * (comb - md);
            abs_err += std::abs(code - p.exact);
            e_acc += e;
        }
        p.mean_code = mc;
        p.sigma_code = std::sqrt(m2c / (n_mc - 1));
        p.mean_dv = md;
        p.sigma_dv = std::sqrt(m2d / (n_mc - 1));
        p.mean_abs_err = abs_err / n_mc;
        p.e_mul = e_acc / n_mc;
        p.e_op = p.e_mul + e_wr4;
    });

    double eps = 0, e = 0, em = 0;
    for (const auto& p : res.pairs) {
        eps += mode == Mode::MonteCarlo ? p.mean_abs_err : std::abs(p.err_lsb);
        e += p.e_op;
        em += p.e_mul;
        if (mode == Mode::MonteCarlo && p.sigma_dv > res.sigma_max) {
            res.sigma_max = p.sigma_dv;
            res.sigma_max_a = p.a;
            res.sigma_max_b = p.b;
        }
    }
    res.eps_mul = eps / 256.0;
    res.e_mul_avg = e / 256.0;
    res.e_mul_only = em / 256.0;
    return res;
}

void write_pairs_csv(const SweepResult& r, const std::string& path) {
    bool mc = r.mode == Mode::MonteCarlo;
    std::string header = "a,b,exact,code,err_lsb,dv_comb_v,e_mul_j,e_op_j";
    if (mc) header += ",mean_code,sigma_code,mean_dv_v,sigma_dv_v";
    CsvWriter w(path, header);
    for (const auto& p : r.pairs) {
        w.col(p.a).col(p.b).col(p.exact).col(p.code).col(p.err_lsb).col(p.dv_comb).col(p.e_mul).col(p.e_op);
        if (mc) w.col(p.mean_code).col(p.sigma_code).col(p.mean_dv).col(p.sigma_dv);
        w.end_row();
    }
    w.close();
}

} // namespace imcdse
