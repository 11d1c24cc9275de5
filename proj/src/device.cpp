#include "imcdse/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "imcdse/errors.hpp"

namespace imcdse {
namespace {

// value plus derivative along one direction
struct Dual {
    double v, d;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual dexp(Dual a) { double e = std::exp(a.v); return {e, e * a.d}; }
inline Dual dsqrt(Dual a) { double s = std::sqrt(a.v); return {s, s > 0 ? 0.5 * a.d / s : 0.0}; }
inline double val(double x) { return x; }
inline double val(Dual x) { return x.v; }
inline double dexp(double a) { return std::exp(a); }
inline double dsqrt(double a) { return std::sqrt(a); }
template <class S> S cst(double x) { if constexpr (std::is_same_v<S, Dual>) return Dual{x, 0.0}; else return x; }

// temperature-resolved device constants
struct Ctx {
    double vth, k, theta, lam, vt, nvt, isub0;
};

Ctx make_ctx(const DeviceParams& p, double temp, double kscale, const Mismatch& mm) {
    double kf = std::pow(temp / p.t_nom, p.mu_exp);
    Ctx c;
    c.vth = p.v_th0 - p.alpha_vth * (temp - p.t_nom) + mm.dvth;
    c.k = p.k_gain * kscale * kf * (1.0 + mm.dk);
    c.theta = p.theta_vsat * kf;
    c.lam = p.lambda_cl;
    c.vt = thermal_voltage(temp);
    c.nvt = p.n_sub * c.vt;
    c.isub0 = p.isub0_effective() * kscale;
    return c;
}

template <class S>
S channel(const Ctx& c, S vgs, S vds) {
    S vod = vgs + (-c.vth);
    S drain = cst<S>(1.0) - dexp((-1.0 / c.vt) * vds);
    if (val(vod) <= 0) return c.isub0 * dexp((1.0 / c.nvt) * vod) * drain;
    S sub = c.isub0 * drain;
    // saturation voltage of k(vod v - v^2/2)/(1 + theta v), written without cancellation
    S vsat = (2.0 * vod) / (dsqrt(cst<S>(1.0) + (2.0 * c.theta) * vod) + 1.0);
    S v = val(vds) < val(vsat) ? vds : vsat;
    S f = c.k * (vod * v - 0.5 * (v * v)) / (cst<S>(1.0) + c.theta * v);
    return f * (cst<S>(1.0) + c.lam * vds) + sub;
}

struct Stack {
    Ctx acc, pd;
    bool series;
};

Stack make_stack(const DeviceParams& p, double temp, const Mismatch& mm) {
    Stack s;
    s.acc = make_ctx(p, temp, 1.0, mm);
    s.series = p.k_pd_ratio > 0;
    // one draw per discharge path: both devices of the stack share it
    if (s.series) s.pd = make_ctx(p, temp, p.k_pd_ratio, mm);
    return s;
}

// current into the stack; x is the internal node guess, updated in place
double stack_current(const Stack& s, double v_wl, double v_bl, double v_dd, double& x) {
    if (v_bl <= 0) { x = 0; return 0.0; }
    if (!s.series) return channel(s.acc, v_wl, v_bl);
    double lo = 0.0, hi = v_bl;
    if (!(x > lo && x < hi)) x = 0.0;
    for (int it = 0; it < 80; ++it) {
        Dual xd{x, 1.0};
        Dual f = channel(s.acc, Dual{v_wl, 0} - xd, Dual{v_bl, 0} - xd) - channel(s.pd, Dual{v_dd, 0}, xd);
        if (f.v > 0) lo = x; else hi = x;
        if (f.v == 0) break;
        double nx = f.d < 0 ? x - f.v / f.d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        double dx = std::fabs(nx - x);
        x = nx;
        if (dx <= 1e-15 + 1e-12 * x || hi - lo < 1e-15) break;
    }
    return channel(s.pd, v_dd, x);
}

void check_range(const char* name, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi))
        throw DomainError(std::string(name) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
}

struct Integrator {
    Stack s;
    double v_wl, v_dd, c;
    double x = 0.0;
    double rate(double v) { return -stack_current(s, v_wl, v, v_dd, x) / c; }
    double step(double v, double h) {
        double k1 = rate(v);
        double k2 = rate(v + 0.5 * h * k1);
        double k3 = rate(v + 0.5 * h * k2);
        double k4 = rate(v + h * k3);
        double nv = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!std::isfinite(nv)) throw NumericError("non-finite bit-line voltage in discharge integration");
        return std::clamp(nv, 0.0, std::min(v, v_dd));
    }
};

// the word line is driven by the DAC, so it may sit above a lowered V_DD
void check_op(double v_wl, double v_dd, double temp, const DeviceParams& p) {
    check_range("v_dd", v_dd, 0.0, 2 * p.v_dd_nom);
    check_range("v_wl", v_wl, 0.0, 2 * p.v_dd_nom);
    check_range("temp", temp, 233.0, 398.0);
}

} // namespace

void DeviceParams::validate() const {
    auto pos = [](const char* n, double v) {
        if (!(v > 0) || !std::isfinite(v)) throw DomainError(std::string(n) + " must be positive");
    };
    auto nonneg = [](const char* n, double v) {
        if (!(v >= 0) || !std::isfinite(v)) throw DomainError(std::string(n) + " must be non-negative");
    };
    pos("k_gain", k_gain);
    pos("c_bl", c_bl);
    pos("v_dd_nom", v_dd_nom);
    pos("t_nom", t_nom);
    nonneg("lambda_cl", lambda_cl);
    nonneg("i_sub0", i_sub0);
    nonneg("sigma_vth", sigma_vth);
    nonneg("sigma_k_rel", sigma_k_rel);
    nonneg("theta_vsat", theta_vsat);
    nonneg("k_pd_ratio", k_pd_ratio);
    if (!std::isfinite(alpha_vth) || !std::isfinite(mu_exp) || !std::isfinite(leak_beta))
        throw DomainError("temperature coefficients must be finite");
    if (!(n_sub >= 1)) throw DomainError("n_sub must be >= 1");
    if (!(v_th0 < v_dd_nom)) throw DomainError("v_th0 must be below v_dd_nom");
}

double DeviceParams::isub0_effective() const {
    if (i_sub0 > 0) return i_sub0;
    double nvt = n_sub * thermal_voltage(t_nom);
    return 0.5 * k_gain * nvt * nvt;
}

double thermal_voltage(double temp) { return kBoltzmannOverQ * temp; }

double transistor_current(double v_gs, double v_ds, const DeviceParams& p, double temp) {
    check_range("v_gs", v_gs, 0.0, 2 * p.v_dd_nom);
    check_range("v_ds", v_ds, 0.0, 2 * p.v_dd_nom);
    check_range("temp", temp, 233.0, 398.0);
    return channel(make_ctx(p, temp, 1.0, Mismatch{}), v_gs, v_ds);
}

double cell_current(double v_wl, double v_bl, double v_dd, double temp, const DeviceParams& p,
                    const Mismatch& mm) {
    check_op(v_wl, v_dd, temp, p);
    check_range("v_bl", v_bl, 0.0, v_dd);
    Stack s = make_stack(p, temp, mm);
    double x = 0.0;
    return stack_current(s, v_wl, v_bl, v_dd, x);
}

DischargeTrace simulate_discharge(double v_wl, double duration, const DeviceParams& p, double v_dd,
                                  double temp, std::optional<Mismatch> draw) {
    check_op(v_wl, v_dd, temp, p);
    if (!(duration >= 0) || !std::isfinite(duration)) throw DomainError("duration must be >= 0");
    DischargeTrace tr;
    tr.v_wl = v_wl;
    tr.v_dd = v_dd;
    tr.temp = temp;
    tr.draw = draw.value_or(Mismatch{});
    tr.times.push_back(0.0);
    tr.voltages.push_back(v_dd);
    if (duration == 0) return tr;
    const int n = 256;
    double h = duration / n;
    Integrator in{make_stack(p, temp, tr.draw), v_wl, v_dd, p.c_bl};
    double v = v_dd;
    for (int i = 1; i <= n; ++i) {
        v = in.step(v, h);
        tr.times.push_back(i == n ? duration : i * h);
        tr.voltages.push_back(v);
    }
    return tr;
}

std::vector<double> discharge_at(const std::vector<double>& times, double v_wl, const DeviceParams& p,
                                 double v_dd, double temp, const Mismatch& mm) {
    check_op(v_wl, v_dd, temp, p);
    std::vector<double> out(times.size(), v_dd);
    if (times.empty()) return out;
    double t_end = times.back();
    if (!(times.front() >= 0)) throw DomainError("sample times must be >= 0");
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] >= times[i - 1])) throw DomainError("sample times must be ascending");
    if (t_end == 0) return out;
    double h_target = t_end / 256;
    Integrator in{make_stack(p, temp, mm), v_wl, v_dd, p.c_bl};
    double v = v_dd, t = 0.0;
    for (size_t i = 0; i < times.size(); ++i) {
        double span = times[i] - t;
        if (span > 0) {
            int n = std::max(1, int(std::ceil(span / h_target - 1e-9)));
            double h = span / n;
            for (int j = 0; j < n; ++j) v = in.step(v, h);
            t = times[i];
        }
        out[i] = v;
    }
    return out;
}

OracleEnergy oracle_energies(double delta_v, double v_dd, double temp, const DeviceParams& p) {
    if (!(delta_v >= 0)) throw DomainError("delta_v must be >= 0");
    if (delta_v > v_dd) throw DomainError("delta_v exceeds v_dd");
    double f = 1.0 + p.leak_beta * (temp - p.t_nom);
    return {p.c_bl * v_dd * v_dd * f, p.c_bl * v_dd * delta_v * f};
}

} // namespace imcdse
