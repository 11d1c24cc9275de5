#include "imcdse/dnn.hpp"

#include <algorithm>
#include <cmath>

#include "imcdse/csv.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/parallel.hpp"
#include "imcdse/rng.hpp"

namespace imcdse {

namespace {

// position of the true class when classes are ordered by (score desc, index asc)
template <class S>
int rank_of(const std::vector<S>& s, int y) {
    int r = 0;
    for (int c = 0; c < int(s.size()); ++c)
        if (s[c] > s[y] || (s[c] == s[y] && c < y)) ++r;
    return r;
}

int topk_of(const TaskSpec& s) { return std::min(5, s.classes); }

} // namespace

Task make_task(const TaskSpec& spec) {
    if (spec.classes < 2) throw UsageError("task needs at least 2 classes");
    if (spec.dim < 1) throw UsageError("task dimension must be >= 1");
    if (spec.classes > spec.dim) throw UsageError("task: classes must not exceed dimension");
    if (spec.n_train < spec.classes || spec.n_test < 1) throw UsageError("task: too few samples");
    if (!(spec.separation >= 0) || !(spec.density_lo > 0 && spec.density_lo <= 1))
        throw UsageError("task: separation must be >= 0 and density_lo in (0, 1]");
    const int K = spec.classes, D = spec.dim;
    Gauss g(mix_seed(spec.seed, 0));
    std::vector<double> mu(size_t(K) * D, 0.0);
    for (int c = 0; c < K; ++c) {
        double dens = spec.density_lo + (1.0 - spec.density_lo) * c / (K - 1);
        double n2 = 0;
        for (int j = 0; j < D; ++j) {
            double v = std::abs(g());
            if (g.uniform() < dens) mu[size_t(c) * D + j] = v;
            n2 += mu[size_t(c) * D + j] * mu[size_t(c) * D + j];
        }
        if (n2 > 0)
            for (int j = 0; j < D; ++j) mu[size_t(c) * D + j] *= spec.separation / std::sqrt(n2);
    }
    auto sample = [&](Gauss& r, int y, double* x) {
        for (int j = 0; j < D; ++j) x[j] = std::max(0.0, mu[size_t(y) * D + j] + r());
    };

    Task t;
    t.spec = spec;
    // nearest-centroid weights: class means of the training split
    Gauss gt(mix_seed(spec.seed, 1));
    t.weights.assign(size_t(K) * D, 0.0);
    std::vector<int> count(K, 0);
    std::vector<double> x(D);
    for (int i = 0; i < spec.n_train; ++i) {
        int y = int(gt.uniform() * K);
        sample(gt, y, x.data());
        ++count[y];
        for (int j = 0; j < D; ++j) t.weights[size_t(y) * D + j] += x[j];
    }
    for (int c = 0; c < K; ++c)
        for (int j = 0; j < D; ++j) t.weights[size_t(c) * D + j] /= std::max(1, count[c]);

    Gauss gs(mix_seed(spec.seed, 2));
    t.test_x.resize(size_t(spec.n_test) * D);
    t.test_y.resize(spec.n_test);
    int k = topk_of(spec), hit1 = 0, hitk = 0;
    std::vector<double> s(K);
    for (int i = 0; i < spec.n_test; ++i) {
        int y = int(gs.uniform() * K);
        t.test_y[i] = y;
        double* xi = &t.test_x[size_t(i) * D];
        sample(gs, y, xi);
        for (int c = 0; c < K; ++c) {
            s[c] = 0;
            for (int j = 0; j < D; ++j) s[c] += t.weights[size_t(c) * D + j] * xi[j];
        }
        int r = rank_of(s, y);
        hit1 += r == 0;
        hitk += r < k;
    }
    t.real_top1 = double(hit1) / spec.n_test;
    t.real_topk = double(hitk) / spec.n_test;
    return t;
}

Int4Tensor quantize_int4(const std::vector<double>& values) {
    if (values.empty()) throw UsageError("quantize_int4: empty tensor");
    double mx = 0;
    for (double v : values) mx = std::max(mx, std::abs(v));
    Int4Tensor q;
    q.scale = mx > 0 ? mx / 7.0 : 1.0;
    q.codes.reserve(values.size());
    for (double v : values) q.codes.push_back(int(std::clamp(std::round(v / q.scale), -7.0, 7.0)));
    return q;
}

MulBackend MulBackend::exact() {
    MulBackend b;
    for (int a = 0; a < 16; ++a)
        for (int c = 0; c < 16; ++c) b.lut[a * 16 + c] = a * c;
    return b;
}

MulBackend MulBackend::from_lut(const std::string& name, const SweepResult& nominal) {
    if (nominal.pairs.size() != 256) throw UsageError("LUT needs a full 256-pair sweep");
    MulBackend b;
    b.kind = BackendKind::Lut;
    b.name = name;
    for (const auto& p : nominal.pairs) b.lut[p.a * 16 + p.b] = p.code;
    return b;
}

MulBackend MulBackend::stochastic(const std::string& name, const CircuitConfig& cfg, const Model& m, uint64_t seed) {
    MulBackend b;
    b.kind = BackendKind::Stochastic;
    b.name = name;
    b.cfg = cfg;
    b.cal = calibrate_adc(cfg, m);
    b.seed = seed;
    auto nom = exhaustive_error(cfg, m, b.cal, Mode::Nominal);
    for (const auto& p : nom.pairs) b.lut[p.a * 16 + p.b] = p.code;
    for (int c = 0; c < 16; ++c) {
        double vwl = dac_voltage(c, cfg);
        for (int i = 0; i < 4; ++i) {
            double ti = double(1 << i) * cfg.tau0;
            b.dv[c][i] = std::clamp(cfg.v_dd - eval_vbl(m, ti, vwl, cfg.v_dd, cfg.temp), 0.0, cfg.v_dd);
            b.sg[c][i] = m.sigma(ti, vwl);
        }
    }
    return b;
}

static int stochastic_code(int a, int b, const MulBackend& be, uint64_t key) {
    auto z01 = normal_pair(mix_seed(be.seed, key, 0));
    auto z23 = normal_pair(mix_seed(be.seed, key, 1));
    double z[4] = {z01.first, z01.second, z23.first, z23.second};
    double vdd = be.cfg.v_dd, s = 0;
    for (int i = 0; i < 4; ++i) {
        if (!(a >> i & 1)) continue;
        double v = std::clamp(vdd - be.dv[b][i] + be.sg[b][i] * z[i], 0.0, vdd);
        s += vdd - v;
    }
    double c = std::round((s / 4.0) / (be.cal.lsb_volt / 4.0));
    return int(std::clamp(c, 0.0, double((1 << be.cfg.adc_bits) - 1)));
}

long signed_mul(int a, int b, const MulBackend& be, uint64_t key) {
    if (a < -7 || a > 7) throw DomainError("signed_mul: a = " + std::to_string(a) + " outside [-7, 7]");
    if (b < -7 || b > 7) throw DomainError("signed_mul: b = " + std::to_string(b) + " outside [-7, 7]");
    // an input code of 0 still drives V_DAC,0, so only a zero weight is a true zero;
    // the residual of a zero input is added with positive sign
    if (a == 0) return 0;
    int sign = a * b < 0 ? -1 : 1;
    int ua = std::abs(a), ub = std::abs(b);
    int mag = be.kind == BackendKind::Stochastic ? stochastic_code(ua, ub, be, key) : be.lut[ua * 16 + ub];
    return long(sign) * mag;
}

std::vector<Accuracy> infer_and_score(const Task& task, const std::vector<MulBackend>& backends, int jobs) {
    const int K = task.spec.classes, D = task.spec.dim, N = task.spec.n_test;
    if (int(task.test_y.size()) != N || task.weights.size() != size_t(K) * D) throw UsageError("task is incomplete");
    Int4Tensor wq = quantize_int4(task.weights);
    std::vector<int> xq(size_t(N) * D);
    for (int i = 0; i < N; ++i) {
        std::vector<double> x(task.test_x.begin() + size_t(i) * D, task.test_x.begin() + size_t(i + 1) * D);
        auto q = quantize_int4(x);
        std::copy(q.codes.begin(), q.codes.end(), xq.begin() + size_t(i) * D);
    }
    int k = topk_of(task.spec);
    std::vector<Accuracy> out;
    for (const auto& be : backends) {
        std::vector<int> rank(N);
        long table[15][15];
        if (be.kind != BackendKind::Stochastic)
            for (int a = -7; a <= 7; ++a)
                for (int b = -7; b <= 7; ++b) table[a + 7][b + 7] = signed_mul(a, b, be);
        parallel_for(size_t(N), jobs, [&](size_t i) {
            std::vector<long> s(K, 0);
            for (int c = 0; c < K; ++c) {
                long acc = 0;
                for (int j = 0; j < D; ++j) {
                    int a = wq.codes[size_t(c) * D + j], b = xq[i * D + j];
                    acc += be.kind == BackendKind::Stochastic
                               ? signed_mul(a, b, be, (uint64_t(i) * K + c) * D + j)
                               : table[a + 7][b + 7];
                }
                s[c] = acc;
            }
            rank[i] = rank_of(s, task.test_y[i]);
        });
        Accuracy a;
        a.backend = be.name;
        a.k = k;
        for (int r : rank) {
            a.top1 += r == 0;
            a.topk += r < k;
        }
        a.top1 /= N;
        a.topk /= N;
        out.push_back(a);
    }
    return out;
}

void write_lut_csv(const MulBackend& be, const std::string& path) {
    CsvWriter w(path, "a,b,expected_code");
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            w.col(a).col(b).col(be.lut[a * 16 + b]);
            w.end_row();
        }
    w.close();
}

void write_accuracy_csv(const std::vector<Accuracy>& acc, const std::string& path) {
    int k = acc.empty() ? 5 : acc.front().k;
    CsvWriter w(path, "backend,top1,top" + std::to_string(k));
    for (const auto& a : acc) {
        w.col(a.backend).col(a.top1).col(a.topk);
        w.end_row();
    }
    w.close();
}

} // namespace imcdse
