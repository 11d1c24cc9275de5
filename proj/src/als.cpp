#include "imcdse/als.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "imcdse/errors.hpp"

namespace imcdse {
namespace {

double sse(const std::vector<AlsFactor>& f, const std::vector<PolyCoeffs>& p, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t r = 0; r < y.size(); ++r) {
        double v = 1.0;
        for (size_t k = 0; k < f.size(); ++k) v *= p[k](f[k].x[r]);
        double e = y[r] - v;
        s += e * e;
    }
    return s;
}

PolyCoeffs initial(const AlsFactor& f) {
    PolyCoeffs p = PolyCoeffs::zeros(f.degree);
    if (f.pinned_const) {
        p.c[0] = *f.pinned_const;
        if (*f.pinned_const == 0.0 && f.degree >= 1) p.c[1] = 1.0;
    } else {
        p.c[0] = 1.0;
    }
    return p;
}

void solve_factor(const std::vector<AlsFactor>& f, std::vector<PolyCoeffs>& p, size_t k, const std::vector<double>& y) {
    const AlsFactor& fk = f[k];
    size_t first = fk.pinned_const ? 1 : 0;
    size_t cols = size_t(fk.degree) + 1 - first;
    if (cols == 0) return;
    size_t rows = y.size();
    std::vector<double> a(rows * cols), rhs(rows);
    for (size_t r = 0; r < rows; ++r) {
        double other = 1.0;
        for (size_t m = 0; m < f.size(); ++m)
            if (m != k) other *= p[m](f[m].x[r]);
        double x = fk.x[r], xp = 1.0;
        for (size_t j = 0; j < first; ++j) xp *= x;
        for (size_t j = 0; j < cols; ++j) {
            a[r * cols + j] = xp * other;
            xp *= x;
        }
        rhs[r] = y[r] - (fk.pinned_const ? *fk.pinned_const * other : 0.0);
    }
    auto sol = lstsq(a, rows, cols, rhs);
    for (size_t j = 0; j < cols; ++j) p[k].c[first + j] = sol[j];
}

void normalize(const std::vector<AlsFactor>& f, std::vector<PolyCoeffs>& p) {
    for (size_t k = 1; k < f.size(); ++k) {
        // pinned constants are part of the model contract; only free factors rescale
        if (f[k].pinned_const && *f[k].pinned_const != 0.0) continue;
        double n = 0.0;
        for (double c : p[k].c) n += c * c;
        n = std::sqrt(n);
        if (n == 0.0) continue;
        double s = 1.0 / n;
        double ref;
        if (f[k].sign == SignRule::LinearNonPositive) {
            ref = p[k].degree() >= 1 ? -p[k].c[1] : 1.0;
        } else {
            double xmax = *std::max_element(f[k].x.begin(), f[k].x.end());
            ref = p[k](xmax);
        }
        if (ref < 0) s = -s;
        for (double& c : p[k].c) c *= s;
        for (double& c : p[0].c) c /= s;
    }
}

} // namespace

AlsResult fit_rank1(const std::vector<AlsFactor>& factors, const std::vector<double>& y, int max_iter, double rel_tol) {
    if (factors.empty()) throw UsageError("fit_rank1: no factors");
    if (y.empty()) throw UsageError("fit_rank1: no rows");
    for (size_t k = 0; k < factors.size(); ++k) {
        const auto& f = factors[k];
        if (f.x.size() != y.size()) throw UsageError("fit_rank1: factor length mismatch");
        if (f.degree < 0) throw UsageError("fit_rank1: negative degree");
        std::set<double> distinct(f.x.begin(), f.x.end());
        size_t free = size_t(f.degree) + 1 - (f.pinned_const ? 1 : 0);
        size_t need = std::max<size_t>(free, f.degree >= 1 ? 2 : 1);
        if (distinct.size() < need)
            throw FitError("factor " + std::to_string(k) + " has " + std::to_string(distinct.size()) +
                           " distinct sample values, needs " + std::to_string(need));
    }
    AlsResult res;
    for (const auto& f : factors) res.factors.push_back(initial(f));
    double prev = sse(factors, res.factors, y);
    for (int it = 0; it < max_iter; ++it) {
        for (size_t k = 0; k < factors.size(); ++k) solve_factor(factors, res.factors, k, y);
        double cur = sse(factors, res.factors, y);
        res.objective.push_back(cur);
        res.iterations = it + 1;
        if (cur == 0.0 || prev - cur <= rel_tol * prev) break;
        prev = cur;
    }
    normalize(factors, res.factors);
    return res;
}

} // namespace imcdse
