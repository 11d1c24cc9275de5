#pragma once
#include <vector>

namespace imcdse {

// coefficients lowest order first
struct PolyCoeffs {
    std::vector<double> c;

    PolyCoeffs() = default;
    explicit PolyCoeffs(std::vector<double> coeffs) : c(std::move(coeffs)) {}
    static PolyCoeffs zeros(int degree) { return PolyCoeffs(std::vector<double>(size_t(degree) + 1, 0.0)); }

    int degree() const { return int(c.size()) - 1; }
    double operator()(double x) const {
        double r = 0.0;
        for (size_t i = c.size(); i-- > 0;) r = r * x + c[i];
        return r;
    }
    bool operator==(const PolyCoeffs&) const = default;
};

// min ||A x - y|| with columns scaled to unit norm before a pivoted QR;
// A is row-major rows x cols
std::vector<double> lstsq(const std::vector<double>& a, size_t rows, size_t cols, const std::vector<double>& y);

} // namespace imcdse
