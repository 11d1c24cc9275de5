#include <Eigen/Dense>
#include <cmath>

#include "imcdse/errors.hpp"
#include "imcdse/poly.hpp"

namespace imcdse {

std::vector<double> lstsq(const std::vector<double>& a, size_t rows, size_t cols, const std::vector<double>& y) {
    if (a.size() != rows * cols || y.size() != rows) throw UsageError("lstsq: shape mismatch");
    if (cols == 0) return {};
    Eigen::MatrixXd m(rows, cols);
    for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c) m(r, c) = a[r * cols + c];
    Eigen::VectorXd scale(cols);
    for (size_t c = 0; c < cols; ++c) {
        double n = m.col(c).norm();
        scale(c) = n > 0 ? 1.0 / n : 1.0;
        m.col(c) *= scale(c);
    }
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::VectorXd sol = qr.solve(rhs);
    std::vector<double> out(cols);
    for (size_t c = 0; c < cols; ++c) {
        out[c] = sol(c) * scale(c);
        if (!std::isfinite(out[c])) throw NumericError("lstsq: non-finite solution");
    }
    return out;
}

} // namespace imcdse
