#pragma once
#include <optional>
#include <vector>

#include "imcdse/poly.hpp"

namespace imcdse {

enum class SignRule {
    LinearNonPositive,  // c[1] <= 0
    PositiveAtMax,      // value at the largest sample >= 0
};

struct AlsFactor {
    std::vector<double> x;              // one sample per row
    int degree = 1;
    std::optional<double> pinned_const; // fixed c[0]
    SignRule sign = SignRule::PositiveAtMax;
};

struct AlsResult {
    std::vector<PolyCoeffs> factors;
    std::vector<double> objective; // sum of squared residuals after each sweep
    int iterations = 0;
};

// y ~ prod_k p_k(x_k). Factor 0 carries the scale; every other factor is
// normalized to unit coefficient norm and its sign fixed by its rule.
AlsResult fit_rank1(const std::vector<AlsFactor>& factors, const std::vector<double>& y, int max_iter = 20,
                    double rel_tol = 1e-12);

} // namespace imcdse
