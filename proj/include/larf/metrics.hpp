#pragma once

#include <cmath>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"

namespace larf {

// Coefficient of determination. Undefined for a constant truth vector, which
// is reported as an error rather than a silent zero.
inline double r2(const Vector& y_true, const Vector& y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("r2: length mismatch");
    if (y_true.size() == 0) throw EmptyInput("r2: empty input");
    const double mean = y_true.mean();
    const double ss_tot = (y_true.array() - mean).square().sum();
    if (ss_tot == 0.0) throw ConstantTarget("r2 undefined for constant targets");
    const double ss_res = (y_true - y_pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

inline double mae(const Vector& y_true, const Vector& y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("mae: length mismatch");
    if (y_true.size() == 0) throw EmptyInput("mae: empty input");
    return (y_true - y_pred).cwiseAbs().mean();
}

} // namespace larf
