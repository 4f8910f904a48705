#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "larf/errors.hpp"

namespace larf {
namespace stats {

namespace detail {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace detail

inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw InvalidBounds("incomplete_beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Student-t CDF with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw InvalidBounds("degrees of freedom must be > 0");
    if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

inline double two_sided_t_pvalue(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct PairedTResult {
    std::vector<double> deltas;
    double mean_delta = 0.0;
    double t_statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    bool degenerate = false; // zero-variance deltas: t reported as 0 or +-inf
};

// Paired t-test over per-dataset metric deltas (a - b), df = n - 1.
inline PairedTResult paired_t_test(const std::vector<double>& deltas) {
    if (deltas.size() < 2) throw LengthMismatch("paired t-test needs at least 2 pairs");
    PairedTResult res;
    res.deltas = deltas;
    res.df = static_cast<double>(deltas.size() - 1);
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(deltas.size());
    res.mean_delta = mean;
    double ss = 0.0, amax = 0.0;
    for (double d : deltas) {
        ss += (d - mean) * (d - mean);
        amax = std::max(amax, std::abs(d));
    }
    const double sd = std::sqrt(ss / res.df);
    if (sd <= 1e-12 * std::max(1e-300, amax)) {
        res.degenerate = true;
        if (mean == 0.0) {
            res.t_statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
        }
        return res;
    }
    res.t_statistic = mean / (sd / std::sqrt(static_cast<double>(deltas.size())));
    res.p_value = two_sided_t_pvalue(res.t_statistic, res.df);
    return res;
}

} // namespace stats
} // namespace larf
