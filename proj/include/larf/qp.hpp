#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"

namespace larf {
namespace qp {

constexpr double kDefaultTol = 1e-8;
constexpr int kDefaultMaxIter = 10000;

// Euclidean projection onto {u >= 0, sum u = radius} (sort-and-threshold).
// Points already feasible to within rounding are returned unchanged, which
// makes the projection an exact fixed point on its own output.
inline std::vector<double> project_simplex(std::vector<double> v, double radius = 1.0) {
    if (v.empty()) throw EmptyInput("project_simplex on empty vector");
    if (!(radius > 0.0)) throw InvalidBounds("simplex radius must be > 0");

    double sum = 0.0, amax = 0.0;
    bool nonneg = true;
    for (double x : v) {
        sum += x;
        amax = std::max(amax, std::abs(x));
        nonneg = nonneg && x >= 0.0;
    }
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max({1.0, radius, amax * static_cast<double>(v.size())});
    if (nonneg && std::abs(sum - radius) <= slack) return v;

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) theta = candidate;
    }
    for (double& x : v) x = std::max(x - theta, 0.0);
    return v;
}

// Euclidean projection onto {u >= 0, lo <= sum u <= hi}: clip to the
// orthant; if the clipped sum violates a bound, the optimum lies on that
// bound and reduces to a simplex projection at the clamped radius.
inline std::vector<double> project_slab_simplex(std::vector<double> v, double lo, double hi) {
    if (v.empty()) throw EmptyInput("project_slab_simplex on empty vector");
    if (!(lo > 0.0) || !(lo <= hi)) throw InvalidBounds("slab requires 0 < lo <= hi");

    double sum = 0.0, amax = 0.0;
    std::vector<double> clipped = v;
    for (double& x : clipped) {
        x = std::max(x, 0.0);
        sum += x;
        amax = std::max(amax, x);
    }
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max({1.0, hi, amax * static_cast<double>(v.size())});
    if (sum >= lo - slack && sum <= hi + slack) return clipped;
    return project_simplex(std::move(v), sum > hi ? hi : lo);
}

struct ConstraintSpec {
    enum class Kind { UnitSimplex, SlabSimplex, BlockSlabSimplex, Box };

    Kind kind = Kind::UnitSimplex;
    std::size_t dim = 0;
    std::size_t blocks = 1;      // BlockSlabSimplex: number of blocks
    std::size_t block_size = 0;  // BlockSlabSimplex: variables per block
    double lo = 0.0;
    double hi = 1.0;

    static ConstraintSpec unit_simplex(std::size_t p) {
        if (p == 0) throw EmptyInput("empty constraint");
        return {Kind::UnitSimplex, p, 1, p, 1.0, 1.0};
    }
    static ConstraintSpec slab_simplex(std::size_t p, double lo, double hi = 1.0) {
        if (p == 0) throw EmptyInput("empty constraint");
        if (!(lo > 0.0) || !(lo <= hi)) throw InvalidBounds("slab requires 0 < lo <= hi");
        return {Kind::SlabSimplex, p, 1, p, lo, hi};
    }
    static ConstraintSpec block_slab_simplex(std::size_t blocks, std::size_t block_size, double lo,
                                             double hi = 1.0) {
        if (blocks == 0 || block_size == 0) throw EmptyInput("empty constraint");
        if (!(lo > 0.0) || !(lo <= hi)) throw InvalidBounds("slab requires 0 < lo <= hi");
        return {Kind::BlockSlabSimplex, blocks * block_size, blocks, block_size, lo, hi};
    }
    static ConstraintSpec box(std::size_t p, double lo, double hi) {
        if (p == 0) throw EmptyInput("empty constraint");
        if (!(lo <= hi)) throw InvalidBounds("box requires lo <= hi");
        return {Kind::Box, p, 1, p, lo, hi};
    }

    Vector project(const Vector& v) const {
        check_dim(v.size());
        switch (kind) {
            case Kind::UnitSimplex: {
                auto u = project_simplex(to_std(v), 1.0);
                return from_std(u);
            }
            case Kind::SlabSimplex: {
                auto u = project_slab_simplex(to_std(v), lo, hi);
                return from_std(u);
            }
            case Kind::BlockSlabSimplex: {
                Vector out(v.size());
                for (std::size_t b = 0; b < blocks; ++b) {
                    std::vector<double> seg(block_size);
                    for (std::size_t i = 0; i < block_size; ++i)
                        seg[i] = v(static_cast<Eigen::Index>(b * block_size + i));
                    auto u = project_slab_simplex(std::move(seg), lo, hi);
                    for (std::size_t i = 0; i < block_size; ++i)
                        out(static_cast<Eigen::Index>(b * block_size + i)) = u[i];
                }
                return out;
            }
            case Kind::Box: {
                Vector out(v.size());
                for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = std::clamp(v(i), lo, hi);
                return out;
            }
        }
        throw InvalidConfig("unknown constraint kind");
    }

    // Deterministic strictly feasible starting point: uniform center.
    Vector feasible_center() const {
        Vector c(static_cast<Eigen::Index>(dim));
        switch (kind) {
            case Kind::UnitSimplex:
                c.setConstant(1.0 / static_cast<double>(dim));
                break;
            case Kind::SlabSimplex:
                c.setConstant(0.5 * (lo + hi) / static_cast<double>(dim));
                break;
            case Kind::BlockSlabSimplex:
                c.setConstant(0.5 * (lo + hi) / static_cast<double>(block_size));
                break;
            case Kind::Box:
                c.setConstant(0.5 * (lo + hi));
                break;
        }
        return c;
    }

    // Largest constraint violation (nonnegativity and sum bounds); for tests
    // and solution validation.
    double max_violation(const Vector& v) const {
        check_dim(v.size());
        double viol = 0.0;
        auto sum_range = [&](std::size_t begin, std::size_t count, double sum_lo, double sum_hi) {
            double s = 0.0;
            for (std::size_t i = begin; i < begin + count; ++i) {
                const double x = v(static_cast<Eigen::Index>(i));
                viol = std::max(viol, -x);
                s += x;
            }
            viol = std::max({viol, sum_lo - s, s - sum_hi});
        };
        switch (kind) {
            case Kind::UnitSimplex: sum_range(0, dim, 1.0, 1.0); break;
            case Kind::SlabSimplex: sum_range(0, dim, lo, hi); break;
            case Kind::BlockSlabSimplex:
                for (std::size_t b = 0; b < blocks; ++b) sum_range(b * block_size, block_size, lo, hi);
                break;
            case Kind::Box:
                for (Eigen::Index i = 0; i < v.size(); ++i)
                    viol = std::max({viol, lo - v(i), v(i) - hi});
                break;
        }
        return viol;
    }

private:
    void check_dim(Eigen::Index got) const {
        if (static_cast<std::size_t>(got) != dim)
            throw DimensionMismatch("constraint dimension " + std::to_string(dim) + ", vector " +
                                    std::to_string(got));
    }
    static std::vector<double> to_std(const Vector& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    }
    static Vector from_std(const std::vector<double>& u) {
        Vector out(static_cast<Eigen::Index>(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i) out(static_cast<Eigen::Index>(i)) = u[i];
        return out;
    }
};

// min over the feasible set of ||residual_offset - design * theta||^2.
struct QuadraticProblem {
    Vector residual_offset;   // n
    Eigen::MatrixXd design;   // n x p
    ConstraintSpec constraint;

    void validate() const {
        if (design.rows() != residual_offset.size())
            throw DimensionMismatch("design rows != residual_offset length");
        if (static_cast<std::size_t>(design.cols()) != constraint.dim)
            throw DimensionMismatch("design cols != constraint dimension");
        if (design.cols() == 0) throw EmptyInput("no decision variables");
    }
};

struct QpSolution {
    Vector variables;
    double objective = 0.0;   // ||residual_offset - design*variables||^2
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

namespace detail {

// Largest eigenvalue of design^T design via power iteration (A^T A is never
// formed). A small inflation keeps the step size on the safe side of 1/L.
inline double lipschitz_estimate(const Eigen::MatrixXd& a) {
    const Eigen::Index p = a.cols();
    Vector u(p);
    for (Eigen::Index i = 0; i < p; ++i) u(i) = 1.0 + 1e-3 * static_cast<double>(i % 17);
    u /= u.norm();
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vector w = a.transpose() * (a * u);
        const double nw = w.norm();
        if (nw <= 0.0) return 0.0;
        const double next = u.dot(w);
        u = w / nw;
        if (it > 2 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda * (1.0 + 1e-3);
}

} // namespace detail

// Accelerated projected gradient (FISTA with objective restart) for the
// constrained least-squares problem. Descent runs on h = 0.5*||A x - r||^2
// with step 1/lambda_max(A^T A); convergence is declared when the projected
// gradient norm drops to tol. On max_iter the best iterate found is returned
// flagged, never thrown.
inline QpSolution solve(const QuadraticProblem& problem, double tol = kDefaultTol,
                        int max_iter = kDefaultMaxIter) {
    problem.validate();
    const Eigen::MatrixXd& a = problem.design;
    const Vector& r = problem.residual_offset;

    auto objective = [&](const Vector& x) { return (r - a * x).squaredNorm(); };
    auto gradient = [&](const Vector& x) { return Vector(a.transpose() * (a * x - r)); };

    QpSolution sol;
    Vector x = problem.constraint.feasible_center();
    const double lipschitz = detail::lipschitz_estimate(a);
    if (lipschitz <= std::numeric_limits<double>::min()) {
        // zero design: objective is constant, the center is already optimal
        sol.variables = x;
        sol.objective = objective(x);
        sol.converged = true;
        return sol;
    }
    const double step = 1.0 / lipschitz;

    auto pg_norm = [&](const Vector& at) {
        return (at - problem.constraint.project(at - step * gradient(at))).norm() / step;
    };

    Vector x_prev = x;
    Vector z = x;
    double momentum = 1.0;
    double f_prev = objective(x);
    Vector best = x;
    double best_f = f_prev;

    for (int iter = 1; iter <= max_iter; ++iter) {
        Vector x_new = problem.constraint.project(z - step * gradient(z));
        const double f_new = objective(x_new);
        if (f_new < best_f) {
            best = x_new;
            best_f = f_new;
        }

        const double residual = pg_norm(x_new);
        sol.iterations = iter;
        if (residual <= tol && f_new <= best_f + 1e-12 * std::max(1.0, best_f)) {
            sol.variables = x_new;
            sol.objective = f_new;
            sol.kkt_residual = residual;
            sol.converged = true;
            return sol;
        }

        if (f_new > f_prev) {
            momentum = 1.0;
            z = x_new;
        } else {
            const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            z = x_new + ((momentum - 1.0) / next) * (x_new - x_prev);
            momentum = next;
        }
        x_prev = x_new;
        f_prev = f_new;
    }

    sol.variables = best;
    sol.objective = best_f;
    sol.kkt_residual = pg_norm(best);
    sol.converged = sol.kkt_residual <= tol;
    return sol;
}

// Closed-form fit of the single contamination level with trees weighted
// uniformly: min over eps in [lo, 1] of sum_s (y_s - (1-eps)*c_s - eps*d_s)^2.
inline std::pair<double, double> solve_scalar_epsilon(const Vector& c_sum, const Vector& d_sum,
                                                      const Vector& y, double lo) {
    if (c_sum.size() != d_sum.size() || c_sum.size() != y.size())
        throw LengthMismatch("solve_scalar_epsilon: inputs must have equal length");
    if (!(lo > 0.0) || !(lo <= 1.0)) throw InvalidBounds("epsilon floor must lie in (0, 1]");

    double num = 0.0, den = 0.0;
    for (Eigen::Index s = 0; s < y.size(); ++s) {
        const double delta = d_sum(s) - c_sum(s);
        num += delta * (y(s) - c_sum(s));
        den += delta * delta;
    }
    const double eps = den < 1e-15 ? lo : std::clamp(num / den, lo, 1.0);
    double obj = 0.0;
    for (Eigen::Index s = 0; s < y.size(); ++s) {
        const double resid = y(s) - (1.0 - eps) * c_sum(s) - eps * d_sum(s);
        obj += resid * resid;
    }
    return {eps, obj};
}

} // namespace qp
} // namespace larf
