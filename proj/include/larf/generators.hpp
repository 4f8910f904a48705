#pragma once

#include <cmath>
#include <string>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"
#include "larf/rng.hpp"

namespace larf {

enum class GeneratorKind { Friedman1, Friedman2, Friedman3, LinearRegression, SparseUncorrelated };

inline std::string to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::Friedman1: return "friedman1";
        case GeneratorKind::Friedman2: return "friedman2";
        case GeneratorKind::Friedman3: return "friedman3";
        case GeneratorKind::LinearRegression: return "regression";
        case GeneratorKind::SparseUncorrelated: return "sparse";
    }
    return "unknown";
}

inline GeneratorKind generator_kind_from_string(const std::string& s) {
    if (s == "friedman1") return GeneratorKind::Friedman1;
    if (s == "friedman2") return GeneratorKind::Friedman2;
    if (s == "friedman3") return GeneratorKind::Friedman3;
    if (s == "regression" || s == "linear") return GeneratorKind::LinearRegression;
    if (s == "sparse") return GeneratorKind::SparseUncorrelated;
    throw InvalidSpec("unknown generator kind: " + s);
}

inline std::size_t default_generator_m(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::Friedman1: return 10;
        case GeneratorKind::Friedman2:
        case GeneratorKind::Friedman3: return 4;
        case GeneratorKind::LinearRegression: return 100;
        case GeneratorKind::SparseUncorrelated: return 10;
    }
    return 10;
}

inline double default_generator_noise(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::Friedman1: return 1.0;
        case GeneratorKind::Friedman2: return 125.0;
        case GeneratorKind::Friedman3: return 0.1;
        case GeneratorKind::LinearRegression: return 0.0;
        case GeneratorKind::SparseUncorrelated: return 1.0;
    }
    return 0.0;
}

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Friedman1;
    std::size_t n = 100;
    std::size_t m = 10;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;

    static GeneratorSpec defaults(GeneratorKind k, std::size_t n, std::uint64_t seed) {
        return GeneratorSpec{k, n, default_generator_m(k), default_generator_noise(k), seed};
    }

    void validate() const {
        if (n < 1) throw InvalidSpec("generator n must be >= 1");
        if (noise_sd < 0.0) throw InvalidSpec("noise_sd must be >= 0");
        switch (kind) {
            case GeneratorKind::Friedman1:
                if (m < 5) throw InvalidSpec("friedman1 requires m >= 5");
                break;
            case GeneratorKind::Friedman2:
            case GeneratorKind::Friedman3:
                if (m != 4) throw InvalidSpec(to_string(kind) + " requires m = 4");
                break;
            case GeneratorKind::LinearRegression:
                if (m < 1) throw InvalidSpec("regression requires m >= 1");
                break;
            case GeneratorKind::SparseUncorrelated:
                if (m < 4) throw InvalidSpec("sparse requires m >= 4");
                break;
        }
    }
};

namespace detail {

inline double friedman1_formula(const Eigen::Ref<const Vector>& x) {
    const double pi = 3.141592653589793238462643;
    return 10.0 * std::sin(pi * x(0) * x(1)) + 20.0 * (x(2) - 0.5) * (x(2) - 0.5) +
           10.0 * x(3) + 5.0 * x(4);
}

inline double friedman2_formula(const Eigen::Ref<const Vector>& x) {
    const double t = x(1) * x(2) - 1.0 / (x(1) * x(3));
    return std::sqrt(x(0) * x(0) + t * t);
}

inline double friedman3_formula(const Eigen::Ref<const Vector>& x) {
    const double t = x(1) * x(2) - 1.0 / (x(1) * x(3));
    return std::atan(t / x(0));
}

inline double sparse_formula(const Eigen::Ref<const Vector>& x) {
    return x(0) + 2.0 * x(1) - 2.0 * x(2) - 1.5 * x(3);
}

// Friedman 2/3 input ranges (Breiman setup).
inline void fill_friedman23_row(Rng& rng, Eigen::Ref<Vector> x) {
    const double pi = 3.141592653589793238462643;
    x(0) = rng.uniform(0.0, 100.0);
    x(1) = rng.uniform(40.0 * pi, 560.0 * pi);
    x(2) = rng.uniform(0.0, 1.0);
    x(3) = rng.uniform(1.0, 11.0);
}

} // namespace detail

// Deterministic synthetic datasets; all inputs are drawn first, then one
// noise draw per row, so the noiseless signal for a given seed is stable.
// coefficients_out receives the linear model's beta when applicable.
inline Dataset generate(const GeneratorSpec& spec, Vector* coefficients_out = nullptr) {
    spec.validate();
    Rng rng(mix_seed(spec.seed, 0x6e4ULL + static_cast<std::uint64_t>(spec.kind)));
    Matrix x(spec.n, spec.m);
    Vector signal(spec.n);

    switch (spec.kind) {
        case GeneratorKind::Friedman1:
            for (std::size_t r = 0; r < spec.n; ++r) {
                for (std::size_t c = 0; c < spec.m; ++c)
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.uniform();
                signal(static_cast<Eigen::Index>(r)) = detail::friedman1_formula(x.row(static_cast<Eigen::Index>(r)).transpose());
            }
            break;
        case GeneratorKind::Friedman2:
        case GeneratorKind::Friedman3:
            for (std::size_t r = 0; r < spec.n; ++r) {
                Vector row(4);
                detail::fill_friedman23_row(rng, row);
                x.row(static_cast<Eigen::Index>(r)) = row.transpose();
                signal(static_cast<Eigen::Index>(r)) = spec.kind == GeneratorKind::Friedman2
                                                           ? detail::friedman2_formula(row)
                                                           : detail::friedman3_formula(row);
            }
            break;
        case GeneratorKind::LinearRegression: {
            Vector beta(spec.m);
            for (std::size_t c = 0; c < spec.m; ++c) beta(static_cast<Eigen::Index>(c)) = rng.uniform(0.0, 100.0);
            for (std::size_t r = 0; r < spec.n; ++r) {
                for (std::size_t c = 0; c < spec.m; ++c)
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
                signal(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(r)) * beta;
            }
            if (coefficients_out) *coefficients_out = beta;
            break;
        }
        case GeneratorKind::SparseUncorrelated:
            for (std::size_t r = 0; r < spec.n; ++r) {
                for (std::size_t c = 0; c < spec.m; ++c)
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
                signal(static_cast<Eigen::Index>(r)) = detail::sparse_formula(x.row(static_cast<Eigen::Index>(r)).transpose());
            }
            break;
    }

    Vector y(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r)
        y(static_cast<Eigen::Index>(r)) = signal(static_cast<Eigen::Index>(r)) +
                                          (spec.noise_sd > 0.0 ? rng.normal(0.0, spec.noise_sd) : 0.0);

    std::vector<std::string> names(spec.m);
    for (std::size_t c = 0; c < spec.m; ++c) names[c] = "x" + std::to_string(c + 1);
    return Dataset(std::move(x), std::move(y), std::move(names));
}

// Noiseless closed form for a generated input row (test oracle support).
inline double generator_formula(GeneratorKind kind, const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& beta = Vector()) {
    switch (kind) {
        case GeneratorKind::Friedman1: return detail::friedman1_formula(x);
        case GeneratorKind::Friedman2: return detail::friedman2_formula(x);
        case GeneratorKind::Friedman3: return detail::friedman3_formula(x);
        case GeneratorKind::SparseUncorrelated: return detail::sparse_formula(x);
        case GeneratorKind::LinearRegression:
            if (beta.size() != x.size()) throw LengthMismatch("regression formula needs beta");
            return x.dot(beta);
    }
    throw InvalidSpec("unknown generator kind");
}

} // namespace larf
