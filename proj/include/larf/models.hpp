#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "larf/attention.hpp"
#include "larf/dataset.hpp"
#include "larf/errors.hpp"
#include "larf/forest.hpp"
#include "larf/qp.hpp"

namespace larf {

// The four trainable configurations: leaf attention on/off x tree weights
// trainable/fixed (1/T). M = 1 recovers the single-contamination models.
enum class ModelVariant { EpsM_ARF, EpsM_LARF, EpsM_w_ARF, EpsM_w_LARF };

constexpr std::array<ModelVariant, 4> kAllVariants = {
    ModelVariant::EpsM_ARF, ModelVariant::EpsM_LARF, ModelVariant::EpsM_w_ARF,
    ModelVariant::EpsM_w_LARF};

inline bool uses_leaf_attention(ModelVariant v) {
    return v == ModelVariant::EpsM_LARF || v == ModelVariant::EpsM_w_LARF;
}

inline bool trains_tree_weights(ModelVariant v) {
    return v == ModelVariant::EpsM_w_ARF || v == ModelVariant::EpsM_w_LARF;
}

inline std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::EpsM_ARF: return "epsM-ARF";
        case ModelVariant::EpsM_LARF: return "epsM-LARF";
        case ModelVariant::EpsM_w_ARF: return "epsM-w-ARF";
        case ModelVariant::EpsM_w_LARF: return "epsM-w-LARF";
    }
    return "unknown";
}

inline ModelVariant variant_from_string(const std::string& s) {
    if (s == "epsM-ARF") return ModelVariant::EpsM_ARF;
    if (s == "epsM-LARF") return ModelVariant::EpsM_LARF;
    if (s == "epsM-w-ARF") return ModelVariant::EpsM_w_ARF;
    if (s == "epsM-w-LARF") return ModelVariant::EpsM_w_LARF;
    throw InvalidSpec("unknown model variant: " + s);
}

// Trained contamination parameters. Per head j: gamma(j,k) >= 0 with
// sum_k gamma(j,k) = eps_j in [varsigma, 1]; fixed-weight variants store
// gamma(j,k) = eps_j / T exactly.
struct AttentionParameters {
    Eigen::MatrixXd gammas; // heads x T
    Vector epsilons;        // heads

    std::size_t heads() const { return static_cast<std::size_t>(gammas.rows()); }
    std::size_t n_trees() const { return static_cast<std::size_t>(gammas.cols()); }

    double mean_epsilon() const { return epsilons.mean(); }

    // Recovered contamination distribution per head, w^(j) = gamma^(j)/eps_j.
    Eigen::MatrixXd per_head_tree_weights() const {
        Eigen::MatrixXd w = gammas;
        for (Eigen::Index j = 0; j < w.rows(); ++j)
            if (epsilons(j) > 0.0) w.row(j) /= epsilons(j);
        return w;
    }
};

struct FitOptions {
    double varsigma = 1e-3;              // lower bound keeping eps away from 0
    std::optional<double> fixed_epsilon; // pins every eps_j (tuned-eps models)
    double qp_tol = qp::kDefaultTol;
    int qp_max_iter = qp::kDefaultMaxIter;
    int n_threads = 1;

    void validate() const {
        if (!(varsigma > 0.0 && varsigma < 1.0)) throw InvalidBounds("varsigma must lie in (0, 1)");
        if (fixed_epsilon && !(*fixed_epsilon >= varsigma && *fixed_epsilon <= 1.0))
            throw InvalidBounds("fixed_epsilon must lie in [varsigma, 1]");
    }
};

struct FitResult {
    AttentionParameters params;
    double training_mse = 0.0;
    double objective = 0.0;
    int qp_iterations = 0;
    bool qp_converged = true;
};

// Builds and solves the constrained least-squares problem on precomputed
// attention features. The prediction is linear in the decision variables:
//   y_hat(s) = (1/M) sum_j sum_k C(s,j,k)
//            + sum_{j,k} gamma(j,k) * (1/M) * (D(s,k) - sum_i C(s,j,i))
// for trainable tree weights (eps_j = sum_k gamma(j,k) substituted), and
//   y_hat(s) = (1/M) sum_j sum_k C(s,j,k)
//            + sum_j eps_j * (1/M) * ((1/T) sum_k D(s,k) - sum_k C(s,j,k))
// when tree weights are fixed at 1/T.
inline FitResult fit_from_features(ModelVariant variant, const attention::AttentionFeatures& f,
                                   const Vector& targets, const FitOptions& opts = {}) {
    opts.validate();
    if (static_cast<std::size_t>(targets.size()) != f.n_samples)
        throw LengthMismatch("targets length != feature sample count");
    const std::size_t n = f.n_samples, heads = f.heads, t_count = f.n_trees;
    const double inv_m = 1.0 / static_cast<double>(heads);

    Vector offset(static_cast<Eigen::Index>(n));
    std::vector<double> c_sums(n * heads); // sum over trees of C(s,j,.)
    for (std::size_t s = 0; s < n; ++s) {
        double total = 0.0;
        for (std::size_t j = 0; j < heads; ++j) {
            double cs = 0.0;
            for (std::size_t k = 0; k < t_count; ++k) cs += f.c(s, j, k);
            c_sums[s * heads + j] = cs;
            total += cs;
        }
        offset(static_cast<Eigen::Index>(s)) = targets(static_cast<Eigen::Index>(s)) - inv_m * total;
    }

    const double lo = opts.fixed_epsilon.value_or(opts.varsigma);
    const double hi = opts.fixed_epsilon.value_or(1.0);

    qp::QuadraticProblem problem;
    if (trains_tree_weights(variant)) {
        problem.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(heads * t_count));
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t j = 0; j < heads; ++j)
                for (std::size_t k = 0; k < t_count; ++k)
                    problem.design(static_cast<Eigen::Index>(s),
                                   static_cast<Eigen::Index>(j * t_count + k)) =
                        inv_m * (f.d(s, k) - c_sums[s * heads + j]);
        problem.constraint = qp::ConstraintSpec::block_slab_simplex(heads, t_count, lo, hi);
    } else {
        problem.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(heads));
        const double inv_t = 1.0 / static_cast<double>(t_count);
        for (std::size_t s = 0; s < n; ++s) {
            double d_mean = 0.0;
            for (std::size_t k = 0; k < t_count; ++k) d_mean += f.d(s, k);
            d_mean *= inv_t;
            for (std::size_t j = 0; j < heads; ++j)
                problem.design(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                    inv_m * (d_mean - c_sums[s * heads + j]);
        }
        problem.constraint = qp::ConstraintSpec::box(heads, lo, hi);
    }
    problem.residual_offset = offset;

    // Rescale to unit target size so the solver tolerance means the same
    // thing across datasets with very different output scales.
    const double scale = std::max(1.0, std::sqrt(targets.squaredNorm() / static_cast<double>(n)));
    problem.residual_offset /= scale;
    problem.design /= scale;

    qp::QpSolution sol = qp::solve(problem, opts.qp_tol, opts.qp_max_iter);

    FitResult result;
    result.objective = sol.objective * scale * scale;
    result.training_mse = result.objective / static_cast<double>(n);
    result.qp_iterations = sol.iterations;
    result.qp_converged = sol.converged;
    result.params.gammas.resize(static_cast<Eigen::Index>(heads), static_cast<Eigen::Index>(t_count));
    result.params.epsilons.resize(static_cast<Eigen::Index>(heads));
    if (trains_tree_weights(variant)) {
        for (std::size_t j = 0; j < heads; ++j) {
            double eps = 0.0;
            for (std::size_t k = 0; k < t_count; ++k) {
                const double g = sol.variables(static_cast<Eigen::Index>(j * t_count + k));
                result.params.gammas(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = g;
                eps += g;
            }
            result.params.epsilons(static_cast<Eigen::Index>(j)) = eps;
        }
    } else {
        const double inv_t = 1.0 / static_cast<double>(t_count);
        for (std::size_t j = 0; j < heads; ++j) {
            const double eps = sol.variables(static_cast<Eigen::Index>(j));
            result.params.epsilons(static_cast<Eigen::Index>(j)) = eps;
            for (std::size_t k = 0; k < t_count; ++k)
                result.params.gammas(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                    eps * inv_t;
        }
    }
    return result;
}

struct TrainedModel {
    ModelVariant variant = ModelVariant::EpsM_w_LARF;
    std::shared_ptr<const Forest> forest;
    attention::KernelParams kernel;
    AttentionParameters params;
    Standardizer standardizer;
    Dataset train_data; // standardized rows the forest was fitted on
    double varsigma = 1e-3;
    double training_mse = 0.0;
    bool qp_converged = true;

    void validate() const {
        if (!forest) throw InvalidConfig("model has no forest");
        if (params.heads() != kernel.heads())
            throw VariantKernelMismatch("parameter heads " + std::to_string(params.heads()) +
                                        " != kernel heads " + std::to_string(kernel.heads()));
        if (params.n_trees() != forest->n_trees())
            throw VariantKernelMismatch("parameter tree count != forest size");
    }

    // Tree-level mixture weights for a standardized query.
    std::vector<double> alpha_from_query(const attention::QueryAttention& q) const {
        const std::size_t heads = params.heads(), t_count = params.n_trees();
        const double inv_m = 1.0 / static_cast<double>(heads);
        std::vector<double> alpha(t_count, 0.0);
        for (std::size_t k = 0; k < t_count; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < heads; ++j)
                acc += (1.0 - params.epsilons(static_cast<Eigen::Index>(j))) * q.sigma[j][k] +
                       params.gammas(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
            alpha[k] = inv_m * acc;
        }
        return alpha;
    }

    double predict(const Eigen::Ref<const Vector>& x_raw) const {
        const Vector x = standardizer.apply(x_raw);
        const auto q = attention::compute_query_attention(x, *forest, train_data, kernel,
                                                          uses_leaf_attention(variant));
        const auto alpha = alpha_from_query(q);
        double y = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) y += alpha[k] * q.values[k];
        return y;
    }

    std::vector<double> attention_weights(const Eigen::Ref<const Vector>& x_raw) const {
        const Vector x = standardizer.apply(x_raw);
        return alpha_from_query(attention::compute_query_attention(x, *forest, train_data, kernel,
                                                                   uses_leaf_attention(variant)));
    }

    Vector predict_batch(const Matrix& raw_queries, int n_threads = 1) const {
        Vector out(raw_queries.rows());
        parallel_for(static_cast<std::size_t>(raw_queries.rows()), n_threads, [&](std::size_t i) {
            out(static_cast<Eigen::Index>(i)) =
                predict(raw_queries.row(static_cast<Eigen::Index>(i)).transpose());
        });
        return out;
    }
};

// Fits attention parameters on a forest already trained on the standardized
// data. The standardizer is kept so raw queries can be transformed at
// prediction time.
inline TrainedModel fit_model(ModelVariant variant, std::shared_ptr<const Forest> forest,
                              const Dataset& train_std, const attention::KernelParams& kernel,
                              const Standardizer& standardizer, const FitOptions& opts = {}) {
    if (!forest) throw InvalidConfig("fit_model: null forest");
    kernel.validate();
    opts.validate();
    if (forest->n_train_rows != train_std.n_rows())
        throw DimensionMismatch("forest was trained on " + std::to_string(forest->n_train_rows) +
                                " rows, got dataset with " + std::to_string(train_std.n_rows()));

    const auto features = attention::compute_features(train_std.features, *forest, train_std, kernel,
                                                      uses_leaf_attention(variant), opts.n_threads);
    FitResult fr = fit_from_features(variant, features, train_std.targets, opts);

    TrainedModel model;
    model.variant = variant;
    model.forest = std::move(forest);
    model.kernel = kernel;
    model.params = std::move(fr.params);
    model.standardizer = standardizer;
    model.train_data = train_std;
    model.varsigma = opts.varsigma;
    model.training_mse = fr.training_mse;
    model.qp_converged = fr.qp_converged;
    model.validate();
    return model;
}

} // namespace larf
