#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"
#include "larf/forest.hpp"
#include "larf/threading.hpp"

namespace larf {
namespace attention {

// Tree-level temperature grid: M consecutive powers of ten starting at
// 10^-floor(M/2), so odd M is symmetric around 1 and M=1 gives {1}.
inline std::vector<double> default_taus(std::size_t m_heads) {
    if (m_heads < 1) throw InvalidSpec("M must be >= 1");
    const int lo = -static_cast<int>(m_heads / 2);
    std::vector<double> taus(m_heads);
    for (std::size_t i = 0; i < m_heads; ++i)
        taus[i] = std::pow(10.0, lo + static_cast<int>(i));
    return taus;
}

struct KernelParams {
    double tau0 = 1.0;          // leaf-level temperature
    std::vector<double> taus;   // tree-level temperatures, one per head

    std::size_t heads() const { return taus.size(); }

    static KernelParams with_default_taus(double tau0, std::size_t m_heads) {
        return KernelParams{tau0, default_taus(m_heads)};
    }

    void validate() const {
        if (!(tau0 > 0.0)) throw NonpositiveTemperature("tau0 must be > 0");
        if (taus.empty()) throw InvalidSpec("need at least one tree-level temperature");
        for (double t : taus)
            if (!(t > 0.0)) throw NonpositiveTemperature("tree-level temperatures must be > 0");
    }
};

// Softmax of -d_i/tau with max-subtraction; finite inputs cannot overflow and
// equal distances give exactly uniform weights.
inline std::vector<double> softmax_neg_sq_dist(const std::vector<double>& sq_distances, double tau) {
    if (sq_distances.empty()) throw EmptyInput("softmax over empty distance set");
    if (!(tau > 0.0)) throw NonpositiveTemperature("temperature must be > 0");
    std::vector<double> z(sq_distances.size());
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sq_distances.size(); ++i) {
        z[i] = -sq_distances[i] / tau;
        if (z[i] > zmax) zmax = z[i];
    }
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

inline double squared_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double diff = a(i) - b(i);
        d += diff * diff;
    }
    return d;
}

// First-level weights: softmax over leaf members of -||x - x_j||^2 / tau0.
inline std::vector<double> leaf_mu(const Eigen::Ref<const Vector>& x,
                                   const std::vector<std::uint32_t>& members, const Dataset& data,
                                   double tau0) {
    if (members.empty()) throw EmptyInput("leaf has no members");
    std::vector<double> sq(members.size());
    for (std::size_t j = 0; j < members.size(); ++j)
        sq[j] = squared_distance(x, data.features.row(members[j]).transpose());
    return softmax_neg_sq_dist(sq, tau0);
}

struct LeafKeyValue {
    Vector key;   // mu-weighted member centroid
    double value; // mu-weighted member target mean
};

inline LeafKeyValue weighted_key_value(const std::vector<std::uint32_t>& members,
                                       const std::vector<double>& mu, const Dataset& data) {
    Vector key = Vector::Zero(data.features.cols());
    double value = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
        const double w = mu[j];
        for (Eigen::Index c = 0; c < key.size(); ++c) key(c) += w * data.features(members[j], c);
        value += w * data.targets(members[j]);
    }
    return {std::move(key), value};
}

inline LeafKeyValue leaf_key_value(const Eigen::Ref<const Vector>& x, std::size_t tree_index,
                                   const Forest& forest, const Dataset& data, double tau0) {
    const auto& members = leaf_members(forest, tree_index, x);
    return weighted_key_value(members, leaf_mu(x, members, data, tau0), data);
}

// Everything the second level needs for one query: per-tree value D_k and the
// per-head tree softmax over distances to the keys A_k.
struct QueryAttention {
    std::vector<double> values;              // T entries, D_k(x)
    std::vector<std::vector<double>> sigma;  // heads x T, tree softmax per temperature
};

inline QueryAttention compute_query_attention(const Eigen::Ref<const Vector>& x,
                                              const Forest& forest, const Dataset& data,
                                              const KernelParams& kernel, bool leaf_attention) {
    forest.check_dimension(x);
    const std::size_t t_count = forest.n_trees();
    QueryAttention q;
    q.values.resize(t_count);
    std::vector<double> key_sq(t_count);
    for (std::size_t k = 0; k < t_count; ++k) {
        const auto& members =
            forest.trees[k].nodes[static_cast<std::size_t>(forest.trees[k].leaf_index(x))].members;
        LeafKeyValue kv;
        if (leaf_attention) {
            kv = weighted_key_value(members, leaf_mu(x, members, data, kernel.tau0), data);
        } else {
            std::vector<double> uniform(members.size(), 1.0 / static_cast<double>(members.size()));
            kv = weighted_key_value(members, uniform, data);
        }
        q.values[k] = kv.value;
        key_sq[k] = squared_distance(x, kv.key);
    }
    q.sigma.resize(kernel.heads());
    for (std::size_t j = 0; j < kernel.heads(); ++j)
        q.sigma[j] = softmax_neg_sq_dist(key_sq, kernel.taus[j]);
    return q;
}

// Precomputed design quantities for the parameter fit. For sample s, head j,
// tree k:  d(s,k) = D_k(x_s),  sigma(s,j,k) the tree softmax,  and
// c(s,j,k) = d(s,k) * sigma(s,j,k). None of them depend on the trainable
// parameters, so they are computed once per (forest, data, kernel).
struct AttentionFeatures {
    std::size_t n_samples = 0;
    std::size_t heads = 0;
    std::size_t n_trees = 0;
    std::vector<double> C;     // n * heads * T
    std::vector<double> D;     // n * T
    std::vector<double> Sigma; // n * heads * T

    double c(std::size_t s, std::size_t j, std::size_t k) const { return C[(s * heads + j) * n_trees + k]; }
    double d(std::size_t s, std::size_t k) const { return D[s * n_trees + k]; }
    double sigma(std::size_t s, std::size_t j, std::size_t k) const { return Sigma[(s * heads + j) * n_trees + k]; }
};

inline AttentionFeatures compute_features(const Matrix& queries, const Forest& forest,
                                          const Dataset& data, const KernelParams& kernel,
                                          bool leaf_attention, int n_threads = 1) {
    kernel.validate();
    if (static_cast<std::size_t>(queries.cols()) != forest.n_features)
        throw DimensionMismatch("query columns " + std::to_string(queries.cols()) +
                                " != forest features " + std::to_string(forest.n_features));
    AttentionFeatures f;
    f.n_samples = static_cast<std::size_t>(queries.rows());
    f.heads = kernel.heads();
    f.n_trees = forest.n_trees();
    f.C.resize(f.n_samples * f.heads * f.n_trees);
    f.D.resize(f.n_samples * f.n_trees);
    f.Sigma.resize(f.n_samples * f.heads * f.n_trees);

    parallel_for(f.n_samples, n_threads, [&](std::size_t s) {
        const QueryAttention q = compute_query_attention(
            queries.row(static_cast<Eigen::Index>(s)).transpose(), forest, data, kernel, leaf_attention);
        for (std::size_t k = 0; k < f.n_trees; ++k) f.D[s * f.n_trees + k] = q.values[k];
        for (std::size_t j = 0; j < f.heads; ++j)
            for (std::size_t k = 0; k < f.n_trees; ++k) {
                const std::size_t at = (s * f.heads + j) * f.n_trees + k;
                f.Sigma[at] = q.sigma[j][k];
                f.C[at] = q.values[k] * q.sigma[j][k];
            }
    });
    return f;
}

} // namespace attention
} // namespace larf
