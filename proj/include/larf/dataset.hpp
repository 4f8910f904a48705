#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "larf/errors.hpp"
#include "larf/rng.hpp"

namespace larf {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A regression dataset: n feature rows with one real target each.
struct Dataset {
    Matrix features;                        // n x m
    Vector targets;                         // n
    std::vector<std::string> feature_names; // empty or size m

    Dataset() = default;
    Dataset(Matrix x, Vector y, std::vector<std::string> names = {})
        : features(std::move(x)), targets(std::move(y)), feature_names(std::move(names)) {
        validate();
    }

    std::size_t n_rows() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }

    Dataset subset(const std::vector<std::size_t>& indices) const {
        Matrix x(indices.size(), features.cols());
        Vector y(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
            y(static_cast<Eigen::Index>(i)) = targets(static_cast<Eigen::Index>(indices[i]));
        }
        return Dataset(std::move(x), std::move(y), feature_names);
    }

    void validate() const {
        if (features.rows() < 2) throw EmptyDataset("dataset needs at least 2 rows, got " + std::to_string(features.rows()));
        if (features.cols() < 1) throw EmptyDataset("dataset needs at least 1 feature column");
        if (targets.size() != features.rows())
            throw LengthMismatch("targets length " + std::to_string(targets.size()) +
                                 " != feature rows " + std::to_string(features.rows()));
        if (!feature_names.empty() && feature_names.size() != n_features())
            throw LengthMismatch("feature_names length != feature columns");
        if (!features.allFinite() || !targets.allFinite())
            throw InvalidSpec("dataset contains non-finite values");
    }
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int folds = 3;

    void validate() const {
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidSpec("train_fraction must lie in (0, 1)");
        if (folds < 2) throw InvalidSpec("folds must be >= 2");
    }
};

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5117ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

// Seed-deterministic shuffled train/test split. Train size is the rounded
// fraction, clamped so both sides stay nonempty.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 2) throw TooFewRows("cannot split " + std::to_string(n) + " rows");
    auto idx = shuffled_indices(n, spec.seed);
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return {std::move(train), std::move(test)};
}

inline std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
    auto [train_idx, test_idx] = split_indices(data.n_rows(), spec);
    return {data.subset(train_idx), data.subset(test_idx)};
}

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Disjoint, exhaustive folds with sizes differing by at most one.
inline std::vector<FoldIndices> fold_indices(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidSpec("folds must be >= 2");
    if (n < static_cast<std::size_t>(folds))
        throw TooFewRows(std::to_string(n) + " rows cannot form " + std::to_string(folds) + " folds");
    auto idx = shuffled_indices(n, mix_seed(seed, 0xf01d5ULL));
    std::vector<FoldIndices> out(static_cast<std::size_t>(folds));
    const std::size_t base = n / static_cast<std::size_t>(folds);
    const std::size_t extra = n % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        out[f].validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                                 idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
        out[f].train.reserve(n - len);
        out[f].train.insert(out[f].train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(pos));
        out[f].train.insert(out[f].train.end(), idx.begin() + static_cast<std::ptrdiff_t>(pos + len), idx.end());
        pos += len;
    }
    return out;
}

// Per-feature zero-mean / unit-variance transform. Statistics come from the
// training split only; sd uses the population denominator n. Constant columns
// keep divisor 1 so they map to exactly zero.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Dataset& train) {
        if (train.n_rows() < 2) throw EmptyDataset("standardize needs n >= 2");
        Standardizer s;
        const auto n = static_cast<double>(train.features.rows());
        s.mean = train.features.colwise().mean();
        s.scale = Vector(train.features.cols());
        for (Eigen::Index c = 0; c < train.features.cols(); ++c) {
            const double var = (train.features.col(c).array() - s.mean(c)).square().sum() / n;
            const double sd = std::sqrt(var);
            s.scale(c) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Vector apply(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != mean.size())
            throw DimensionMismatch("standardize: expected " + std::to_string(mean.size()) +
                                    " features, got " + std::to_string(x.size()));
        return (x - mean).array() / scale.array();
    }

    Dataset apply(const Dataset& data) const {
        if (data.features.cols() != mean.size())
            throw DimensionMismatch("standardize: expected " + std::to_string(mean.size()) +
                                    " features, got " + std::to_string(data.features.cols()));
        Matrix x = data.features;
        x.rowwise() -= mean.transpose();
        x.array().rowwise() /= scale.transpose().array();
        return Dataset(std::move(x), data.targets, data.feature_names);
    }
};

inline std::pair<Standardizer, Dataset> standardize(const Dataset& train) {
    Standardizer s = Standardizer::fit(train);
    return {s, s.apply(train)};
}

} // namespace larf
