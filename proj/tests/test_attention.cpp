#include <catch2/catch_amalgamated.hpp>

#include <larf/attention.hpp>
#include <larf/forest.hpp>
#include <larf/generators.hpp>

#include "support/oracles.hpp"

using larf::attention::KernelParams;

namespace {

struct Fixture {
    larf::Dataset data;
    larf::ForestConfig cfg;
    larf::Forest forest;

    explicit Fixture(std::size_t n = 60, std::size_t n_trees = 8, std::uint64_t seed = 5)
        : data(larf::generate(larf::GeneratorSpec::defaults(larf::GeneratorKind::Friedman1, n, seed))) {
        cfg.n_trees = n_trees;
        cfg.min_leaf_size = 10;
        cfg.rng_seed = seed;
        forest = larf::fit_forest(data, cfg);
    }
};

} // namespace

TEST_CASE("softmax over negative squared distances") {
    SECTION("equal distances are exactly uniform") {
        const auto w = larf::attention::softmax_neg_sq_dist({3.0, 3.0, 3.0}, 0.7);
        for (double x : w) CHECK(x == Catch::Approx(1.0 / 3.0).margin(1e-16));
    }
    SECTION("closed form for two distances") {
        const auto w = larf::attention::softmax_neg_sq_dist({0.0, 1.0}, 1.0);
        CHECK(w[0] == Catch::Approx(0.73105857863000488).margin(1e-12));
        CHECK(w[1] == Catch::Approx(0.26894142136999512).margin(1e-12));
    }
    SECTION("large temperature approaches uniform") {
        const auto w = larf::attention::softmax_neg_sq_dist({0.0, 1.0}, 1e6);
        CHECK(std::abs(w[0] - 0.5) < 1e-5);
        CHECK(std::abs(w[1] - 0.5) < 1e-5);
    }
    SECTION("huge distances do not overflow") {
        const auto w = larf::attention::softmax_neg_sq_dist({1e300, 0.0, 5e299}, 1e-3);
        CHECK(std::isfinite(w[0]));
        CHECK(w[1] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("errors") {
        CHECK_THROWS_AS(larf::attention::softmax_neg_sq_dist({}, 1.0), larf::EmptyInput);
        CHECK_THROWS_AS(larf::attention::softmax_neg_sq_dist({1.0}, 0.0),
                        larf::NonpositiveTemperature);
        CHECK_THROWS_AS(larf::attention::softmax_neg_sq_dist({1.0}, -2.0),
                        larf::NonpositiveTemperature);
    }
}

TEST_CASE("default temperature grid") {
    CHECK(larf::attention::default_taus(1) == std::vector<double>{1.0});
    CHECK(larf::attention::default_taus(3) == std::vector<double>{0.1, 1.0, 10.0});
    const auto ten = larf::attention::default_taus(10);
    REQUIRE(ten.size() == 10);
    CHECK(ten.front() == Catch::Approx(1e-5).epsilon(1e-12));
    CHECK(ten.back() == Catch::Approx(1e4).epsilon(1e-12));
}

TEST_CASE("leaf-level weights") {
    larf::Matrix x(3, 1);
    x << 0.0, 1.0, 4.0;
    larf::Vector y(3);
    y << 1.0, 2.0, 3.0;
    const larf::Dataset data(x, y);

    SECTION("singleton member set") {
        larf::Vector q(1);
        q << 2.0;
        const auto mu = larf::attention::leaf_mu(q, {1}, data, 1.0);
        REQUIRE(mu.size() == 1);
        CHECK(mu[0] == 1.0);
    }
    SECTION("equidistant members split evenly") {
        larf::Vector q(1);
        q << 0.5;
        const auto mu = larf::attention::leaf_mu(q, {0, 1}, data, 1.0);
        CHECK(mu[0] == Catch::Approx(0.5).margin(1e-15));
        CHECK(mu[1] == Catch::Approx(0.5).margin(1e-15));
    }
    SECTION("closed form for squared distances 0 and 2") {
        larf::Matrix x2(2, 2);
        x2 << 0.0, 0.0, 1.0, 1.0;
        larf::Vector y2(2);
        y2 << 0.0, 1.0;
        const larf::Dataset d2(x2, y2);
        larf::Vector q(2);
        q << 0.0, 0.0;
        const auto mu = larf::attention::leaf_mu(q, {0, 1}, d2, 1.0);
        CHECK(mu[0] == Catch::Approx(0.88079707797788244).margin(1e-12));
        CHECK(mu[1] == Catch::Approx(0.11920292202211756).margin(1e-12));
    }
    SECTION("locality: approaching a member raises its weight") {
        double prev = 0.0;
        for (double qx : {0.9, 0.6, 0.3, 0.1}) {
            larf::Vector q(1);
            q << qx;
            const auto mu = larf::attention::leaf_mu(q, {0, 1}, data, 1.0);
            CHECK(mu[0] > prev);
            prev = mu[0];
        }
    }
}

TEST_CASE("leaf key/value pairs") {
    Fixture fx;
    SECTION("infinite-temperature limit reproduces the plain tree statistics") {
        for (std::size_t k = 0; k < fx.forest.n_trees(); ++k) {
            const larf::Vector q = fx.data.features.row(1).transpose();
            const auto kv = larf::attention::leaf_key_value(q, k, fx.forest, fx.data, 1e9);
            const auto& members = larf::leaf_members(fx.forest, k, q);
            larf::Vector centroid = larf::Vector::Zero(fx.data.features.cols());
            double mean = 0.0;
            for (auto j : members) {
                centroid += fx.data.features.row(j).transpose();
                mean += fx.data.targets(j);
            }
            centroid /= static_cast<double>(members.size());
            mean /= static_cast<double>(members.size());
            CHECK((kv.key - centroid).cwiseAbs().maxCoeff() < 1e-6);
            CHECK(std::abs(kv.value - mean) < 1e-6);
            const int leaf = fx.forest.trees[k].leaf_index(q);
            CHECK(std::abs(kv.value -
                           fx.forest.trees[k].nodes[static_cast<std::size_t>(leaf)].mean_target) <
                  1e-6);
        }
    }
    SECTION("key stays in the member bounding box, value in the member target range") {
        larf::Rng rng(9);
        for (int it = 0; it < 20; ++it) {
            larf::Vector q(fx.data.features.cols());
            for (Eigen::Index c = 0; c < q.size(); ++c) q(c) = rng.uniform();
            for (std::size_t k = 0; k < fx.forest.n_trees(); ++k) {
                const auto kv = larf::attention::leaf_key_value(q, k, fx.forest, fx.data, 0.5);
                const auto& members = larf::leaf_members(fx.forest, k, q);
                larf::Vector lo = fx.data.features.row(members[0]).transpose();
                larf::Vector hi = lo;
                double ylo = fx.data.targets(members[0]), yhi = ylo;
                for (auto j : members) {
                    lo = lo.cwiseMin(fx.data.features.row(j).transpose());
                    hi = hi.cwiseMax(fx.data.features.row(j).transpose());
                    ylo = std::min(ylo, fx.data.targets(j));
                    yhi = std::max(yhi, fx.data.targets(j));
                }
                CHECK(((kv.key.array() >= lo.array() - 1e-12) &&
                       (kv.key.array() <= hi.array() + 1e-12))
                          .all());
                CHECK(kv.value >= ylo - 1e-12);
                CHECK(kv.value <= yhi + 1e-12);
            }
        }
    }
    SECTION("singleton leaf returns the member itself") {
        larf::Tree tree;
        tree.nodes.resize(3);
        tree.nodes[0].feature = 0;
        tree.nodes[0].threshold = 0.5;
        tree.nodes[0].left = 1;
        tree.nodes[0].right = 2;
        tree.nodes[1].members = {0};
        tree.nodes[1].mean_target = 1.0;
        tree.nodes[2].members = {1};
        tree.nodes[2].mean_target = 5.0;
        larf::Forest forest;
        forest.trees.push_back(tree);
        forest.n_features = 1;
        forest.n_train_rows = 2;
        larf::Matrix x(2, 1);
        x << 0.0, 1.0;
        larf::Vector y(2);
        y << 1.0, 5.0;
        const larf::Dataset data(x, y);
        larf::Vector q(1);
        q << 0.9;
        const auto kv = larf::attention::leaf_key_value(q, 0, forest, data, 1.0);
        CHECK(kv.key(0) == 1.0);
        CHECK(kv.value == 5.0);
    }
}

TEST_CASE("attention features") {
    SECTION("single tree gives a trivial tree softmax") {
        Fixture fx(40, 1, 7);
        const auto f = larf::attention::compute_features(
            fx.data.features, fx.forest, fx.data, KernelParams::with_default_taus(1.0, 3), true);
        for (std::size_t s = 0; s < f.n_samples; ++s)
            for (std::size_t j = 0; j < f.heads; ++j) {
                CHECK(f.sigma(s, j, 0) == 1.0);
                CHECK(f.c(s, j, 0) == f.d(s, 0));
            }
    }
    SECTION("identical trees share the value mass evenly") {
        larf::Forest forest;
        larf::Tree stump;
        stump.nodes.resize(1);
        stump.nodes[0].mean_target = 2.0;
        stump.nodes[0].members = {0, 1, 2};
        forest.trees = {stump, stump, stump, stump};
        forest.n_features = 2;
        forest.n_train_rows = 3;
        larf::Matrix x(3, 2);
        x << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
        larf::Vector y(3);
        y << 1.0, 2.0, 4.0;
        const larf::Dataset data(x, y);
        const auto f = larf::attention::compute_features(data.features, forest, data,
                                                         KernelParams{1.0, {0.5, 2.0}}, true);
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t k = 0; k < 4; ++k) {
                    CHECK(f.sigma(s, j, k) == Catch::Approx(0.25).margin(1e-15));
                    CHECK(f.c(s, j, k) == Catch::Approx(f.d(s, k) / 4.0).margin(1e-15));
                }
    }
    SECTION("matches the straight-line oracle") {
        Fixture fx(50, 6, 11);
        const std::vector<double> taus = {0.3, 1.0, 7.0};
        for (bool leaf_attention : {true, false}) {
            const auto f = larf::attention::compute_features(fx.data.features, fx.forest, fx.data,
                                                             KernelParams{0.8, taus}, leaf_attention);
            const auto want = oracle::straight_line_features(fx.data.features, fx.forest, fx.data,
                                                             0.8, taus, leaf_attention);
            for (std::size_t s = 0; s < f.n_samples; ++s)
                for (std::size_t j = 0; j < f.heads; ++j)
                    for (std::size_t k = 0; k < f.n_trees; ++k) {
                        CHECK(f.sigma(s, j, k) == Catch::Approx(want.sigma[s][j][k]).margin(1e-14));
                        CHECK(f.c(s, j, k) == Catch::Approx(want.c[s][j][k]).margin(1e-14));
                        CHECK(f.d(s, k) == Catch::Approx(want.d[s][k]).margin(1e-14));
                    }
        }
    }
    SECTION("tree softmax rows are normalized") {
        Fixture fx(70, 12, 13);
        const auto f = larf::attention::compute_features(
            fx.data.features, fx.forest, fx.data, KernelParams::with_default_taus(1.0, 5), true);
        for (std::size_t s = 0; s < f.n_samples; ++s)
            for (std::size_t j = 0; j < f.heads; ++j) {
                double sum = 0.0;
                for (std::size_t k = 0; k < f.n_trees; ++k) {
                    sum += f.sigma(s, j, k);
                    CHECK(f.sigma(s, j, k) >= 0.0);
                }
                CHECK(std::abs(sum - 1.0) <= 1e-12);
            }
    }
    SECTION("leaf attention converges to plain statistics as tau0 grows") {
        Fixture fx(60, 8, 17);
        const std::vector<double> taus = {1.0};
        const auto larf_f = larf::attention::compute_features(fx.data.features, fx.forest, fx.data,
                                                              KernelParams{1e9, taus}, true);
        const auto arf_f = larf::attention::compute_features(fx.data.features, fx.forest, fx.data,
                                                             KernelParams{1e9, taus}, false);
        for (std::size_t s = 0; s < larf_f.n_samples; ++s)
            for (std::size_t k = 0; k < larf_f.n_trees; ++k) {
                CHECK(std::abs(larf_f.d(s, k) - arf_f.d(s, k)) < 1e-6);
                CHECK(std::abs(larf_f.c(s, 0, k) - arf_f.c(s, 0, k)) < 1e-6);
            }
    }
    SECTION("dimension and parameter validation") {
        Fixture fx(40, 2, 19);
        larf::Matrix bad(2, fx.data.features.cols() + 1);
        bad.setZero();
        CHECK_THROWS_AS(larf::attention::compute_features(bad, fx.forest, fx.data,
                                                          KernelParams{1.0, {1.0}}, true),
                        larf::DimensionMismatch);
        CHECK_THROWS_AS(larf::attention::compute_features(fx.data.features, fx.forest, fx.data,
                                                          KernelParams{0.0, {1.0}}, true),
                        larf::NonpositiveTemperature);
        CHECK_THROWS_AS(larf::attention::compute_features(fx.data.features, fx.forest, fx.data,
                                                          KernelParams{1.0, {}}, true),
                        larf::InvalidSpec);
    }
}
