#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "larf/csv.hpp"
#include "larf/dataset.hpp"
#include "larf/forest.hpp"
#include "larf/generators.hpp"
#include "larf/metrics.hpp"
#include "larf/models.hpp"
#include "larf/stats.hpp"
#include "larf/threading.hpp"

namespace larf {
namespace eval {

constexpr int kReportSchemaVersion = 1;
constexpr const char* kBaselineModel = "baseline";

// Grid search for the leaf-level temperature by k-fold cross-validation on
// the training set: highest mean validation R^2 wins, ties go to the smaller
// value. Fold forests are fitted on fold-train rows standardized with
// fold-train statistics, so validation folds never leak into the fit.
// Variants without leaf attention ignore tau0 entirely; every grid point
// scores identically and the tie rule picks the smallest, which is returned
// without the redundant fits.
struct Tau0Selection {
    double tau0 = 1.0;
    std::vector<double> grid;
    std::vector<double> cv_r2; // mean validation R^2 per grid entry
};

inline Tau0Selection select_tau0(const Dataset& train, ModelVariant variant,
                                 const ForestConfig& forest_config,
                                 const std::vector<double>& tau0_grid,
                                 const std::vector<double>& taus, const FitOptions& opts,
                                 const SplitSpec& split_spec) {
    if (tau0_grid.empty()) throw InvalidSpec("tau0 grid must be nonempty");
    Tau0Selection sel;
    sel.grid = tau0_grid;
    std::sort(sel.grid.begin(), sel.grid.end());

    if (!uses_leaf_attention(variant)) {
        sel.tau0 = sel.grid.front();
        return sel;
    }

    const auto folds = fold_indices(train.n_rows(), split_spec.folds, split_spec.seed);

    struct FoldContext {
        Standardizer transform;
        Dataset train_std;
        std::shared_ptr<const Forest> forest;
        Dataset validation_raw;
    };
    std::vector<FoldContext> contexts;
    contexts.reserve(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldContext ctx;
        const Dataset fold_train = train.subset(folds[f].train);
        auto [transform, train_std] = standardize(fold_train);
        ForestConfig cfg = forest_config;
        cfg.rng_seed = mix_seed(forest_config.rng_seed, 0xcf01dULL + f);
        ctx.transform = std::move(transform);
        ctx.forest = std::make_shared<const Forest>(fit_forest(train_std, cfg, opts.n_threads));
        ctx.train_std = std::move(train_std);
        ctx.validation_raw = train.subset(folds[f].validation);
        contexts.push_back(std::move(ctx));
    }

    sel.cv_r2.assign(sel.grid.size(), 0.0);
    for (std::size_t g = 0; g < sel.grid.size(); ++g) {
        double sum = 0.0;
        for (const auto& ctx : contexts) {
            attention::KernelParams kernel{sel.grid[g], taus};
            TrainedModel model =
                fit_model(variant, ctx.forest, ctx.train_std, kernel, ctx.transform, opts);
            const Vector pred = model.predict_batch(ctx.validation_raw.features, opts.n_threads);
            sum += r2(ctx.validation_raw.targets, pred);
        }
        sel.cv_r2[g] = sum / static_cast<double>(contexts.size());
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < sel.grid.size(); ++g)
        if (sel.cv_r2[g] > sel.cv_r2[best]) best = g;
    sel.tau0 = sel.grid[best];
    return sel;
}

struct CsvSource {
    std::string path;
    ColumnRef target = std::string("y");
    bool has_header = true;
};

struct DatasetSource {
    std::string name;
    std::optional<GeneratorSpec> generator;
    std::optional<CsvSource> csv;
    bool regenerate_per_repeat = true; // generators: fresh draw per repeat

    void validate() const {
        if (generator.has_value() == csv.has_value())
            throw InvalidSpec("dataset source '" + name + "' needs exactly one of generator|csv");
        if (name.empty()) throw InvalidSpec("dataset source needs a name");
    }
};

struct BenchmarkPlan {
    std::vector<DatasetSource> datasets;
    std::vector<std::string> models;          // "baseline" and/or variant names
    std::vector<ForestKind> forest_kinds = {ForestKind::RF};
    ForestConfig forest;                      // kind and rng_seed overridden per cell
    std::size_t m_heads = 10;
    std::vector<double> taus;                 // empty: default grid from m_heads
    std::vector<double> tau0_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    double varsigma = 1e-3;
    std::optional<double> fixed_epsilon;
    int repeats = 10;
    int folds = 3;
    double train_fraction = 0.8;
    std::uint64_t base_seed = 0;

    std::vector<double> resolved_taus() const {
        return taus.empty() ? attention::default_taus(m_heads) : taus;
    }

    void validate() const {
        if (datasets.empty()) throw InvalidSpec("plan needs at least one dataset");
        if (models.empty()) throw InvalidSpec("plan needs at least one model");
        if (forest_kinds.empty()) throw InvalidSpec("plan needs at least one forest kind");
        if (repeats < 1) throw InvalidSpec("repeats must be >= 1");
        if (m_heads < 1) throw InvalidSpec("M must be >= 1");
        for (const auto& d : datasets) d.validate();
        for (const auto& m : models)
            if (m != kBaselineModel) variant_from_string(m); // throws on unknown names
        forest.validate();
        SplitSpec{train_fraction, 0, folds}.validate();
    }
};

struct CellStats {
    std::string dataset;
    std::string kind;
    std::string model;
    std::vector<double> r2_values;
    std::vector<double> mae_values;
    std::vector<double> tau0_selected; // empty for the baseline
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> errors;
    double wall_seconds = 0.0;

    static double mean(const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }
    static double sd(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    double r2_mean() const { return mean(r2_values); }
    double r2_sd() const { return sd(r2_values); }
    double mae_mean() const { return mean(mae_values); }
    double mae_sd() const { return sd(mae_values); }

    // Most frequent selected tau0, smaller value on ties.
    double tau0_mode() const {
        if (tau0_selected.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::map<double, int> counts;
        for (double t : tau0_selected) counts[t]++;
        double best = tau0_selected.front();
        int best_count = 0;
        for (const auto& [value, count] : counts)
            if (count > best_count) {
                best = value;
                best_count = count;
            }
        return best;
    }
};

struct EvaluationReport {
    BenchmarkPlan plan;
    std::vector<CellStats> cells;
    double total_wall_seconds = 0.0;

    const CellStats* find(const std::string& dataset, const std::string& kind,
                          const std::string& model) const {
        for (const auto& c : cells)
            if (c.dataset == dataset && c.kind == kind && c.model == model) return &c;
        return nullptr;
    }
};

namespace detail {

struct RepeatOutcome {
    // per model: metrics or an error message
    std::vector<double> r2;
    std::vector<double> mae;
    std::vector<double> tau0;
    std::vector<std::string> error;
    double seconds = 0.0;
};

inline std::uint64_t repeat_seed(std::uint64_t base, std::size_t dataset_index, int repeat) {
    return mix_seed(base, 0xbe6cULL + dataset_index * 7919ULL + static_cast<std::uint64_t>(repeat));
}

} // namespace detail

// Runs the full protocol for every (dataset, forest kind, model) cell:
// per repeat draw the data, split off a held-out fifth, pick tau0 by CV on
// the training part, fit on the whole training part, score on the test part.
// Repeat seeds are bound to (dataset, repeat), so every kind and model sees
// identical splits and the report does not depend on the worker count.
inline EvaluationReport run_benchmark(const BenchmarkPlan& plan, int n_threads = 0) {
    plan.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const std::vector<double> taus = plan.resolved_taus();

    // CSV sources load once, up front; a bad path fails the whole run early.
    std::vector<std::optional<Dataset>> csv_cache(plan.datasets.size());
    for (std::size_t d = 0; d < plan.datasets.size(); ++d)
        if (plan.datasets[d].csv) {
            const auto& src = *plan.datasets[d].csv;
            csv_cache[d] = load_csv(src.path, src.target, src.has_header);
        }

    const std::size_t kinds = plan.forest_kinds.size();
    const std::size_t tasks = plan.datasets.size() * kinds * static_cast<std::size_t>(plan.repeats);
    std::vector<detail::RepeatOutcome> outcomes(tasks);

    parallel_for(tasks, n_threads, [&](std::size_t task) {
        const std::size_t d = task / (kinds * static_cast<std::size_t>(plan.repeats));
        const std::size_t rem = task % (kinds * static_cast<std::size_t>(plan.repeats));
        const std::size_t kind_index = rem / static_cast<std::size_t>(plan.repeats);
        const int repeat = static_cast<int>(rem % static_cast<std::size_t>(plan.repeats));
        const ForestKind kind = plan.forest_kinds[kind_index];
        const std::uint64_t seed = detail::repeat_seed(plan.base_seed, d, repeat);

        auto& out = outcomes[task];
        out.r2.assign(plan.models.size(), std::numeric_limits<double>::quiet_NaN());
        out.mae.assign(plan.models.size(), std::numeric_limits<double>::quiet_NaN());
        out.tau0.assign(plan.models.size(), std::numeric_limits<double>::quiet_NaN());
        out.error.assign(plan.models.size(), "");
        const auto t0 = std::chrono::steady_clock::now();

        Dataset data;
        try {
            if (plan.datasets[d].generator) {
                GeneratorSpec spec = *plan.datasets[d].generator;
                if (plan.datasets[d].regenerate_per_repeat) spec.seed = mix_seed(seed, 0xda7aULL);
                data = generate(spec);
            } else {
                data = *csv_cache[d];
            }
        } catch (const std::exception& e) {
            for (auto& msg : out.error) msg = e.what();
            return;
        }

        try {
            const SplitSpec split_spec{plan.train_fraction, seed, plan.folds};
            auto [train_raw, test_raw] = split(data, split_spec);
            auto [transform, train_std] = standardize(train_raw);

            ForestConfig cfg = plan.forest;
            cfg.kind = kind;
            cfg.rng_seed = mix_seed(seed, 0xf07e5ULL + kind_index);
            auto forest = std::make_shared<const Forest>(fit_forest(train_std, cfg, 1));

            FitOptions opts;
            opts.varsigma = plan.varsigma;
            opts.fixed_epsilon = plan.fixed_epsilon;

            for (std::size_t m = 0; m < plan.models.size(); ++m) {
                try {
                    Vector pred(test_raw.features.rows());
                    if (plan.models[m] == kBaselineModel) {
                        for (Eigen::Index i = 0; i < test_raw.features.rows(); ++i)
                            pred(i) = predict_baseline(
                                *forest, transform.apply(test_raw.features.row(i).transpose()));
                    } else {
                        const ModelVariant variant = variant_from_string(plan.models[m]);
                        const auto sel = select_tau0(train_raw, variant, cfg, plan.tau0_grid, taus,
                                                     opts, split_spec);
                        attention::KernelParams kernel{sel.tau0, taus};
                        TrainedModel model = fit_model(variant, forest, train_std, kernel, transform, opts);
                        pred = model.predict_batch(test_raw.features, 1);
                        out.tau0[m] = sel.tau0;
                    }
                    out.mae[m] = mae(test_raw.targets, pred);
                    try {
                        out.r2[m] = r2(test_raw.targets, pred);
                    } catch (const ConstantTarget& e) {
                        // MAE is still meaningful; R^2 stays unreported
                        out.error[m] = e.what();
                    }
                } catch (const std::exception& e) {
                    out.error[m] = e.what();
                }
            }
        } catch (const std::exception& e) {
            for (std::size_t m = 0; m < plan.models.size(); ++m)
                if (out.error[m].empty() && std::isnan(out.r2[m])) out.error[m] = e.what();
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    EvaluationReport report;
    report.plan = plan;
    report.plan.taus = taus;
    for (std::size_t d = 0; d < plan.datasets.size(); ++d)
        for (std::size_t k = 0; k < kinds; ++k)
            for (std::size_t m = 0; m < plan.models.size(); ++m) {
                CellStats cell;
                cell.dataset = plan.datasets[d].name;
                cell.kind = to_string(plan.forest_kinds[k]);
                cell.model = plan.models[m];
                for (int r = 0; r < plan.repeats; ++r) {
                    const std::size_t task =
                        (d * kinds + k) * static_cast<std::size_t>(plan.repeats) +
                        static_cast<std::size_t>(r);
                    const auto& out = outcomes[task];
                    cell.seeds.push_back(detail::repeat_seed(plan.base_seed, d, r));
                    if (!out.error[m].empty())
                        cell.errors.push_back("repeat " + std::to_string(r) + ": " + out.error[m]);
                    if (!std::isnan(out.r2[m])) cell.r2_values.push_back(out.r2[m]);
                    if (!std::isnan(out.mae[m])) cell.mae_values.push_back(out.mae[m]);
                    if (!std::isnan(out.tau0[m])) cell.tau0_selected.push_back(out.tau0[m]);
                    cell.wall_seconds += out.seconds / static_cast<double>(plan.models.size());
                }
                report.cells.push_back(std::move(cell));
            }
    report.total_wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

// Paired t-test over per-dataset mean R^2 deltas (model_a - model_b) on one
// forest kind, df = #datasets - 1.
struct PairedComparison {
    std::vector<std::string> datasets;
    stats::PairedTResult test;
};

inline PairedComparison paired_compare(const EvaluationReport& report, const std::string& model_a,
                                       const std::string& model_b, const std::string& kind) {
    std::vector<double> deltas;
    PairedComparison cmp;
    for (const auto& src : report.plan.datasets) {
        const CellStats* a = report.find(src.name, kind, model_a);
        const CellStats* b = report.find(src.name, kind, model_b);
        if (!a || !b)
            throw MismatchedCells("models '" + model_a + "' and '" + model_b +
                                  "' not both present for dataset '" + src.name + "' (" + kind + ")");
        if (a->r2_values.empty() || b->r2_values.empty())
            throw MismatchedCells("no successful repeats for dataset '" + src.name + "'");
        if (a->seeds != b->seeds) throw MismatchedCells("seed lists differ between models");
        cmp.datasets.push_back(src.name);
        deltas.push_back(a->r2_mean() - b->r2_mean());
    }
    cmp.test = stats::paired_t_test(deltas);
    return cmp;
}

inline PairedComparison paired_compare(const EvaluationReport& report, const std::string& model_a,
                                       const std::string& model_b) {
    return paired_compare(report, model_a, model_b, to_string(report.plan.forest_kinds.at(0)));
}

} // namespace eval
} // namespace larf
