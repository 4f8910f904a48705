// Command-line front end: dataset generation, model training, prediction,
// benchmark runs, and paired model comparison. Every command is fully
// seeded from its inputs; re-running with the same configuration rewrites
// byte-identical artifacts (timings go to run_meta.json only).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <larf/larf.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Setup/validation failures exit 1; failures during compute or write exit 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kRunConfigSchemaVersion = 1;

struct RunConfig {
    std::uint64_t top_seed = 0;
    larf::eval::DatasetSource dataset;
    larf::ForestConfig forest;
    larf::ModelVariant variant = larf::ModelVariant::EpsM_w_LARF;
    std::size_t m_heads = 10;
    std::vector<double> taus;      // empty: defaults from m_heads
    std::optional<double> tau0;    // fixed leaf temperature
    std::vector<double> tau0_grid; // nonempty: select by CV
    larf::FitOptions fit;
    larf::SplitSpec eval_split;
    int repeats = 10;
    std::string output_dir;
    std::optional<std::string> schema_path;

    std::vector<double> resolved_taus() const {
        return taus.empty() ? larf::attention::default_taus(m_heads) : taus;
    }
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

RunConfig parse_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    const json j = read_json_file(path);
    if (j.value("schema_version", 0) != kRunConfigSchemaVersion)
        throw ValidationError("config " + path + ": unsupported schema_version");
    RunConfig cfg;
    cfg.top_seed = seed_override.value_or(j.value("seed", std::uint64_t{0}));

    if (!j.contains("dataset")) throw ValidationError("config needs a 'dataset' section");
    {
        json dj = j.at("dataset");
        if (dj.contains("generator") == dj.contains("csv"))
            throw ValidationError("dataset section needs exactly one of generator|csv");
        if (!dj.contains("name"))
            dj["name"] = dj.contains("generator") ? dj.at("generator").value("kind", "generated")
                                                  : std::string("csv");
        if (dj.contains("csv") && dj.at("csv").contains("schema")) {
            cfg.schema_path = dj.at("csv").at("schema").get<std::string>();
            dj.at("csv").erase("schema");
        }
        if (dj.contains("generator") && !dj.at("generator").contains("seed"))
            dj["generator"]["seed"] = larf::mix_seed(cfg.top_seed, 0x6e0ULL);
        cfg.dataset = larf::eval::dataset_source_from_json(dj);
    }

    if (j.contains("forest")) {
        const json& f = j.at("forest");
        cfg.forest.n_trees = f.value("n_trees", std::size_t{100});
        cfg.forest.kind = larf::forest_kind_from_string(f.value("kind", "rf"));
        cfg.forest.min_leaf_size = f.value("min_leaf_size", std::size_t{10});
        cfg.forest.max_depth = f.value("max_depth", -1);
        cfg.forest.features_per_split = f.value("features_per_split", std::size_t{0});
        cfg.forest.rng_seed =
            f.contains("seed") ? f.at("seed").get<std::uint64_t>() : larf::mix_seed(cfg.top_seed, 0xf0eULL);
    } else {
        cfg.forest.rng_seed = larf::mix_seed(cfg.top_seed, 0xf0eULL);
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        cfg.variant = larf::variant_from_string(m.value("variant", "epsM-w-LARF"));
        cfg.m_heads = m.value("M", std::size_t{10});
        if (m.contains("taus")) cfg.taus = m.at("taus").get<std::vector<double>>();
        cfg.fit.varsigma = m.value("varsigma", 1e-3);
        if (m.contains("fixed_epsilon") && !m.at("fixed_epsilon").is_null())
            cfg.fit.fixed_epsilon = m.at("fixed_epsilon").get<double>();
        if (m.contains("tau0") && !m.at("tau0").is_null()) cfg.tau0 = m.at("tau0").get<double>();
        if (m.contains("tau0_grid")) cfg.tau0_grid = m.at("tau0_grid").get<std::vector<double>>();
    }
    if (!cfg.tau0 && cfg.tau0_grid.empty()) cfg.tau0 = 1.0;

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        cfg.eval_split.train_fraction = e.value("train_fraction", 0.8);
        cfg.eval_split.folds = e.value("folds", 3);
        cfg.eval_split.seed =
            e.contains("seed") ? e.at("seed").get<std::uint64_t>() : larf::mix_seed(cfg.top_seed, 0xe7a1ULL);
        cfg.repeats = e.value("repeats", 10);
    } else {
        cfg.eval_split.seed = larf::mix_seed(cfg.top_seed, 0xe7a1ULL);
    }

    cfg.output_dir = j.value("output_dir", "");

    // fail on anything invalid before touching outputs
    cfg.forest.validate();
    cfg.eval_split.validate();
    cfg.fit.validate();
    if (cfg.m_heads < 1) throw ValidationError("model.M must be >= 1");
    larf::attention::KernelParams{cfg.tau0.value_or(cfg.tau0_grid.empty() ? 1.0 : cfg.tau0_grid.front()),
                                  cfg.resolved_taus()}
        .validate();
    if (cfg.dataset.csv) {
        if (!fs::exists(cfg.dataset.csv->path))
            throw ValidationError("dataset file not found: " + cfg.dataset.csv->path);
        if (cfg.schema_path && !fs::exists(*cfg.schema_path))
            throw ValidationError("schema file not found: " + *cfg.schema_path);
    }
    return cfg;
}

json resolved_config_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = kRunConfigSchemaVersion;
    j["seed"] = cfg.top_seed;
    j["dataset"] = larf::eval::dataset_source_to_json(cfg.dataset);
    if (cfg.schema_path) j["dataset"]["csv"]["schema"] = *cfg.schema_path;
    j["forest"] = {{"n_trees", cfg.forest.n_trees},
                   {"kind", larf::to_string(cfg.forest.kind)},
                   {"min_leaf_size", cfg.forest.min_leaf_size},
                   {"max_depth", cfg.forest.max_depth},
                   {"features_per_split", cfg.forest.features_per_split},
                   {"seed", cfg.forest.rng_seed}};
    j["model"] = {{"variant", larf::to_string(cfg.variant)},
                  {"M", cfg.m_heads},
                  {"taus", cfg.resolved_taus()},
                  {"varsigma", cfg.fit.varsigma},
                  {"fixed_epsilon", cfg.fit.fixed_epsilon ? json(*cfg.fit.fixed_epsilon) : json(nullptr)},
                  {"tau0", cfg.tau0 ? json(*cfg.tau0) : json(nullptr)},
                  {"tau0_grid", cfg.tau0_grid}};
    j["eval"] = {{"train_fraction", cfg.eval_split.train_fraction},
                 {"folds", cfg.eval_split.folds},
                 {"seed", cfg.eval_split.seed},
                 {"repeats", cfg.repeats}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

larf::Dataset load_config_dataset(const RunConfig& cfg) {
    if (cfg.dataset.generator) return larf::generate(*cfg.dataset.generator);
    const auto& csv = *cfg.dataset.csv;
    if (cfg.schema_path) {
        const larf::DatasetSchema schema = larf::schema_from_json(read_json_file(*cfg.schema_path));
        return larf::load_csv_with_schema(csv.path, schema);
    }
    return larf::load_csv(csv.path, csv.target, csv.has_header);
}

int cmd_generate(const std::string& kind_str, std::size_t n, std::optional<std::size_t> m,
                 std::optional<double> noise, std::uint64_t seed, const std::string& out_path) {
    larf::GeneratorSpec spec;
    spec.kind = larf::generator_kind_from_string(kind_str);
    spec.n = n;
    spec.m = m.value_or(larf::default_generator_m(spec.kind));
    spec.noise_sd = noise.value_or(larf::default_generator_noise(spec.kind));
    spec.seed = seed;
    spec.validate();

    const larf::Dataset data = larf::generate(spec);
    larf::write_csv(out_path, data);
    std::cout << "wrote " << data.n_rows() << " rows x " << data.n_features() + 1 << " columns to "
              << out_path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir, int threads) {
    const larf::Dataset data = load_config_dataset(cfg);

    larf::FitOptions fit = cfg.fit;
    fit.n_threads = threads;
    const std::vector<double> taus = cfg.resolved_taus();

    double tau0 = cfg.tau0.value_or(1.0);
    larf::eval::Tau0Selection selection;
    const bool grid_search = !cfg.tau0_grid.empty();
    if (grid_search) {
        selection = larf::eval::select_tau0(data, cfg.variant, cfg.forest, cfg.tau0_grid, taus, fit,
                                            cfg.eval_split);
        tau0 = selection.tau0;
    }

    auto [transform, data_std] = larf::standardize(data);
    auto forest = std::make_shared<const larf::Forest>(larf::fit_forest(data_std, cfg.forest, threads));
    const larf::attention::KernelParams kernel{tau0, taus};
    const larf::TrainedModel model =
        larf::fit_model(cfg.variant, forest, data_std, kernel, transform, fit);

    fs::create_directories(out_dir);
    larf::save_model(model, (fs::path(out_dir) / "model.json").string());
    larf::save_json(resolved_config_json(cfg), (fs::path(out_dir) / "config_resolved.json").string());

    std::size_t zero_gammas = 0;
    for (Eigen::Index j = 0; j < model.params.gammas.rows(); ++j)
        for (Eigen::Index k = 0; k < model.params.gammas.cols(); ++k)
            zero_gammas += model.params.gammas(j, k) <= 1e-12 ? 1 : 0;

    std::ostringstream summary;
    summary << "variant: " << larf::to_string(model.variant) << "\n"
            << "dataset: " << cfg.dataset.name << " (" << data.n_rows() << " rows, "
            << data.n_features() << " features)\n"
            << "forest: " << larf::to_string(cfg.forest.kind) << ", " << forest->n_trees()
            << " trees, min leaf " << cfg.forest.min_leaf_size << "\n"
            << "M: " << cfg.m_heads << "\n"
            << "tau0: " << larf::format_double(tau0) << (grid_search ? " (grid search)" : " (fixed)")
            << "\n";
    if (grid_search) {
        summary << "tau0 grid CV R^2:";
        if (selection.cv_r2.empty()) {
            summary << " not evaluated (variant has no leaf attention; smallest grid value used)";
        } else {
            for (std::size_t g = 0; g < selection.grid.size(); ++g)
                summary << " " << larf::format_double(selection.grid[g]) << ":"
                        << larf::format_double(selection.cv_r2[g]);
        }
        summary << "\n";
    }
    summary << "training MSE: " << larf::format_double(model.training_mse) << "\n"
            << "epsilons:";
    for (Eigen::Index j = 0; j < model.params.epsilons.size(); ++j)
        summary << " " << larf::format_double(model.params.epsilons(j));
    summary << "\nmean epsilon: " << larf::format_double(model.params.mean_epsilon()) << "\n"
            << "gamma sparsity: " << zero_gammas << "/"
            << model.params.gammas.rows() * model.params.gammas.cols() << " entries <= 1e-12\n"
            << "qp converged: " << (model.qp_converged ? "yes" : "no") << "\n";

    std::ofstream sf(fs::path(out_dir) / "summary.txt");
    if (!sf) throw larf::IoError("cannot write summary.txt");
    sf << summary.str();
    std::cout << summary.str();
    std::cout << "model written to " << (fs::path(out_dir) / "model.json").string() << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, bool has_header,
                const std::string& out_path, int threads) {
    const larf::TrainedModel model = larf::load_model(model_path);
    auto [features, names] = larf::load_feature_csv(data_path, has_header);

    if (features.rows() > 0 && features.cols() != model.standardizer.mean.size())
        throw larf::DimensionMismatch(
            "model expects " + std::to_string(model.standardizer.mean.size()) +
            " feature columns, input file has " + std::to_string(features.cols()));

    const larf::Vector pred =
        features.rows() > 0 ? model.predict_batch(features, threads) : larf::Vector();
    std::ofstream out(out_path);
    if (!out) throw larf::IoError("cannot write " + out_path);
    for (Eigen::Index i = 0; i < pred.size(); ++i) out << larf::format_double(pred(i)) << '\n';
    if (!out) throw larf::IoError("write failed: " + out_path);
    std::cout << "wrote " << pred.size() << " predictions to " << out_path << "\n";
    return 0;
}

int cmd_benchmark(const std::string& plan_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override, int threads) {
    larf::eval::BenchmarkPlan plan = larf::eval::plan_from_json(read_json_file(plan_path));
    if (seed_override) plan.base_seed = *seed_override;
    for (const auto& d : plan.datasets)
        if (d.csv && !fs::exists(d.csv->path))
            throw ValidationError("dataset file not found: " + d.csv->path);

    const larf::eval::EvaluationReport report = larf::eval::run_benchmark(plan, threads);
    larf::eval::write_report_files(report, out_dir);
    std::cout << larf::eval::report_to_table(report);
    std::cout << "report written to " << out_dir << " ("
              << larf::format_double(report.total_wall_seconds) << " s)\n";

    std::size_t ok_cells = 0, failed_cells = 0;
    for (const auto& c : report.cells)
        (c.r2_values.empty() ? failed_cells : ok_cells)++;
    if (failed_cells > 0)
        std::cout << failed_cells << " of " << report.cells.size()
                  << " cells failed; see report.json errors\n";
    return ok_cells > 0 ? 0 : 2;
}

int cmd_compare(const std::string& report_path, const std::string& model_a,
                const std::string& model_b, std::optional<std::string> kind) {
    const larf::eval::EvaluationReport report =
        larf::eval::report_from_json(read_json_file(report_path));
    const std::string kind_str =
        kind.value_or(larf::to_string(report.plan.forest_kinds.at(0)));
    const auto cmp = larf::eval::paired_compare(report, model_a, model_b, kind_str);

    std::cout << "paired R^2 comparison: " << model_a << " - " << model_b << " (" << kind_str
              << " forests)\n";
    for (std::size_t i = 0; i < cmp.datasets.size(); ++i)
        std::cout << "  " << cmp.datasets[i] << ": " << larf::format_double(cmp.test.deltas[i])
                  << "\n";
    std::cout << "mean delta: " << larf::format_double(cmp.test.mean_delta) << "\n"
              << "t statistic: " << larf::format_double(cmp.test.t_statistic) << " (df "
              << larf::format_double(cmp.test.df) << ")\n"
              << "two-sided p: " << larf::format_double(cmp.test.p_value) << "\n";
    if (cmp.test.degenerate) std::cout << "note: zero-variance deltas, t is degenerate\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level attention random forests for tabular regression"};
    app.require_subcommand(1);

    int threads = 0; // 0: LARF_THREADS env or hardware default
    app.add_option("--threads", threads, "worker threads (default: LARF_THREADS or hardware)");

    auto* gen = app.add_subcommand("generate", "write a synthetic regression dataset as CSV");
    std::string gen_kind = "friedman1", gen_out;
    std::size_t gen_n = 100;
    std::optional<std::size_t> gen_m;
    std::optional<double> gen_noise;
    std::uint64_t gen_seed = 0;
    gen->add_option("--kind", gen_kind, "friedman1|friedman2|friedman3|regression|sparse");
    gen->add_option("--n", gen_n, "rows");
    gen->add_option("--m", gen_m, "feature count (kind default if omitted)");
    gen->add_option("--noise", gen_noise, "noise sd (kind default if omitted)");
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    auto* train = app.add_subcommand("train", "fit a model from a run config");
    std::string train_config, train_out;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--config", train_config, "run config JSON")->required();
    train->add_option("--out", train_out, "output directory (default: config output_dir)");
    train->add_option("--seed", train_seed, "override config top-level seed");

    auto* predict = app.add_subcommand("predict", "predict targets for a feature CSV");
    std::string pred_model, pred_data, pred_out;
    bool pred_no_header = false;
    predict->add_option("--model", pred_model, "model.json path")->required();
    predict->add_option("--data", pred_data, "feature CSV (no target column)")->required();
    predict->add_option("--out", pred_out, "output predictions path")->required();
    predict->add_flag("--no-header", pred_no_header, "input CSV has no header row");

    auto* bench = app.add_subcommand("benchmark", "run a benchmark plan");
    std::string bench_plan, bench_out = "bench_out";
    std::optional<std::uint64_t> bench_seed;
    bench->add_option("--plan", bench_plan, "benchmark plan JSON")->required();
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--seed", bench_seed, "override plan base seed");

    auto* compare = app.add_subcommand("compare", "paired t comparison of two models in a report");
    std::string cmp_report, cmp_a, cmp_b;
    std::optional<std::string> cmp_kind;
    compare->add_option("--report", cmp_report, "report.json path")->required();
    compare->add_option("--model-a", cmp_a, "first model name")->required();
    compare->add_option("--model-b", cmp_b, "second model name")->required();
    compare->add_option("--kind", cmp_kind, "forest kind (default: first in plan)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(gen_kind, gen_n, gen_m, gen_noise, gen_seed, gen_out);
        if (predict->parsed()) {
            if (!fs::exists(pred_model)) throw ValidationError("model file not found: " + pred_model);
            if (!fs::exists(pred_data)) throw ValidationError("data file not found: " + pred_data);
            return cmd_predict(pred_model, pred_data, !pred_no_header, pred_out, threads);
        }
        if (train->parsed()) {
            const RunConfig cfg = parse_run_config(train_config, train_seed);
            const std::string out_dir = !train_out.empty() ? train_out : cfg.output_dir;
            if (out_dir.empty()) throw ValidationError("no output directory (--out or config output_dir)");
            return cmd_train(cfg, out_dir, threads);
        }
        if (bench->parsed()) return cmd_benchmark(bench_plan, bench_out, bench_seed, threads);
        if (compare->parsed()) return cmd_compare(cmp_report, cmp_a, cmp_b, cmp_kind);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const larf::InvalidSpec& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const larf::InvalidConfig& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const larf::ParseError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const larf::MissingTarget& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
