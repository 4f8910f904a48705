#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "larf/eval.hpp"
#include "larf/forest_io.hpp"

namespace larf {
namespace eval {

inline nlohmann::json dataset_source_to_json(const DatasetSource& src) {
    nlohmann::json j;
    j["name"] = src.name;
    if (src.generator) {
        j["generator"] = {{"kind", to_string(src.generator->kind)},
                          {"n", src.generator->n},
                          {"m", src.generator->m},
                          {"noise_sd", src.generator->noise_sd},
                          {"seed", src.generator->seed}};
        j["regenerate_per_repeat"] = src.regenerate_per_repeat;
    }
    if (src.csv) {
        nlohmann::json c;
        c["path"] = src.csv->path;
        if (std::holds_alternative<std::size_t>(src.csv->target))
            c["target"] = std::get<std::size_t>(src.csv->target);
        else
            c["target"] = std::get<std::string>(src.csv->target);
        c["has_header"] = src.csv->has_header;
        j["csv"] = std::move(c);
    }
    return j;
}

inline DatasetSource dataset_source_from_json(const nlohmann::json& j) {
    DatasetSource src;
    src.name = j.at("name").get<std::string>();
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        GeneratorSpec spec;
        spec.kind = generator_kind_from_string(g.at("kind").get<std::string>());
        spec.n = g.value("n", std::size_t{100});
        spec.m = g.contains("m") ? g.at("m").get<std::size_t>() : default_generator_m(spec.kind);
        spec.noise_sd =
            g.contains("noise_sd") ? g.at("noise_sd").get<double>() : default_generator_noise(spec.kind);
        spec.seed = g.value("seed", std::uint64_t{0});
        src.generator = spec;
        src.regenerate_per_repeat = j.value("regenerate_per_repeat", true);
    }
    if (j.contains("csv")) {
        CsvSource c;
        const auto& cj = j.at("csv");
        c.path = cj.at("path").get<std::string>();
        if (cj.contains("target")) {
            if (cj.at("target").is_number_integer())
                c.target = cj.at("target").get<std::size_t>();
            else
                c.target = cj.at("target").get<std::string>();
        }
        c.has_header = cj.value("has_header", true);
        src.csv = std::move(c);
    }
    src.validate();
    return src;
}

inline nlohmann::json plan_to_json(const BenchmarkPlan& plan) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["type"] = "larf-benchmark-plan";
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : plan.datasets) ds.push_back(dataset_source_to_json(d));
    j["datasets"] = std::move(ds);
    j["models"] = plan.models;
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : plan.forest_kinds) kinds.push_back(to_string(k));
    j["forest_kinds"] = std::move(kinds);
    j["forest"] = {{"n_trees", plan.forest.n_trees},
                   {"min_leaf_size", plan.forest.min_leaf_size},
                   {"max_depth", plan.forest.max_depth},
                   {"features_per_split", plan.forest.features_per_split}};
    j["M"] = plan.m_heads;
    j["taus"] = plan.taus;
    j["tau0_grid"] = plan.tau0_grid;
    j["varsigma"] = plan.varsigma;
    if (plan.fixed_epsilon)
        j["fixed_epsilon"] = *plan.fixed_epsilon;
    else
        j["fixed_epsilon"] = nullptr;
    j["repeats"] = plan.repeats;
    j["folds"] = plan.folds;
    j["train_fraction"] = plan.train_fraction;
    j["base_seed"] = plan.base_seed;
    return j;
}

inline BenchmarkPlan plan_from_json(const nlohmann::json& j) {
    if (j.value("type", "larf-benchmark-plan") != "larf-benchmark-plan")
        throw IoError("not a benchmark plan document");
    BenchmarkPlan plan;
    for (const auto& d : j.at("datasets")) plan.datasets.push_back(dataset_source_from_json(d));
    plan.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("forest_kinds")) {
        plan.forest_kinds.clear();
        for (const auto& k : j.at("forest_kinds"))
            plan.forest_kinds.push_back(forest_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        plan.forest.n_trees = f.value("n_trees", std::size_t{100});
        plan.forest.min_leaf_size = f.value("min_leaf_size", std::size_t{10});
        plan.forest.max_depth = f.value("max_depth", -1);
        plan.forest.features_per_split = f.value("features_per_split", std::size_t{0});
    }
    plan.m_heads = j.value("M", std::size_t{10});
    if (j.contains("taus")) plan.taus = j.at("taus").get<std::vector<double>>();
    if (j.contains("tau0_grid")) plan.tau0_grid = j.at("tau0_grid").get<std::vector<double>>();
    plan.varsigma = j.value("varsigma", 1e-3);
    if (j.contains("fixed_epsilon") && !j.at("fixed_epsilon").is_null())
        plan.fixed_epsilon = j.at("fixed_epsilon").get<double>();
    plan.repeats = j.value("repeats", 10);
    plan.folds = j.value("folds", 3);
    plan.train_fraction = j.value("train_fraction", 0.8);
    plan.base_seed = j.value("base_seed", std::uint64_t{0});
    plan.validate();
    return plan;
}

// Deterministic report document: everything except wall-clock timing, which
// goes to the separate run_meta file so re-runs are byte-identical.
inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["type"] = "larf-benchmark-report";
    j["plan"] = plan_to_json(report.plan);
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json cj;
        cj["dataset"] = c.dataset;
        cj["kind"] = c.kind;
        cj["model"] = c.model;
        cj["r2_values"] = c.r2_values;
        cj["mae_values"] = c.mae_values;
        cj["tau0_selected"] = c.tau0_selected;
        cj["seeds"] = c.seeds;
        cj["errors"] = c.errors;
        if (!c.r2_values.empty()) {
            cj["r2_mean"] = c.r2_mean();
            cj["r2_sd"] = c.r2_sd();
            cj["mae_mean"] = c.mae_mean();
            cj["mae_sd"] = c.mae_sd();
        }
        if (!c.tau0_selected.empty()) cj["tau0_mode"] = c.tau0_mode();
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
    if (j.value("type", "") != "larf-benchmark-report") throw IoError("not a report document");
    if (j.value("schema_version", 0) != kReportSchemaVersion)
        throw IoError("unsupported report schema_version");
    EvaluationReport report;
    report.plan = plan_from_json(j.at("plan"));
    for (const auto& cj : j.at("cells")) {
        CellStats c;
        c.dataset = cj.at("dataset").get<std::string>();
        c.kind = cj.at("kind").get<std::string>();
        c.model = cj.at("model").get<std::string>();
        c.r2_values = cj.at("r2_values").get<std::vector<double>>();
        c.mae_values = cj.at("mae_values").get<std::vector<double>>();
        c.tau0_selected = cj.at("tau0_selected").get<std::vector<double>>();
        c.seeds = cj.at("seeds").get<std::vector<std::uint64_t>>();
        c.errors = cj.at("errors").get<std::vector<std::string>>();
        report.cells.push_back(std::move(c));
    }
    return report;
}

namespace detail {

inline std::string fixed3(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string general(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    while (s.size() < width) s += ' ';
    return s;
}

} // namespace detail

// Human-readable tables: one block per forest kind and metric, datasets as
// rows and models as columns, plus the selected tau0 modes.
inline std::string report_to_table(const EvaluationReport& report) {
    std::string out;
    std::size_t name_w = 8;
    for (const auto& d : report.plan.datasets) name_w = std::max(name_w, d.name.size() + 2);
    std::size_t col_w = 8;
    for (const auto& m : report.plan.models) col_w = std::max(col_w, m.size() + 2);

    auto emit_block = [&](const std::string& kind, const std::string& title, auto has_data,
                          auto value_of) {
        out += title + " (" + kind + " forests, " + std::to_string(report.plan.repeats) +
               " repeats, mean +/- sd)\n";
        out += detail::pad("dataset", name_w);
        for (const auto& m : report.plan.models) out += detail::pad(m, col_w + 10);
        out += '\n';
        for (const auto& d : report.plan.datasets) {
            out += detail::pad(d.name, name_w);
            for (const auto& m : report.plan.models) {
                const CellStats* c = report.find(d.name, kind, m);
                std::string cell = "-";
                if (c && has_data(*c))
                    cell = value_of(*c);
                else if (c && !c->errors.empty())
                    cell = "error";
                out += detail::pad(cell, col_w + 10);
            }
            out += '\n';
        }
        out += '\n';
    };

    for (const auto kind_enum : report.plan.forest_kinds) {
        const std::string kind = to_string(kind_enum);
        emit_block(
            kind, "R^2", [](const CellStats& c) { return !c.r2_values.empty(); },
            [](const CellStats& c) {
                return detail::fixed3(c.r2_mean()) + " +/- " + detail::fixed3(c.r2_sd());
            });
        emit_block(
            kind, "MAE", [](const CellStats& c) { return !c.mae_values.empty(); },
            [](const CellStats& c) {
                return detail::fixed3(c.mae_mean()) + " +/- " + detail::fixed3(c.mae_sd());
            });
        emit_block(
            kind, "selected tau0 (mode)",
            [](const CellStats& c) { return !c.tau0_selected.empty(); },
            [](const CellStats& c) { return detail::general(c.tau0_mode()); });
    }
    return out;
}

inline nlohmann::json report_timing_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["type"] = "larf-benchmark-timing";
    j["total_wall_seconds"] = report.total_wall_seconds;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells)
        cells.push_back({{"dataset", c.dataset},
                         {"kind", c.kind},
                         {"model", c.model},
                         {"wall_seconds", c.wall_seconds}});
    j["cells"] = std::move(cells);
    return j;
}

// Writes report.json / report.txt / plan_resolved.json (deterministic) and
// run_meta.json (timings; varies run to run).
inline void write_report_files(const EvaluationReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    save_json(report_to_json(report), (dir / "report.json").string());
    save_json(plan_to_json(report.plan), (dir / "plan_resolved.json").string());
    {
        std::ofstream txt(dir / "report.txt");
        if (!txt) throw IoError("cannot write report.txt");
        txt << report_to_table(report);
    }
    save_json(report_timing_json(report), (dir / "run_meta.json").string());
}

} // namespace eval
} // namespace larf
