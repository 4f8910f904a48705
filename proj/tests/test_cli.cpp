#include <catch2/catch_amalgamated.hpp>

#include <larf/csv.hpp>
#include <larf/json_io.hpp>
#include <larf/model_io.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct CliFixture {
    fs::path dir;
    CliFixture() {
        dir = fs::temp_directory_path() /
              ("larf_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(dir);
    }
    ~CliFixture() { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(LARF_CLI_PATH) + " " + args + " > " +
                                path("stdout.txt") + " 2> " + path("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(path(name));
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

nlohmann::json toy_train_config(const CliFixture& fx, const std::string& out_dir) {
    return nlohmann::json{
        {"schema_version", 1},
        {"seed", 5},
        {"dataset",
         {{"name", "toy"},
          {"generator", {{"kind", "friedman1"}, {"n", 30}, {"m", 5}, {"noise_sd", 1.0}, {"seed", 3}}}}},
        {"forest", {{"kind", "rf"}, {"n_trees", 3}, {"min_leaf_size", 10}, {"seed", 1}}},
        {"model", {{"variant", "epsM-w-LARF"}, {"M", 2}, {"varsigma", 1e-3}, {"tau0", 1.0}}},
        {"eval", {{"folds", 3}, {"seed", 2}}},
        {"output_dir", out_dir}};
}

} // namespace

TEST_CASE("cli generate") {
    CliFixture fx;
    SECTION("shape and header") {
        REQUIRE(fx.run("generate --kind friedman1 --n 100 --seed 7 --out " + fx.path("f1.csv")) == 0);
        std::ifstream in(fx.path("f1.csv"));
        std::string line;
        std::size_t lines = 0, commas = 0;
        while (std::getline(in, line)) {
            if (lines == 0) commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
            ++lines;
        }
        CHECK(lines == 101);
        CHECK(commas == 10); // 10 features + target = 11 columns
    }
    SECTION("regenerating the loaded dataset reproduces the file byte for byte") {
        REQUIRE(fx.run("generate --kind sparse --n 50 --seed 9 --out " + fx.path("a.csv")) == 0);
        REQUIRE(fx.run("generate --kind sparse --n 50 --seed 9 --out " + fx.path("b.csv")) == 0);
        CHECK(fx.read("a.csv") == fx.read("b.csv"));
        const larf::Dataset loaded = larf::load_csv(fx.path("a.csv"), std::string("y"), true);
        larf::write_csv(fx.path("c.csv"), loaded);
        CHECK(fx.read("a.csv") == fx.read("c.csv"));
    }
    SECTION("different seeds differ") {
        REQUIRE(fx.run("generate --kind friedman2 --n 40 --seed 1 --out " + fx.path("s1.csv")) == 0);
        REQUIRE(fx.run("generate --kind friedman2 --n 40 --seed 2 --out " + fx.path("s2.csv")) == 0);
        CHECK(fx.read("s1.csv") != fx.read("s2.csv"));
    }
    SECTION("invalid spec exits with validation code") {
        CHECK(fx.run("generate --kind friedman2 --n 40 --m 7 --out " + fx.path("bad.csv")) == 1);
    }
}

TEST_CASE("cli train") {
    CliFixture fx;
    SECTION("toy run writes model, summary, and resolved config") {
        larf::save_json(toy_train_config(fx, fx.path("run")), fx.path("cfg.json"));
        REQUIRE(fx.run("train --config " + fx.path("cfg.json")) == 0);
        CHECK(fs::exists(fx.path("run/model.json")));
        CHECK(fs::exists(fx.path("run/config_resolved.json")));
        const std::string summary = fx.read("run/summary.txt");
        CHECK(summary.find("epsilons:") != std::string::npos);
        CHECK(summary.find("training MSE:") != std::string::npos);

        // epsilons echoed into the summary stay inside [varsigma, 1]
        const larf::TrainedModel model = larf::load_model(fx.path("run/model.json"));
        for (Eigen::Index j = 0; j < model.params.epsilons.size(); ++j) {
            CHECK(model.params.epsilons(j) >= 1e-3 - 1e-9);
            CHECK(model.params.epsilons(j) <= 1.0 + 1e-9);
        }
    }
    SECTION("retraining rewrites the model byte for byte") {
        larf::save_json(toy_train_config(fx, fx.path("r1")), fx.path("cfg.json"));
        REQUIRE(fx.run("train --config " + fx.path("cfg.json") + " --out " + fx.path("r1")) == 0);
        const std::string first = fx.read("r1/model.json");
        REQUIRE(fx.run("train --config " + fx.path("cfg.json") + " --out " + fx.path("r1")) == 0);
        CHECK(fx.read("r1/model.json") == first);
        CHECK_FALSE(first.empty());
    }
    SECTION("missing csv fails validation before any output") {
        nlohmann::json cfg = toy_train_config(fx, fx.path("never"));
        cfg["dataset"] = {{"name", "gone"},
                          {"csv", {{"path", fx.path("missing.csv")}, {"target", "y"}}}};
        larf::save_json(cfg, fx.path("bad.json"));
        CHECK(fx.run("train --config " + fx.path("bad.json")) == 1);
        CHECK_FALSE(fs::exists(fx.path("never")));
    }
    SECTION("grid search config reports the selected tau0") {
        nlohmann::json cfg = toy_train_config(fx, fx.path("grid"));
        cfg["model"].erase("tau0");
        cfg["model"]["tau0_grid"] = {1.0, 100.0};
        cfg["dataset"]["generator"]["n"] = 60;
        larf::save_json(cfg, fx.path("cfg_grid.json"));
        REQUIRE(fx.run("train --config " + fx.path("cfg_grid.json")) == 0);
        CHECK(fx.read("grid/summary.txt").find("grid search") != std::string::npos);
    }
}

TEST_CASE("cli predict") {
    CliFixture fx;
    larf::save_json(toy_train_config(fx, fx.path("run")), fx.path("cfg.json"));
    REQUIRE(fx.run("train --config " + fx.path("cfg.json")) == 0);

    // features-only file from the training data
    REQUIRE(fx.run("generate --kind friedman1 --n 30 --m 5 --seed 3 --out " + fx.path("full.csv")) == 0);
    const larf::Dataset data = larf::load_csv(fx.path("full.csv"), std::string("y"), true);
    {
        std::ofstream out(fx.path("features.csv"));
        out << "x1,x2,x3,x4,x5\n";
        for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
            for (Eigen::Index c = 0; c < data.features.cols(); ++c)
                out << larf::format_double(data.features(r, c)) << (c + 1 < data.features.cols() ? "," : "\n");
        }
    }

    SECTION("predictions for training rows stay in the training target range") {
        REQUIRE(fx.run("predict --model " + fx.path("run/model.json") + " --data " +
                       fx.path("features.csv") + " --out " + fx.path("pred.csv")) == 0);
        std::ifstream in(fx.path("pred.csv"));
        std::string line;
        std::size_t count = 0;
        // the generator config inside toy_train_config matches full.csv, so the
        // training targets are exactly data.targets
        const double lo = data.targets.minCoeff(), hi = data.targets.maxCoeff();
        while (std::getline(in, line)) {
            const double v = std::stod(line);
            CHECK(std::isfinite(v));
            CHECK(v >= lo - 1e-10);
            CHECK(v <= hi + 1e-10);
            ++count;
        }
        CHECK(count == 30);
    }
    SECTION("empty input produces empty output with success") {
        { std::ofstream out(fx.path("empty.csv")); }
        REQUIRE(fx.run("predict --model " + fx.path("run/model.json") + " --data " +
                       fx.path("empty.csv") + " --out " + fx.path("pred_empty.csv") +
                       " --no-header") == 0);
        CHECK(fx.read("pred_empty.csv").empty());
    }
    SECTION("column mismatch names both counts") {
        {
            std::ofstream out(fx.path("narrow.csv"));
            out << "x1,x2\n0.1,0.2\n";
        }
        CHECK(fx.run("predict --model " + fx.path("run/model.json") + " --data " +
                     fx.path("narrow.csv") + " --out " + fx.path("nope.csv")) == 2);
        const std::string err = fx.read("stderr.txt");
        CHECK(err.find("5") != std::string::npos);
        CHECK(err.find("2") != std::string::npos);
    }
}

TEST_CASE("cli benchmark and compare") {
    CliFixture fx;
    const nlohmann::json plan = {
        {"schema_version", 1},
        {"datasets",
         {{{"name", "friedman1"},
           {"generator", {{"kind", "friedman1"}, {"n", 50}, {"m", 5}, {"noise_sd", 1.0}, {"seed", 0}}}},
          {{"name", "sparse"},
           {"generator", {{"kind", "sparse"}, {"n", 50}, {"m", 5}, {"noise_sd", 1.0}, {"seed", 0}}}}}},
        {"models", {"baseline", "epsM-w-ARF"}},
        {"forest_kinds", {"rf", "ert"}},
        {"forest", {{"n_trees", 8}, {"min_leaf_size", 10}}},
        {"M", 2},
        {"tau0_grid", {1.0}},
        {"repeats", 2},
        {"base_seed", 4}};
    larf::save_json(plan, fx.path("plan.json"));

    REQUIRE(fx.run("benchmark --plan " + fx.path("plan.json") + " --out " + fx.path("out1")) == 0);
    REQUIRE(fs::exists(fx.path("out1/report.json")));
    REQUIRE(fs::exists(fx.path("out1/report.txt")));
    REQUIRE(fs::exists(fx.path("out1/plan_resolved.json")));

    SECTION("table covers both forest kinds") {
        const std::string table = fx.read("out1/report.txt");
        CHECK(table.find("(rf forests") != std::string::npos);
        CHECK(table.find("(ert forests") != std::string::npos);
        CHECK(table.find("epsM-w-ARF") != std::string::npos);
    }
    SECTION("re-running the same plan is byte-identical") {
        REQUIRE(fx.run("benchmark --plan " + fx.path("plan.json") + " --out " + fx.path("out2")) == 0);
        CHECK(fx.read("out1/report.json") == fx.read("out2/report.json"));
        CHECK(fx.read("out1/report.txt") == fx.read("out2/report.txt"));
        CHECK(fx.read("out1/plan_resolved.json") == fx.read("out2/plan_resolved.json"));
    }
    SECTION("compare runs the paired test") {
        REQUIRE(fx.run("compare --report " + fx.path("out1/report.json") +
                       " --model-a epsM-w-ARF --model-b baseline --kind rf") == 0);
        const std::string out = fx.read("stdout.txt");
        CHECK(out.find("t statistic") != std::string::npos);
        CHECK(out.find("friedman1") != std::string::npos);
    }
    SECTION("unknown plan model is a validation failure") {
        nlohmann::json bad = plan;
        bad["models"] = {"baseline", "mystery"};
        larf::save_json(bad, fx.path("bad_plan.json"));
        CHECK(fx.run("benchmark --plan " + fx.path("bad_plan.json") + " --out " + fx.path("nope")) == 1);
    }
}
