#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "riskquant/errors.hpp"
#include "riskquant/experiment.hpp"
#include "riskquant/model_io.hpp"
#include "riskquant/toml_lite.hpp"

using namespace riskquant;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

cli::ExperimentConfig tiny_toy_config(const std::string& out_dir) {
    cli::ExperimentConfig cfg;
    cfg.kind = cli::ExperimentKind::ToyVar;
    cfg.output_dir = out_dir;
    cfg.seed = 11;
    cfg.runs = 2;
    cfg.d = 2;
    cfg.n = 512;
    cfg.n_test = 256;
    cfg.twins = true;
    cfg.alphas = {0.9};
    cfg.methods = {"single"};
    cfg.arch = Arch{1, 4};
    cfg.train.epochs = 4;
    cfg.train.batch_size = 128;
    cfg.train.learning_rate = 0.02;
    return cfg;
}

}  // namespace

TEST_CASE("toml subset parsing") {
    auto table = toml::Table::parse(R"(
# comment
experiment = "toy_var"   # trailing comment
seed = 42
ratio = 1.5e-2
flag = true
name = "a \"quoted\" value"

[train]
epochs = 10
alphas = [0.9, 0.95,
          0.99]
labels = ["a", "b"]
)");
    CHECK(table.str("experiment") == "toy_var");
    CHECK(table.integer("seed") == 42);
    CHECK(table.number("ratio") == doctest::Approx(0.015));
    CHECK(table.boolean("flag", false));
    CHECK(table.str("name") == "a \"quoted\" value");
    CHECK(table.integer("train.epochs") == 10);
    auto alphas = table.number_array("train.alphas");
    REQUIRE(alphas.size() == 3);
    CHECK(alphas[2] == doctest::Approx(0.99));
    CHECK(table.string_array("train.labels") == std::vector<std::string>{"a", "b"});
    CHECK(table.number("missing", 7.0) == 7.0);
}

TEST_CASE("toml errors carry the field") {
    CHECK_THROWS_AS(toml::Table::parse("key"), ConfigError);
    CHECK_THROWS_AS(toml::Table::parse("key = \"unterminated"), ConfigError);
    CHECK_THROWS_AS(toml::Table::parse("key = zzz"), ConfigError);
    try {
        toml::Table::parse("alpha = 0.9").number("beta");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "beta");
    }
}

TEST_CASE("config validation names the offending field") {
    auto table = toml::Table::parse(R"(
experiment = "toy_var"
[levels]
alphas = [1.5]
)");
    auto cfg = cli::ExperimentConfig::from_toml(table);
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "levels.alphas");
    }

    auto bad_method = cli::ExperimentConfig::from_toml(
        toml::Table::parse("experiment = \"toy_var\"\n[methods]\nlist = [\"nope\"]\n"));
    CHECK_THROWS_AS(bad_method.validate(), ConfigError);

    CHECK_THROWS_AS(cli::experiment_kind_from_name("bogus"), ConfigError);
}

TEST_CASE("lower-tail levels map through alpha -> 1 - alpha") {
    auto table = toml::Table::parse(R"(
experiment = "crossing"
[levels]
alphas = [0.001, 0.05]
range_lo = 0.0001
range_hi = 0.15
map_lower_tail = true
)");
    auto cfg = cli::ExperimentConfig::from_toml(table);
    CHECK(cfg.alphas.front() == doctest::Approx(0.95));
    CHECK(cfg.alphas.back() == doctest::Approx(0.999));
    CHECK(cfg.range_lo == doctest::Approx(0.85));
    CHECK(cfg.range_hi == doctest::Approx(0.9999));
    CHECK(cfg.grid.front() < cfg.grid.back());
}

TEST_CASE("resolved config echo round-trips") {
    cli::ExperimentConfig cfg = tiny_toy_config("unused");
    std::string echo = cfg.to_toml();
    auto back = cli::ExperimentConfig::from_toml(toml::Table::parse(echo));
    CHECK(back.to_toml() == echo);
    CHECK(back.seed == cfg.seed);
    CHECK(back.methods == cfg.methods);
    CHECK(back.alphas == cfg.alphas);
}

TEST_CASE("experiment artifacts are deterministic and self-consistent") {
    fs::path dir = fs::temp_directory_path() / "rq_cli_test";
    fs::remove_all(dir);
    cli::ExperimentConfig cfg = tiny_toy_config((dir / "a").string());
    run_experiment(cfg);

    CHECK(fs::exists(dir / "a" / "metrics.jsonl"));
    CHECK(fs::exists(dir / "a" / "summary.csv"));
    CHECK(fs::exists(dir / "a" / "resolved_config.toml"));
    CHECK(fs::exists(dir / "a" / "models" / "single_0.9.json"));
    CHECK(fs::exists(dir / "a" / "plotdata" / "density_single_0.9.csv"));

    // Byte-identical rerun.
    cli::ExperimentConfig cfg_b = cfg;
    cfg_b.output_dir = (dir / "b").string();
    run_experiment(cfg_b);
    CHECK(slurp((dir / "a" / "metrics.jsonl").string()) ==
          slurp((dir / "b" / "metrics.jsonl").string()));
    CHECK(slurp((dir / "a" / "summary.csv").string()) ==
          slurp((dir / "b" / "summary.csv").string()));

    // Rerun from the resolved echo reproduces the artifacts too.
    auto echoed = cli::ExperimentConfig::from_file(
        (dir / "a" / "resolved_config.toml").string());
    echoed.output_dir = (dir / "c").string();
    run_experiment(echoed);
    CHECK(slurp((dir / "a" / "metrics.jsonl").string()) ==
          slurp((dir / "c" / "metrics.jsonl").string()));

    // Summary numbers recompute from the metrics rows.
    std::istringstream metrics(slurp((dir / "a" / "metrics.jsonl").string()));
    std::string line;
    std::vector<double> rmse;
    while (std::getline(metrics, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.at("method") == "single");
        CHECK(j.at("wall_ms") == 0);  // timings off by default
        rmse.push_back(j.at("rmse_norm").get<double>());
    }
    REQUIRE(rmse.size() == 2);  // one per run
    double mean = (rmse[0] + rmse[1]) / 2.0;

    std::istringstream summary(slurp((dir / "a" / "summary.csv").string()));
    std::getline(summary, line);  // header
    bool found = false;
    while (std::getline(summary, line)) {
        if (line.find("single,") == 0 && line.find(",rmse_norm,") != std::string::npos) {
            std::size_t pos = line.find(",rmse_norm,") + 11;
            double out = std::stod(line.substr(pos));
            CHECK(out == doctest::Approx(mean).epsilon(1e-12));
            found = true;
        }
    }
    CHECK(found);

    // A saved model loads back through the file interface.
    auto model = load_model_file((dir / "a" / "models" / "single_0.9.json").string());
    CHECK(std::holds_alternative<VarModel>(model));

    fs::remove_all(dir);
}

TEST_CASE("elicit check experiment writes its report") {
    fs::path dir = fs::temp_directory_path() / "rq_elicit_test";
    fs::remove_all(dir);
    cli::ExperimentConfig cfg;
    cfg.kind = cli::ExperimentKind::ElicitCheck;
    cfg.output_dir = dir.string();
    cfg.seed = 3;
    run_experiment(cfg);
    CHECK(fs::exists(dir / "plotdata" / "elicit_checks.csv"));
    std::string report = slurp((dir / "plotdata" / "elicit_checks.csv").string());
    CHECK(report.find("FAIL") == std::string::npos);
    fs::remove_all(dir);
}
