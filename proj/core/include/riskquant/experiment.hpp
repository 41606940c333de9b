#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskquant/market.hpp"
#include "riskquant/nested_sa.hpp"
#include "riskquant/toml_lite.hpp"
#include "riskquant/trainers.hpp"

namespace riskquant::cli {

enum class ExperimentKind {
    ToyVar,
    ToyEs,
    ToyJoint,
    Crossing,
    Rate,
    TwinValidate,
    ElicitCheck,
    Dim,
};

ExperimentKind experiment_kind_from_name(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);

/// 21 uniformly spaced tail knots (upper-tail convention), the default
/// interpolation grid.
std::vector<double> default_interp_grid();

/// Fully resolved experiment description. Parsing fills defaults; the
/// resolved form echoes back to TOML so a rerun from the echo reproduces
/// the artifacts.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ToyVar;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int runs = 1;
    bool record_timings = false;

    // data
    int d = 5;
    long n = 1 << 16;
    long n_test = 1 << 14;
    bool twins = false;

    // levels
    std::vector<double> alphas{0.95};
    double range_lo = 0.85;
    double range_hi = 0.9999;
    std::vector<double> grid = default_interp_grid();

    // methods
    std::vector<std::string> methods{"single"};
    double lambda = 1.0;

    Arch arch{3, 0};
    TrainConfig train;

    // crossing experiment
    std::vector<std::pair<double, double>> pairs{{0.999, 0.995}};

    // rate experiment
    std::vector<long> rate_n{4096, 8192, 16384, 32768, 65536, 131072};
    int rate_runs = 3;

    // dim experiment
    MarketConfig market;
    long dim_n_paths = 16384;
    long dim_n_outer = 256;
    std::vector<int> t_steps{10};
    NestedMcConfig nested;
    bool export_paths = false;

    static ExperimentConfig from_toml(const toml::Table& table);
    static ExperimentConfig from_file(const std::string& path);

    /// Field-level validation; throws ConfigError naming the field.
    void validate() const;

    /// Resolved-config echo, parseable by from_toml.
    std::string to_toml() const;
};

/// Executes the experiment and returns the artifact directory. Writes
/// metrics.jsonl, summary.csv, per-method model files, plotdata/ and the
/// resolved config echo.
std::string run_experiment(const ExperimentConfig& cfg);
std::string run_experiment_file(const std::string& config_path);

}  // namespace riskquant::cli
