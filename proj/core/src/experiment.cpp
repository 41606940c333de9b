#include "riskquant/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "riskquant/elicit_checks.hpp"
#include "riskquant/errors.hpp"
#include "riskquant/gaussian_toy.hpp"
#include "riskquant/im_pipeline.hpp"
#include "riskquant/metrics.hpp"
#include "riskquant/model_io.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/parallel.hpp"
#include "riskquant/rng.hpp"
#include "riskquant/twin.hpp"

namespace riskquant::cli {

namespace fs = std::filesystem;

ExperimentKind experiment_kind_from_name(const std::string& name) {
    if (name == "toy_var") return ExperimentKind::ToyVar;
    if (name == "toy_es") return ExperimentKind::ToyEs;
    if (name == "toy_joint") return ExperimentKind::ToyJoint;
    if (name == "crossing") return ExperimentKind::Crossing;
    if (name == "rate") return ExperimentKind::Rate;
    if (name == "twin_validate") return ExperimentKind::TwinValidate;
    if (name == "elicit_check") return ExperimentKind::ElicitCheck;
    if (name == "dim") return ExperimentKind::Dim;
    throw ConfigError("unknown experiment '" + name + "'", "experiment");
}

std::string experiment_kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::ToyVar: return "toy_var";
        case ExperimentKind::ToyEs: return "toy_es";
        case ExperimentKind::ToyJoint: return "toy_joint";
        case ExperimentKind::Crossing: return "crossing";
        case ExperimentKind::Rate: return "rate";
        case ExperimentKind::TwinValidate: return "twin_validate";
        case ExperimentKind::ElicitCheck: return "elicit_check";
        case ExperimentKind::Dim: return "dim";
    }
    return "toy_var";
}

std::vector<double> default_interp_grid() {
    std::vector<double> knots;
    for (int k = 0; k <= 20; ++k) {
        knots.push_back(1.0 - (1e-3 + k * (0.15 - 1e-3) / 20.0));
    }
    std::sort(knots.begin(), knots.end());
    return knots;
}

namespace {

const std::set<std::string> kKnownMethods{"single", "multi1", "multi2",  "multi3",
                                          "joint",  "es_fullnet", "es_frozenlr"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_toml(const toml::Table& t) {
    ExperimentConfig cfg;
    cfg.kind = experiment_kind_from_name(t.str("experiment"));
    cfg.output_dir = t.str("output_dir", "out/" + experiment_kind_name(cfg.kind));
    cfg.seed = static_cast<std::uint64_t>(t.integer("seed", 0));
    cfg.runs = static_cast<int>(t.integer("runs", 1));
    cfg.record_timings = t.boolean("record_timings", false);

    cfg.d = static_cast<int>(t.integer("data.d", 5));
    cfg.n = t.integer("data.n", 1 << 16);
    cfg.n_test = t.integer("data.n_test", 1 << 14);
    cfg.twins = t.boolean("data.twins", false);

    if (t.has("levels.alphas")) cfg.alphas = t.number_array("levels.alphas");
    cfg.range_lo = t.number("levels.range_lo", 0.85);
    cfg.range_hi = t.number("levels.range_hi", 0.9999);
    cfg.grid = t.has("levels.grid") ? t.number_array("levels.grid")
                                    : default_interp_grid();
    if (t.boolean("levels.map_lower_tail", false)) {
        for (double& a : cfg.alphas) a = 1.0 - a;
        std::sort(cfg.alphas.begin(), cfg.alphas.end());
        double lo = 1.0 - cfg.range_hi, hi = 1.0 - cfg.range_lo;
        cfg.range_lo = lo;
        cfg.range_hi = hi;
        for (double& g : cfg.grid) g = 1.0 - g;
        std::sort(cfg.grid.begin(), cfg.grid.end());
    }

    if (t.has("methods.list")) cfg.methods = t.string_array("methods.list");
    cfg.lambda = t.number("methods.lambda", 1.0);

    cfg.arch.hidden = static_cast<int>(t.integer("net.hidden", 3));
    cfg.arch.width = static_cast<int>(t.integer("net.width", 0));

    cfg.train.epochs = static_cast<int>(t.integer("train.epochs", 100));
    cfg.train.batch_size = static_cast<int>(t.integer("train.batch_size", 1024));
    cfg.train.learning_rate = t.number("train.learning_rate", 1e-2);
    cfg.train.shuffle = t.boolean("train.shuffle", true);

    if (t.has("crossing.pairs")) {
        auto flat = t.number_array("crossing.pairs");
        if (flat.size() % 2 != 0) {
            throw ConfigError("expects a flat list of hi, lo pairs", "crossing.pairs");
        }
        cfg.pairs.clear();
        for (std::size_t i = 0; i + 1 < flat.size(); i += 2) {
            cfg.pairs.emplace_back(flat[i], flat[i + 1]);
        }
    }

    if (t.has("rate.n_values")) {
        auto values = t.number_array("rate.n_values");
        cfg.rate_n.assign(values.begin(), values.end());
    }
    cfg.rate_runs = static_cast<int>(t.integer("rate.runs_per_n", 3));

    cfg.market.kappa = t.number("dim.kappa", 0.5);
    cfg.market.theta = t.number("dim.theta", 0.03);
    cfg.market.sigma_r = t.number("dim.sigma_r", 0.01);
    cfg.market.r0 = t.number("dim.r0", 0.03);
    cfg.market.n_swaps = static_cast<int>(t.integer("dim.n_swaps", 20));
    cfg.market.horizon_years = t.number("dim.horizon_years", 10.0);
    cfg.market.steps = static_cast<int>(t.integer("dim.steps", 40));
    cfg.market.delta_years = t.number("dim.delta_years", 0.25);
    cfg.dim_n_paths = t.integer("dim.n_paths", 16384);
    cfg.dim_n_outer = t.integer("dim.n_outer", 256);
    if (t.has("dim.t_steps")) {
        auto values = t.number_array("dim.t_steps");
        cfg.t_steps.assign(values.begin(), values.end());
    }
    cfg.nested.n_inner = static_cast<int>(t.integer("dim.nested_n_inner", 1024));
    cfg.nested.iterations = static_cast<int>(t.integer("dim.nested_iterations", 256));
    cfg.nested.gamma = t.number("dim.nested_gamma", 1.0);
    std::string opt = t.str("dim.nested_optimizer", "adam");
    if (opt == "adam") {
        cfg.nested.optimizer = NestedMcConfig::Optimizer::Adam;
    } else if (opt == "plain") {
        cfg.nested.optimizer = NestedMcConfig::Optimizer::PlainSA;
    } else {
        throw ConfigError("must be 'adam' or 'plain'", "dim.nested_optimizer");
    }
    cfg.nested.step_decay = t.boolean("dim.nested_step_decay", false);
    cfg.export_paths = t.boolean("dim.export_paths", false);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_toml(toml::Table::parse_file(path));
}

void ExperimentConfig::validate() const {
    if (output_dir.empty()) throw ConfigError("must not be empty", "output_dir");
    if (runs < 1) throw ConfigError("must be >= 1", "runs");
    if (d < 1) throw ConfigError("must be >= 1", "data.d");
    if (n < 2) throw ConfigError("must be >= 2", "data.n");
    if (n_test < 2) throw ConfigError("must be >= 2", "data.n_test");
    if (alphas.empty()) throw ConfigError("must not be empty", "levels.alphas");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("levels must lie in (0, 1)", "levels.alphas");
    }
    if (!(range_lo > 0.0 && range_hi < 1.0 && range_lo < range_hi)) {
        throw ConfigError("need 0 < range_lo < range_hi < 1", "levels.range_lo");
    }
    if (grid.size() < 2) throw ConfigError("needs at least two knots", "levels.grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0)) {
            throw ConfigError("knots must lie in (0, 1)", "levels.grid");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError("knots must be strictly increasing", "levels.grid");
        }
    }
    if (methods.empty()) throw ConfigError("must not be empty", "methods.list");
    for (const std::string& m : methods) {
        if (kKnownMethods.count(m) == 0) {
            throw ConfigError("unknown method '" + m + "'", "methods.list");
        }
    }
    if (lambda < 0.0) throw ConfigError("must be >= 0", "methods.lambda");
    if (arch.hidden < 0) throw ConfigError("must be >= 0", "net.hidden");
    if (train.epochs <= 0) throw ConfigError("must be positive", "train.epochs");
    if (train.batch_size <= 0) throw ConfigError("must be positive", "train.batch_size");
    if (!(train.learning_rate > 0.0)) {
        throw ConfigError("must be positive", "train.learning_rate");
    }
    for (const auto& [hi, lo] : pairs) {
        if (!(hi > lo && lo > 0.0 && hi < 1.0)) {
            throw ConfigError("pairs must satisfy 0 < lo < hi < 1", "crossing.pairs");
        }
    }
    if (kind == ExperimentKind::Rate) {
        if (rate_n.size() < 2) throw ConfigError("needs at least two sizes", "rate.n_values");
        for (long v : rate_n) {
            if (v < 2) throw ConfigError("sizes must be >= 2", "rate.n_values");
        }
        if (rate_runs < 1) throw ConfigError("must be >= 1", "rate.runs_per_n");
    }
    if (kind == ExperimentKind::Dim) {
        try {
            market.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what(), "dim");
        }
        if (dim_n_paths < 2) throw ConfigError("must be >= 2", "dim.n_paths");
        if (dim_n_outer < 2) throw ConfigError("must be >= 2", "dim.n_outer");
        if (t_steps.empty()) throw ConfigError("must not be empty", "dim.t_steps");
        for (int t : t_steps) {
            if (t < 0 || t + market.delta_steps() > market.steps) {
                throw ConfigError("step with its window must fit the grid", "dim.t_steps");
            }
        }
        try {
            nested.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what(), "dim.nested");
        }
    }
}

std::string ExperimentConfig::to_toml() const {
    std::ostringstream out;
    out << "experiment = \"" << experiment_kind_name(kind) << "\"\n";
    out << "output_dir = \"" << output_dir << "\"\n";
    out << "seed = " << seed << "\n";
    out << "runs = " << runs << "\n";
    out << "record_timings = " << (record_timings ? "true" : "false") << "\n\n";

    out << "[data]\n";
    out << "d = " << d << "\n";
    out << "n = " << n << "\n";
    out << "n_test = " << n_test << "\n";
    out << "twins = " << (twins ? "true" : "false") << "\n\n";

    out << "[levels]\n";
    out << "alphas = [";
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        out << (i ? ", " : "") << fmt(alphas[i]);
    }
    out << "]\n";
    out << "range_lo = " << fmt(range_lo) << "\n";
    out << "range_hi = " << fmt(range_hi) << "\n";
    out << "grid = [";
    for (std::size_t i = 0; i < grid.size(); ++i) out << (i ? ", " : "") << fmt(grid[i]);
    out << "]\n\n";

    out << "[methods]\n";
    out << "list = [";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        out << (i ? ", " : "") << '"' << methods[i] << '"';
    }
    out << "]\n";
    out << "lambda = " << fmt(lambda) << "\n\n";

    out << "[net]\n";
    out << "hidden = " << arch.hidden << "\n";
    out << "width = " << arch.width << "\n\n";

    out << "[train]\n";
    out << "epochs = " << train.epochs << "\n";
    out << "batch_size = " << train.batch_size << "\n";
    out << "learning_rate = " << fmt(train.learning_rate) << "\n";
    out << "shuffle = " << (train.shuffle ? "true" : "false") << "\n\n";

    out << "[crossing]\n";
    out << "pairs = [";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out << (i ? ", " : "") << fmt(pairs[i].first) << ", " << fmt(pairs[i].second);
    }
    out << "]\n\n";

    out << "[rate]\n";
    out << "n_values = [";
    for (std::size_t i = 0; i < rate_n.size(); ++i) out << (i ? ", " : "") << rate_n[i];
    out << "]\n";
    out << "runs_per_n = " << rate_runs << "\n\n";

    out << "[dim]\n";
    out << "kappa = " << fmt(market.kappa) << "\n";
    out << "theta = " << fmt(market.theta) << "\n";
    out << "sigma_r = " << fmt(market.sigma_r) << "\n";
    out << "r0 = " << fmt(market.r0) << "\n";
    out << "n_swaps = " << market.n_swaps << "\n";
    out << "horizon_years = " << fmt(market.horizon_years) << "\n";
    out << "steps = " << market.steps << "\n";
    out << "delta_years = " << fmt(market.delta_years) << "\n";
    out << "n_paths = " << dim_n_paths << "\n";
    out << "n_outer = " << dim_n_outer << "\n";
    out << "t_steps = [";
    for (std::size_t i = 0; i < t_steps.size(); ++i) out << (i ? ", " : "") << t_steps[i];
    out << "]\n";
    out << "nested_n_inner = " << nested.n_inner << "\n";
    out << "nested_iterations = " << nested.iterations << "\n";
    out << "nested_gamma = " << fmt(nested.gamma) << "\n";
    out << "nested_optimizer = \""
        << (nested.optimizer == NestedMcConfig::Optimizer::Adam ? "adam" : "plain")
        << "\"\n";
    out << "nested_step_decay = " << (nested.step_decay ? "true" : "false") << "\n";
    out << "export_paths = " << (export_paths ? "true" : "false") << "\n";
    return out.str();
}

namespace {

// ---------------------------------------------------------------------
// shared experiment plumbing

struct Artifacts {
    explicit Artifacts(const ExperimentConfig& cfg) : cfg(cfg) {
        fs::create_directories(cfg.output_dir);
        fs::create_directories(cfg.output_dir + "/plotdata");
        fs::create_directories(cfg.output_dir + "/models");
    }

    void add(MetricsRecord record) { records.push_back(std::move(record)); }

    void save_model(const std::string& name, const std::string& json) {
        std::ofstream out(cfg.output_dir + "/models/" + name + ".json");
        if (!out) throw IoError("cannot write model file " + name);
        out << json << "\n";
    }

    void write_plot_csv(const std::string& name, const std::string& header,
                        const std::vector<std::string>& rows) {
        std::ofstream out(cfg.output_dir + "/plotdata/" + name + ".csv");
        if (!out) throw IoError("cannot write plotdata/" + name);
        out << header << "\n";
        for (const std::string& row : rows) out << row << "\n";
    }

    void finalize() {
        std::ofstream metrics(cfg.output_dir + "/metrics.jsonl");
        if (!metrics) throw IoError("cannot write metrics.jsonl");
        for (const MetricsRecord& r : records) metrics << r.to_json_line() << "\n";
        write_summary();
        std::ofstream echo(cfg.output_dir + "/resolved_config.toml");
        if (!echo) throw IoError("cannot write resolved_config.toml");
        echo << cfg.to_toml();
    }

    const ExperimentConfig& cfg;
    std::vector<MetricsRecord> records;

private:
    void write_summary() {
        struct Acc {
            std::vector<double> values;
        };
        // (method, alpha, metric) -> values over runs
        std::map<std::tuple<std::string, double, std::string>, Acc> cells;
        auto feed = [&cells](const MetricsRecord& r, const char* metric,
                             const std::optional<double>& v) {
            if (v) cells[{r.method, r.alpha, metric}].values.push_back(*v);
        };
        for (const MetricsRecord& r : records) {
            feed(r, "rmse_norm", r.rmse_norm);
            feed(r, "pvalue_err", r.pvalue_err);
            feed(r, "pvalue_err_ci_hi", r.pvalue_err_ci_hi);
            feed(r, "es_proxy", r.es_proxy);
            feed(r, "wasserstein", r.wasserstein);
            for (const auto& [pair_name, rate] : r.crossing) {
                cells[{r.method, r.alpha, "crossing " + pair_name}].values.push_back(rate);
            }
        }
        std::ofstream out(cfg.output_dir + "/summary.csv");
        if (!out) throw IoError("cannot write summary.csv");
        out << "method,alpha,metric,mean,std,formatted\n";
        char buf[128];
        for (const auto& [key, acc] : cells) {
            const auto& [method, alpha, metric] = key;
            double mean = 0.0;
            for (double v : acc.values) mean += v;
            mean /= static_cast<double>(acc.values.size());
            double sd = 0.0;
            if (acc.values.size() > 1) {
                for (double v : acc.values) sd += (v - mean) * (v - mean);
                sd = std::sqrt(sd / static_cast<double>(acc.values.size() - 1));
            }
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.17g,%.17g,%.6g (%.2g)",
                          method.c_str(), alpha, metric.c_str(), mean, sd, mean, sd);
            out << buf << "\n";
        }
    }
};

class Stopwatch {
public:
    long elapsed_ms(bool enabled) const {
        if (!enabled) return 0;
        auto now = std::chrono::steady_clock::now();
        return static_cast<long>(
            std::chrono::duration_cast<std::chrono::milliseconds>(now - start_).count());
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::uint64_t run_seed_of(const ExperimentConfig& cfg, int run_index) {
    return cfg.seed ^ static_cast<std::uint64_t>(run_index);
}

constexpr std::uint64_t kTagTrainData = 0x20;
constexpr std::uint64_t kTagTestData = 0x21;
constexpr std::uint64_t kTagSpec = 0x22;

struct ToyTruth {
    Eigen::VectorXd var;
    Eigen::VectorXd es;
};

ToyTruth toy_truth(const GaussianToySpec& spec, const Eigen::MatrixXd& x, double alpha) {
    ToyTruth truth;
    truth.var.resize(x.rows());
    truth.es.resize(x.rows());
    parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
        auto ve = toy_var_es_closed(spec, x.row(i).transpose(), alpha);
        truth.var(static_cast<Eigen::Index>(i)) = ve.var;
        truth.es(static_cast<Eigen::Index>(i)) = ve.es;
    });
    return truth;
}

std::string alpha_tag(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", alpha);
    return buf;
}

std::vector<std::string> density_rows(const Eigen::VectorXd& truth,
                                      const Eigen::VectorXd& pred) {
    std::vector<std::string> rows;
    Eigen::Index limit = std::min<Eigen::Index>(truth.size(), 4096);
    rows.reserve(static_cast<std::size_t>(limit));
    char buf[80];
    for (Eigen::Index i = 0; i < limit; ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g", truth(i), pred(i));
        rows.emplace_back(buf);
    }
    return rows;
}

std::uint64_t fit_seed(std::uint64_t run_seed, std::uint64_t method_idx,
                       std::uint64_t level_idx) {
    return derive_stream(run_seed, 0x1000 + method_idx * 97 + level_idx);
}

// ---------------------------------------------------------------------
// toy_var

void run_toy_var(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        Dataset data = toy_generate(spec, cfg.n, derive_stream(run_seed, kTagTrainData),
                                    false);
        Dataset test = toy_generate(spec, cfg.n_test, derive_stream(run_seed, kTagTestData),
                                    cfg.twins);

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const std::string& method = cfg.methods[mi];
            if (method == "es_fullnet" || method == "es_frozenlr") continue;

            // Methods that train once and serve every level.
            std::optional<VarModel> shared;
            Stopwatch shared_watch;
            long shared_ms = 0;
            TrainConfig tc = cfg.train;
            if (method == "multi1" || method == "multi2") {
                tc.seed = fit_seed(run_seed, mi, 0);
                shared = fit_var_multi_continuum(data, cfg.range_lo, cfg.range_hi,
                                                 method == "multi1" ? cfg.lambda : 0.0,
                                                 cfg.arch, tc);
                shared_ms = shared_watch.elapsed_ms(cfg.record_timings);
            } else if (method == "multi3") {
                tc.seed = fit_seed(run_seed, mi, 0);
                shared = fit_var_multi_interp(data, nn::InterpGrid(cfg.grid), cfg.arch, tc);
                shared_ms = shared_watch.elapsed_ms(cfg.record_timings);
            }

            for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
                double alpha = cfg.alphas[ai];
                Stopwatch watch;
                VarModel model = [&]() {
                    if (shared) return *shared;
                    TrainConfig local = cfg.train;
                    local.seed = fit_seed(run_seed, mi, ai);
                    if (method == "single") {
                        return fit_var_single(data, AlphaLevel(alpha), cfg.arch, local);
                    }
                    if (method == "joint") {
                        return fit_joint(data, AlphaLevel(alpha), JointLossSpec{},
                                         cfg.arch, local)
                            .first;
                    }
                    throw ConfigError("method '" + method + "' not valid for toy_var",
                                      "methods.list");
                }();
                long wall = shared ? shared_ms : watch.elapsed_ms(cfg.record_timings);

                ToyTruth truth = toy_truth(spec, test.x, alpha);
                Eigen::VectorXd pred = model.predict_batch(test.x, alpha);

                MetricsRecord rec;
                rec.method = method;
                rec.alpha = alpha;
                rec.n = cfg.n;
                rec.seed = run_seed;
                rec.rmse_norm = normalized_rmse(pred, truth.var);
                rec.wasserstein = wasserstein_1d(
                    std::span<const double>(pred.data(), pred.size()),
                    std::span<const double>(truth.var.data(), truth.var.size()));
                if (cfg.twins) {
                    auto est = pvalue_error_estimate(
                        [&model, alpha](const Eigen::MatrixXd& x) {
                            return model.predict_batch(x, alpha);
                        },
                        test, AlphaLevel(alpha));
                    rec.pvalue_err = est.point;
                    rec.pvalue_err_ci_hi = est.ci_hi();
                }
                rec.wall_ms = wall;
                art.add(std::move(rec));

                if (run == 0) {
                    art.write_plot_csv("density_" + method + "_" + alpha_tag(alpha),
                                       "truth,pred", density_rows(truth.var, pred));
                    art.save_model(method + "_" + alpha_tag(alpha), to_json(model));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// toy_es

void run_toy_es(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        Dataset data = toy_generate(spec, cfg.n, derive_stream(run_seed, kTagTrainData),
                                    false);
        Dataset test = toy_generate(spec, cfg.n_test, derive_stream(run_seed, kTagTestData),
                                    cfg.twins);

        for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
            double alpha = cfg.alphas[ai];
            AlphaLevel level(alpha);
            ToyTruth truth = toy_truth(spec, test.x, alpha);

            // Learned quantile candidate shared by the LR variants.
            TrainConfig var_cfg = cfg.train;
            var_cfg.seed = fit_seed(run_seed, 50, ai);
            std::optional<VarModel> var_candidate;

            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const std::string& method = cfg.methods[mi];
                if (method != "es_fullnet" && method != "es_frozenlr") continue;
                TrainConfig tc = cfg.train;
                tc.seed = fit_seed(run_seed, mi, ai);

                MetricsRecord rec;
                rec.method = method;
                rec.alpha = alpha;
                rec.n = cfg.n;
                rec.seed = run_seed;

                Eigen::VectorXd pred;
                if (method == "es_fullnet") {
                    // Regression against the exact quantile candidate.
                    Stopwatch watch;
                    EsModel es = fit_es_two_step(
                        data,
                        [&spec, alpha](const Eigen::VectorXd& x) {
                            return toy_var_es_closed(spec, x, alpha).var;
                        },
                        level, TruncationBound::none(), cfg.arch, tc);
                    rec.wall_ms = watch.elapsed_ms(cfg.record_timings);
                    pred = truth.var + es.increment_batch(test.x);
                    if (cfg.twins) {
                        auto proxy = es_error_proxy(
                            [&spec, alpha](const Eigen::MatrixXd& x) {
                                Eigen::VectorXd q(x.rows());
                                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                                    q(i) =
                                        toy_var_es_closed(spec, x.row(i).transpose(), alpha)
                                            .var;
                                }
                                return q;
                            },
                            [&](const Eigen::MatrixXd& x) {
                                Eigen::VectorXd q(x.rows());
                                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                                    q(i) =
                                        toy_var_es_closed(spec, x.row(i).transpose(), alpha)
                                            .var;
                                }
                                return (q + es.increment_batch(x)).eval();
                            },
                            test, level);
                        rec.es_proxy = proxy.point;
                    }
                    if (run == 0) art.save_model(method + "_" + alpha_tag(alpha), to_json(es));
                } else {
                    if (!var_candidate) {
                        var_candidate =
                            fit_var_single(data, level, cfg.arch, var_cfg);
                    }
                    Stopwatch watch;
                    EsModel es = fit_es_two_step(data, *var_candidate, level,
                                                 EsMode::FrozenLR, TruncationBound::none(),
                                                 cfg.arch, tc);
                    rec.wall_ms = watch.elapsed_ms(cfg.record_timings);
                    pred = es.predict_batch(test.x);
                    if (cfg.twins) {
                        auto proxy = es_error_proxy(
                            [&es](const Eigen::MatrixXd& x) {
                                return es.var_model->predict_batch(x, es.alpha.value);
                            },
                            [&es](const Eigen::MatrixXd& x) { return es.predict_batch(x); },
                            test, level);
                        rec.es_proxy = proxy.point;
                    }
                    if (run == 0) art.save_model(method + "_" + alpha_tag(alpha), to_json(es));
                }

                rec.rmse_norm = normalized_rmse(pred, truth.es);
                rec.wasserstein = wasserstein_1d(
                    std::span<const double>(pred.data(), pred.size()),
                    std::span<const double>(truth.es.data(), truth.es.size()));
                if (run == 0) {
                    art.write_plot_csv("density_" + method + "_" + alpha_tag(alpha),
                                       "truth,pred", density_rows(truth.es, pred));
                }
                art.add(std::move(rec));
            }
        }
    }
}

// ---------------------------------------------------------------------
// toy_joint

void run_toy_joint(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        Dataset data = toy_generate(spec, cfg.n, derive_stream(run_seed, kTagTrainData),
                                    false);
        Dataset test = toy_generate(spec, cfg.n_test, derive_stream(run_seed, kTagTestData),
                                    cfg.twins);

        for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
            double alpha = cfg.alphas[ai];
            TrainConfig tc = cfg.train;
            tc.seed = fit_seed(run_seed, 7, ai);
            Stopwatch watch;
            auto [var, es] = fit_joint(data, AlphaLevel(alpha), JointLossSpec{}, cfg.arch,
                                       tc);
            long wall = watch.elapsed_ms(cfg.record_timings);

            ToyTruth truth = toy_truth(spec, test.x, alpha);
            Eigen::VectorXd q_pred = var.predict_batch(test.x, alpha);
            Eigen::VectorXd s_pred = es.predict_batch(test.x);

            MetricsRecord rq;
            rq.method = "joint_var";
            rq.alpha = alpha;
            rq.n = cfg.n;
            rq.seed = run_seed;
            rq.rmse_norm = normalized_rmse(q_pred, truth.var);
            rq.wasserstein =
                wasserstein_1d(std::span<const double>(q_pred.data(), q_pred.size()),
                               std::span<const double>(truth.var.data(), truth.var.size()));
            rq.wall_ms = wall;
            art.add(std::move(rq));

            MetricsRecord rs;
            rs.method = "joint_es";
            rs.alpha = alpha;
            rs.n = cfg.n;
            rs.seed = run_seed;
            rs.rmse_norm = normalized_rmse(s_pred, truth.es);
            rs.wasserstein =
                wasserstein_1d(std::span<const double>(s_pred.data(), s_pred.size()),
                               std::span<const double>(truth.es.data(), truth.es.size()));
            rs.wall_ms = wall;
            art.add(std::move(rs));

            if (run == 0) {
                art.save_model("joint_var_" + alpha_tag(alpha), to_json(var));
                art.save_model("joint_es_" + alpha_tag(alpha), to_json(es));
                art.write_plot_csv("density_joint_var_" + alpha_tag(alpha), "truth,pred",
                                   density_rows(truth.var, q_pred));
                art.write_plot_csv("density_joint_es_" + alpha_tag(alpha), "truth,pred",
                                   density_rows(truth.es, s_pred));
            }
        }
    }
}

// ---------------------------------------------------------------------
// crossing

void run_crossing(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);

    std::vector<double> levels;
    for (const auto& [hi, lo] : cfg.pairs) {
        levels.push_back(hi);
        levels.push_back(lo);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        Dataset data = toy_generate(spec, cfg.n, derive_stream(run_seed, kTagTrainData),
                                    false);
        Dataset test = toy_generate(spec, cfg.n_test, derive_stream(run_seed, kTagTestData),
                                    false);

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const std::string& method = cfg.methods[mi];
            LevelPredictor predictor;
            std::map<double, VarModel> singles;
            std::optional<VarModel> shared;
            TrainConfig tc = cfg.train;
            if (method == "single") {
                for (std::size_t li = 0; li < levels.size(); ++li) {
                    TrainConfig local = cfg.train;
                    local.seed = fit_seed(run_seed, mi, li);
                    singles.emplace(levels[li], fit_var_single(data, AlphaLevel(levels[li]),
                                                               cfg.arch, local));
                }
                predictor = [&singles](double alpha, const Eigen::MatrixXd& x) {
                    return singles.at(alpha).predict_batch(x, alpha);
                };
            } else if (method == "multi1" || method == "multi2") {
                tc.seed = fit_seed(run_seed, mi, 0);
                shared = fit_var_multi_continuum(data, cfg.range_lo, cfg.range_hi,
                                                 method == "multi1" ? cfg.lambda : 0.0,
                                                 cfg.arch, tc);
                predictor = [&shared](double alpha, const Eigen::MatrixXd& x) {
                    return shared->predict_batch(x, alpha);
                };
            } else if (method == "multi3") {
                tc.seed = fit_seed(run_seed, mi, 0);
                shared = fit_var_multi_interp(data, nn::InterpGrid(cfg.grid), cfg.arch, tc);
                predictor = [&shared](double alpha, const Eigen::MatrixXd& x) {
                    return shared->predict_batch(x, alpha);
                };
            } else {
                throw ConfigError("method '" + method + "' not valid for crossing",
                                  "methods.list");
            }

            std::vector<double> rates = crossing_rate(predictor, test.x, cfg.pairs);
            MetricsRecord rec;
            rec.method = method;
            rec.alpha = cfg.pairs.front().first;
            rec.n = cfg.n;
            rec.seed = run_seed;
            for (std::size_t pi = 0; pi < cfg.pairs.size(); ++pi) {
                rec.crossing[alpha_tag(cfg.pairs[pi].first) + "<" +
                             alpha_tag(cfg.pairs[pi].second)] = rates[pi];
            }
            art.add(std::move(rec));
        }
    }
}

// ---------------------------------------------------------------------
// rate

void run_rate(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);
    double alpha = cfg.alphas.front();

    Dataset test = toy_generate(spec, cfg.n_test, derive_stream(cfg.seed, kTagTestData),
                                false);
    ToyTruth truth = toy_truth(spec, test.x, alpha);

    std::vector<std::pair<double, double>> points;
    std::vector<std::string> rows;
    char buf[96];
    for (std::size_t ni = 0; ni < cfg.rate_n.size(); ++ni) {
        long n = cfg.rate_n[ni];
        for (int run = 0; run < cfg.rate_runs; ++run) {
            std::uint64_t seed = derive_stream(cfg.seed, 0x6000 + ni * 131 + run);
            Dataset data = toy_generate(spec, n, derive_stream(seed, kTagTrainData), false);
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            // Keep the optimizer budget constant in steps: scale the batch
            // with n so epochs x steps matches across sizes.
            double scale = static_cast<double>(n) / static_cast<double>(cfg.rate_n.back());
            tc.batch_size =
                std::max(32, static_cast<int>(std::lround(cfg.train.batch_size * scale)));
            VarModel model = fit_var_single(data, AlphaLevel(alpha), cfg.arch, tc);
            double rmse = normalized_rmse(model.predict_batch(test.x, alpha), truth.var);
            points.emplace_back(static_cast<double>(n), rmse);
            std::snprintf(buf, sizeof(buf), "%ld,%d,%.10g", n, run, rmse);
            rows.emplace_back(buf);

            MetricsRecord rec;
            rec.method = "single";
            rec.alpha = alpha;
            rec.n = n;
            rec.seed = seed;
            rec.rmse_norm = rmse;
            art.add(std::move(rec));
        }
    }
    SlopeFit fit = convergence_slope(points);
    art.write_plot_csv("rate_points", "n,run,rmse", rows);
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", fit.slope, fit.intercept);
    art.write_plot_csv("rate_fit", "slope,intercept", {buf});
}

// ---------------------------------------------------------------------
// twin_validate

void run_twin_validate(const ExperimentConfig& cfg, Artifacts& art) {
    Rng spec_rng(derive_stream(cfg.seed, kTagSpec));
    GaussianToySpec spec = toy_spec_sample(cfg.d, spec_rng);
    double alpha = cfg.alphas.front();
    AlphaLevel level(alpha);

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        Dataset data = toy_generate(spec, cfg.n, derive_stream(run_seed, kTagTrainData),
                                    true);

        auto q_at = [&spec](double a) {
            return [&spec, a](const Eigen::MatrixXd& x) {
                Eigen::VectorXd q(x.rows());
                parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
                    q(static_cast<Eigen::Index>(i)) =
                        toy_var_es_closed(spec, x.row(i).transpose(), a).var;
                });
                return q;
            };
        };
        auto s_exact = [&spec, alpha](const Eigen::MatrixXd& x) {
            Eigen::VectorXd s(x.rows());
            parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
                s(static_cast<Eigen::Index>(i)) =
                    toy_var_es_closed(spec, x.row(i).transpose(), alpha).es;
            });
            return s;
        };

        auto emit = [&](const std::string& method, const TwinEstimate& est, bool es_field) {
            MetricsRecord rec;
            rec.method = method;
            rec.alpha = alpha;
            rec.n = cfg.n;
            rec.seed = run_seed;
            if (es_field) {
                rec.es_proxy = est.point;
            } else {
                rec.pvalue_err = est.point;
                rec.pvalue_err_ci_hi = est.ci_hi();
            }
            art.add(std::move(rec));
        };

        emit("q_exact", pvalue_error_estimate(q_at(alpha), data, level), false);
        emit("q_perturbed_lo", pvalue_error_estimate(q_at(alpha - 0.02), data, level),
             false);
        emit("q_perturbed_hi",
             pvalue_error_estimate(q_at(std::min(alpha + 0.01, 0.9995)), data, level),
             false);
        emit("s_exact", es_error_proxy(q_at(alpha), s_exact, data, level), true);
        auto s_shift = [&s_exact](const Eigen::MatrixXd& x) {
            return (s_exact(x).array() + 0.25).matrix().eval();
        };
        emit("s_shifted", es_error_proxy(q_at(alpha), s_shift, data, level), true);
    }
}

// ---------------------------------------------------------------------
// elicit_check

void run_elicit_check(const ExperimentConfig& cfg, Artifacts& art) {
    auto checks = elicitability_checks(cfg.seed);
    std::vector<std::string> rows;
    char buf[160];
    bool all_pass = true;
    for (const ElicitCheck& c : checks) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%s", c.name.c_str(), c.deviation,
                      c.tolerance, c.pass ? "pass" : "FAIL");
        rows.emplace_back(buf);
        all_pass = all_pass && c.pass;

        MetricsRecord rec;
        rec.method = c.name;
        rec.alpha = 0.0;
        rec.n = 0;
        rec.seed = cfg.seed;
        rec.rmse_norm = c.deviation;
        art.add(std::move(rec));
    }
    art.write_plot_csv("elicit_checks", "name,deviation,tolerance,status", rows);
    if (!all_pass) {
        throw TrainingError("an elicitability assertion failed; see plotdata/elicit_checks.csv");
    }
}

// ---------------------------------------------------------------------
// dim

void run_dim(const ExperimentConfig& cfg, Artifacts& art) {
    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = run_seed_of(cfg, run);
        MarketConfig market = cfg.market;
        market.seed = derive_stream(run_seed, 0xD1);
        SwapBook book = SwapBook::sample(market);
        PathSet paths = simulate_paths(market, book, cfg.dim_n_paths);
        ImLabelSet labels = im_labels(paths, market);
        if (run == 0 && cfg.export_paths) {
            write_pathset(paths, cfg.output_dir + "/paths.bin");
            write_pathset_csv(paths, cfg.output_dir + "/paths.csv");
        }

        // Held-out paths for the sawtooth diagnostics and IM curves.
        MarketConfig eval_market = market;
        eval_market.seed = derive_stream(run_seed, 0xD2);
        PathSet eval_paths = simulate_paths(eval_market, book,
                                            std::max<long>(cfg.n_test, 256));
        ImLabelSet eval_labels = im_labels(eval_paths, market);

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const std::string& method = cfg.methods[mi];
            for (double alpha : cfg.alphas) {
                ImLearnSpec spec;
                if (method == "single") {
                    spec.mode = SingleAlphaMode{alpha};
                } else if (method == "multi1" || method == "multi2") {
                    spec.mode = ContinuumMode{cfg.range_lo, cfg.range_hi};
                    spec.lambda = method == "multi1" ? cfg.lambda : 0.0;
                } else if (method == "multi3") {
                    spec.mode = InterpMode{nn::InterpGrid(cfg.grid)};
                } else {
                    throw ConfigError("method '" + method + "' not valid for dim",
                                      "methods.list");
                }
                TrainConfig tc = cfg.train;
                tc.seed = fit_seed(run_seed, mi, static_cast<std::uint64_t>(alpha * 1e4));
                Stopwatch watch;
                std::vector<VarModel> models = learn_im_backward(labels, spec, cfg.arch, tc);
                long wall = watch.elapsed_ms(cfg.record_timings);

                // IM summary curves over held-out paths.
                std::vector<std::string> curve_rows;
                char buf[160];
                std::vector<double> step_means(models.size());
                for (std::size_t si = 0; si < models.size(); ++si) {
                    const Dataset& step_data = eval_labels.by_step[si];
                    Eigen::VectorXd im = models[si].predict_batch(step_data.x, alpha);
                    std::vector<double> sorted(im.data(), im.data() + im.size());
                    std::sort(sorted.begin(), sorted.end());
                    double mean = im.mean();
                    step_means[si] = mean;
                    double p5 = sorted[static_cast<std::size_t>(0.05 * (sorted.size() - 1))];
                    double p95 = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];
                    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.10g,%.10g,%.10g",
                                  eval_labels.steps[si],
                                  paths.times[static_cast<std::size_t>(
                                      eval_labels.steps[si])],
                                  mean, p5, p95);
                    curve_rows.emplace_back(buf);
                }
                if (run == 0) {
                    art.write_plot_csv("im_curve_" + method + "_" + alpha_tag(alpha),
                                       "step,t,mean,p5,p95", curve_rows);
                }

                // Nested benchmark comparison at the configured steps.
                for (int t_step : cfg.t_steps) {
                    NestedMcConfig nested = cfg.nested;
                    nested.alpha = AlphaLevel(alpha);
                    NestedImResult bench =
                        benchmark_im_nested(market, book, cfg.dim_n_outer, nested, t_step);

                    auto it = std::find(labels.steps.begin(), labels.steps.end(), t_step);
                    if (it == labels.steps.end()) {
                        throw InputError("t_step has no label group");
                    }
                    std::size_t si = static_cast<std::size_t>(it - labels.steps.begin());
                    Eigen::MatrixXd x(bench.outer_rates.size(), 2);
                    x.col(0) = bench.outer_rates;
                    x.col(1).setConstant(paths.times[static_cast<std::size_t>(t_step)]);
                    Eigen::VectorXd learned = models[si].predict_batch(x, alpha);

                    MetricsRecord rec;
                    rec.method = method + "_t" + std::to_string(t_step);
                    rec.alpha = alpha;
                    rec.n = cfg.dim_n_outer;
                    rec.seed = run_seed;
                    rec.rmse_norm = normalized_rmse(learned, bench.margin);
                    rec.wasserstein = wasserstein_1d(
                        std::span<const double>(learned.data(), learned.size()),
                        std::span<const double>(bench.margin.data(), bench.margin.size()));
                    rec.wall_ms = wall;
                    art.add(std::move(rec));

                    if (run == 0) {
                        std::vector<std::string> rows;
                        for (Eigen::Index i = 0; i < bench.margin.size(); ++i) {
                            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g",
                                          bench.outer_rates(i), bench.margin(i), learned(i));
                            rows.emplace_back(buf);
                        }
                        art.write_plot_csv("bench_" + method + "_t" +
                                               std::to_string(t_step) + "_" +
                                               alpha_tag(alpha),
                                           "r,benchmark,learned", rows);
                    }
                }

                if (run == 0) {
                    int t0 = cfg.t_steps.front();
                    auto pos = std::find(labels.steps.begin(), labels.steps.end(), t0);
                    std::size_t si = static_cast<std::size_t>(pos - labels.steps.begin());
                    art.save_model(method + "_" + alpha_tag(alpha) + "_t" +
                                       std::to_string(t0),
                                   to_json(models[si]));
                }
                (void)step_means;
            }
        }
    }
}

}  // namespace

std::string run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Artifacts art(cfg);
    auto stage = [](const char* name, auto&& body) {
        try {
            body();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw Error(std::string("stage ") + name + ": " + e.what());
        }
    };
    switch (cfg.kind) {
        case ExperimentKind::ToyVar:
            stage("toy_var", [&] { run_toy_var(cfg, art); });
            break;
        case ExperimentKind::ToyEs:
            stage("toy_es", [&] { run_toy_es(cfg, art); });
            break;
        case ExperimentKind::ToyJoint:
            stage("toy_joint", [&] { run_toy_joint(cfg, art); });
            break;
        case ExperimentKind::Crossing:
            stage("crossing", [&] { run_crossing(cfg, art); });
            break;
        case ExperimentKind::Rate:
            stage("rate", [&] { run_rate(cfg, art); });
            break;
        case ExperimentKind::TwinValidate:
            stage("twin_validate", [&] { run_twin_validate(cfg, art); });
            break;
        case ExperimentKind::ElicitCheck:
            stage("elicit_check", [&] { run_elicit_check(cfg, art); });
            break;
        case ExperimentKind::Dim:
            stage("dim", [&] { run_dim(cfg, art); });
            break;
    }
    stage("write", [&] { art.finalize(); });
    return cfg.output_dir;
}

std::string run_experiment_file(const std::string& config_path) {
    return run_experiment(ExperimentConfig::from_file(config_path));
}

}  // namespace riskquant::cli
