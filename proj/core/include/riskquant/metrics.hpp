#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskquant/trainers.hpp"

namespace riskquant {

/// Root mean squared error divided by the population standard deviation
/// of the truth. MetricError on zero-variance truth.
double normalized_rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

using LevelPredictor = std::function<Eigen::VectorXd(double alpha, const Eigen::MatrixXd&)>;

/// Fraction of rows where the higher-level prediction falls strictly
/// below the lower-level one, per (alpha_hi, alpha_lo) pair.
std::vector<double> crossing_rate(const LevelPredictor& predict, const Eigen::MatrixXd& x,
                                  std::span<const std::pair<double, double>> alpha_pairs);
std::vector<double> crossing_rate(const VarModel& model, const Eigen::MatrixXd& x,
                                  std::span<const std::pair<double, double>> alpha_pairs);

/// First Wasserstein distance between two empirical laws on the line.
/// Equal sizes reduce to the mean absolute difference of sorted samples;
/// unequal sizes integrate |F_a^-1 - F_b^-1| over the common refinement.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

struct SlopeFit {
    double slope;
    double intercept;
};

/// OLS on (log n, log rmse); requires >= 2 points, all positive.
SlopeFit convergence_slope(std::span<const std::pair<double, double>> points);

/// One result row of an experiment, exported as a JSON line.
struct MetricsRecord {
    std::string method;
    double alpha = 0.0;
    long n = 0;
    std::uint64_t seed = 0;
    std::optional<double> rmse_norm;
    std::optional<double> pvalue_err;
    std::optional<double> pvalue_err_ci_hi;
    std::optional<double> es_proxy;
    std::map<std::string, double> crossing;
    std::optional<double> wasserstein;
    long wall_ms = 0;

    std::string to_json_line() const;
};

}  // namespace riskquant
