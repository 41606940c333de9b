#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

namespace riskquant {

/// Feature matrix plus response, with optional per-row quantile levels and
/// an optional twin response drawn conditionally independent given X.
struct Dataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> alpha_col;
    std::optional<Eigen::VectorXd> y_twin;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index dim() const { return x.cols(); }

    /// Throws InputError on inconsistent column lengths or alpha values
    /// outside (0, 1).
    void validate() const;
};

/// CSV export with header x_0..x_{d-1},y[,alpha][,y_twin].
void write_csv(const Dataset& data, const std::string& path);

}  // namespace riskquant
