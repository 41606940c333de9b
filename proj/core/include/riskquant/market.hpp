#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "riskquant/dataset.hpp"

namespace riskquant {

/// One-factor Vasicek economy carrying a book of fixed-vs-float swaps
/// with annual payment dates. Stands in for a full multi-currency market
/// at desk scale: it keeps a state-dependent conditional law, coupon
/// sawtooth and a nested benchmark, nothing more.
struct MarketConfig {
    double kappa = 0.5;
    double theta = 0.03;
    double sigma_r = 0.01;
    double r0 = 0.03;
    int n_swaps = 20;
    double horizon_years = 10.0;
    int steps = 40;
    double delta_years = 0.25;  // margin period of risk
    std::uint64_t seed = 0;

    double dt() const { return horizon_years / steps; }
    int delta_steps() const;
    void validate() const;
};

/// Zero-coupon bond price exp(-B(tau) r + ...) under the Vasicek dynamics.
double vasicek_zcb(const MarketConfig& cfg, double tau, double r);
/// E[r_t | r_0] in closed form.
double vasicek_mean(const MarketConfig& cfg, double t);

/// Swap book with directions, integer-year maturities and fixed rates
/// drawn around par from the config seed. The float coupon paid at an
/// annual date u is fixed one grid step earlier as 1/P(u-dt; u-dt, u) - 1,
/// which keeps valuation closed-form and increments measurable from the
/// short rate at the window start.
struct SwapBook {
    struct Swap {
        double direction;  // +1 receives float, -1 pays float
        int maturity_years;
        double fixed_rate;
    };
    std::vector<Swap> swaps;

    static SwapBook sample(const MarketConfig& cfg);

    /// Sum of swap values at grid time t given short rate r
    /// (future payments only).
    double value(const MarketConfig& cfg, double t, double r) const;
    /// Net cash flow paid at annual date u, fixed from r at u - dt.
    double cash_flow_at(const MarketConfig& cfg, double u, double r_fixing) const;
    bool pays_at(double t) const;
};

/// Book valuation with per-step aggregated discount terms: value(k, r)
/// is a short sum of coeff * exp(-b r). Agrees with SwapBook::value on
/// grid times and is what the simulators use in hot loops.
class BookValuer {
public:
    BookValuer(const MarketConfig& cfg, const SwapBook& book);

    double value(int step, double r) const;
    double cash_flow(int step, double r_fixing) const;
    bool pays(int step) const { return pay_dir_sum_[static_cast<std::size_t>(step)] != 0.0 ||
                                       pay_fixed_sum_[static_cast<std::size_t>(step)] != 0.0; }

private:
    struct Term {
        double b;
        double coeff;
    };
    std::vector<std::vector<Term>> terms_;  // per grid step
    std::vector<double> pay_dir_sum_;       // sum of directions paying at the step
    std::vector<double> pay_fixed_sum_;     // sum of direction * fixed_rate paying
    double one_step_b_ = 0.0;
    double one_step_a_ = 1.0;
};

/// Simulated paths on the uniform grid. states(p, k) packs (r, t); mtm
/// includes cash flows cumulated up to the step.
struct PathSet {
    std::vector<double> times;  // steps + 1 entries
    Eigen::MatrixXd short_rate;  // paths x (steps + 1)
    Eigen::MatrixXd mtm;         // paths x (steps + 1)
    int state_dim = 2;

    Eigen::Index n_paths() const { return short_rate.rows(); }
    Eigen::Index n_steps() const { return short_rate.cols(); }
    Eigen::VectorXd feature_row(Eigen::Index path, Eigen::Index step) const;
};

/// Exact-transition simulation; path p draws from substream split(seed, p).
PathSet simulate_paths(const MarketConfig& cfg, const SwapBook& book, Eigen::Index n_paths);

/// Per-step margin regression labels: features (r_t, t), response
/// MtM_{t+delta} - MtM_t. Steps whose window exceeds the horizon are
/// dropped.
struct ImLabelSet {
    std::vector<int> steps;        // grid indices, increasing
    std::vector<Dataset> by_step;  // one dataset per listed step
};

ImLabelSet im_labels(const PathSet& paths, const MarketConfig& cfg);

/// Binary columnar export: magic RQPS, version, dims, then times, states
/// (r, t) and mtm as little-endian float64. CSV export mirrors the same
/// content row-wise.
void write_pathset(const PathSet& paths, const std::string& path);
void write_pathset_csv(const PathSet& paths, const std::string& path);

}  // namespace riskquant
