#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "riskquant/losses.hpp"

namespace riskquant {

/// Finite law given by (value, probability) atoms with strictly
/// increasing values and probabilities summing to one.
struct DiscreteDist {
    explicit DiscreteDist(std::vector<std::pair<double, double>> atoms);

    double cdf(double t) const;
    /// inf{t : F(t) >= alpha} over the atoms.
    double quantile(double alpha) const;

    std::vector<std::pair<double, double>> atoms;
};

std::vector<double> uniform_grid(double lo, double hi, std::size_t count);
/// 2001 points over [min atom - 1, max atom + 1].
std::vector<double> default_grid(const DiscreteDist& dist);
/// 2001 points spanning the 1e-4 .. 1-1e-4 empirical quantile range.
std::vector<double> default_grid(std::span<const double> samples);

struct QuantileMinimizer {
    std::vector<double> argmin;  // grid points tied for the minimum
    double quantile;             // definitional quantile inf{t : F(t) >= alpha}
};

/// Scans the grid for minimizers of the mean pinball loss under `dist`
/// (ties within 1e-12). The definitional quantile is always a member.
QuantileMinimizer brute_force_quantile_minimizer(const DiscreteDist& dist,
                                                 AlphaLevel alpha,
                                                 std::span<const double> grid,
                                                 double response_scale = 1.0);

/// Same scan returning only the minimum of the mean pinball loss, with
/// responses scaled by `response_scale` (used by the ES = min/c identity).
double brute_force_pinball_minimum(const DiscreteDist& dist, AlphaLevel alpha,
                                   std::span<const double> grid, double response_scale);
double brute_force_pinball_minimum(std::span<const double> samples, AlphaLevel alpha,
                                   std::span<const double> grid, double response_scale);

/// Grid argmin of the mean squared ES residual given the quantile
/// candidate q. Requires F(q) = alpha (flagged via InputError otherwise);
/// under that assumption the argmin approaches ES - q.
double brute_force_es_minimizer(const DiscreteDist& dist, double q, AlphaLevel alpha,
                                std::span<const double> grid);
/// Sample-law overload; the empirical CDF at q must sit within sampling
/// noise of alpha.
double brute_force_es_minimizer(std::span<const double> samples, double q,
                                AlphaLevel alpha, std::span<const double> grid);

/// 2-D grid argmin of the mean joint VaR/ES loss over a sampled law.
std::pair<double, double> brute_force_joint_minimizer(std::span<const double> samples,
                                                      AlphaLevel alpha,
                                                      std::span<const double> grid_v,
                                                      std::span<const double> grid_z,
                                                      const JointLossSpec& spec);

/// Tail-average of the quantile function: (1-alpha)^-1 times the integral
/// of quantile_fn over (alpha, 1), by composite midpoint quadrature.
double acerbi_es(const std::function<double(double)>& quantile_fn, AlphaLevel alpha,
                 std::size_t n_points);

}  // namespace riskquant
