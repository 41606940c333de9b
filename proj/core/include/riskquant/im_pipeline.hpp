#pragma once

#include <vector>

#include "riskquant/market.hpp"
#include "riskquant/nested_sa.hpp"
#include "riskquant/trainers.hpp"

namespace riskquant {

/// Which quantile scheme the per-step margin models use.
struct ImLearnSpec {
    VarMode mode = SingleAlphaMode{0.95};
    double lambda = 0.0;  // crossing penalty, continuum mode only
    bool warm_start = true;
};

/// Trains one quantile model per label step, walking backward in time and
/// reusing the later step's weights as initialization. Models are
/// returned in forward time order, aligned with labels.steps.
std::vector<VarModel> learn_im_backward(const ImLabelSet& labels, const ImLearnSpec& spec,
                                        const Arch& arch, const TrainConfig& cfg);

/// Nested Monte Carlo margin benchmark at grid step t_step: draws n_outer
/// fresh outer nodes, then runs one stochastic approximation per node
/// with conditional resimulation of the MtM increment over the margin
/// window. Returns (r_t per node, margin estimate per node).
struct NestedImResult {
    Eigen::VectorXd outer_rates;
    Eigen::VectorXd margin;
};

NestedImResult benchmark_im_nested(const MarketConfig& cfg, const SwapBook& book,
                                   Eigen::Index n_outer, const NestedMcConfig& nested_cfg,
                                   int t_step);

}  // namespace riskquant
