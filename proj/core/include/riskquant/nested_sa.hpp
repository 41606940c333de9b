#pragma once

#include <functional>
#include <span>

#include "riskquant/losses.hpp"

namespace riskquant {

/// Per-node stochastic-approximation settings for the nested quantile
/// benchmark. The main update is v += gamma (p - 1 + alpha) with p the
/// fraction of inner draws at or above v; step_decay selects the
/// gamma / sqrt(k+1) variant.
struct NestedMcConfig {
    int n_inner = 1024;
    int iterations = 256;  // K
    double gamma = 1.0;
    AlphaLevel alpha{0.95};
    enum class Optimizer { PlainSA, Adam };
    Optimizer optimizer = Optimizer::Adam;
    bool step_decay = false;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

/// Fills `out` with n_inner fresh conditional draws for one iteration.
using InnerSampler = std::function<void(int iteration, std::span<double> out)>;

enum class NestedInit { GaussianMoment, Zero };

/// One stochastic-approximation run for a single outer node. With
/// GaussianMoment init an extra inner batch (iteration 0) seeds
/// mean + std * Phi^-1(alpha); the K updates then use iterations
/// 1..K (or 0..K-1 for Zero init).
double nested_var_sa(const InnerSampler& sampler, const NestedMcConfig& cfg,
                     NestedInit init);

}  // namespace riskquant
