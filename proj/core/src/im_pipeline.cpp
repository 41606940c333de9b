#include "riskquant/im_pipeline.hpp"

#include <cmath>

#include "riskquant/errors.hpp"
#include "riskquant/parallel.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

std::vector<VarModel> learn_im_backward(const ImLabelSet& labels, const ImLearnSpec& spec,
                                        const Arch& arch, const TrainConfig& cfg) {
    if (labels.by_step.empty()) throw InputError("no label steps to train on");

    std::vector<VarModel> models;
    models.reserve(labels.by_step.size());
    const nn::Network* warm = nullptr;
    for (std::size_t i = labels.by_step.size(); i-- > 0;) {
        TrainConfig step_cfg = cfg;
        step_cfg.seed = derive_stream(cfg.seed, 0xD100 + static_cast<std::uint64_t>(i));
        const Dataset& data = labels.by_step[i];
        VarModel model = std::visit(
            [&](const auto& mode) -> VarModel {
                using T = std::decay_t<decltype(mode)>;
                if constexpr (std::is_same_v<T, SingleAlphaMode>) {
                    return fit_var_single(data, AlphaLevel(mode.alpha), arch, step_cfg,
                                          MonotoneTransform{}, warm);
                } else if constexpr (std::is_same_v<T, ContinuumMode>) {
                    return fit_var_multi_continuum(data, mode.lo, mode.hi, spec.lambda,
                                                   arch, step_cfg, warm);
                } else {
                    return fit_var_multi_interp(data, mode.grid, arch, step_cfg, warm);
                }
            },
            spec.mode);
        models.push_back(std::move(model));
        if (spec.warm_start) warm = &models.back().net;
    }
    std::reverse(models.begin(), models.end());
    return models;
}

NestedImResult benchmark_im_nested(const MarketConfig& cfg, const SwapBook& book,
                                   Eigen::Index n_outer, const NestedMcConfig& nested_cfg,
                                   int t_step) {
    cfg.validate();
    nested_cfg.validate();
    const int ds = cfg.delta_steps();
    if (t_step < 0 || t_step + ds > cfg.steps) {
        throw InputError("t_step with its margin window must fit on the grid");
    }
    if (n_outer < 1) throw InputError("need n_outer >= 1");

    const double dt = cfg.dt();
    const double decay = std::exp(-cfg.kappa * dt);
    const double diffusion =
        cfg.sigma_r * std::sqrt((1.0 - decay * decay) / (2.0 * cfg.kappa));
    const BookValuer valuer(cfg, book);

    const std::uint64_t outer_seed = derive_stream(cfg.seed, 0x42454e4348ULL);
    const std::uint64_t inner_seed = derive_stream(cfg.seed, 0x494e4e4552ULL);

    NestedImResult result;
    result.outer_rates.resize(n_outer);
    result.margin.resize(n_outer);

    parallel_for(static_cast<std::size_t>(n_outer), [&](std::size_t node) {
        // Fresh outer state: exact transitions from r0 to t_step.
        Rng outer = Rng(outer_seed).split(node);
        double r = cfg.r0;
        for (int k = 0; k < t_step; ++k) {
            r = cfg.theta + (r - cfg.theta) * decay + diffusion * outer.normal();
        }
        result.outer_rates(static_cast<Eigen::Index>(node)) = r;

        const double v0 = valuer.value(t_step, r);
        const std::uint64_t node_seed = derive_stream(inner_seed, node);
        // tag 0 is the step-scale batch; nested_var_sa sees tags 1, 2, ...
        auto fill = [&](std::uint64_t tag, std::span<double> out) {
            Rng it(derive_stream(node_seed, tag));
            for (double& slot : out) {
                double rr = r;
                double cash = 0.0;
                for (int s = 1; s <= ds; ++s) {
                    int step = t_step + s;
                    if (valuer.pays(step)) cash += valuer.cash_flow(step, rr);
                    rr = cfg.theta + (rr - cfg.theta) * decay + diffusion * it.normal();
                }
                slot = valuer.value(t_step + ds, rr) + cash - v0;
            }
        };

        // Step scale of the order of the conditional standard deviation.
        std::vector<double> probe(static_cast<std::size_t>(nested_cfg.n_inner));
        fill(0, probe);
        double mean = 0.0;
        for (double d : probe) mean += d;
        mean /= static_cast<double>(probe.size());
        double sq = 0.0;
        for (double d : probe) sq += (d - mean) * (d - mean);
        double sd = probe.size() > 1
                        ? std::sqrt(sq / static_cast<double>(probe.size() - 1))
                        : 0.0;

        NestedMcConfig local = nested_cfg;
        local.gamma = nested_cfg.gamma * std::max(sd, 1e-12 * (1.0 + std::abs(mean)));
        double im = nested_var_sa(
            [&fill](int iteration, std::span<double> out) {
                fill(static_cast<std::uint64_t>(iteration) + 1, out);
            },
            local, NestedInit::GaussianMoment);
        result.margin(static_cast<Eigen::Index>(node)) = im;
    });
    return result;
}

}  // namespace riskquant
