#include "riskquant/nested_sa.hpp"

#include <cmath>
#include <vector>

#include "riskquant/errors.hpp"
#include "riskquant/normal.hpp"

namespace riskquant {

void NestedMcConfig::validate() const {
    if (n_inner < 1) throw InputError("n_inner must be >= 1");
    if (iterations < 1) throw InputError("iterations must be >= 1");
    if (!(gamma > 0.0)) throw InputError("gamma must be positive");
}

double nested_var_sa(const InnerSampler& sampler, const NestedMcConfig& cfg,
                     NestedInit init) {
    cfg.validate();
    std::vector<double> draws(static_cast<std::size_t>(cfg.n_inner));
    std::span<double> batch(draws);

    double v = 0.0;
    int iteration = 0;
    if (init == NestedInit::GaussianMoment) {
        sampler(iteration++, batch);
        double mean = 0.0;
        for (double d : draws) mean += d;
        mean /= static_cast<double>(cfg.n_inner);
        double sq = 0.0;
        for (double d : draws) sq += (d - mean) * (d - mean);
        double sd = cfg.n_inner > 1 ? std::sqrt(sq / static_cast<double>(cfg.n_inner - 1)) : 0.0;
        v = mean + sd * norm_quantile(cfg.alpha.value);
    }

    double m_acc = 0.0, v_acc = 0.0;
    for (int k = 0; k < cfg.iterations; ++k) {
        sampler(iteration++, batch);
        double exceed = 0.0;
        for (double d : draws) {
            if (d >= v) exceed += 1.0;
        }
        double p = exceed / static_cast<double>(cfg.n_inner);
        double signal = p - 1.0 + cfg.alpha.value;
        double step = cfg.gamma;
        if (cfg.step_decay) step /= std::sqrt(static_cast<double>(k + 1));
        if (cfg.optimizer == NestedMcConfig::Optimizer::PlainSA) {
            v += step * signal;
        } else {
            double g = -signal;  // descent direction of the tilted loss
            m_acc = cfg.adam_beta1 * m_acc + (1.0 - cfg.adam_beta1) * g;
            v_acc = cfg.adam_beta2 * v_acc + (1.0 - cfg.adam_beta2) * g * g;
            double bc1 = 1.0 - std::pow(cfg.adam_beta1, k + 1);
            double bc2 = 1.0 - std::pow(cfg.adam_beta2, k + 1);
            v -= step * (m_acc / bc1) / (std::sqrt(v_acc / bc2) + cfg.adam_eps);
        }
    }
    return v;
}

}  // namespace riskquant
