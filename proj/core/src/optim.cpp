#include "riskquant/optim.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "riskquant/errors.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

void TrainConfig::validate() const {
    if (epochs <= 0) throw InputError("epochs must be positive");
    if (batch_size <= 0) throw InputError("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InputError("adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw InputError("adam eps must be positive");
}

AdamState::AdamState(const nn::Network& net)
    : m(net.zero_gradients()), v(net.zero_gradients()) {}

namespace {

inline void adam_update_block(Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& g,
                              Eigen::MatrixXd& m, Eigen::MatrixXd& v, double lr,
                              double b1, double b2, double eps, double bc1, double bc2) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(nn::Network& net, const nn::Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
    auto& layers = net.mutable_layers();
    if (grads.w.size() != layers.size()) throw ShapeError("gradient stack size mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (grads.w[i].rows() != layers[i].w.rows() || grads.w[i].cols() != layers[i].w.cols() ||
            grads.b[i].size() != layers[i].b.size()) {
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
        }
        adam_update_block(layers[i].w, grads.w[i], state.m.w[i], state.v.w[i],
                          cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
        Eigen::MatrixXd gb = grads.b[i];
        Eigen::MatrixXd mb = state.m.b[i], vb = state.v.b[i];
        adam_update_block(layers[i].b, gb, mb, vb, cfg.learning_rate, cfg.beta1,
                          cfg.beta2, cfg.eps, bc1, bc2);
        state.m.b[i] = mb;
        state.v.b[i] = vb;
    }
}

TrainResult train(nn::Network net, const Dataset& data, const LossClosure& closure,
                  const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    const std::size_t n = static_cast<std::size_t>(data.n());
    if (n == 0) throw InputError("cannot train on an empty dataset");

    AdamState state(net);
    Rng shuffle_rng(derive_stream(cfg.seed, stream::kShuffle));
    std::vector<double> history;
    history.reserve(cfg.epochs);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) order = shuffle_rng.permutation(n);
        double epoch_loss = 0.0;
        int step_in_epoch = 0;
        for (std::size_t begin = 0; begin < n; begin += bs) {
            std::size_t end = begin + bs < n ? begin + bs : n;
            BatchView batch{data, std::span<const std::size_t>(order.data() + begin, end - begin)};
            BatchLoss bl = closure(net, batch);
            if (!std::isfinite(bl.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", step " + std::to_string(step_in_epoch));
            }
            epoch_loss += bl.loss * static_cast<double>(end - begin);
            adam_step(net, bl.grads, state, cfg);
            ++step_in_epoch;
        }
        history.push_back(epoch_loss / static_cast<double>(n));
    }
    return {std::move(net), std::move(history)};
}

Eigen::VectorXd linear_least_squares(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& targets, double ridge) {
    if (features.rows() != targets.size()) throw ShapeError("row count mismatch");
    if (features.rows() < 1 || features.cols() < 1) throw ShapeError("empty system");
    if (ridge < 0.0) throw InputError("ridge must be >= 0");

    Eigen::MatrixXd gram = features.transpose() * features;
    gram.diagonal().array() += ridge;
    Eigen::VectorXd rhs = features.transpose() * targets;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    Eigen::VectorXd w = solver.solve(rhs);

    if (ridge == 0.0) {
        Eigen::VectorXd d = solver.vectorD();
        double dmax = d.cwiseAbs().maxCoeff();
        if (!(d.minCoeff() > 1e-12 * dmax)) {
            throw SolverError("normal equations are singular; pass ridge > 0");
        }
    }
    double scale = gram.norm() * std::max(1.0, w.norm()) + rhs.norm();
    double residual = (gram * w - rhs).norm();
    if (!w.allFinite() || residual > 1e-8 * std::max(scale, 1e-300)) {
        throw SolverError("normal equations are singular; pass ridge > 0");
    }
    return w;
}

}  // namespace riskquant
