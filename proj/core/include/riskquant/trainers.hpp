#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <utility>
#include <variant>

#include "riskquant/dataset.hpp"
#include "riskquant/losses.hpp"
#include "riskquant/nn.hpp"
#include "riskquant/optim.hpp"

namespace riskquant {

/// Monotone response map h1 with its inverse. Training sees h1(Y);
/// prediction applies the inverse to the network output.
struct MonotoneTransform {
    enum class Kind { Identity, ScaledTanh };
    Kind kind = Kind::Identity;
    double scale = 1.0;  // ScaledTanh: h1(y) = scale * tanh(y / scale)

    double apply(double y) const;
    double inverse(double v) const;
};

struct SingleAlphaMode {
    double alpha;
};
struct ContinuumMode {
    double lo;
    double hi;
};
struct InterpMode {
    nn::InterpGrid grid;
};
using VarMode = std::variant<SingleAlphaMode, ContinuumMode, InterpMode>;

/// A trained conditional quantile estimator.
struct VarModel {
    VarMode mode;
    nn::Network net;
    MonotoneTransform transform;

    /// Throws UsageError when alpha is incompatible with the mode
    /// (different level for single-alpha, out of range otherwise).
    double predict(const Eigen::VectorXd& x, double alpha) const;
    Eigen::VectorXd predict_batch(const Eigen::MatrixXd& x, double alpha) const;
};

/// Affine target map for the ES regression: targets are tau*t + nu before
/// truncation, predictions are mapped back through (g - nu)/tau.
struct AffineTransform {
    double tau = 1.0;
    double nu = 0.0;
};

/// A trained conditional expected-shortfall estimator in increment form:
/// s_hat(x) = q_hat(x) + max(z_hat(x), 0).
struct EsModel {
    std::optional<VarModel> var_model;  // empty when fit against an oracle quantile
    nn::Network increment_net;
    AlphaLevel alpha;
    TruncationBound trunc;
    AffineTransform transform;

    double increment(const Eigen::VectorXd& x) const;
    Eigen::VectorXd increment_batch(const Eigen::MatrixXd& x) const;

    /// Requires a var_model-backed fit.
    double predict(const Eigen::VectorXd& x) const;
    Eigen::VectorXd predict_batch(const Eigen::MatrixXd& x) const;

    /// Oracle-candidate path: the caller supplies q_hat(x).
    double predict_with_q(const Eigen::VectorXd& x, double q_value) const;
};

/// Network shape knobs; width <= 0 means twice the input dimension.
struct Arch {
    int hidden = 3;
    int width = 0;
};

std::vector<nn::LayerSpec> resolve_arch(int in_dim, int out_dim, const Arch& arch);

/// Pinball regression at one fixed level.
VarModel fit_var_single(const Dataset& data, AlphaLevel alpha, const Arch& arch,
                        const TrainConfig& cfg,
                        MonotoneTransform transform = MonotoneTransform{},
                        const nn::Network* warm_start = nullptr);

/// Randomized-level training on a (d+1)-input network. lambda > 0 adds the
/// non-crossing penalty on the level-derivative. Rows missing alpha draw
/// one level each, uniform on [lo, hi], from the config seed.
VarModel fit_var_multi_continuum(const Dataset& data, double alpha_lo, double alpha_hi,
                                 double lambda, const Arch& arch, const TrainConfig& cfg,
                                 const nn::Network* warm_start = nullptr);

/// Multi-output training with the interpolated head over a fixed knot grid.
VarModel fit_var_multi_interp(const Dataset& data, const nn::InterpGrid& grid,
                              const Arch& arch, const TrainConfig& cfg,
                              const nn::Network* warm_start = nullptr);

enum class EsMode { FullNet, FrozenLR };

/// Two-step ES on the positive-part residuals of a quantile candidate.
/// FullNet trains a fresh network; FrozenLR freezes the candidate's hidden
/// stack and solves the output layer by ridge-stabilized least squares.
EsModel fit_es_two_step(const Dataset& data, const VarModel& var_model, AlphaLevel alpha,
                        EsMode mode, const TruncationBound& trunc, const Arch& arch,
                        const TrainConfig& cfg, AffineTransform transform = {});

/// FullNet variant against an arbitrary quantile candidate (e.g. a
/// closed-form oracle). The result has no embedded var_model.
EsModel fit_es_two_step(const Dataset& data,
                        const std::function<double(const Eigen::VectorXd&)>& q_fn,
                        AlphaLevel alpha, const TruncationBound& trunc, const Arch& arch,
                        const TrainConfig& cfg, AffineTransform transform = {});

/// One two-output network trained on the joint VaR/ES loss; output 0 is
/// the quantile, output 1 the (unclamped) increment.
std::pair<VarModel, EsModel> fit_joint(const Dataset& data, AlphaLevel alpha,
                                       const JointLossSpec& spec, const Arch& arch,
                                       const TrainConfig& cfg);

}  // namespace riskquant
