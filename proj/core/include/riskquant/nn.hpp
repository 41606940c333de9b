#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "riskquant/rng.hpp"

namespace riskquant::nn {

struct SoftplusEval {
    double value;
    double derivative;
};

/// Overflow-stable softplus log(1 + exp(x)) and its derivative (logistic).
SoftplusEval softplus_eval(double x);

enum class Activation { Softplus, Identity };

struct LayerSpec {
    int in_dim;
    int out_dim;
    Activation activation;
};

/// One affine layer with its activation tag. w is out_dim x in_dim.
struct Layer {
    LayerSpec spec;
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

/// Per-layer forward state for one batch (rows are samples).
/// act[i] is the input of layer i; act[L] is the network output.
/// When the alpha-tangent pass ran, tan/tan_pre mirror act/pre for the
/// directional derivative along input coordinate 0.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> act;
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> act_grad;  // sigma'(pre) for softplus layers
    std::vector<Eigen::MatrixXd> tan;
    std::vector<Eigen::MatrixXd> tan_pre;
    bool has_tangent = false;
};

/// Parameter-shaped gradient stack plus the input gradient.
struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::MatrixXd x;
};

/// Feedforward softplus network. Immutable by convention after
/// construction; forward/backward are const and thread-safe.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    /// Uniform init on [-sqrt(6/(fan_in+fan_out)), +...], zero biases.
    static Network glorot(const std::vector<LayerSpec>& arch, Rng& rng);

    int input_dim() const;
    int output_dim() const;
    std::size_t layer_count() const { return layers_.size(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& mutable_layers() { return layers_; }

    /// Batch forward pass; rows of x are samples.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, ForwardCache& cache) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    /// Single-sample convenience.
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

    /// Fused forward + directional derivative along input coordinate 0
    /// (the alpha feature). Output rows agree bit-exactly with forward.
    Eigen::MatrixXd forward_with_alpha_tangent(const Eigen::MatrixXd& x,
                                               Eigen::MatrixXd& dy_dalpha,
                                               ForwardCache& cache) const;
    Eigen::MatrixXd forward_with_alpha_tangent(const Eigen::MatrixXd& x,
                                               Eigen::MatrixXd& dy_dalpha) const;

    /// Reverse pass for sum_i d_out_i . y_i; gradients are summed over
    /// the batch. cache must come from forward on this network.
    Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out) const;

    /// Reverse pass through the fused forward/tangent computation:
    /// gradients of sum_i (d_out_i . y_i + d_tan_i . t_i) where t is the
    /// alpha tangent. cache must hold tangent state.
    Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out,
                       const Eigen::MatrixXd& d_tan) const;

    Gradients zero_gradients() const;

    std::string to_json() const;
    static Network from_json(const std::string& text);

    bool operator==(const Network& other) const;

private:
    void check_cache(const ForwardCache& cache) const;
    std::vector<Layer> layers_;
};

/// Strictly increasing interpolation knots in (0, 1), K >= 2.
struct InterpGrid {
    explicit InterpGrid(std::vector<double> knots);
    std::size_t size() const { return knots.size(); }
    double lo() const { return knots.front(); }
    double hi() const { return knots.back(); }
    std::vector<double> knots;
};

/// Head weights of the interpolated multi-output estimator:
/// value = out[0] + sum_j (min(alpha, k[j+1]) - k[j]) out[j] 1{alpha >= k[j]}.
/// Returned vector has one entry per output head.
Eigen::VectorXd interp_head_weights(double alpha, const InterpGrid& grid);

/// Evaluates the interpolation head at alpha; range error outside the grid.
double interp_head_eval(const Eigen::VectorXd& outputs, double alpha,
                        const InterpGrid& grid);

/// LayerSpec chain for an MLP with `hidden` softplus layers of `width`
/// units and an identity output layer.
std::vector<LayerSpec> make_mlp_arch(int in_dim, int out_dim, int hidden, int width);

}  // namespace riskquant::nn
