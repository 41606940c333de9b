#include "riskquant/nn.hpp"

#include <cmath>
#include <utility>

#include "riskquant/errors.hpp"
#include "json.hpp"

namespace riskquant::nn {

SoftplusEval softplus_eval(double x) {
    double value = (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
    double derivative;
    if (x >= 0.0) {
        derivative = 1.0 / (1.0 + std::exp(-x));
    } else {
        double e = std::exp(x);
        derivative = e / (1.0 + e);
    }
    return {value, derivative};
}

namespace {

void softplus_batch(const Eigen::MatrixXd& z, Eigen::MatrixXd& value,
                    Eigen::MatrixXd& grad) {
    value.resizeLike(z);
    grad.resizeLike(z);
    const double* src = z.data();
    double* v = value.data();
    double* g = grad.data();
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        auto e = softplus_eval(src[k]);
        v[k] = e.value;
        g[k] = e.derivative;
    }
}

const char* activation_name(Activation a) {
    return a == Activation::Softplus ? "softplus" : "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "softplus") return Activation::Softplus;
    if (name == "identity") return Activation::Identity;
    throw IoError("unknown activation '" + name + "'");
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.w.rows() != l.spec.out_dim || l.w.cols() != l.spec.in_dim ||
            l.b.size() != l.spec.out_dim) {
            throw ShapeError("layer " + std::to_string(i) + " parameter shapes disagree with spec");
        }
        if (i > 0 && layers_[i - 1].spec.out_dim != l.spec.in_dim) {
            throw ShapeError("layer dimensions do not chain at layer " + std::to_string(i));
        }
        if (!l.w.allFinite() || !l.b.allFinite()) {
            throw ShapeError("layer " + std::to_string(i) + " has non-finite parameters");
        }
    }
    if (layers_.back().spec.activation != Activation::Identity) {
        throw ShapeError("final layer activation must be identity");
    }
}

Network Network::glorot(const std::vector<LayerSpec>& arch, Rng& rng) {
    std::vector<Layer> layers;
    layers.reserve(arch.size());
    for (const LayerSpec& spec : arch) {
        double limit = std::sqrt(6.0 / (spec.in_dim + spec.out_dim));
        Eigen::MatrixXd w(spec.out_dim, spec.in_dim);
        for (int r = 0; r < spec.out_dim; ++r) {
            for (int c = 0; c < spec.in_dim; ++c) {
                w(r, c) = rng.uniform(-limit, limit);
            }
        }
        layers.push_back({spec, std::move(w), Eigen::VectorXd::Zero(spec.out_dim)});
    }
    return Network(std::move(layers));
}

int Network::input_dim() const { return layers_.front().spec.in_dim; }
int Network::output_dim() const { return layers_.back().spec.out_dim; }

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x, ForwardCache& cache) const {
    if (x.cols() != input_dim()) {
        throw ShapeError("input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(input_dim()));
    }
    const std::size_t L = layers_.size();
    cache = ForwardCache{};
    cache.act.resize(L + 1);
    cache.pre.resize(L);
    cache.act_grad.resize(L);
    cache.act[0] = x;
    for (std::size_t i = 0; i < L; ++i) {
        const Layer& l = layers_[i];
        cache.pre[i] = (cache.act[i] * l.w.transpose()).rowwise() + l.b.transpose();
        if (l.spec.activation == Activation::Softplus) {
            softplus_batch(cache.pre[i], cache.act[i + 1], cache.act_grad[i]);
        } else {
            cache.act[i + 1] = cache.pre[i];
        }
    }
    return cache.act[L];
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) const {
    ForwardCache cache;
    return forward(x, cache);
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& x) const {
    ForwardCache cache;
    Eigen::MatrixXd out = forward(Eigen::MatrixXd(x.transpose()), cache);
    return out.row(0).transpose();
}

Eigen::MatrixXd Network::forward_with_alpha_tangent(const Eigen::MatrixXd& x,
                                                    Eigen::MatrixXd& dy_dalpha,
                                                    ForwardCache& cache) const {
    Eigen::MatrixXd y = forward(x, cache);
    const std::size_t L = layers_.size();
    cache.tan.resize(L + 1);
    cache.tan_pre.resize(L);
    // Seed: derivative of the input along coordinate 0.
    cache.tan[0] = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    cache.tan[0].col(0).setOnes();
    for (std::size_t i = 0; i < L; ++i) {
        const Layer& l = layers_[i];
        cache.tan_pre[i] = cache.tan[i] * l.w.transpose();
        if (l.spec.activation == Activation::Softplus) {
            cache.tan[i + 1] = cache.tan_pre[i].cwiseProduct(cache.act_grad[i]);
        } else {
            cache.tan[i + 1] = cache.tan_pre[i];
        }
    }
    cache.has_tangent = true;
    dy_dalpha = cache.tan[L];
    return y;
}

Eigen::MatrixXd Network::forward_with_alpha_tangent(const Eigen::MatrixXd& x,
                                                    Eigen::MatrixXd& dy_dalpha) const {
    ForwardCache cache;
    return forward_with_alpha_tangent(x, dy_dalpha, cache);
}

void Network::check_cache(const ForwardCache& cache) const {
    if (cache.act.size() != layers_.size() + 1) {
        throw ShapeError("forward cache does not match this network");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (cache.act[i].cols() != layers_[i].spec.in_dim) {
            throw ShapeError("forward cache does not match this network");
        }
    }
}

Gradients Network::backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out) const {
    check_cache(cache);
    const std::size_t L = layers_.size();
    if (d_out.rows() != cache.act[L].rows() || d_out.cols() != output_dim()) {
        throw ShapeError("output adjoint shape mismatch");
    }
    Gradients g;
    g.w.resize(L);
    g.b.resize(L);
    Eigen::MatrixXd grad = d_out;
    for (std::size_t i = L; i-- > 0;) {
        const Layer& l = layers_[i];
        Eigen::MatrixXd gz = l.spec.activation == Activation::Softplus
                                 ? grad.cwiseProduct(cache.act_grad[i]).eval()
                                 : std::move(grad);
        g.w[i] = gz.transpose() * cache.act[i];
        g.b[i] = gz.colwise().sum().transpose();
        grad = gz * l.w;
    }
    g.x = std::move(grad);
    return g;
}

Gradients Network::backward(const ForwardCache& cache, const Eigen::MatrixXd& d_out,
                            const Eigen::MatrixXd& d_tan) const {
    check_cache(cache);
    if (!cache.has_tangent) {
        throw ShapeError("cache holds no tangent state");
    }
    const std::size_t L = layers_.size();
    Gradients g;
    g.w.resize(L);
    g.b.resize(L);
    Eigen::MatrixXd ga = d_out;  // adjoint of act[i+1]
    Eigen::MatrixXd gt = d_tan;  // adjoint of tan[i+1]
    for (std::size_t i = L; i-- > 0;) {
        const Layer& l = layers_[i];
        Eigen::MatrixXd gz, gu;
        if (l.spec.activation == Activation::Softplus) {
            const Eigen::MatrixXd& s = cache.act_grad[i];
            // sigma''(z) = s (1 - s); the tangent touches z through sigma'.
            Eigen::MatrixXd spp = s.cwiseProduct(Eigen::MatrixXd::Ones(s.rows(), s.cols()) - s);
            gz = ga.cwiseProduct(s) + gt.cwiseProduct(cache.tan_pre[i]).cwiseProduct(spp);
            gu = gt.cwiseProduct(s);
        } else {
            gz = std::move(ga);
            gu = std::move(gt);
        }
        g.w[i] = gz.transpose() * cache.act[i] + gu.transpose() * cache.tan[i];
        g.b[i] = gz.colwise().sum().transpose();
        ga = gz * l.w;
        gt = gu * l.w;
    }
    g.x = std::move(ga);
    return g;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    g.w.reserve(layers_.size());
    g.b.reserve(layers_.size());
    for (const Layer& l : layers_) {
        g.w.emplace_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
        g.b.emplace_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return g;
}

std::string Network::to_json() const {
    nlohmann::ordered_json j;
    j["layers"] = nlohmann::ordered_json::array();
    for (const Layer& l : layers_) {
        nlohmann::ordered_json jl;
        jl["in"] = l.spec.in_dim;
        jl["out"] = l.spec.out_dim;
        jl["activation"] = activation_name(l.spec.activation);
        std::vector<double> w(l.w.size());
        for (int r = 0; r < l.w.rows(); ++r) {
            for (int c = 0; c < l.w.cols(); ++c) {
                w[static_cast<std::size_t>(r) * l.w.cols() + c] = l.w(r, c);
            }
        }
        jl["w"] = w;
        jl["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
        j["layers"].push_back(std::move(jl));
    }
    return j.dump();
}

Network Network::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
        LayerSpec spec{jl.at("in").get<int>(), jl.at("out").get<int>(),
                       activation_from_name(jl.at("activation").get<std::string>())};
        auto wf = jl.at("w").get<std::vector<double>>();
        auto bf = jl.at("b").get<std::vector<double>>();
        if (wf.size() != static_cast<std::size_t>(spec.in_dim) * spec.out_dim ||
            bf.size() != static_cast<std::size_t>(spec.out_dim)) {
            throw IoError("layer payload size does not match dims");
        }
        Eigen::MatrixXd w(spec.out_dim, spec.in_dim);
        for (int r = 0; r < spec.out_dim; ++r) {
            for (int c = 0; c < spec.in_dim; ++c) {
                w(r, c) = wf[static_cast<std::size_t>(r) * spec.in_dim + c];
            }
        }
        Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(bf.data(), spec.out_dim);
        layers.push_back({spec, std::move(w), std::move(b)});
    }
    return Network(std::move(layers));
}

bool Network::operator==(const Network& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& a = layers_[i];
        const Layer& b = other.layers_[i];
        if (a.spec.in_dim != b.spec.in_dim || a.spec.out_dim != b.spec.out_dim ||
            a.spec.activation != b.spec.activation || a.w != b.w || a.b != b.b) {
            return false;
        }
    }
    return true;
}

InterpGrid::InterpGrid(std::vector<double> k) : knots(std::move(k)) {
    if (knots.size() < 2) throw DomainError("interpolation grid needs K >= 2 knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!(knots[i] > 0.0 && knots[i] < 1.0)) {
            throw DomainError("interpolation knots must lie in (0, 1)");
        }
        if (i > 0 && !(knots[i] > knots[i - 1])) {
            throw DomainError("interpolation knots must be strictly increasing");
        }
    }
}

Eigen::VectorXd interp_head_weights(double alpha, const InterpGrid& grid) {
    if (alpha < grid.lo() || alpha > grid.hi()) {
        throw DomainError("alpha outside interpolation grid range");
    }
    const std::size_t K = grid.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    w(0) = 1.0;
    for (std::size_t j = 1; j <= K - 1; ++j) {
        double kj = grid.knots[j - 1];
        double kj1 = grid.knots[j];
        if (alpha >= kj) {
            w(j) = std::min(alpha, kj1) - kj;
        }
    }
    return w;
}

double interp_head_eval(const Eigen::VectorXd& outputs, double alpha,
                        const InterpGrid& grid) {
    if (static_cast<std::size_t>(outputs.size()) != grid.size()) {
        throw ShapeError("output count does not match grid size");
    }
    return outputs.dot(interp_head_weights(alpha, grid));
}

std::vector<LayerSpec> make_mlp_arch(int in_dim, int out_dim, int hidden, int width) {
    if (in_dim < 1 || out_dim < 1 || hidden < 0 || (hidden > 0 && width < 1)) {
        throw ShapeError("invalid architecture");
    }
    std::vector<LayerSpec> arch;
    int prev = in_dim;
    for (int i = 0; i < hidden; ++i) {
        arch.push_back({prev, width, Activation::Softplus});
        prev = width;
    }
    arch.push_back({prev, out_dim, Activation::Identity});
    return arch;
}

}  // namespace riskquant::nn
