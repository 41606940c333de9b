#include "riskquant/trainers.hpp"

#include <cmath>

#include "riskquant/errors.hpp"
#include "riskquant/parallel.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

double MonotoneTransform::apply(double y) const {
    switch (kind) {
        case Kind::Identity:
            return y;
        case Kind::ScaledTanh:
            return scale * std::tanh(y / scale);
    }
    return y;
}

double MonotoneTransform::inverse(double v) const {
    switch (kind) {
        case Kind::Identity:
            return v;
        case Kind::ScaledTanh: {
            double u = v / scale;
            if (!(u > -1.0 && u < 1.0)) {
                throw DomainError("value outside the range of the tanh transform");
            }
            return scale * std::atanh(u);
        }
    }
    return v;
}

std::vector<nn::LayerSpec> resolve_arch(int in_dim, int out_dim, const Arch& arch) {
    int width = arch.width > 0 ? arch.width : 2 * in_dim;
    return nn::make_mlp_arch(in_dim, out_dim, arch.hidden, width);
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

Eigen::VectorXd draw_alphas(Eigen::Index n, double lo, double hi, std::uint64_t seed) {
    Eigen::VectorXd a(n);
    Rng base(derive_stream(seed, stream::kAlpha));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        a(static_cast<Eigen::Index>(i)) = base.split(i).uniform(lo, hi);
    });
    return a;
}

Eigen::MatrixXd prepend_column(const Eigen::VectorXd& col, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols() + 1);
    out.col(0) = col;
    out.rightCols(m.cols()) = m;
    return out;
}

nn::Network initial_net(const std::vector<nn::LayerSpec>& arch, const TrainConfig& cfg,
                        const nn::Network* warm_start) {
    if (warm_start != nullptr) {
        nn::Network net = *warm_start;
        bool matches = net.layer_count() == arch.size();
        for (std::size_t i = 0; matches && i < arch.size(); ++i) {
            const nn::LayerSpec& spec = net.layers()[i].spec;
            matches = spec.in_dim == arch[i].in_dim && spec.out_dim == arch[i].out_dim &&
                      spec.activation == arch[i].activation;
        }
        if (!matches) {
            throw ShapeError("warm-start network does not match the requested shape");
        }
        return net;
    }
    Rng init(derive_stream(cfg.seed, stream::kInit));
    return nn::Network::glorot(arch, init);
}

// Hidden stack of `net` plus a fresh 1-output affine layer given by
// `weights` (last entry is the bias).
nn::Network stack_with_linear_head(const nn::Network& net, const Eigen::VectorXd& weights) {
    std::vector<nn::Layer> layers(net.layers().begin(), net.layers().end() - 1);
    int m = static_cast<int>(weights.size()) - 1;
    nn::Layer head;
    head.spec = {m, 1, nn::Activation::Identity};
    head.w = weights.head(m).transpose();
    head.b = Eigen::VectorXd::Constant(1, weights(m));
    layers.push_back(std::move(head));
    return nn::Network(std::move(layers));
}

}  // namespace

double VarModel::predict(const Eigen::VectorXd& x, double alpha) const {
    Eigen::MatrixXd row = x.transpose();
    return predict_batch(row, alpha)(0);
}

Eigen::VectorXd VarModel::predict_batch(const Eigen::MatrixXd& x, double alpha) const {
    Eigen::VectorXd raw;
    if (const auto* single = std::get_if<SingleAlphaMode>(&mode)) {
        if (alpha != single->alpha) {
            throw UsageError("model was trained at a different quantile level");
        }
        raw = net.forward(x).col(0);
    } else if (const auto* cont = std::get_if<ContinuumMode>(&mode)) {
        if (alpha < cont->lo || alpha > cont->hi) {
            throw UsageError("quantile level outside the trained range");
        }
        Eigen::VectorXd a = Eigen::VectorXd::Constant(x.rows(), alpha);
        raw = net.forward(prepend_column(a, x)).col(0);
    } else {
        const auto& grid = std::get<InterpMode>(mode).grid;
        if (alpha < grid.lo() || alpha > grid.hi()) {
            throw UsageError("quantile level outside the interpolation grid");
        }
        Eigen::MatrixXd heads = net.forward(x);
        Eigen::VectorXd w = nn::interp_head_weights(alpha, grid);
        raw = heads * w;
    }
    if (transform.kind != MonotoneTransform::Kind::Identity) {
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = transform.inverse(raw(i));
    }
    return raw;
}

Eigen::VectorXd EsModel::increment_batch(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd in;
    if (increment_net.input_dim() == x.cols()) {
        in = x;
    } else if (increment_net.input_dim() == x.cols() + 1) {
        Eigen::VectorXd a = Eigen::VectorXd::Constant(x.rows(), alpha.value);
        in = prepend_column(a, x);
    } else {
        throw ShapeError("feature row does not match the increment network");
    }
    Eigen::VectorXd g = increment_net.forward(in).col(0);
    Eigen::VectorXd z = (g.array() - transform.nu) / transform.tau;
    return z.cwiseMax(0.0);
}

double EsModel::increment(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd row = x.transpose();
    return increment_batch(row)(0);
}

double EsModel::predict(const Eigen::VectorXd& x) const {
    if (!var_model) {
        throw UsageError("this fit used an external quantile candidate; use predict_with_q");
    }
    return var_model->predict(x, alpha.value) + increment(x);
}

Eigen::VectorXd EsModel::predict_batch(const Eigen::MatrixXd& x) const {
    if (!var_model) {
        throw UsageError("this fit used an external quantile candidate; use predict_with_q");
    }
    return var_model->predict_batch(x, alpha.value) + increment_batch(x);
}

double EsModel::predict_with_q(const Eigen::VectorXd& x, double q_value) const {
    return q_value + increment(x);
}

VarModel fit_var_single(const Dataset& data, AlphaLevel alpha, const Arch& arch,
                        const TrainConfig& cfg, MonotoneTransform transform,
                        const nn::Network* warm_start) {
    data.validate();
    auto specs = resolve_arch(static_cast<int>(data.dim()), 1, arch);
    nn::Network net = initial_net(specs, cfg, warm_start);

    Dataset work;
    work.x = data.x;
    work.y = data.y;
    if (transform.kind != MonotoneTransform::Kind::Identity) {
        for (Eigen::Index i = 0; i < work.y.size(); ++i) {
            work.y(i) = transform.apply(work.y(i));
        }
    }

    // The optimized objective is the (1 - alpha)-scaled tilted loss
    // (y - v)^+ + (1 - alpha) v; same minimizer, bounded gradients for
    // levels close to 1.
    LossClosure closure = [alpha](const nn::Network& model, const BatchView& batch) {
        Eigen::MatrixXd xb = gather_rows(batch.data.x, batch.rows);
        Eigen::VectorXd yb = gather(batch.data.y, batch.rows);
        nn::ForwardCache cache;
        Eigen::MatrixXd out = model.forward(xb, cache);
        const double inv_b = 1.0 / static_cast<double>(xb.rows());
        const double scale = 1.0 - alpha.value;
        Eigen::MatrixXd d_out(xb.rows(), 1);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < xb.rows(); ++i) {
            auto lg = pinball_loss(yb(i), out(i, 0), alpha);
            loss += scale * lg.loss;
            d_out(i, 0) = scale * lg.d * inv_b;
        }
        return BatchLoss{loss * inv_b, model.backward(cache, d_out)};
    };

    TrainResult result = train(std::move(net), work, closure, cfg);
    return VarModel{SingleAlphaMode{alpha.value}, std::move(result.net), transform};
}

VarModel fit_var_multi_continuum(const Dataset& data, double alpha_lo, double alpha_hi,
                                 double lambda, const Arch& arch, const TrainConfig& cfg,
                                 const nn::Network* warm_start) {
    data.validate();
    if (!(alpha_lo > 0.0 && alpha_hi < 1.0 && alpha_lo < alpha_hi)) {
        throw InputError("alpha range must satisfy 0 < lo < hi < 1");
    }
    if (lambda < 0.0) throw InputError("penalty weight must be >= 0");

    Dataset work;
    work.y = data.y;
    Eigen::VectorXd alphas = data.alpha_col
                                 ? *data.alpha_col
                                 : draw_alphas(data.n(), alpha_lo, alpha_hi, cfg.seed);
    work.x = prepend_column(alphas, data.x);
    work.alpha_col = std::move(alphas);

    auto specs = resolve_arch(static_cast<int>(data.dim()) + 1, 1, arch);
    nn::Network net = initial_net(specs, cfg, warm_start);

    LossClosure closure = [lambda](const nn::Network& model, const BatchView& batch) {
        Eigen::MatrixXd xb = gather_rows(batch.data.x, batch.rows);
        Eigen::VectorXd yb = gather(batch.data.y, batch.rows);
        const double inv_b = 1.0 / static_cast<double>(xb.rows());
        nn::ForwardCache cache;
        double loss = 0.0;
        if (lambda > 0.0) {
            Eigen::MatrixXd tangent;
            Eigen::MatrixXd out = model.forward_with_alpha_tangent(xb, tangent, cache);
            Eigen::MatrixXd d_out(xb.rows(), 1), d_tan(xb.rows(), 1);
            for (Eigen::Index i = 0; i < xb.rows(); ++i) {
                AlphaLevel a(xb(i, 0));
                double scale = 1.0 - a.value;
                auto lg = pinball_loss(yb(i), out(i, 0), a);
                auto pen = crossing_penalty(tangent(i, 0), lambda);
                loss += scale * lg.loss + pen.loss;
                d_out(i, 0) = scale * lg.d * inv_b;
                d_tan(i, 0) = pen.d * inv_b;
            }
            return BatchLoss{loss * inv_b, model.backward(cache, d_out, d_tan)};
        }
        Eigen::MatrixXd out = model.forward(xb, cache);
        Eigen::MatrixXd d_out(xb.rows(), 1);
        for (Eigen::Index i = 0; i < xb.rows(); ++i) {
            AlphaLevel a(xb(i, 0));
            double scale = 1.0 - a.value;
            auto lg = pinball_loss(yb(i), out(i, 0), a);
            loss += scale * lg.loss;
            d_out(i, 0) = scale * lg.d * inv_b;
        }
        return BatchLoss{loss * inv_b, model.backward(cache, d_out)};
    };

    TrainResult result = train(std::move(net), work, closure, cfg);
    return VarModel{ContinuumMode{alpha_lo, alpha_hi}, std::move(result.net),
                    MonotoneTransform{}};
}

VarModel fit_var_multi_interp(const Dataset& data, const nn::InterpGrid& grid,
                              const Arch& arch, const TrainConfig& cfg,
                              const nn::Network* warm_start) {
    data.validate();
    Dataset work;
    work.x = data.x;
    work.y = data.y;
    work.alpha_col = data.alpha_col
                         ? *data.alpha_col
                         : draw_alphas(data.n(), grid.lo(), grid.hi(), cfg.seed);
    for (Eigen::Index i = 0; i < work.alpha_col->size(); ++i) {
        double a = (*work.alpha_col)(i);
        if (a < grid.lo() || a > grid.hi()) {
            throw InputError("alpha column entry outside the interpolation grid");
        }
    }

    auto specs = resolve_arch(static_cast<int>(data.dim()), static_cast<int>(grid.size()),
                              arch);
    nn::Network net = initial_net(specs, cfg, warm_start);

    LossClosure closure = [&grid](const nn::Network& model, const BatchView& batch) {
        Eigen::MatrixXd xb = gather_rows(batch.data.x, batch.rows);
        Eigen::VectorXd yb = gather(batch.data.y, batch.rows);
        Eigen::VectorXd ab = gather(*batch.data.alpha_col, batch.rows);
        const double inv_b = 1.0 / static_cast<double>(xb.rows());
        nn::ForwardCache cache;
        Eigen::MatrixXd heads = model.forward(xb, cache);
        Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(heads.rows(), heads.cols());
        double loss = 0.0;
        for (Eigen::Index i = 0; i < xb.rows(); ++i) {
            Eigen::VectorXd w = nn::interp_head_weights(ab(i), grid);
            double v = heads.row(i).dot(w);
            double scale = 1.0 - ab(i);
            auto lg = pinball_loss(yb(i), v, AlphaLevel(ab(i)));
            loss += scale * lg.loss;
            d_out.row(i) = (scale * lg.d * inv_b) * w.transpose();
        }
        return BatchLoss{loss * inv_b, model.backward(cache, d_out)};
    };

    TrainResult result = train(std::move(net), work, closure, cfg);
    return VarModel{InterpMode{grid}, std::move(result.net), MonotoneTransform{}};
}

namespace {

Eigen::VectorXd es_targets(const Eigen::VectorXd& y, const Eigen::VectorXd& q_hat,
                           AlphaLevel alpha, const TruncationBound& trunc,
                           const AffineTransform& tf) {
    if (!(tf.tau > 0.0)) throw InputError("affine transform needs tau > 0");
    double w = 1.0 / (1.0 - alpha.value);
    Eigen::VectorXd t(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double excess = y(i) - q_hat(i);
        double raw = excess > 0.0 ? w * excess : 0.0;
        t(i) = trunc.clamp(tf.tau * raw + tf.nu);
    }
    return t;
}

// Least-squares regression against precomputed targets.
nn::Network fit_increment_fullnet(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets,
                                  const Arch& arch, const TrainConfig& cfg) {
    auto specs = resolve_arch(static_cast<int>(x.cols()), 1, arch);
    nn::Network net = initial_net(specs, cfg, nullptr);
    Dataset work;
    work.x = x;
    work.y = targets;

    LossClosure closure = [](const nn::Network& model, const BatchView& batch) {
        Eigen::MatrixXd xb = gather_rows(batch.data.x, batch.rows);
        Eigen::VectorXd tb = gather(batch.data.y, batch.rows);
        const double inv_b = 1.0 / static_cast<double>(xb.rows());
        nn::ForwardCache cache;
        Eigen::MatrixXd out = model.forward(xb, cache);
        Eigen::MatrixXd d_out(xb.rows(), 1);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < xb.rows(); ++i) {
            double r = out(i, 0) - tb(i);
            loss += r * r;
            d_out(i, 0) = 2.0 * r * inv_b;
        }
        return BatchLoss{loss * inv_b, model.backward(cache, d_out)};
    };
    return train(std::move(net), work, closure, cfg).net;
}

constexpr double kFrozenRidge = 1e-10;

}  // namespace

EsModel fit_es_two_step(const Dataset& data, const VarModel& var_model, AlphaLevel alpha,
                        EsMode mode, const TruncationBound& trunc, const Arch& arch,
                        const TrainConfig& cfg, AffineTransform transform) {
    data.validate();
    Eigen::VectorXd q_hat = var_model.predict_batch(data.x, alpha.value);
    Eigen::VectorXd targets = es_targets(data.y, q_hat, alpha, trunc, transform);

    if (mode == EsMode::FullNet) {
        nn::Network inc = fit_increment_fullnet(data.x, targets, arch, cfg);
        return EsModel{var_model, std::move(inc), alpha, trunc, transform};
    }

    // FrozenLR: hidden stack of the candidate becomes a fixed feature map.
    const nn::Network& vnet = var_model.net;
    if (vnet.layer_count() < 2) {
        throw InputError("FrozenLR needs a quantile network with at least one hidden layer");
    }
    Eigen::MatrixXd in;
    if (std::holds_alternative<ContinuumMode>(var_model.mode)) {
        Eigen::VectorXd a = Eigen::VectorXd::Constant(data.n(), alpha.value);
        in = prepend_column(a, data.x);
    } else {
        in = data.x;
    }
    nn::ForwardCache cache;
    vnet.forward(in, cache);
    const Eigen::MatrixXd& hidden = cache.act[vnet.layer_count() - 1];
    Eigen::MatrixXd phi(hidden.rows(), hidden.cols() + 1);
    phi.leftCols(hidden.cols()) = hidden;
    phi.col(hidden.cols()).setOnes();
    Eigen::VectorXd w = linear_least_squares(phi, targets, kFrozenRidge);
    nn::Network inc = stack_with_linear_head(vnet, w);
    return EsModel{var_model, std::move(inc), alpha, trunc, transform};
}

EsModel fit_es_two_step(const Dataset& data,
                        const std::function<double(const Eigen::VectorXd&)>& q_fn,
                        AlphaLevel alpha, const TruncationBound& trunc, const Arch& arch,
                        const TrainConfig& cfg, AffineTransform transform) {
    data.validate();
    Eigen::VectorXd q_hat(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        q_hat(i) = q_fn(data.x.row(i).transpose());
    }
    Eigen::VectorXd targets = es_targets(data.y, q_hat, alpha, trunc, transform);
    nn::Network inc = fit_increment_fullnet(data.x, targets, arch, cfg);
    return EsModel{std::nullopt, std::move(inc), alpha, trunc, transform};
}

std::pair<VarModel, EsModel> fit_joint(const Dataset& data, AlphaLevel alpha,
                                       const JointLossSpec& spec, const Arch& arch,
                                       const TrainConfig& cfg) {
    data.validate();
    auto specs = resolve_arch(static_cast<int>(data.dim()), 2, arch);
    nn::Network net = initial_net(specs, cfg, nullptr);
    Dataset work;
    work.x = data.x;
    work.y = data.y;

    LossClosure closure = [alpha, spec](const nn::Network& model, const BatchView& batch) {
        Eigen::MatrixXd xb = gather_rows(batch.data.x, batch.rows);
        Eigen::VectorXd yb = gather(batch.data.y, batch.rows);
        const double inv_b = 1.0 / static_cast<double>(xb.rows());
        nn::ForwardCache cache;
        Eigen::MatrixXd out = model.forward(xb, cache);
        Eigen::MatrixXd d_out(xb.rows(), 2);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < xb.rows(); ++i) {
            double v = out(i, 0);
            double z = v + out(i, 1);  // second head carries the increment
            auto lg = joint_loss(yb(i), v, z, alpha, spec);
            loss += lg.loss;
            d_out(i, 0) = (lg.dv + lg.dz) * inv_b;
            d_out(i, 1) = lg.dz * inv_b;
        }
        return BatchLoss{loss * inv_b, model.backward(cache, d_out)};
    };

    nn::Network trained = train(std::move(net), work, closure, cfg).net;

    // Split the two-output head into a quantile network and an increment
    // network over the shared (copied) hidden stack.
    std::vector<nn::Layer> hidden(trained.layers().begin(), trained.layers().end() - 1);
    const nn::Layer& head = trained.layers().back();
    auto make_row_net = [&](int row) {
        std::vector<nn::Layer> layers = hidden;
        nn::Layer out;
        out.spec = {head.spec.in_dim, 1, nn::Activation::Identity};
        out.w = head.w.row(row);
        out.b = Eigen::VectorXd::Constant(1, head.b(row));
        layers.push_back(std::move(out));
        return nn::Network(std::move(layers));
    };
    VarModel var{SingleAlphaMode{alpha.value}, make_row_net(0), MonotoneTransform{}};
    EsModel es{var, make_row_net(1), alpha, TruncationBound::none(), AffineTransform{}};
    return {std::move(var), std::move(es)};
}

}  // namespace riskquant
