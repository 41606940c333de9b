#include <cmath>

#include "doctest.h"
#include "fd_oracle.hpp"
#include "riskquant/errors.hpp"
#include "riskquant/nn.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;
using namespace riskquant::nn;

namespace {

Network random_net(const std::vector<LayerSpec>& arch, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Layer> layers;
    for (const LayerSpec& spec : arch) {
        Layer l;
        l.spec = spec;
        l.w.resize(spec.out_dim, spec.in_dim);
        for (int r = 0; r < spec.out_dim; ++r) {
            for (int c = 0; c < spec.in_dim; ++c) l.w(r, c) = rng.uniform(-1.0, 1.0);
        }
        l.b.resize(spec.out_dim);
        for (int r = 0; r < spec.out_dim; ++r) l.b(r) = rng.uniform(-1.0, 1.0);
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

Network affine_net(double w, double b) {
    Layer l;
    l.spec = {1, 1, Activation::Identity};
    l.w = Eigen::MatrixXd::Constant(1, 1, w);
    l.b = Eigen::VectorXd::Constant(1, b);
    return Network({l});
}

}  // namespace

TEST_CASE("softplus at reference points") {
    auto zero = softplus_eval(0.0);
    CHECK(zero.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(zero.derivative == doctest::Approx(0.5).epsilon(1e-15));

    auto big = softplus_eval(100.0);
    CHECK(big.value == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(big.derivative == doctest::Approx(1.0).epsilon(1e-12));

    auto tiny = softplus_eval(-100.0);
    CHECK(tiny.value >= 0.0);
    CHECK(tiny.value < 1e-40);
    CHECK(tiny.derivative < 1e-40);

    CHECK(std::isfinite(softplus_eval(750.0).value));
    CHECK(std::isfinite(softplus_eval(-750.0).value));
}

TEST_CASE("forward on affine and one-unit nets") {
    Network aff = affine_net(2.0, 1.0);
    Eigen::VectorXd x(1);
    x << 3.0;
    CHECK(aff.forward(x)(0) == doctest::Approx(7.0));

    Layer hidden;
    hidden.spec = {1, 1, Activation::Softplus};
    hidden.w = Eigen::MatrixXd::Constant(1, 1, 1.0);
    hidden.b = Eigen::VectorXd::Zero(1);
    Layer out;
    out.spec = {1, 1, Activation::Identity};
    out.w = Eigen::MatrixXd::Constant(1, 1, 1.0);
    out.b = Eigen::VectorXd::Zero(1);
    Network one_unit({hidden, out});
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(one_unit.forward(zero)(0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("batch row equals single-sample call") {
    Network net = random_net(make_mlp_arch(3, 2, 2, 5), 11);
    Rng rng(12);
    Eigen::MatrixXd batch(4, 3);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) batch(i, j) = rng.normal();
    }
    Eigen::MatrixXd out = net.forward(batch);
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd single = net.forward(Eigen::VectorXd(batch.row(i).transpose()));
        for (int j = 0; j < 2; ++j) CHECK(out(i, j) == single(j));
    }
}

TEST_CASE("forward is pure and deterministic") {
    Network net = random_net(make_mlp_arch(4, 1, 3, 8), 33);
    Rng rng(34);
    Eigen::MatrixXd x(8, 4);
    for (int i = 0; i < x.size(); ++i) x(i / 4, i % 4) = rng.normal();
    Eigen::MatrixXd a = net.forward(x);
    Eigen::MatrixXd b = net.forward(x);
    CHECK(a == b);
}

TEST_CASE("backward on the affine case") {
    Network aff = affine_net(2.0, 1.0);
    ForwardCache cache;
    Eigen::MatrixXd x(1, 1);
    x << 3.0;
    aff.forward(x, cache);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Constant(1, 1, 1.0);
    Gradients g = aff.backward(cache, d_out);
    CHECK(g.w[0](0, 0) == doctest::Approx(3.0));
    CHECK(g.b[0](0) == doctest::Approx(1.0));
    CHECK(g.x(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("backward of zero adjoint is zero") {
    Network net = random_net(make_mlp_arch(3, 2, 2, 4), 44);
    ForwardCache cache;
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
    net.forward(x, cache);
    Gradients g = net.backward(cache, Eigen::MatrixXd::Zero(5, 2));
    for (const auto& w : g.w) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& b : g.b) {
        if (b.size() > 0) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(g.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward matches the finite-difference oracle on 100 random nets") {
    Rng meta(1234);
    for (int rep = 0; rep < 100; ++rep) {
        int d = 1 + static_cast<int>(meta.next_u64() % 4);
        int o = 1 + static_cast<int>(meta.next_u64() % 2);
        int width = 2 + static_cast<int>(meta.next_u64() % 5);
        Network net = random_net(make_mlp_arch(d, o, 2, width), meta.next_u64());

        Eigen::VectorXd x(d), d_out(o);
        for (int i = 0; i < d; ++i) x(i) = meta.normal();
        for (int i = 0; i < o; ++i) d_out(i) = meta.normal();

        ForwardCache cache;
        Eigen::MatrixXd xm = x.transpose();
        net.forward(xm, cache);
        Gradients ad = net.backward(cache, Eigen::MatrixXd(d_out.transpose()));

        auto scalar = [&x, &d_out](const Network& n) {
            return d_out.dot(n.forward(x));
        };
        Gradients fd = rqtest::fd_gradients(net, scalar);
        CHECK(rqtest::max_rel_error(ad, fd) < 1e-5);

        Eigen::VectorXd dx_fd = rqtest::fd_input_gradient(net, x, d_out);
        for (int i = 0; i < d; ++i) {
            double denom = std::max({std::abs(dx_fd(i)), std::abs(ad.x(0, i)), 1e-4});
            CHECK(std::abs(dx_fd(i) - ad.x(0, i)) / denom < 1e-5);
        }
    }
}

TEST_CASE("alpha tangent equals forward output and finite differences") {
    Rng meta(777);
    for (int rep = 0; rep < 100; ++rep) {
        int d = 2 + static_cast<int>(meta.next_u64() % 4);  // includes the alpha slot
        int width = 2 + static_cast<int>(meta.next_u64() % 5);
        Network net = random_net(make_mlp_arch(d, 1, 2, width), meta.next_u64());
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x(i) = meta.normal();
        x(0) = meta.uniform(0.2, 0.8);

        Eigen::MatrixXd tangent;
        Eigen::MatrixXd y = net.forward_with_alpha_tangent(x.transpose(), tangent);
        // Output path must be bit-identical to plain forward.
        CHECK(y(0, 0) == net.forward(x)(0));

        const double h = 1e-5;
        Eigen::VectorXd up = x, down = x;
        up(0) += h;
        down(0) -= h;
        double fd = (net.forward(up)(0) - net.forward(down)(0)) / (2.0 * h);
        double denom = std::max({std::abs(fd), std::abs(tangent(0, 0)), 1e-4});
        CHECK(std::abs(fd - tangent(0, 0)) / denom < 1e-5);
    }
}

TEST_CASE("affine net tangent is the alpha weight") {
    Layer l;
    l.spec = {2, 1, Activation::Identity};
    l.w.resize(1, 2);
    l.w << 3.0, 1.0;
    l.b = Eigen::VectorXd::Zero(1);
    Network net({l});
    Eigen::MatrixXd x(1, 2);
    x << 0.4, -1.2;
    Eigen::MatrixXd tangent;
    net.forward_with_alpha_tangent(x, tangent);
    CHECK(tangent(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("dead alpha column gives zero tangent") {
    Network net = random_net(make_mlp_arch(3, 1, 2, 4), 99);
    net.mutable_layers().front().w.col(0).setZero();
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 3);
    Eigen::MatrixXd tangent;
    net.forward_with_alpha_tangent(x, tangent);
    CHECK(tangent.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fused backward through the tangent matches finite differences") {
    Rng meta(555);
    for (int rep = 0; rep < 40; ++rep) {
        int d = 2 + static_cast<int>(meta.next_u64() % 3);
        int width = 2 + static_cast<int>(meta.next_u64() % 4);
        Network net = random_net(make_mlp_arch(d, 1, 2, width), meta.next_u64());
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x(i) = meta.normal();
        double c_out = meta.normal();
        double c_tan = meta.normal();

        ForwardCache cache;
        Eigen::MatrixXd tangent;
        net.forward_with_alpha_tangent(x.transpose(), tangent, cache);
        Gradients ad = net.backward(cache, Eigen::MatrixXd::Constant(1, 1, c_out),
                                    Eigen::MatrixXd::Constant(1, 1, c_tan));

        auto scalar = [&x, c_out, c_tan](const Network& n) {
            Eigen::MatrixXd t;
            Eigen::MatrixXd y = n.forward_with_alpha_tangent(x.transpose(), t);
            return c_out * y(0, 0) + c_tan * t(0, 0);
        };
        Gradients fd = rqtest::fd_gradients(net, scalar);
        CHECK(rqtest::max_rel_error(ad, fd) < 1e-5);
    }
}

TEST_CASE("interpolation head weights and evaluation") {
    InterpGrid grid({0.1, 0.2, 0.3});
    Eigen::VectorXd outputs(3);
    outputs << 5.0, 10.0, 20.0;
    CHECK(interp_head_eval(outputs, 0.1, grid) == doctest::Approx(5.0));
    CHECK(interp_head_eval(outputs, 0.2, grid) == doctest::Approx(6.0));
    CHECK(interp_head_eval(outputs, 0.25, grid) == doctest::Approx(7.0));
    CHECK(interp_head_eval(outputs, 0.3, grid) == doctest::Approx(8.0));
    CHECK_THROWS_AS(interp_head_eval(outputs, 0.05, grid), DomainError);
    CHECK_THROWS_AS(interp_head_eval(outputs, 0.35, grid), DomainError);
}

TEST_CASE("interpolation is nondecreasing when increment heads are nonnegative") {
    Rng rng(4242);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> knots;
        double k = rng.uniform(0.01, 0.2);
        for (int i = 0; i < 6; ++i) {
            knots.push_back(k);
            k += rng.uniform(0.01, 0.12);
        }
        InterpGrid grid(knots);
        Eigen::VectorXd outputs(6);
        outputs(0) = rng.normal();
        for (int i = 1; i < 6; ++i) outputs(i) = std::abs(rng.normal());
        double prev = interp_head_eval(outputs, grid.lo(), grid);
        for (double a = grid.lo(); a <= grid.hi(); a += (grid.hi() - grid.lo()) / 97.0) {
            double cur = interp_head_eval(outputs, a, grid);
            CHECK(cur >= prev - 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(InterpGrid({0.5}), DomainError);
    CHECK_THROWS_AS(InterpGrid({0.5, 0.5}), DomainError);
    CHECK_THROWS_AS(InterpGrid({0.0, 0.5}), DomainError);
    CHECK_THROWS_AS(InterpGrid({0.2, 0.1}), DomainError);
}

TEST_CASE("serialization round-trips bit-exactly") {
    Rng init(2024);
    Network net = Network::glorot(make_mlp_arch(4, 3, 3, 9), init);
    Network copy = Network::from_json(net.to_json());
    CHECK(net == copy);

    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
    Eigen::MatrixXd a = net.forward(x);
    Eigen::MatrixXd b = copy.forward(x);
    CHECK(a == b);
}

TEST_CASE("network construction validates shapes") {
    Layer l;
    l.spec = {2, 2, Activation::Softplus};
    l.w = Eigen::MatrixXd::Zero(2, 2);
    l.b = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(Network({l}), ShapeError);  // final layer must be identity

    Layer bad = l;
    bad.spec.activation = Activation::Identity;
    bad.w = Eigen::MatrixXd::Zero(3, 2);
    CHECK_THROWS_AS(Network({bad}), ShapeError);

    Network ok = affine_net(1.0, 0.0);
    Eigen::VectorXd wrong(2);
    wrong << 1.0, 2.0;
    CHECK_THROWS_AS(ok.forward(wrong), ShapeError);
}
