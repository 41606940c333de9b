#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskquant/losses.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

TEST_CASE("pinball loss values and subgradient") {
    auto a = pinball_loss(2.0, 1.0, AlphaLevel(0.9));
    CHECK(a.loss == doctest::Approx(11.0));
    CHECK(a.d == doctest::Approx(-9.0));

    auto kink = pinball_loss(1.5, 1.5, AlphaLevel(0.7));
    CHECK(kink.loss == doctest::Approx(1.5));
    CHECK(kink.d == doctest::Approx(1.0));

    auto below = pinball_loss(0.0, 1.0, AlphaLevel(0.5));
    CHECK(below.loss == doctest::Approx(1.0));
    CHECK(below.d == doctest::Approx(1.0));
}

TEST_CASE("pinball loss is convex in v") {
    Rng rng(21);
    for (int i = 0; i < 500; ++i) {
        double y = rng.normal();
        double v1 = rng.normal(), v2 = rng.normal();
        double t = rng.uniform01();
        AlphaLevel alpha(rng.uniform(0.05, 0.99));
        double mid = pinball_loss(y, t * v1 + (1.0 - t) * v2, alpha).loss;
        double chord = t * pinball_loss(y, v1, alpha).loss +
                       (1.0 - t) * pinball_loss(y, v2, alpha).loss;
        CHECK(mid <= chord + 1e-12);
    }
}

TEST_CASE("mean pinball loss is minimized at an empirical quantile") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> ys(101);
        for (double& y : ys) y = rng.normal();
        std::vector<double> sorted = ys;
        std::sort(sorted.begin(), sorted.end());
        AlphaLevel alpha(rng.uniform(0.1, 0.95));

        // Sort-based oracle: inf{t : F_hat(t) >= alpha}.
        std::size_t k = static_cast<std::size_t>(
            std::ceil(alpha.value * static_cast<double>(ys.size())));
        double oracle = sorted[k - 1];

        auto mean_loss = [&ys, alpha](double v) {
            double acc = 0.0;
            for (double y : ys) acc += pinball_loss(y, v, alpha).loss;
            return acc / static_cast<double>(ys.size());
        };
        double best = mean_loss(sorted.front());
        for (double v = sorted.front(); v <= sorted.back(); v += 1e-3) {
            best = std::min(best, mean_loss(v));
        }
        CHECK(mean_loss(oracle) <= best + 1e-6);
    }
}

TEST_CASE("es square loss values, truncation and closed-form minimizer") {
    AlphaLevel half(0.5);
    auto a = es_square_loss(3.0, 1.0, 2.0, half, TruncationBound::none());
    CHECK(a.loss == doctest::Approx(4.0));
    CHECK(a.d == doctest::Approx(-4.0));

    auto b = es_square_loss(3.0, 1.0, 2.0, half, TruncationBound(3.0));
    CHECK(b.loss == doctest::Approx(1.0));
    CHECK(b.d == doctest::Approx(-2.0));

    auto c = es_square_loss(0.5, 1.0, 1.7, half, TruncationBound::none());
    CHECK(c.loss == doctest::Approx(1.7 * 1.7));
    CHECK(c.d == doctest::Approx(2.0 * 1.7));

    // Least-squares mean property: the minimizer over z equals the mean
    // of the targets.
    Rng rng(3);
    AlphaLevel alpha(0.8);
    std::vector<double> ys(400), vs(400);
    double target_mean = 0.0;
    for (int i = 0; i < 400; ++i) {
        ys[i] = rng.normal();
        vs[i] = 0.3 * rng.normal();
        target_mean += std::max(ys[i] - vs[i], 0.0) / (1.0 - alpha.value);
    }
    target_mean /= 400.0;
    auto mean_loss = [&](double z) {
        double acc = 0.0;
        for (int i = 0; i < 400; ++i) {
            acc += es_square_loss(ys[i], vs[i], z, alpha, TruncationBound::none()).loss;
        }
        return acc / 400.0;
    };
    double best_z = -5.0, best = mean_loss(-5.0);
    for (double z = -5.0; z <= 10.0; z += 1e-3) {
        double l = mean_loss(z);
        if (l < best) {
            best = l;
            best_z = z;
        }
    }
    CHECK(best_z == doctest::Approx(target_mean).epsilon(1e-3));
}

TEST_CASE("joint loss closed-form values") {
    JointLossSpec spec;
    auto a = joint_loss(1.0, 0.0, 1.0, AlphaLevel(0.5), spec);
    CHECK(a.loss == doctest::Approx(2.0).epsilon(1e-12));

    // Zero positive part: loss = v + h2'(z)(z - v) - h2(z).
    double v = 0.7, z = 1.3;
    auto b = joint_loss(0.7, v, z, AlphaLevel(0.8), spec);
    double h2 = std::exp(-z);
    CHECK(b.loss == doctest::Approx(v - h2 * (z - v) - h2).epsilon(1e-12));
}

TEST_CASE("joint loss gradients match finite differences away from the kink") {
    JointLossSpec spec;
    Rng rng(17);
    const double h = 1e-6;
    for (int i = 0; i < 300; ++i) {
        double y = rng.normal();
        double v = rng.normal();
        double z = rng.normal();
        AlphaLevel alpha(rng.uniform(0.1, 0.95));
        if (std::abs(y - v) < 1e-3) continue;
        auto g = joint_loss(y, v, z, alpha, spec);
        double dv_fd = (joint_loss(y, v + h, z, alpha, spec).loss -
                        joint_loss(y, v - h, z, alpha, spec).loss) /
                       (2.0 * h);
        double dz_fd = (joint_loss(y, v, z + h, alpha, spec).loss -
                        joint_loss(y, v, z - h, alpha, spec).loss) /
                       (2.0 * h);
        CHECK(g.dv == doctest::Approx(dv_fd).epsilon(1e-6));
        CHECK(g.dz == doctest::Approx(dz_fd).epsilon(1e-6));
    }
}

TEST_CASE("crossing penalty") {
    auto a = crossing_penalty(-0.3, 10.0);
    CHECK(a.loss == doctest::Approx(3.0));
    CHECK(a.d == doctest::Approx(-10.0));

    auto b = crossing_penalty(0.5, 123.0);
    CHECK(b.loss == 0.0);
    CHECK(b.d == 0.0);

    auto c = crossing_penalty(-2.0, 0.0);
    CHECK(c.loss == 0.0);

    CHECK_THROWS_AS(crossing_penalty(0.1, -1.0), DomainError);
}

TEST_CASE("alpha level and truncation bound validation") {
    CHECK_THROWS_AS(AlphaLevel(0.0), DomainError);
    CHECK_THROWS_AS(AlphaLevel(1.0), DomainError);
    CHECK_THROWS_AS(TruncationBound(0.0), DomainError);
    CHECK(TruncationBound(2.5).clamp(3.0) == 2.5);
    CHECK(TruncationBound(2.5).clamp(-3.0) == -2.5);
    CHECK(TruncationBound::none().clamp(1e12) == 1e12);
}
