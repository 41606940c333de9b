#include <cmath>

#include "doctest.h"
#include "riskquant/errors.hpp"
#include "riskquant/gaussian_toy.hpp"
#include "riskquant/metrics.hpp"
#include "riskquant/nested_sa.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/parallel.hpp"
#include "riskquant/rng.hpp"
#include "riskquant/twin.hpp"

using namespace riskquant;

namespace {

GaussianToySpec small_spec(std::uint64_t seed) {
    Rng rng(seed);
    return toy_spec_sample(2, rng);
}

Predictor closed_form_var(const GaussianToySpec& spec, double alpha) {
    return [&spec, alpha](const Eigen::MatrixXd& x) {
        Eigen::VectorXd q(x.rows());
        parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
            q(static_cast<Eigen::Index>(i)) =
                toy_var_es_closed(spec, x.row(i).transpose(), alpha).var;
        });
        return q;
    };
}

Predictor closed_form_es(const GaussianToySpec& spec, double alpha) {
    return [&spec, alpha](const Eigen::MatrixXd& x) {
        Eigen::VectorXd s(x.rows());
        parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
            s(static_cast<Eigen::Index>(i)) =
                toy_var_es_closed(spec, x.row(i).transpose(), alpha).es;
        });
        return s;
    };
}

}  // namespace

TEST_CASE("p-value error vanishes at the true quantile") {
    GaussianToySpec spec = small_spec(1);
    Dataset data = toy_generate(spec, 1 << 16, 2, true);
    AlphaLevel alpha(0.95);
    auto est = pvalue_error_estimate(closed_form_var(spec, 0.95), data, alpha);
    CHECK(est.n_used == data.n());
    CHECK(est.contains_zero());
    CHECK(est.point < 0.02);
}

TEST_CASE("p-value error saturates at 1 - alpha for an absurd candidate") {
    GaussianToySpec spec = small_spec(3);
    Dataset data = toy_generate(spec, 1 << 15, 4, true);
    AlphaLevel alpha(0.9);
    Predictor huge = [](const Eigen::MatrixXd& x) {
        return Eigen::VectorXd::Constant(x.rows(), 1e9).eval();
    };
    auto est = pvalue_error_estimate(huge, data, alpha);
    CHECK(est.point == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("perturbed level reproduces the analytic p-value distance") {
    GaussianToySpec spec = small_spec(5);
    Dataset data = toy_generate(spec, 1 << 17, 6, true);
    double alpha = 0.95;
    for (double alpha_prime : {0.9, 0.93, 0.97}) {
        auto est =
            pvalue_error_estimate(closed_form_var(spec, alpha_prime), data,
                                  AlphaLevel(alpha));
        double analytic = std::abs(alpha - alpha_prime);
        // Population value of the squared estimate is (alpha - alpha')^2.
        CHECK(std::abs(est.inner - analytic * analytic) <= 1.2 * est.ci_halfwidth);
        CHECK(est.point == doctest::Approx(analytic).epsilon(0.25));
    }
}

TEST_CASE("p-value estimate is invariant under increasing transforms") {
    GaussianToySpec spec = small_spec(7);
    Dataset data = toy_generate(spec, 4096, 8, true);
    AlphaLevel alpha(0.9);
    Predictor q = closed_form_var(spec, 0.9);
    auto base = pvalue_error_estimate(q, data, alpha);

    Dataset mapped = data;
    auto push = [](double v) { return std::exp(0.5 * v); };
    for (Eigen::Index i = 0; i < mapped.n(); ++i) {
        mapped.y(i) = push(mapped.y(i));
        (*mapped.y_twin)(i) = push((*mapped.y_twin)(i));
    }
    Predictor q_mapped = [&q, &push](const Eigen::MatrixXd& x) {
        Eigen::VectorXd raw = q(x);
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = push(raw(i));
        return raw;
    };
    auto transformed = pvalue_error_estimate(q_mapped, mapped, alpha);
    CHECK(base.inner == transformed.inner);
    CHECK(base.point == transformed.point);
}

TEST_CASE("twin estimators demand twin responses") {
    GaussianToySpec spec = small_spec(9);
    Dataset data = toy_generate(spec, 128, 10, false);
    Predictor q = closed_form_var(spec, 0.9);
    CHECK_THROWS_AS(pvalue_error_estimate(q, data, AlphaLevel(0.9)), InputError);
    CHECK_THROWS_AS(es_error_proxy(q, q, data, AlphaLevel(0.9)), InputError);
}

TEST_CASE("es proxy vanishes when the increment is the true conditional mean") {
    GaussianToySpec spec = small_spec(11);
    Dataset data = toy_generate(spec, 1 << 16, 12, true);
    double alpha = 0.95;
    auto est = es_error_proxy(closed_form_var(spec, alpha), closed_form_es(spec, alpha),
                              data, AlphaLevel(alpha));
    CHECK(est.contains_zero());
    CHECK(est.point < 0.05);
}

TEST_CASE("es proxy reduces to the cross term for a zero increment") {
    GaussianToySpec spec = small_spec(13);
    Dataset data = toy_generate(spec, 8192, 14, true);
    double alpha = 0.9;
    Predictor q = closed_form_var(spec, alpha);
    auto est = es_error_proxy(q, q, data, AlphaLevel(alpha));

    Eigen::VectorXd qv = q(data.x);
    double w = 1.0 / (1.0 - alpha);
    double cross = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        cross += w * w * std::max(data.y(i) - qv(i), 0.0) *
                 std::max((*data.y_twin)(i) - qv(i), 0.0);
    }
    cross /= static_cast<double>(data.n());
    CHECK(est.inner == doctest::Approx(cross).epsilon(1e-12));
}

TEST_CASE("constant shift of the es candidate is recovered by the proxy") {
    GaussianToySpec spec = small_spec(15);
    Dataset data = toy_generate(spec, 1 << 16, 16, true);
    double alpha = 0.95;
    double delta = 0.4;
    Predictor s_shift = [&spec, alpha, delta](const Eigen::MatrixXd& x) {
        Eigen::VectorXd s(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            s(i) = toy_var_es_closed(spec, x.row(i).transpose(), alpha).es + delta;
        }
        return s;
    };
    auto est = es_error_proxy(closed_form_var(spec, alpha), s_shift, data,
                              AlphaLevel(alpha));
    CHECK(est.point == doctest::Approx(delta).epsilon(0.15));
}

TEST_CASE("normalized rmse reference values") {
    Eigen::VectorXd truth(4);
    truth << 1.0, 2.0, 3.0, 4.0;
    CHECK(normalized_rmse(truth, truth) == 0.0);

    double sd = std::sqrt(((truth.array() - truth.mean()).square()).sum() / 4.0);
    Eigen::VectorXd shifted = truth.array() + sd;
    CHECK(normalized_rmse(shifted, truth) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, truth.mean());
    CHECK(normalized_rmse(constant, truth) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 2.0);
    CHECK_THROWS_AS(normalized_rmse(truth, flat), MetricError);
}

TEST_CASE("wasserstein distances") {
    std::vector<double> a{0.0}, b{1.0};
    CHECK(wasserstein_1d(a, a) == 0.0);
    CHECK(wasserstein_1d(a, b) == doctest::Approx(1.0));

    std::vector<double> c{0.0, 2.0}, d{1.0, 3.0};
    CHECK(wasserstein_1d(c, d) == doctest::Approx(1.0));

    std::vector<double> e{0.0, 1.0}, f{0.0, 0.5, 1.0};
    CHECK(wasserstein_1d(e, f) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    CHECK_THROWS_AS(wasserstein_1d(std::vector<double>{}, a), MetricError);
}

TEST_CASE("convergence slope reference fits") {
    std::vector<std::pair<double, double>> exact;
    for (double n : {1e3, 1e4, 1e5, 1e6}) exact.emplace_back(n, 3.0 * std::pow(n, -0.25));
    auto fit = convergence_slope(exact);
    CHECK(fit.slope == doctest::Approx(-0.25).epsilon(1e-10));

    std::vector<std::pair<double, double>> flat{{10, 2.0}, {100, 2.0}, {1000, 2.0}};
    CHECK(convergence_slope(flat).slope == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<std::pair<double, double>> two{{10, 1.0}, {1000, 0.1}};
    CHECK(convergence_slope(two).slope == doctest::Approx(-0.5).epsilon(1e-12));

    std::vector<std::pair<double, double>> bad{{10, -1.0}, {100, 1.0}};
    CHECK_THROWS_AS(convergence_slope(bad), MetricError);
}

TEST_CASE("nested sa stays at the fixed point in expectation") {
    // At the true quantile the drift is zero: measure the mean update
    // signal over many batches.
    Rng rng(100);
    AlphaLevel alpha(0.95);
    double v = norm_quantile(alpha.value);
    double acc = 0.0;
    const int batches = 2000, n_inner = 256;
    for (int k = 0; k < batches; ++k) {
        double exceed = 0.0;
        for (int j = 0; j < n_inner; ++j) {
            if (rng.normal() >= v) exceed += 1.0;
        }
        acc += exceed / n_inner - (1.0 - alpha.value);
    }
    double mean_signal = acc / batches;
    double sd = std::sqrt(alpha.value * (1.0 - alpha.value) / (batches * n_inner));
    CHECK(std::abs(mean_signal) < 4.0 * sd);
}

TEST_CASE("nested sa on a degenerate law stays near the constant") {
    NestedMcConfig cfg;
    cfg.n_inner = 64;
    cfg.iterations = 128;
    cfg.gamma = 0.05;
    cfg.alpha = AlphaLevel(0.95);
    InnerSampler constant = [](int, std::span<double> out) {
        for (double& v : out) v = 3.0;
    };
    for (auto opt : {NestedMcConfig::Optimizer::PlainSA, NestedMcConfig::Optimizer::Adam}) {
        cfg.optimizer = opt;
        double est = nested_var_sa(constant, cfg, NestedInit::GaussianMoment);
        CHECK(std::abs(est - 3.0) <= 2.0 * cfg.gamma);
    }
}

TEST_CASE("nested sa hits the standard normal quantile within the p-value budget") {
    NestedMcConfig cfg;
    cfg.n_inner = 1024;
    cfg.iterations = 256;
    cfg.gamma = 1.0;
    cfg.alpha = AlphaLevel(0.95);
    double truth = norm_quantile(0.95);

    double worst = 0.0;
    for (std::uint64_t node = 0; node < 8; ++node) {
        Rng base(derive_stream(12345, node));
        InnerSampler sampler = [&base](int iteration, std::span<double> out) {
            Rng it = base.split(static_cast<std::uint64_t>(iteration));
            for (double& v : out) v = it.normal();
        };
        double est = nested_var_sa(sampler, cfg, NestedInit::GaussianMoment);
        double perr = std::abs(norm_cdf(est) - 0.95);
        worst = std::max(worst, perr);
        CHECK(std::abs(est - truth) < 0.5);
    }
    CHECK(worst <= 0.5 * (1.0 - 0.95));
}

TEST_CASE("nested sa is deterministic given its sampler streams") {
    NestedMcConfig cfg;
    cfg.n_inner = 128;
    cfg.iterations = 64;
    cfg.gamma = 0.5;
    cfg.alpha = AlphaLevel(0.9);
    auto make_sampler = [] {
        return InnerSampler([](int iteration, std::span<double> out) {
            Rng it(derive_stream(777, static_cast<std::uint64_t>(iteration)));
            for (double& v : out) v = it.normal();
        });
    };
    double a = nested_var_sa(make_sampler(), cfg, NestedInit::GaussianMoment);
    double b = nested_var_sa(make_sampler(), cfg, NestedInit::GaussianMoment);
    CHECK(a == b);
}

TEST_CASE("nested sa validates its configuration") {
    NestedMcConfig cfg;
    cfg.n_inner = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = NestedMcConfig{};
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("metrics record serializes with the full field set") {
    MetricsRecord rec;
    rec.method = "single";
    rec.alpha = 0.95;
    rec.n = 1024;
    rec.seed = 7;
    rec.rmse_norm = 0.125;
    rec.crossing["0.999<0.995"] = 0.001;
    std::string line = rec.to_json_line();
    CHECK(line.find("\"method\":\"single\"") != std::string::npos);
    CHECK(line.find("\"rmse_norm\":0.125") != std::string::npos);
    CHECK(line.find("\"pvalue_err\":null") != std::string::npos);
    CHECK(line.find("\"crossing\":{\"0.999<0.995\":0.001}") != std::string::npos);
    CHECK(line.find("\"wall_ms\":0") != std::string::npos);
}
