#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "riskquant/elicit.hpp"
#include "riskquant/elicit_checks.hpp"
#include "riskquant/errors.hpp"
#include "riskquant/gaussian_toy.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

TEST_CASE("toy spec basis sizes") {
    CHECK(GaussianToySpec::basis_size(1) == 2);
    CHECK(GaussianToySpec::basis_size(5) == 16);
    CHECK(GaussianToySpec::basis_size(25) == 326);
    Rng rng(1);
    GaussianToySpec spec = toy_spec_sample(25, rng);
    CHECK(spec.lambda.size() == 326);
    CHECK(spec.mu.size() == 326);
}

TEST_CASE("toy spec sampling is deterministic in the seed") {
    Rng a(9), b(9);
    GaussianToySpec sa = toy_spec_sample(4, a);
    GaussianToySpec sb = toy_spec_sample(4, b);
    CHECK(sa.lambda == sb.lambda);
    CHECK(sa.mu == sb.mu);
}

TEST_CASE("degenerate spec produces a constant response") {
    GaussianToySpec spec;
    spec.d = 3;
    spec.lambda = Eigen::VectorXd::Zero(GaussianToySpec::basis_size(3));
    spec.lambda(0) = 2.5;
    spec.mu = Eigen::VectorXd::Zero(GaussianToySpec::basis_size(3));
    Dataset data = toy_generate(spec, 500, 7, true);
    CHECK((data.y.array() == 2.5).all());
    CHECK((data.y_twin->array() == 2.5).all());
}

TEST_CASE("generated responses center on P1 and twins decorrelate") {
    Rng rng(11);
    GaussianToySpec spec = toy_spec_sample(3, rng);
    const Eigen::Index n = 1 << 15;
    Dataset data = toy_generate(spec, n, 13, true);

    Eigen::VectorXd resid(n), resid_twin(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double m = spec.p1(data.x.row(i).transpose());
        resid(i) = data.y(i) - m;
        resid_twin(i) = (*data.y_twin)(i) - m;
    }
    double mean = resid.mean();
    double sd = std::sqrt((resid.array() - mean).square().sum() / (n - 1));
    CHECK(std::abs(mean) < 4.0 * sd / std::sqrt(static_cast<double>(n)));

    double corr = (resid.array() - mean).cwiseProduct(resid_twin.array() -
                                                      resid_twin.mean())
                      .sum() /
                  ((n - 1) * sd *
                   std::sqrt((resid_twin.array() - resid_twin.mean()).square().sum() /
                             (n - 1)));
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("generation is reproducible and twin-flag stable") {
    Rng rng(2);
    GaussianToySpec spec = toy_spec_sample(2, rng);
    Dataset a = toy_generate(spec, 100, 5, false);
    Dataset b = toy_generate(spec, 100, 5, true);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(b.y_twin.has_value());
}

TEST_CASE("closed-form var/es at reference points") {
    GaussianToySpec spec;
    spec.d = 1;
    spec.lambda = Eigen::VectorXd::Zero(2);
    spec.mu = Eigen::VectorXd::Zero(2);
    spec.mu(0) = 1.0;  // sigma(x) = 1
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);

    auto ve = toy_var_es_closed(spec, x, 0.99);
    CHECK(ve.var == doctest::Approx(2.326348).epsilon(1e-5));
    CHECK(ve.es == doctest::Approx(2.665214).epsilon(1e-5));

    auto mid = toy_var_es_closed(spec, x, 0.5);
    CHECK(mid.var == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mid.es == doctest::Approx(2.0 * norm_pdf(0.0)).epsilon(1e-12));
}

TEST_CASE("es dominates var and var grows in alpha") {
    Rng rng(33);
    GaussianToySpec spec = toy_spec_sample(4, rng);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(4);
        for (int j = 0; j < 4; ++j) x(j) = rng.normal();
        double alpha = rng.uniform(0.05, 0.995);
        auto ve = toy_var_es_closed(spec, x, alpha);
        CHECK(ve.es >= ve.var);
        if (spec.stddev(x) > 1e-12) {
            auto higher = toy_var_es_closed(spec, x, std::min(alpha + 0.01, 0.999));
            CHECK(higher.var > ve.var);
        }
    }
}

TEST_CASE("tail-average quadrature agrees with the closed form across levels") {
    Rng rng(55);
    GaussianToySpec spec = toy_spec_sample(3, rng);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(3);
        for (int j = 0; j < 3; ++j) x(j) = rng.normal();
        double alpha = rng.uniform(0.5, 0.99);
        auto ve = toy_var_es_closed(spec, x, alpha);
        double quad = acerbi_es(
            [&spec, &x](double beta) { return toy_var_es_closed(spec, x, beta).var; },
            AlphaLevel(alpha), 20000);
        CHECK(std::abs(quad - ve.es) <
              1e-4 * std::max(1.0, std::abs(ve.es)) + 1e-4 * spec.stddev(x));
    }
}

TEST_CASE("discrete law validation and quantiles") {
    CHECK_THROWS_AS(DiscreteDist({{0.0, 0.5}, {1.0, 0.6}}), InputError);
    CHECK_THROWS_AS(DiscreteDist({{1.0, 0.5}, {0.0, 0.5}}), InputError);
    CHECK_THROWS_AS(DiscreteDist({{0.0, -0.1}, {1.0, 1.1}}), InputError);
    DiscreteDist d({{0.0, 0.3}, {1.0, 0.7}});
    CHECK(d.quantile(0.2) == 0.0);
    CHECK(d.quantile(0.3) == 0.0);
    CHECK(d.quantile(0.31) == 1.0);
    CHECK(d.cdf(0.5) == doctest::Approx(0.3));
}

TEST_CASE("quantile minimizer on reference discrete laws") {
    DiscreteDist coin({{0.0, 0.5}, {1.0, 0.5}});
    auto grid = uniform_grid(-1.0, 2.0, 301);
    auto flat = brute_force_quantile_minimizer(coin, AlphaLevel(0.5), grid);
    CHECK(flat.quantile == 0.0);
    for (double v : flat.argmin) {
        CHECK(v >= -1e-9);
        CHECK(v <= 1.0 + 1e-9);
    }
    CHECK(flat.argmin.size() > 50);  // the whole [0, 1] stretch ties

    DiscreteDist skew({{0.0, 0.3}, {1.0, 0.7}});
    auto unique = brute_force_quantile_minimizer(skew, AlphaLevel(0.5), grid);
    CHECK(unique.argmin.size() == 1);
    CHECK(unique.argmin.front() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("es minimizer flags a non-quantile candidate") {
    DiscreteDist skew({{0.0, 0.3}, {1.0, 0.7}});
    auto grid = uniform_grid(-1.0, 2.0, 101);
    CHECK_THROWS_AS(brute_force_es_minimizer(skew, 0.0, AlphaLevel(0.9), grid), InputError);
    // 0 is a valid 0.3-quantile, 1 a valid 0.5-quantile.
    CHECK_NOTHROW(brute_force_es_minimizer(skew, 0.0, AlphaLevel(0.25), grid));
    CHECK_NOTHROW(brute_force_es_minimizer(skew, 1.0, AlphaLevel(0.5), grid));
}

TEST_CASE("sampled es minimizer flags quantile mismatch") {
    std::vector<double> samples(10000);
    Rng rng(8);
    for (double& s : samples) s = rng.normal();
    auto grid = uniform_grid(0.0, 1.0, 101);
    CHECK_THROWS_AS(
        brute_force_es_minimizer(samples, 2.0, AlphaLevel(0.5), grid), InputError);
}

TEST_CASE("full elicitability battery passes") {
    for (const auto& check : elicitability_checks(424242)) {
        INFO(check.name, " deviation=", check.deviation, " tol=", check.tolerance);
        CHECK(check.pass);
    }
}

TEST_CASE("acerbi quadrature validates inputs") {
    CHECK_THROWS_AS(acerbi_es([](double) { return 1.0; }, AlphaLevel(0.9), 1), InputError);
    CHECK_THROWS_AS(
        acerbi_es([](double) { return std::nan(""); }, AlphaLevel(0.9), 16), Error);
}

TEST_CASE("dataset csv export writes the expected header") {
    GaussianToySpec spec;
    spec.d = 2;
    spec.lambda = Eigen::VectorXd::Zero(GaussianToySpec::basis_size(2));
    spec.mu = Eigen::VectorXd::Zero(GaussianToySpec::basis_size(2));
    spec.mu(0) = 1.0;
    Dataset data = toy_generate(spec, 10, 3, true);
    std::string path = "toy_export_test.csv";
    write_csv(data, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x_0,x_1,y,y_twin");
    std::remove(path.c_str());
}
