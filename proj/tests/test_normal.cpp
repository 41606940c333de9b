#include <cmath>

#include "doctest.h"
#include "riskquant/errors.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

TEST_CASE("density and cdf basics") {
    CHECK(norm_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(norm_cdf(10.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm_cdf(-10.0) < 1e-20);
}

TEST_CASE("quantile at symmetric and reference points") {
    CHECK(std::abs(norm_quantile(0.5)) < 1e-14);
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(norm_quantile(0.975) == doctest::Approx(norm_quantile_bisect(0.975)).epsilon(1e-11));
}

TEST_CASE("fast quantile matches the bisection reference") {
    for (int i = 1; i <= 999; ++i) {
        double p = i / 1000.0;
        CHECK(std::abs(norm_quantile(p) - norm_quantile_bisect(p)) < 1e-11);
    }
    for (double p : {1e-9, 1e-6, 1e-4, 1.0 - 1e-4, 1.0 - 1e-6, 1.0 - 1e-9}) {
        CHECK(std::abs(norm_cdf(norm_quantile(p)) - p) < 1e-12);
    }
}

TEST_CASE("quantile round trip on random levels") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        double p = rng.uniform01();
        CHECK(std::abs(norm_cdf(norm_quantile(p)) - p) < 1e-9);
    }
}

TEST_CASE("quantile rejects levels outside (0,1)") {
    CHECK_THROWS_AS(norm_quantile(0.0), DomainError);
    CHECK_THROWS_AS(norm_quantile(1.0), DomainError);
    CHECK_THROWS_AS(norm_quantile(-0.5), DomainError);
    CHECK_THROWS_AS(norm_quantile_bisect(1.5), DomainError);
}

namespace {
// Quadrature oracle for E[(Y - q)^+], Y ~ N(mu, sigma^2).
double positive_part_mean_quadrature(double mu, double sigma, double q) {
    double lo = q;
    double hi = mu + 14.0 * sigma;
    if (hi <= lo) return 0.0;
    const int n = 400000;
    double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double y = lo + (i + 0.5) * h;
        acc += (y - q) * norm_pdf((y - mu) / sigma) / sigma;
    }
    return acc * h;
}
}  // namespace

TEST_CASE("gaussian positive-part mean against quadrature") {
    struct Case {
        double mu, sigma, q;
    };
    for (const auto& c : {Case{0.0, 1.0, 0.0}, Case{0.0, 1.0, 1.6448536269514722},
                          Case{1.5, 0.7, 2.0}, Case{-2.0, 3.0, 1.0}}) {
        double exact = gaussian_positive_part_mean(c.mu, c.sigma, c.q);
        double quad = positive_part_mean_quadrature(c.mu, c.sigma, c.q);
        CHECK(exact == doctest::Approx(quad).epsilon(1e-6));
    }
    CHECK(gaussian_positive_part_mean(2.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(gaussian_positive_part_mean(1.0, 0.0, 2.0) == 0.0);
}
