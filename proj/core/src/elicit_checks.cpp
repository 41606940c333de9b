#include "riskquant/elicit_checks.hpp"

#include <algorithm>
#include <cmath>

#include "riskquant/elicit.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

namespace {

double grid_cell(std::span<const double> grid) { return grid[1] - grid[0]; }

std::vector<double> uniform_midpoint_samples(std::size_t n) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
    return s;
}

std::vector<double> normal_samples(std::size_t n, std::uint64_t seed) {
    std::vector<double> s(n);
    Rng rng(seed);
    for (double& v : s) v = rng.normal();
    return s;
}

}  // namespace

std::vector<ElicitCheck> elicitability_checks(std::uint64_t seed) {
    std::vector<ElicitCheck> checks;
    auto add = [&checks](const std::string& name, double deviation, double tolerance) {
        checks.push_back({name, deviation, tolerance, deviation <= tolerance});
    };

    // Fair coin on {0, 1} at alpha = 1/2: the pinball loss is flat on
    // [0, 1], so every grid point there minimizes and the definitional
    // quantile is the left endpoint.
    {
        DiscreteDist coin({{0.0, 0.5}, {1.0, 0.5}});
        auto grid = default_grid(coin);
        auto result = brute_force_quantile_minimizer(coin, AlphaLevel(0.5), grid);
        std::size_t inside = 0;
        for (double g : grid) {
            if (g >= -1e-12 && g <= 1.0 + 1e-12) ++inside;
        }
        double dev = std::abs(static_cast<double>(result.argmin.size()) -
                              static_cast<double>(inside));
        add("quantile/flat-set-size", dev, 0.5);
        add("quantile/flat-definitional", std::abs(result.quantile - 0.0), 1e-12);
        double in_set = std::find_if(result.argmin.begin(), result.argmin.end(),
                                     [&](double v) {
                                         return std::abs(v - result.quantile) <=
                                                grid_cell(grid);
                                     }) != result.argmin.end()
                            ? 0.0
                            : 1.0;
        add("quantile/flat-contains-definitional", in_set, 0.5);
    }

    // Skewed coin: unique minimizer at the upper atom.
    {
        DiscreteDist coin({{0.0, 0.3}, {1.0, 0.7}});
        auto grid = default_grid(coin);
        auto result = brute_force_quantile_minimizer(coin, AlphaLevel(0.5), grid);
        add("quantile/skewed-unique", std::abs(result.argmin.front() - 1.0),
            grid_cell(grid));
        add("quantile/skewed-tie-count", static_cast<double>(result.argmin.size()) - 1.0,
            0.5);
        add("quantile/skewed-definitional", std::abs(result.quantile - 1.0), 1e-12);
    }

    // Point mass.
    {
        DiscreteDist point({{5.0, 1.0}});
        auto grid = default_grid(point);
        auto result = brute_force_quantile_minimizer(point, AlphaLevel(0.9), grid);
        add("quantile/point-mass", std::abs(result.argmin.front() - 5.0), grid_cell(grid));
    }

    // ES-given-VaR on the uniform law: argmin approaches ES - q = 0.125.
    {
        auto samples = uniform_midpoint_samples(200000);
        auto grid = uniform_grid(-0.5, 1.5, 2001);
        double z = brute_force_es_minimizer(samples, 0.75, AlphaLevel(0.75), grid);
        add("es/uniform", std::abs(z - 0.125), grid_cell(grid));
    }

    // Degenerate law: ES - q = 0.
    {
        DiscreteDist point({{2.0, 1.0}});
        auto grid = uniform_grid(-1.0, 1.0, 2001);
        double z = brute_force_es_minimizer(point, 2.0, AlphaLevel(0.5), grid);
        add("es/degenerate", std::abs(z), grid_cell(grid));
    }

    // ES-given-VaR on sampled standard normal.
    {
        auto samples = normal_samples(1000000, derive_stream(seed, 11));
        double alpha = 0.95;
        double q = norm_quantile(alpha);
        double es = norm_pdf(q) / (1.0 - alpha);
        auto grid = uniform_grid(0.0, 1.5, 2001);
        double z = brute_force_es_minimizer(samples, q, AlphaLevel(alpha), grid);
        add("es/gaussian", std::abs(z - (es - q)), 0.01);
    }

    // Joint minimizer on sampled standard normal at alpha = 0.9.
    {
        auto samples = normal_samples(400000, derive_stream(seed, 12));
        double alpha = 0.9;
        double var_true = norm_quantile(alpha);
        double es_true = norm_pdf(var_true) / (1.0 - alpha);
        auto gv = uniform_grid(0.5, 2.0, 401);
        auto gz = uniform_grid(1.0, 2.5, 401);
        auto [v, z] = brute_force_joint_minimizer(samples, AlphaLevel(alpha), gv, gz,
                                                  JointLossSpec{});
        add("joint/gaussian-var", std::abs(v - var_true), 3.0 * grid_cell(gv));
        add("joint/gaussian-es", std::abs(z - es_true), 3.0 * grid_cell(gz));
    }

    // Joint minimizer on a degenerate law.
    {
        std::vector<double> samples(1000, 2.5);
        auto gv = uniform_grid(1.0, 4.0, 601);
        auto gz = uniform_grid(1.0, 4.0, 601);
        auto [v, z] = brute_force_joint_minimizer(samples, AlphaLevel(0.8), gv, gz,
                                                  JointLossSpec{});
        add("joint/degenerate-var", std::abs(v - 2.5), grid_cell(gv));
        add("joint/degenerate-es", std::abs(z - 2.5), grid_cell(gz));
    }

    // Scaling: the argmin of the joint loss on a*Y sits at a times the
    // argmin on Y.
    {
        auto samples = normal_samples(400000, derive_stream(seed, 13));
        double a = 2.0;
        std::vector<double> scaled(samples);
        for (double& s : scaled) s *= a;
        double alpha = 0.9;
        auto gv = uniform_grid(0.5, 2.0, 401);
        auto gz = uniform_grid(1.0, 2.5, 401);
        auto gva = uniform_grid(0.5 * a, 2.0 * a, 401);
        auto gza = uniform_grid(1.0 * a, 2.5 * a, 401);
        auto base = brute_force_joint_minimizer(samples, AlphaLevel(alpha), gv, gz,
                                                JointLossSpec{});
        auto big = brute_force_joint_minimizer(scaled, AlphaLevel(alpha), gva, gza,
                                               JointLossSpec{});
        add("joint/scaling-var", std::abs(big.first - a * base.first),
            a * grid_cell(gv) + grid_cell(gva));
        add("joint/scaling-es", std::abs(big.second - a * base.second),
            a * grid_cell(gz) + grid_cell(gza));
    }

    // Minimum identity: ES equals (1/c) times the minimum of the mean
    // pinball loss with responses scaled by c.
    {
        auto samples = uniform_midpoint_samples(200000);
        double alpha = 0.75;
        double es_true = 0.875;
        for (double c : {0.5, 2.0}) {
            auto grid = uniform_grid(-0.5 * c, 1.5 * c, 4001);
            double min_loss =
                brute_force_pinball_minimum(samples, AlphaLevel(alpha), grid, c);
            add("min-identity/c=" + std::to_string(c).substr(0, 3),
                std::abs(min_loss / c - es_true), grid_cell(grid) / c + 1e-6);
        }
    }

    // Tail-average quadrature against closed forms.
    {
        AlphaLevel a95(0.95);
        double gauss = acerbi_es([](double b) { return norm_quantile(b); }, a95, 100000);
        double es_true = norm_pdf(norm_quantile(0.95)) / 0.05;
        add("acerbi/gaussian", std::abs(gauss - es_true), 1e-4);

        double constant = acerbi_es([](double) { return 3.25; }, a95, 100);
        add("acerbi/constant", std::abs(constant - 3.25), 0.0);

        double unif = acerbi_es([](double b) { return b; }, AlphaLevel(0.75), 100000);
        add("acerbi/uniform", std::abs(unif - 0.875), 1e-6);
    }

    return checks;
}

}  // namespace riskquant
