#include "riskquant/elicit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskquant/errors.hpp"

namespace riskquant {

DiscreteDist::DiscreteDist(std::vector<std::pair<double, double>> a) : atoms(std::move(a)) {
    if (atoms.empty()) throw InputError("discrete law needs at least one atom");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i].second > 0.0)) throw InputError("atom probabilities must be positive");
        if (i > 0 && !(atoms[i].first > atoms[i - 1].first)) {
            throw InputError("atom values must be strictly increasing");
        }
        total += atoms[i].second;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("atom probabilities must sum to 1");
}

double DiscreteDist::cdf(double t) const {
    double c = 0.0;
    for (const auto& [v, p] : atoms) {
        if (v <= t) c += p;
    }
    return c;
}

double DiscreteDist::quantile(double alpha) const {
    double c = 0.0;
    for (const auto& [v, p] : atoms) {
        c += p;
        if (c >= alpha - 1e-15) return v;
    }
    return atoms.back().first;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) throw InputError("grid needs hi > lo and count >= 2");
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) {
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return g;
}

std::vector<double> default_grid(const DiscreteDist& dist) {
    return uniform_grid(dist.atoms.front().first - 1.0, dist.atoms.back().first + 1.0, 2001);
}

std::vector<double> default_grid(std::span<const double> samples) {
    if (samples.empty()) throw InputError("empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto pick = [&](double p) {
        std::size_t k = static_cast<std::size_t>(p * static_cast<double>(sorted.size()));
        if (k >= sorted.size()) k = sorted.size() - 1;
        return sorted[k];
    };
    double lo = pick(1e-4), hi = pick(1.0 - 1e-4);
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    return uniform_grid(lo, hi, 2001);
}

namespace {

// Sorted samples with suffix sums; mean (y - v)^+ in O(log n) per query.
struct TailSums {
    explicit TailSums(std::span<const double> samples)
        : sorted(samples.begin(), samples.end()) {
        if (sorted.empty()) throw InputError("empty sample");
        std::sort(sorted.begin(), sorted.end());
        suffix.assign(sorted.size() + 1, 0.0);
        for (std::size_t i = sorted.size(); i-- > 0;) {
            suffix[i] = suffix[i + 1] + sorted[i];
        }
    }
    // mean over samples of (y - v)^+ and the exceedance fraction
    std::pair<double, double> positive_part_mean(double v) const {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
        std::size_t k = static_cast<std::size_t>(it - sorted.begin());
        double cnt = static_cast<double>(sorted.size() - k);
        double mean = (suffix[k] - cnt * v) / static_cast<double>(sorted.size());
        return {mean, cnt / static_cast<double>(sorted.size())};
    }
    std::vector<double> sorted;
    std::vector<double> suffix;
};

void require_grid(std::span<const double> grid) {
    if (grid.empty()) throw InputError("empty evaluation grid");
}

}  // namespace

QuantileMinimizer brute_force_quantile_minimizer(const DiscreteDist& dist,
                                                 AlphaLevel alpha,
                                                 std::span<const double> grid,
                                                 double response_scale) {
    require_grid(grid);
    std::vector<double> losses(grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double v = grid[g];
        double mean = 0.0;
        for (const auto& [y, p] : dist.atoms) {
            mean += p * pinball_loss(response_scale * y, v, alpha).loss;
        }
        losses[g] = mean;
        best = std::min(best, mean);
    }
    QuantileMinimizer out;
    double tol = 1e-12 * std::max(1.0, std::abs(best));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (losses[g] <= best + tol) out.argmin.push_back(grid[g]);
    }
    out.quantile = dist.quantile(alpha.value);
    return out;
}

double brute_force_pinball_minimum(const DiscreteDist& dist, AlphaLevel alpha,
                                   std::span<const double> grid, double response_scale) {
    require_grid(grid);
    double best = std::numeric_limits<double>::infinity();
    for (double v : grid) {
        double mean = 0.0;
        for (const auto& [y, p] : dist.atoms) {
            mean += p * pinball_loss(response_scale * y, v, alpha).loss;
        }
        best = std::min(best, mean);
    }
    return best;
}

double brute_force_pinball_minimum(std::span<const double> samples, AlphaLevel alpha,
                                   std::span<const double> grid, double response_scale) {
    require_grid(grid);
    std::vector<double> scaled(samples.begin(), samples.end());
    for (double& y : scaled) y *= response_scale;
    TailSums tails{std::span<const double>(scaled)};
    double w = 1.0 / (1.0 - alpha.value);
    double best = std::numeric_limits<double>::infinity();
    for (double v : grid) {
        double mean = w * tails.positive_part_mean(v).first + v;
        best = std::min(best, mean);
    }
    return best;
}

double brute_force_es_minimizer(const DiscreteDist& dist, double q, AlphaLevel alpha,
                                std::span<const double> grid) {
    require_grid(grid);
    // q must be an alpha-quantile: P(Y < q) <= alpha <= F(q).
    double below = 0.0, at_or_below = 0.0;
    for (const auto& [v, p] : dist.atoms) {
        if (v < q - 1e-12) below += p;
        if (v <= q + 1e-12) at_or_below += p;
    }
    if (below > alpha.value + 1e-9 || at_or_below < alpha.value - 1e-9) {
        throw InputError("q is not an alpha-quantile of the law");
    }
    auto none = TruncationBound::none();
    double best = std::numeric_limits<double>::infinity();
    double argmin = grid.front();
    for (double z : grid) {
        double mean = 0.0;
        for (const auto& [y, p] : dist.atoms) {
            mean += p * es_square_loss(y, q, z, alpha, none).loss;
        }
        if (mean < best) {
            best = mean;
            argmin = z;
        }
    }
    return argmin;
}

double brute_force_es_minimizer(std::span<const double> samples, double q,
                                AlphaLevel alpha, std::span<const double> grid) {
    require_grid(grid);
    TailSums tails(samples);
    auto [pos_mean, exceed] = tails.positive_part_mean(q);
    double n = static_cast<double>(samples.size());
    double tol = 6.0 * std::sqrt(alpha.value * (1.0 - alpha.value) / n) + 2.0 / n;
    if (std::abs((1.0 - exceed) - alpha.value) > tol) {
        throw InputError("empirical F(q) is not within sampling noise of alpha");
    }
    // Mean of (z - t_i)^2 depends on the sample only through mean(t).
    double tbar = pos_mean / (1.0 - alpha.value);
    double best = std::numeric_limits<double>::infinity();
    double argmin = grid.front();
    for (double z : grid) {
        double mean = (z - tbar) * (z - tbar);
        if (mean < best) {
            best = mean;
            argmin = z;
        }
    }
    return argmin;
}

std::pair<double, double> brute_force_joint_minimizer(std::span<const double> samples,
                                                      AlphaLevel alpha,
                                                      std::span<const double> grid_v,
                                                      std::span<const double> grid_z,
                                                      const JointLossSpec& /*spec*/) {
    require_grid(grid_v);
    require_grid(grid_z);
    TailSums tails(samples);
    double w = 1.0 / (1.0 - alpha.value);

    std::vector<double> h2(grid_z.size());
    for (std::size_t i = 0; i < grid_z.size(); ++i) h2[i] = std::exp(-grid_z[i]);

    double best = std::numeric_limits<double>::infinity();
    std::pair<double, double> argmin{grid_v.front(), grid_z.front()};
    for (double v : grid_v) {
        double pos = w * tails.positive_part_mean(v).first;
        double pin = pos + v;
        for (std::size_t i = 0; i < grid_z.size(); ++i) {
            double z = grid_z[i];
            double loss = pin - h2[i] * (z - v - pos) - h2[i];
            if (loss < best) {
                best = loss;
                argmin = {v, z};
            }
        }
    }
    return argmin;
}

double acerbi_es(const std::function<double(double)>& quantile_fn, AlphaLevel alpha,
                 std::size_t n_points) {
    if (n_points < 2) throw InputError("need at least 2 quadrature panels");
    double a = alpha.value;
    double h = (1.0 - a) / static_cast<double>(n_points);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_points; ++k) {
        double beta = a + (static_cast<double>(k) + 0.5) * h;
        double q = quantile_fn(beta);
        if (!std::isfinite(q)) throw Error("quantile function returned a non-finite value");
        acc += q;
    }
    return acc / static_cast<double>(n_points);
}

}  // namespace riskquant
