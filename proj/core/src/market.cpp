#include "riskquant/market.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "riskquant/errors.hpp"
#include "riskquant/parallel.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

int MarketConfig::delta_steps() const {
    double ratio = delta_years / dt();
    int ds = static_cast<int>(std::lround(ratio));
    if (ds < 1 || std::abs(ratio - ds) > 1e-9) {
        throw InputError("delta_years must be a positive multiple of the grid step");
    }
    return ds;
}

void MarketConfig::validate() const {
    if (!(kappa > 0.0)) throw InputError("kappa must be positive");
    if (!(sigma_r >= 0.0)) throw InputError("sigma_r must be >= 0");
    if (steps < 2) throw InputError("steps must be >= 2");
    if (!(horizon_years > 0.0)) throw InputError("horizon must be positive");
    if (n_swaps < 0) throw InputError("n_swaps must be >= 0");
    double spy = static_cast<double>(steps) / horizon_years;
    if (std::abs(spy - std::lround(spy)) > 1e-9) {
        throw InputError("steps per year must be an integer so coupons land on the grid");
    }
    if (!(delta_years > 0.0) || delta_years > horizon_years) {
        throw InputError("delta_years must lie in (0, horizon]");
    }
    delta_steps();
}

double vasicek_zcb(const MarketConfig& cfg, double tau, double r) {
    if (tau <= 0.0) return 1.0;
    double k = cfg.kappa;
    double b = (1.0 - std::exp(-k * tau)) / k;
    double s2 = cfg.sigma_r * cfg.sigma_r;
    double a = (cfg.theta - s2 / (2.0 * k * k)) * (b - tau) - s2 * b * b / (4.0 * k);
    return std::exp(a - b * r);
}

double vasicek_mean(const MarketConfig& cfg, double t) {
    double e = std::exp(-cfg.kappa * t);
    return cfg.r0 * e + cfg.theta * (1.0 - e);
}

SwapBook SwapBook::sample(const MarketConfig& cfg) {
    cfg.validate();
    SwapBook book;
    book.swaps.reserve(cfg.n_swaps);
    Rng rng(derive_stream(cfg.seed, 0x705254464f4c494fULL));
    int max_maturity = static_cast<int>(std::min(10.0, cfg.horizon_years));
    double dt = cfg.dt();
    for (int i = 0; i < cfg.n_swaps; ++i) {
        Swap s;
        s.direction = rng.uniform01() < 0.5 ? 1.0 : -1.0;
        s.maturity_years = 1 + static_cast<int>(rng.next_u64() % max_maturity);
        // Par rate off the time-0 curve, then a small random spread.
        double float_leg = 0.0, annuity = 0.0;
        for (int u = 1; u <= s.maturity_years; ++u) {
            float_leg += vasicek_zcb(cfg, u - dt, cfg.r0) - vasicek_zcb(cfg, u, cfg.r0);
            annuity += vasicek_zcb(cfg, u, cfg.r0);
        }
        double par = float_leg / annuity;
        s.fixed_rate = par + 0.01 * rng.uniform(-1.0, 1.0);
        book.swaps.push_back(s);
    }
    return book;
}

double SwapBook::value(const MarketConfig& cfg, double t, double r) const {
    double dt = cfg.dt();
    double v = 0.0;
    for (const Swap& s : swaps) {
        for (int u = 1; u <= s.maturity_years; ++u) {
            double tu = static_cast<double>(u);
            if (tu <= t + 1e-12) continue;
            // Float flow at u is worth P(t, u-dt) - P(t, u); the fixed
            // coupon nets off another c P(t, u).
            v += s.direction * (vasicek_zcb(cfg, tu - dt - t, r) -
                                (1.0 + s.fixed_rate) * vasicek_zcb(cfg, tu - t, r));
        }
    }
    return v;
}

double SwapBook::cash_flow_at(const MarketConfig& cfg, double u, double r_fixing) const {
    double dt = cfg.dt();
    double total = 0.0;
    for (const Swap& s : swaps) {
        if (u < 0.5 || u > s.maturity_years + 1e-12) continue;
        double rounded = std::lround(u);
        if (std::abs(u - rounded) > 1e-9) continue;
        double f = 1.0 / vasicek_zcb(cfg, dt, r_fixing) - 1.0;
        total += s.direction * (f - s.fixed_rate);
    }
    return total;
}

bool SwapBook::pays_at(double t) const {
    double rounded = std::lround(t);
    if (std::abs(t - rounded) > 1e-9 || rounded < 0.5) return false;
    for (const Swap& s : swaps) {
        if (rounded <= s.maturity_years + 1e-12) return true;
    }
    return false;
}

BookValuer::BookValuer(const MarketConfig& cfg, const SwapBook& book) {
    cfg.validate();
    const int steps = cfg.steps;
    const double dt = cfg.dt();
    int max_maturity = 0;
    for (const auto& s : book.swaps) max_maturity = std::max(max_maturity, s.maturity_years);

    // Aggregate swap weights per annual payment date.
    std::vector<double> w_float(max_maturity + 1, 0.0);
    std::vector<double> w_fixed(max_maturity + 1, 0.0);
    std::vector<double> w_rate(max_maturity + 1, 0.0);
    for (const auto& s : book.swaps) {
        for (int u = 1; u <= s.maturity_years; ++u) {
            w_float[u] += s.direction;
            w_fixed[u] += s.direction * (1.0 + s.fixed_rate);
            w_rate[u] += s.direction * s.fixed_rate;
        }
    }

    // Split the zcb into its A and B factors so terms can be folded.
    auto zcb_parts = [&cfg](double tau, double& a, double& b) {
        double k = cfg.kappa;
        b = (1.0 - std::exp(-k * tau)) / k;
        double s2 = cfg.sigma_r * cfg.sigma_r;
        a = std::exp((cfg.theta - s2 / (2.0 * k * k)) * (b - tau) - s2 * b * b / (4.0 * k));
    };
    zcb_parts(dt, one_step_a_, one_step_b_);

    terms_.resize(steps + 1);
    pay_dir_sum_.assign(steps + 1, 0.0);
    pay_fixed_sum_.assign(steps + 1, 0.0);
    for (int k = 0; k <= steps; ++k) {
        double t = k * dt;
        for (int u = 1; u <= max_maturity; ++u) {
            double tu = static_cast<double>(u);
            if (tu <= t + 1e-12) continue;
            double a1, b1, a2, b2;
            zcb_parts(tu - dt - t, a1, b1);
            zcb_parts(tu - t, a2, b2);
            if (tu - dt - t <= 0.0) {
                a1 = 1.0;
                b1 = 0.0;
            }
            terms_[k].push_back({b1, a1 * w_float[u]});
            terms_[k].push_back({b2, -a2 * w_fixed[u]});
        }
        double rounded = std::lround(t);
        if (std::abs(t - rounded) <= 1e-9 && rounded >= 1.0 && rounded <= max_maturity) {
            int u = static_cast<int>(rounded);
            pay_dir_sum_[k] = w_float[u];
            pay_fixed_sum_[k] = w_rate[u];
        }
    }
}

double BookValuer::value(int step, double r) const {
    double v = 0.0;
    for (const Term& term : terms_[static_cast<std::size_t>(step)]) {
        v += term.coeff * std::exp(-term.b * r);
    }
    return v;
}

double BookValuer::cash_flow(int step, double r_fixing) const {
    double f = std::exp(one_step_b_ * r_fixing) / one_step_a_ - 1.0;
    return f * pay_dir_sum_[static_cast<std::size_t>(step)] -
           pay_fixed_sum_[static_cast<std::size_t>(step)];
}

Eigen::VectorXd PathSet::feature_row(Eigen::Index path, Eigen::Index step) const {
    Eigen::VectorXd x(2);
    x << short_rate(path, step), times[static_cast<std::size_t>(step)];
    return x;
}

PathSet simulate_paths(const MarketConfig& cfg, const SwapBook& book, Eigen::Index n_paths) {
    cfg.validate();
    if (n_paths < 1) throw InputError("need n_paths >= 1");
    const int steps = cfg.steps;
    const double dt = cfg.dt();
    PathSet out;
    out.times.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) out.times[k] = k * dt;
    out.short_rate.resize(n_paths, steps + 1);
    out.mtm.resize(n_paths, steps + 1);

    const double decay = std::exp(-cfg.kappa * dt);
    const double diffusion =
        cfg.sigma_r * std::sqrt((1.0 - decay * decay) / (2.0 * cfg.kappa));
    const BookValuer valuer(cfg, book);
    Rng base(derive_stream(cfg.seed, stream::kData));

    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        Rng rng = base.split(p);
        double r = cfg.r0;
        double cash = 0.0;
        out.short_rate(p, 0) = r;
        out.mtm(p, 0) = valuer.value(0, r);
        double r_prev = r;
        for (int k = 1; k <= steps; ++k) {
            r = cfg.theta + (r_prev - cfg.theta) * decay + diffusion * rng.normal();
            if (valuer.pays(k)) {
                cash += valuer.cash_flow(k, r_prev);
            }
            out.short_rate(p, k) = r;
            out.mtm(p, k) = valuer.value(k, r) + cash;
            r_prev = r;
        }
    });
    return out;
}

ImLabelSet im_labels(const PathSet& paths, const MarketConfig& cfg) {
    int ds = cfg.delta_steps();
    ImLabelSet out;
    for (Eigen::Index k = 0; k + ds < paths.n_steps(); ++k) {
        Dataset data;
        data.x.resize(paths.n_paths(), 2);
        data.y.resize(paths.n_paths());
        for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
            data.x(p, 0) = paths.short_rate(p, k);
            data.x(p, 1) = paths.times[static_cast<std::size_t>(k)];
            data.y(p) = paths.mtm(p, k + ds) - paths.mtm(p, k);
        }
        if (!data.y.allFinite()) throw InputError("non-finite margin label");
        out.steps.push_back(static_cast<int>(k));
        out.by_step.push_back(std::move(data));
    }
    return out;
}

namespace {
template <typename T>
void put_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
}  // namespace

void write_pathset(const PathSet& paths, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("RQPS", 4);
    put_raw<std::uint32_t>(out, 1);
    put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(paths.n_paths()));
    put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(paths.n_steps()));
    put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(paths.state_dim));
    for (double t : paths.times) put_raw(out, t);
    for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
        for (Eigen::Index k = 0; k < paths.n_steps(); ++k) {
            put_raw(out, paths.short_rate(p, k));
            put_raw(out, paths.times[static_cast<std::size_t>(k)]);
        }
    }
    for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
        for (Eigen::Index k = 0; k < paths.n_steps(); ++k) {
            put_raw(out, paths.mtm(p, k));
        }
    }
}

void write_pathset_csv(const PathSet& paths, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "path,step,t,r,mtm\n";
    char buf[160];
    for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
        for (Eigen::Index k = 0; k < paths.n_steps(); ++k) {
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(p), static_cast<long long>(k),
                          paths.times[static_cast<std::size_t>(k)], paths.short_rate(p, k),
                          paths.mtm(p, k));
            out << buf;
        }
    }
}

}  // namespace riskquant
