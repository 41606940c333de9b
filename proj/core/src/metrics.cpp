#include "riskquant/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "riskquant/errors.hpp"
#include "json.hpp"

namespace riskquant {

double normalized_rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size()) throw MetricError("length mismatch");
    if (truth.size() < 2) throw MetricError("need at least two points");
    const double n = static_cast<double>(truth.size());
    double mean = truth.mean();
    double var = (truth.array() - mean).square().sum() / n;
    if (!(var > 0.0)) throw MetricError("truth has zero variance");
    double mse = (pred - truth).squaredNorm() / n;
    return std::sqrt(mse / var);
}

std::vector<double> crossing_rate(const LevelPredictor& predict, const Eigen::MatrixXd& x,
                                  std::span<const std::pair<double, double>> alpha_pairs) {
    std::vector<double> rates;
    rates.reserve(alpha_pairs.size());
    for (const auto& [hi, lo] : alpha_pairs) {
        if (!(hi > lo)) throw InputError("alpha pairs must satisfy hi > lo");
        Eigen::VectorXd v_hi = predict(hi, x);
        Eigen::VectorXd v_lo = predict(lo, x);
        double count = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (v_hi(i) < v_lo(i)) count += 1.0;
        }
        rates.push_back(count / static_cast<double>(x.rows()));
    }
    return rates;
}

std::vector<double> crossing_rate(const VarModel& model, const Eigen::MatrixXd& x,
                                  std::span<const std::pair<double, double>> alpha_pairs) {
    return crossing_rate(
        [&model](double alpha, const Eigen::MatrixXd& pts) {
            return model.predict_batch(pts, alpha);
        },
        x, alpha_pairs);
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw MetricError("empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() == sb.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
        return acc / static_cast<double>(sa.size());
    }
    // Integrate |F_a^-1(u) - F_b^-1(u)| over the refinement of both
    // step grids {k/n} and {k/m}.
    const double n = static_cast<double>(sa.size());
    const double m = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < sa.size() && j < sb.size()) {
        double next_a = static_cast<double>(i + 1) / n;
        double next_b = static_cast<double>(j + 1) / m;
        double next = std::min(next_a, next_b);
        acc += (next - u) * std::abs(sa[i] - sb[j]);
        u = next;
        if (next_a <= next) ++i;
        if (next_b <= next) ++j;
    }
    return acc;
}

SlopeFit convergence_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw MetricError("need at least two points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [n, rmse] : points) {
        if (!(n > 0.0) || !(rmse > 0.0)) throw MetricError("points must be positive");
        double lx = std::log(n), ly = std::log(rmse);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double count = static_cast<double>(points.size());
    double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw MetricError("degenerate abscissae");
    double slope = (count * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / count};
}

std::string MetricsRecord::to_json_line() const {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["alpha"] = alpha;
    j["n"] = n;
    j["seed"] = seed;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    put("rmse_norm", rmse_norm);
    put("pvalue_err", pvalue_err);
    put("pvalue_err_ci_hi", pvalue_err_ci_hi);
    put("es_proxy", es_proxy);
    j["crossing"] = nlohmann::ordered_json::object();
    for (const auto& [key, rate] : crossing) j["crossing"][key] = rate;
    put("wasserstein", wasserstein);
    j["wall_ms"] = wall_ms;
    return j.dump();
}

}  // namespace riskquant
