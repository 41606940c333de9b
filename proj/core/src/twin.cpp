#include "riskquant/twin.hpp"

#include <cmath>

#include "riskquant/errors.hpp"

namespace riskquant {

namespace {
constexpr double kZ95 = 1.959963984540054;

// Normal-approximation CI from per-row contributions v_i with mean(v)
// being the estimator of interest.
TwinEstimate finish(const Eigen::VectorXd& v) {
    const double n = static_cast<double>(v.size());
    double mean = v.mean();
    double var = (v.array() - mean).square().sum() / (n - 1.0);
    TwinEstimate est;
    est.inner = mean;
    est.point = std::sqrt(std::max(mean, 0.0));
    est.ci_halfwidth = kZ95 * std::sqrt(var / n);
    est.n_used = static_cast<long>(v.size());
    return est;
}

void require_twins(const Dataset& data) {
    data.validate();
    if (!data.y_twin) throw InputError("twin responses are required");
    if (data.n() < 2) throw InputError("need at least two rows");
}
}  // namespace

double TwinEstimate::ci_hi() const { return std::sqrt(std::max(inner + ci_halfwidth, 0.0)); }
double TwinEstimate::ci_lo() const { return std::sqrt(std::max(inner - ci_halfwidth, 0.0)); }

TwinEstimate pvalue_error_estimate(const Predictor& q_hat, const Dataset& data,
                                   AlphaLevel alpha) {
    require_twins(data);
    Eigen::VectorXd q = q_hat(data.x);
    if (q.size() != data.n()) throw ShapeError("predictor returned wrong number of rows");
    const double one_minus_a = 1.0 - alpha.value;
    Eigen::VectorXd v(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        double a_ind = data.y(i) > q(i) ? 1.0 : 0.0;
        double b_ind = std::min(data.y(i), (*data.y_twin)(i)) > q(i) ? 1.0 : 0.0;
        v(i) = one_minus_a * (one_minus_a - 2.0 * a_ind) + b_ind;
    }
    return finish(v);
}

TwinEstimate es_error_proxy(const Predictor& q_hat, const Predictor& s_hat,
                            const Dataset& data, AlphaLevel alpha) {
    require_twins(data);
    Eigen::VectorXd q = q_hat(data.x);
    Eigen::VectorXd s = s_hat(data.x);
    if (q.size() != data.n() || s.size() != data.n()) {
        throw ShapeError("predictor returned wrong number of rows");
    }
    const double w = 1.0 / (1.0 - alpha.value);
    Eigen::VectorXd v(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        double dq = s(i) - q(i);
        double p1 = std::max(data.y(i) - q(i), 0.0);
        double p2 = std::max((*data.y_twin)(i) - q(i), 0.0);
        v(i) = dq * dq + w * w * p1 * p2 - 2.0 * w * dq * p1;
    }
    return finish(v);
}

}  // namespace riskquant
