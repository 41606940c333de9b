#pragma once

#include <Eigen/Core>
#include <functional>

#include "riskquant/dataset.hpp"
#include "riskquant/losses.hpp"

namespace riskquant {

/// Twin-simulation estimate of a squared error quantity. `inner` is the
/// raw plug-in mean (may be negative in finite samples); `point` is the
/// square root of the clamped value. The confidence interval is a 95%
/// normal approximation on the squared scale.
struct TwinEstimate {
    double inner = 0.0;
    double point = 0.0;
    double ci_halfwidth = 0.0;  // on the squared (inner) scale
    long n_used = 0;

    double ci_hi() const;  // sqrt of the upper CI bound, clamped at 0
    double ci_lo() const;  // sqrt of the lower CI bound, clamped at 0
    bool contains_zero() const { return inner - ci_halfwidth <= 0.0; }
};

using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Distance in p-values between a quantile candidate and the truth:
/// sqrt of (1-a)(1-a - 2 P(Y > q(X))) + P(min(Y1, Y2) > q(X)), estimated
/// from one twin sample. Throws InputError when twins are missing.
TwinEstimate pvalue_error_estimate(const Predictor& q_hat, const Dataset& data,
                                   AlphaLevel alpha);

/// Twin-simulation proxy for |s_hat(X) - ES(Y|X)|_2: sqrt of
/// |s-q|^2 + (1-a)^-2 E[(Y1-q)^+ (Y2-q)^+] - 2 (1-a)^-1 E[(s-q)(Y-q)^+].
TwinEstimate es_error_proxy(const Predictor& q_hat, const Predictor& s_hat,
                            const Dataset& data, AlphaLevel alpha);

}  // namespace riskquant
