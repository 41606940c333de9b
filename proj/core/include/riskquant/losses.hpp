#pragma once

#include <cmath>
#include <optional>

#include "riskquant/errors.hpp"

namespace riskquant {

/// Quantile confidence level, constrained to (0, 1).
struct AlphaLevel {
    explicit AlphaLevel(double a) : value(a) {
        if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    }
    double value;
};

/// Optional symmetric truncation bound B for regression targets.
/// Absent bound means the identity truncation.
struct TruncationBound {
    TruncationBound() = default;
    explicit TruncationBound(double b) : bound(b) {
        if (!(b > 0.0)) throw DomainError("truncation bound must be positive");
    }
    static TruncationBound none() { return TruncationBound(); }

    double clamp(double y) const {
        if (!bound) return y;
        double b = *bound;
        return y > b ? b : (y < -b ? -b : y);
    }
    std::optional<double> bound;
};

/// Joint VaR/ES loss specialization. ExpNeg is h2(z) = exp(-z), which has
/// h2' < 0 and h2'' != 0 everywhere.
struct JointLossSpec {
    enum class H2Kind { ExpNeg };
    H2Kind h2_kind = H2Kind::ExpNeg;
};

struct LossGrad1 {
    double loss;
    double d;
};

struct LossGrad2 {
    double loss;
    double dv;
    double dz;
};

/// Tilted (pinball) loss (1-a)^-1 (y-v)^+ + v and its v-subgradient.
/// At the kink y == v the y<=v branch value 1 is used.
inline LossGrad1 pinball_loss(double y, double v, AlphaLevel alpha) {
    double w = 1.0 / (1.0 - alpha.value);
    double excess = y - v;
    if (excess > 0.0) {
        return {w * excess + v, 1.0 - w};
    }
    return {v, 1.0};
}

/// Two-step ES residual loss in increment form: (z - t)^2 with target
/// t = T_B((1-a)^-1 (y - v_hat)^+). Returns the z-gradient.
inline LossGrad1 es_square_loss(double y, double v_hat, double z, AlphaLevel alpha,
                                const TruncationBound& trunc) {
    double excess = y - v_hat;
    double target = excess > 0.0 ? excess / (1.0 - alpha.value) : 0.0;
    target = trunc.clamp(target);
    double r = z - target;
    return {r * r, 2.0 * r};
}

/// Joint VaR/ES loss with h1 = id, h2(z) = exp(-z):
///   (1-a)^-1 (y-v)^+ + v + h2'(z) (z - v - (1-a)^-1 (y-v)^+) - h2(z).
/// Exact partials; the pinball kink uses the same subgradient convention
/// as pinball_loss.
inline LossGrad2 joint_loss(double y, double v, double z, AlphaLevel alpha,
                            const JointLossSpec& /*spec*/) {
    double w = 1.0 / (1.0 - alpha.value);
    double excess = y - v;
    double pos = excess > 0.0 ? w * excess : 0.0;
    double indicator = excess > 0.0 ? 1.0 : 0.0;

    double h2 = std::exp(-z);
    double h2p = -h2;

    double loss = pos + v + h2p * (z - v - pos) - h2;
    double dv = (1.0 - w * indicator) * (1.0 - h2p);
    double dz = h2 * (z - v - pos);  // h2''(z) = exp(-z)
    return {loss, dv, dz};
}

/// Non-crossing penalty lambda * (-dq_dalpha)^+ and its derivative with
/// respect to the tangent (0 at the kink).
inline LossGrad1 crossing_penalty(double dq_dalpha, double lambda) {
    if (lambda < 0.0) throw DomainError("penalty weight must be >= 0");
    if (dq_dalpha < 0.0) {
        return {-lambda * dq_dalpha, -lambda};
    }
    return {0.0, 0.0};
}

}  // namespace riskquant
