#pragma once

#include <Eigen/Core>

#include "riskquant/dataset.hpp"
#include "riskquant/rng.hpp"

namespace riskquant {

/// Conditionally Gaussian ground-truth model: X ~ N(0, I_d) and
/// Y | X ~ N(P1(X), |P2(X)|^2), with P1 and P2 degree-2 polynomials over
/// the monomial basis {1, x_i, x_i x_j (i < j)}.
struct GaussianToySpec {
    int d = 0;
    Eigen::VectorXd lambda;  // P1 coefficients
    Eigen::VectorXd mu;      // P2 coefficients

    static Eigen::Index basis_size(int d);
    void validate() const;

    double p1(const Eigen::VectorXd& x) const;
    double p2(const Eigen::VectorXd& x) const;
    double mean(const Eigen::VectorXd& x) const { return p1(x); }
    double stddev(const Eigen::VectorXd& x) const;
};

/// Spec with all coefficients drawn i.i.d. standard normal.
GaussianToySpec toy_spec_sample(int d, Rng& rng);

/// n rows of (X, Y); with twins, Y_twin shares the X row but uses an
/// independent innovation. Row i is generated from the substream
/// split(seed, i), so generation order and thread split do not matter.
Dataset toy_generate(const GaussianToySpec& spec, Eigen::Index n, std::uint64_t seed,
                     bool twins);

struct VarEs {
    double var;
    double es;
};

/// Closed-form conditional VaR and ES of the toy model:
/// VaR = mu + sigma * Phi^-1(alpha), ES = mu + sigma * phi(Phi^-1(alpha)) / (1 - alpha).
VarEs toy_var_es_closed(const GaussianToySpec& spec, const Eigen::VectorXd& x,
                        double alpha);

}  // namespace riskquant
