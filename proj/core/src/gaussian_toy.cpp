#include "riskquant/gaussian_toy.hpp"

#include <cmath>

#include "riskquant/errors.hpp"
#include "riskquant/normal.hpp"
#include "riskquant/parallel.hpp"

namespace riskquant {

Eigen::Index GaussianToySpec::basis_size(int d) {
    return 1 + d + static_cast<Eigen::Index>(d) * (d - 1) / 2;
}

void GaussianToySpec::validate() const {
    if (d < 1) throw InputError("toy model needs d >= 1");
    if (lambda.size() != basis_size(d) || mu.size() != basis_size(d)) {
        throw InputError("coefficient vectors must match the degree-2 basis size");
    }
}

namespace {
double eval_poly(const Eigen::VectorXd& c, const Eigen::VectorXd& x) {
    double v = c(0);
    const int d = static_cast<int>(x.size());
    for (int i = 0; i < d; ++i) v += c(1 + i) * x(i);
    Eigen::Index k = 1 + d;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            v += c(k++) * x(i) * x(j);
        }
    }
    return v;
}
}  // namespace

double GaussianToySpec::p1(const Eigen::VectorXd& x) const { return eval_poly(lambda, x); }
double GaussianToySpec::p2(const Eigen::VectorXd& x) const { return eval_poly(mu, x); }
double GaussianToySpec::stddev(const Eigen::VectorXd& x) const { return std::abs(p2(x)); }

GaussianToySpec toy_spec_sample(int d, Rng& rng) {
    if (d < 1) throw InputError("toy model needs d >= 1");
    GaussianToySpec spec;
    spec.d = d;
    Eigen::Index m = GaussianToySpec::basis_size(d);
    spec.lambda.resize(m);
    spec.mu.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) spec.lambda(i) = rng.normal();
    for (Eigen::Index i = 0; i < m; ++i) spec.mu(i) = rng.normal();
    return spec;
}

Dataset toy_generate(const GaussianToySpec& spec, Eigen::Index n, std::uint64_t seed,
                     bool twins) {
    spec.validate();
    if (n < 1) throw InputError("need n >= 1 rows");
    Dataset data;
    data.x.resize(n, spec.d);
    data.y.resize(n);
    if (twins) data.y_twin = Eigen::VectorXd(n);

    Rng base(derive_stream(seed, stream::kData));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Rng row = base.split(i);
        Eigen::VectorXd x(spec.d);
        for (int j = 0; j < spec.d; ++j) x(j) = row.normal();
        double m = spec.p1(x);
        double s = std::abs(spec.p2(x));
        data.x.row(i) = x.transpose();
        data.y(static_cast<Eigen::Index>(i)) = m + s * row.normal();
        if (twins) {
            (*data.y_twin)(static_cast<Eigen::Index>(i)) = m + s * row.normal();
        }
    });
    return data;
}

VarEs toy_var_es_closed(const GaussianToySpec& spec, const Eigen::VectorXd& x,
                        double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    double m = spec.p1(x);
    double s = spec.stddev(x);
    double q = norm_quantile(alpha);
    return {m + s * q, m + s * norm_pdf(q) / (1.0 - alpha)};
}

}  // namespace riskquant
