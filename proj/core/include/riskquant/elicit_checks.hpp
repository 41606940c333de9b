#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace riskquant {

/// One brute-force elicitability assertion: `deviation` against its
/// tolerance (usually one grid cell).
struct ElicitCheck {
    std::string name;
    double deviation;
    double tolerance;
    bool pass;
};

/// The full battery over discrete, uniform and Gaussian laws: quantile
/// minimizers, ES-given-VaR minimizers, the joint minimizer, the
/// scaled-loss minimum identity and the tail-average quadrature.
std::vector<ElicitCheck> elicitability_checks(std::uint64_t seed);

}  // namespace riskquant
