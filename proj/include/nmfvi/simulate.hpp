#pragma once

#include <cstdint>

#include "nmfvi/glm.hpp"

namespace nmfvi {

/// beta* with iid prior coordinates (standard normal for the Gaussian prior),
/// drawn from the signal stream.
Vector draw_beta(const PriorSpec& prior, Eigen::Index p, std::uint64_t seed);

/// Responses given theta = X beta, drawn from the response stream:
/// linear N(theta, 1), logistic Bernoulli(sigmoid(theta)), binomial Bin(N, sigmoid(theta)).
Vector draw_response(const GlmFamily& family, const Vector& theta, std::uint64_t seed);

}  // namespace nmfvi
