#pragma once

/**
 * @file disentangle.hpp
 * @brief Monte Carlo split of predictive variance into aleatoric and
 *        epistemic parts.
 *
 * Given S first-order predictions (mu_s, sigma2_s) from posterior samples:
 *
 *   AU = (1/S) sum_s sigma2_s
 *   EU = (1/S) sum_s (mu_s - mu_bar)^2,   mu_bar = (1/S) sum_s mu_s
 *   TU = AU + EU
 *
 * TU equals the variance of the uniform mixture of N(mu_s, sigma2_s). EU uses
 * the divisor S (population variance), not S - 1.
 */

#include "varsplit/matrix.hpp"
#include "varsplit/nn.hpp"
#include "varsplit/posterior.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace varsplit {

/// Attached to every serialized decomposition.
inline constexpr std::string_view kBiasResidualNote =
    "tu = au + eu; the model-bias residual under misspecification is not estimated and is not included";

struct UncertaintyEstimate {
    double au = 0.0;
    double eu = 0.0;
    double tu = 0.0;
};

struct PointDecomposition {
    UncertaintyEstimate u;
    double mu_bar = 0.0;
};

/// Throws std::invalid_argument on an empty set or any sigma2 <= 0.
UncertaintyEstimate decompose(std::span<const GaussianPrediction> preds);
PointDecomposition decompose_with_mean(std::span<const GaussianPrediction> preds);

/// Draws S parameter samples once (from seed) and decomposes every input row
/// under the same samples, so row i equals
/// decompose(draw_predictions(fp, inputs.row(i), S, seed)).
std::vector<PointDecomposition> decompose_batch(const FittedPosterior& fp, const Matrix& inputs, std::size_t samples,
                                                std::uint64_t seed);

/// Columns: <input columns...>,mu_bar,au,eu,tu
void write_decomposition_csv(std::ostream& os, const Matrix& inputs, const std::vector<std::string>& input_names,
                             std::span<const PointDecomposition> rows);

} // namespace varsplit
