#pragma once

#include <optional>
#include <span>
#include <vector>

namespace varsplit {

double mean(std::span<const double> v);
double mse(std::span<const double> predictions, std::span<const double> targets);

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation; std::nullopt when either input is constant.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average ranks. std::nullopt (undefined) for a
/// constant input. Throws on length mismatch or fewer than two points.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation quantile (the "type 7" rule), q in [0,1].
double quantile(std::span<const double> v, double q);
double interquartile_range(std::span<const double> v);

/// Joint density of query points under a bins x bins histogram of the
/// reference points; both coordinates are min-max scaled by the reference
/// range and points on the upper edge fall into the last bin.
std::vector<double> hist2d_density(std::span<const double> ref_x, std::span<const double> ref_y,
                                   std::span<const double> query_x, std::span<const double> query_y,
                                   std::size_t bins);

/// average_ranks of hist2d_density evaluated at the reference points themselves.
std::vector<double> hist2d_density_rank(std::span<const double> x, std::span<const double> y, std::size_t bins);

} // namespace varsplit
