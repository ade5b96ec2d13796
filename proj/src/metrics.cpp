#include "varsplit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace varsplit {

double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw std::invalid_argument("mse: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("correlation: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("correlation: need at least two points");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("spearman: need at least two points");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

double quantile(std::span<const double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0,1]");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double interquartile_range(std::span<const double> v) { return quantile(v, 0.75) - quantile(v, 0.25); }

std::vector<double> hist2d_density(std::span<const double> ref_x, std::span<const double> ref_y,
                                   std::span<const double> query_x, std::span<const double> query_y,
                                   std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("hist2d: bin count must be positive");
    if (ref_x.size() != ref_y.size() || query_x.size() != query_y.size()) {
        throw std::invalid_argument("hist2d: coordinate length mismatch");
    }
    if (ref_x.empty()) throw std::invalid_argument("hist2d: no reference points");
    const auto [xmin, xmax] = std::minmax_element(ref_x.begin(), ref_x.end());
    const auto [ymin, ymax] = std::minmax_element(ref_y.begin(), ref_y.end());
    const double x0 = *xmin, y0 = *ymin;
    const double xw = *xmax > x0 ? *xmax - x0 : 1.0;
    const double yw = *ymax > y0 ? *ymax - y0 : 1.0;
    auto bin_of = [bins](double v, double lo, double width) -> std::size_t {
        const double t = (v - lo) / width * static_cast<double>(bins);
        if (!(t > 0.0)) return 0;
        return std::min(static_cast<std::size_t>(t), bins - 1);
    };
    std::vector<double> counts(bins * bins, 0.0);
    for (std::size_t i = 0; i < ref_x.size(); ++i) {
        counts[bin_of(ref_x[i], x0, xw) * bins + bin_of(ref_y[i], y0, yw)] += 1.0;
    }
    const double norm = static_cast<double>(ref_x.size());
    std::vector<double> density(query_x.size());
    for (std::size_t i = 0; i < query_x.size(); ++i) {
        density[i] = counts[bin_of(query_x[i], x0, xw) * bins + bin_of(query_y[i], y0, yw)] / norm;
    }
    return density;
}

std::vector<double> hist2d_density_rank(std::span<const double> x, std::span<const double> y, std::size_t bins) {
    return average_ranks(hist2d_density(x, y, x, y, bins));
}

} // namespace varsplit
