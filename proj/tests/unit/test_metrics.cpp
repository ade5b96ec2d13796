#include <doctest.h>

#include "varsplit/metrics.hpp"
#include "varsplit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace varsplit;

namespace {

// Rank by counting: rank = 1 + #less + (#equal - 1) / 2.
std::vector<double> brute_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0.0, equal = 0.0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

double brute_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_CASE("spearman on monotone inputs") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 6, 8, 10};
    const std::vector<double> down{5, 4, 3, 2, 1};
    CHECK(*spearman(a, up) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*spearman(a, down) == doctest::Approx(-1.0).epsilon(1e-15));
    const std::vector<double> cubic{1, 8, 27, 64, 125};
    CHECK(*spearman(a, cubic) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("spearman matches a brute-force rank Pearson") {
    Rng rng(12);
    std::uniform_int_distribution<int> ui(0, 6);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t len = 3 + trial % 40;
        std::vector<double> a(len), b(len);
        for (std::size_t i = 0; i < len; ++i) {
            a[i] = trial % 2 ? static_cast<double>(ui(rng)) : n(rng); // ties on odd trials
            b[i] = n(rng) + 0.5 * a[i];
        }
        if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; })) continue;
        CHECK(average_ranks(a) == brute_ranks(a));
        const auto s = spearman(a, b);
        REQUIRE(s.has_value());
        CHECK(*s == doctest::Approx(brute_pearson(brute_ranks(a), brute_ranks(b))).epsilon(1e-12));
    }
}

TEST_CASE("spearman edge cases") {
    const std::vector<double> c{3, 3, 3};
    const std::vector<double> x{1, 2, 3};
    CHECK_FALSE(spearman(c, x).has_value());
    CHECK_FALSE(pearson(x, c).has_value());
    const std::vector<double> one{1};
    CHECK_THROWS_AS(spearman(one, one), std::invalid_argument);
    const std::vector<double> two{1, 2};
    CHECK_THROWS_AS(spearman(x, two), std::invalid_argument);
}

TEST_CASE("mse and mean") {
    const std::vector<double> p{1.0, 2.0, 3.0};
    CHECK(mse(p, p) == 0.0);
    const std::vector<double> t{2.0, 2.0, 5.0};
    CHECK(mse(p, t) == doctest::Approx(5.0 / 3.0));
    CHECK(mean(p) == 2.0);
    CHECK_THROWS_AS(mse(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("quantiles use linear interpolation") {
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == 2.5);
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(interquartile_range(v) == doctest::Approx(3.25 - 1.75));
    const std::vector<double> seq{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(interquartile_range(seq) == 4.0);
    CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("hist2d density counts reference points per bin") {
    // 2 x 2 bins over [0,1]^2; three points in the lower-left cell, one in the upper right.
    const std::vector<double> rx{0.0, 0.1, 0.2, 1.0};
    const std::vector<double> ry{0.0, 0.2, 0.1, 1.0};
    const std::vector<double> qx{0.05, 0.9, 0.9};
    const std::vector<double> qy{0.05, 0.9, 0.1};
    const auto d = hist2d_density(rx, ry, qx, qy, 2);
    CHECK(d[0] == 0.75);
    CHECK(d[1] == 0.25);
    CHECK(d[2] == 0.0);
    const auto r = hist2d_density_rank(rx, ry, 2);
    CHECK(r == std::vector<double>{3.0, 3.0, 3.0, 1.0});
    CHECK_THROWS_AS(hist2d_density(rx, ry, qx, qy, 0), std::invalid_argument);
    CHECK_THROWS_AS(hist2d_density(rx, qy, qx, qy, 2), std::invalid_argument);
}
