#pragma once

/**
 * @file data.hpp
 * @brief Datasets, synthetic generators, SCADA / hourly-series ingestion,
 *        preprocessing, lag windowing, splitting and subsampling.
 *
 * Normalization convention is min-max to [0,1] with the statistics kept on the
 * dataset so that values can be mapped back to physical units.
 */

#include "varsplit/matrix.hpp"
#include "varsplit/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace varsplit {

enum class SplitTag { train, val, test, unsplit };
std::string to_string(SplitTag tag);

enum class NormKind { none, min_max };

struct ColumnStats {
    NormKind kind = NormKind::none;
    double lo = 0.0;
    double hi = 1.0;

    /// Min-max statistics of values (NaNs ignored). A constant column maps to 0.
    static ColumnStats fit_min_max(const std::vector<double>& values);

    double normalize(double v) const { return kind == NormKind::none ? v : (v - lo) / (hi - lo); }
    double denormalize(double v) const { return kind == NormKind::none ? v : v * (hi - lo) + lo; }

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct RegressionDataset {
    Matrix inputs;
    std::vector<double> targets;
    std::vector<ColumnStats> input_stats;
    ColumnStats target_stats;
    SplitTag split = SplitTag::unsplit;
    std::string provenance;
    /// For time-series data: source row of each sample's target.
    std::vector<std::size_t> time_index;

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t input_dim() const noexcept { return inputs.cols(); }

    /// N > 0, consistent shapes, no NaN anywhere.
    void validate() const;
    RegressionDataset select(const std::vector<std::size_t>& rows, SplitTag tag) const;
};

// ---------------------------------------------------------------------------
// Heteroscedastic sine: y = x sin(x) + e1 x + e2, e1, e2 ~ N(0, noise_scale^2)

struct SyntheticSineSpec {
    double train_lo = 0.0;
    double train_hi = 10.0;
    double test_lo = 10.0;
    double test_hi = 15.0;
    std::size_t n_train = 1000;
    std::size_t n_test = 200;
    double noise_scale = 0.3; // standard deviation of both noise terms
    std::uint64_t seed = 0;
    bool normalize_inputs = false;

    void validate() const;
};

struct SinePair {
    RegressionDataset train;
    RegressionDataset test;
};

double sine_mean(double x);
double sample_sine_target(double x, double noise_scale, Rng& rng);
SinePair gen_sine(const SyntheticSineSpec& spec);

// ---------------------------------------------------------------------------
// SCADA telemetry

/// Header names of the four required CSV columns.
struct ScadaSchema {
    std::string timestamp = "timestamp";
    std::string wind_speed = "wind_speed";
    std::string wind_direction = "wind_direction";
    std::string active_power = "active_power";

    /// Column names of the public Kaggle turbine SCADA export.
    static ScadaSchema kaggle_turbine();
};

struct ScadaTable {
    std::vector<std::string> timestamp;
    std::vector<double> wind_speed;
    std::vector<double> wind_direction;
    std::vector<double> active_power;

    std::size_t size() const noexcept { return timestamp.size(); }
    void push_back(std::string ts, double speed, double direction, double power);

    friend bool operator==(const ScadaTable&, const ScadaTable&) = default;
};

struct ScadaRowFlags {
    bool valid = true;
    bool negative_power = false;
    bool has_nan = false;
};

struct RawScada {
    ScadaTable table;
    std::vector<ScadaRowFlags> flags;
    std::vector<std::string> diagnostics;
};

/// Parses rows without modifying values. Throws on schema errors or when more
/// than half of the rows are unparseable.
RawScada parse_scada_csv(std::istream& is, const ScadaSchema& schema = {});
RawScada load_scada_csv(const std::filesystem::path& path, const ScadaSchema& schema = {});

struct CleanScada {
    ScadaTable table; // normalized to [0,1]
    ColumnStats speed_stats;
    ColumnStats direction_stats;
    ColumnStats power_stats;
    std::size_t dropped_rows = 0;
    std::size_t replaced_negatives = 0;
    double replacement_value = 0.0;
};

/// Negative power -> mean of the nonnegative power entries; rows with NaN (or
/// flagged invalid) dropped; min-max normalization per column.
CleanScada preprocess_scada(const RawScada& raw);
CleanScada preprocess_scada(const ScadaTable& table);

/// Features per sample: for k = lags..1 (oldest first) speed, direction and
/// power at t-k, then speed and direction at t. Target: power at t.
RegressionDataset window_scada(const CleanScada& clean, std::size_t lags = 10);

/// Index of the current wind-speed feature in a window_scada row.
inline std::size_t current_speed_column(std::size_t lags) { return 3 * lags; }

struct ChronoSplit {
    RegressionDataset train;
    RegressionDataset val;
    RegressionDataset test;
};

/// Chronological split in the given proportions; train and val sizes are
/// floored, the remainder goes to test.
ChronoSplit split_chronological(const RegressionDataset& data, double train_part = 9.0, double val_part = 1.0,
                                double test_part = 1.0);

// ---------------------------------------------------------------------------
// Univariate hourly series

struct HourlySeries {
    std::vector<std::string> timestamp;
    std::vector<double> value;
};

HourlySeries parse_hourly_csv(std::istream& is, const std::string& value_column = "power",
                              const std::string& timestamp_column = "timestamp");
HourlySeries load_hourly_csv(const std::filesystem::path& path, const std::string& value_column = "power",
                             const std::string& timestamp_column = "timestamp");

struct CleanSeries {
    std::vector<double> values; // normalized
    std::vector<std::size_t> source_index;
    ColumnStats stats;
};

CleanSeries preprocess_series(const HourlySeries& series);

RegressionDataset window_univariate(const CleanSeries& series, std::size_t lags = 24);

struct TrainTestSplit {
    RegressionDataset train;
    RegressionDataset test;
};

/// Reserves the most recent ceil(test_fraction * N) samples as the test set.
TrainTestSplit split_recent(const RegressionDataset& data, double test_fraction = 0.1);

/// Uniform subset without replacement of size round(ratio * N), in draw order.
RegressionDataset subsample(const RegressionDataset& train, double ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Power-curve surrogate for SCADA-like data

struct PowerCurveSpec {
    double cut_in = 3.0;        // m/s
    double rated_speed = 12.0;  // m/s
    double rated_power = 2000.0;
    double weibull_shape = 2.0; // marginal wind-speed distribution
    double weibull_scale = 7.5; // m/s
    double autocorrelation = 0.85;
    double noise_floor = 0.01;  // noise std / rated_power at and below cut-in
    double noise_peak = 0.06;   // noise std / rated_power at and above rated speed
    double outlier_fraction = 0.03;
    double direction_step = 8.0; // degrees, random-walk step std
    std::uint64_t seed = 0;

    void validate() const;
};

/// 0 below cut-in, cubic ramp to rated power, flat above rated speed.
double power_curve(const PowerCurveSpec& spec, double speed);

/// Noise std (physical units) at a given wind speed.
double power_noise_std(const PowerCurveSpec& spec, double speed);

/// Wind speed follows a Gaussian AR(1) process mapped through the Weibull
/// quantile function, so the marginal is Weibull(shape, scale). Power is the
/// curve plus heteroscedastic noise, clipped at 0; outliers are scaled down
/// to 0-50% of the curve value (curtailment-like points).
ScadaTable gen_power_curve(const PowerCurveSpec& spec, std::size_t rows);

/// Hourly capacity-factor series (power / rated_power) from the same process.
HourlySeries gen_hourly_series(const PowerCurveSpec& spec, std::size_t hours);

// ---------------------------------------------------------------------------

struct DatasetFingerprint {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string stats_hash; // FNV-1a over the exact-encoded normalization stats
};

DatasetFingerprint fingerprint(const RegressionDataset& data);

/// Writes inputs and target as CSV plus a JSON sidecar with normalization
/// stats and caller-supplied metadata (split boundaries, seeds).
void write_dataset_snapshot(const RegressionDataset& data, const std::filesystem::path& csv_path,
                            const std::filesystem::path& sidecar_path,
                            const std::map<std::string, std::string>& metadata = {});

} // namespace varsplit
