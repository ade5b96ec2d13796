#include "varsplit/data.hpp"

#include "varsplit/csv.hpp"
#include "varsplit/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace varsplit {

namespace {

std::vector<std::string> read_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: empty input, header row missing");
    return csv::split_line(line);
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    auto idx = csv::find_column(header, name);
    if (!idx) throw std::runtime_error("csv schema: missing required column '" + name + "'");
    return *idx;
}

double uniform_open(Rng& rng) {
    // (0, 1), never exactly 0
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

std::string to_string(SplitTag tag) {
    switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
    case SplitTag::unsplit: return "unsplit";
    }
    return "unsplit";
}

ColumnStats ColumnStats::fit_min_max(const std::vector<double>& values) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) throw std::invalid_argument("min-max: column has no finite values");
    if (hi == lo) hi = lo + 1.0;
    return ColumnStats{NormKind::min_max, lo, hi};
}

void RegressionDataset::validate() const {
    if (targets.empty()) throw std::invalid_argument("dataset: no samples");
    if (inputs.rows() != targets.size()) throw std::invalid_argument("dataset: input/target row mismatch");
    if (!input_stats.empty() && input_stats.size() != inputs.cols()) {
        throw std::invalid_argument("dataset: one normalization record per input column required");
    }
    if (!time_index.empty() && time_index.size() != targets.size()) {
        throw std::invalid_argument("dataset: time index length mismatch");
    }
    for (double v : inputs.data()) {
        if (std::isnan(v)) throw std::invalid_argument("dataset: NaN in inputs");
    }
    for (double v : targets) {
        if (std::isnan(v)) throw std::invalid_argument("dataset: NaN in targets");
    }
}

RegressionDataset RegressionDataset::select(const std::vector<std::size_t>& rows, SplitTag tag) const {
    RegressionDataset out;
    out.inputs = Matrix(0, inputs.cols());
    out.input_stats = input_stats;
    out.target_stats = target_stats;
    out.split = tag;
    out.provenance = provenance;
    out.targets.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= size()) throw std::out_of_range("dataset: row index out of range");
        out.inputs.append_row(inputs.row(r));
        out.targets.push_back(targets[r]);
        if (!time_index.empty()) out.time_index.push_back(time_index[r]);
    }
    return out;
}

// ---------------------------------------------------------------------------

void SyntheticSineSpec::validate() const {
    if (!(train_lo < train_hi) || !(test_lo < test_hi)) throw std::invalid_argument("sine: ranges must be ordered");
    if (n_train == 0 || n_test == 0) throw std::invalid_argument("sine: sample counts must be positive");
    if (!(noise_scale >= 0.0)) throw std::invalid_argument("sine: noise_scale must be nonnegative");
}

double sine_mean(double x) { return x * std::sin(x); }

double sample_sine_target(double x, double noise_scale, Rng& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    const double e1 = noise_scale * unit(rng);
    const double e2 = noise_scale * unit(rng);
    return sine_mean(x) + e1 * x + e2;
}

SinePair gen_sine(const SyntheticSineSpec& spec) {
    spec.validate();
    auto make = [&](double lo, double hi, std::size_t n, std::uint64_t stream, SplitTag tag) {
        Rng rng = make_rng(spec.seed, {stream});
        std::uniform_real_distribution<double> ux(lo, hi);
        RegressionDataset ds;
        ds.inputs = Matrix(n, 1);
        ds.targets.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = ux(rng);
            ds.inputs(i, 0) = x;
            ds.targets[i] = sample_sine_target(x, spec.noise_scale, rng);
        }
        ds.input_stats = {ColumnStats{}};
        ds.split = tag;
        ds.provenance = "heteroscedastic sine x*sin(x)+e1*x+e2, noise std " + csv::format(spec.noise_scale) +
                        ", seed " + std::to_string(spec.seed);
        return ds;
    };
    SinePair pair{make(spec.train_lo, spec.train_hi, spec.n_train, 1, SplitTag::train),
                  make(spec.test_lo, spec.test_hi, spec.n_test, 2, SplitTag::test)};
    if (spec.normalize_inputs) {
        // Train statistics applied to both splits; OOD test inputs land outside [0,1].
        const ColumnStats stats{NormKind::min_max, spec.train_lo, spec.train_hi};
        for (RegressionDataset* ds : {&pair.train, &pair.test}) {
            for (std::size_t i = 0; i < ds->size(); ++i) ds->inputs(i, 0) = stats.normalize(ds->inputs(i, 0));
            ds->input_stats = {stats};
        }
    }
    return pair;
}

// ---------------------------------------------------------------------------

ScadaSchema ScadaSchema::kaggle_turbine() {
    return ScadaSchema{"Date/Time", "Wind Speed (m/s)", "Wind Direction (°)", "LV ActivePower (kW)"};
}

void ScadaTable::push_back(std::string ts, double speed, double direction, double power) {
    timestamp.push_back(std::move(ts));
    wind_speed.push_back(speed);
    wind_direction.push_back(direction);
    active_power.push_back(power);
}

RawScada parse_scada_csv(std::istream& is, const ScadaSchema& schema) {
    const auto header = read_header(is);
    const std::size_t c_ts = require_column(header, schema.timestamp);
    const std::size_t c_speed = require_column(header, schema.wind_speed);
    const std::size_t c_dir = require_column(header, schema.wind_direction);
    const std::size_t c_power = require_column(header, schema.active_power);
    const std::size_t needed = std::max({c_ts, c_speed, c_dir, c_power}) + 1;

    RawScada raw;
    std::string line;
    std::size_t line_no = 1;
    std::size_t invalid = 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_line(line);
        ScadaRowFlags flags;
        double speed = nan, dir = nan, power = nan;
        std::string ts;
        if (fields.size() < needed) {
            flags.valid = false;
            raw.diagnostics.push_back("line " + std::to_string(line_no) + ": expected at least " +
                                      std::to_string(needed) + " fields, found " + std::to_string(fields.size()));
        } else {
            ts = fields[c_ts];
            const auto s = csv::parse_cell(fields[c_speed]);
            const auto d = csv::parse_cell(fields[c_dir]);
            const auto p = csv::parse_cell(fields[c_power]);
            if (!s || !d || !p) {
                flags.valid = false;
                raw.diagnostics.push_back("line " + std::to_string(line_no) + ": unparseable numeric field");
            } else {
                speed = *s;
                dir = *d;
                power = *p;
                flags.has_nan = std::isnan(speed) || std::isnan(dir) || std::isnan(power);
                flags.negative_power = power < 0.0;
            }
        }
        if (!flags.valid) ++invalid;
        raw.table.push_back(std::move(ts), speed, dir, power);
        raw.flags.push_back(flags);
    }
    if (raw.table.size() == 0) throw std::runtime_error("scada csv: no data rows");
    if (2 * invalid > raw.table.size()) {
        throw std::runtime_error("scada csv: " + std::to_string(invalid) + " of " + std::to_string(raw.table.size()) +
                                 " rows invalid (more than 50%); first problem: " + raw.diagnostics.front());
    }
    return raw;
}

RawScada load_scada_csv(const std::filesystem::path& path, const ScadaSchema& schema) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open SCADA file " + path.string());
    return parse_scada_csv(is, schema);
}

CleanScada preprocess_scada(const RawScada& raw) {
    const ScadaTable& t = raw.table;
    if (raw.flags.size() != t.size()) throw std::invalid_argument("preprocess: flags/table length mismatch");

    auto all_nan = [&](const std::vector<double>& col) {
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (raw.flags[i].valid && !std::isnan(col[i])) return false;
        }
        return true;
    };
    if (all_nan(t.wind_speed)) throw std::runtime_error("preprocess: wind_speed column is entirely NaN");
    if (all_nan(t.wind_direction)) throw std::runtime_error("preprocess: wind_direction column is entirely NaN");
    if (all_nan(t.active_power)) throw std::runtime_error("preprocess: active_power column is entirely NaN");

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double p = t.active_power[i];
        if (raw.flags[i].valid && !std::isnan(p) && p >= 0.0) {
            sum += p;
            ++count;
        }
    }
    const double replacement = count > 0 ? sum / static_cast<double>(count) : 0.0;

    CleanScada clean;
    clean.replacement_value = replacement;
    ScadaTable kept;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double p = t.active_power[i];
        const double s = t.wind_speed[i];
        const double d = t.wind_direction[i];
        if (!raw.flags[i].valid || std::isnan(p) || std::isnan(s) || std::isnan(d)) {
            ++clean.dropped_rows;
            continue;
        }
        if (p < 0.0) {
            p = replacement;
            ++clean.replaced_negatives;
        }
        kept.push_back(t.timestamp[i], s, d, p);
    }
    if (kept.size() == 0) throw std::runtime_error("preprocess: no rows left after dropping NaN/invalid rows");

    clean.speed_stats = ColumnStats::fit_min_max(kept.wind_speed);
    clean.direction_stats = ColumnStats::fit_min_max(kept.wind_direction);
    clean.power_stats = ColumnStats::fit_min_max(kept.active_power);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        kept.wind_speed[i] = clean.speed_stats.normalize(kept.wind_speed[i]);
        kept.wind_direction[i] = clean.direction_stats.normalize(kept.wind_direction[i]);
        kept.active_power[i] = clean.power_stats.normalize(kept.active_power[i]);
    }
    clean.table = std::move(kept);
    return clean;
}

CleanScada preprocess_scada(const ScadaTable& table) {
    RawScada raw;
    raw.table = table;
    raw.flags.resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        raw.flags[i].has_nan = std::isnan(table.wind_speed[i]) || std::isnan(table.wind_direction[i]) ||
                               std::isnan(table.active_power[i]);
        raw.flags[i].negative_power = table.active_power[i] < 0.0;
    }
    return preprocess_scada(raw);
}

RegressionDataset window_scada(const CleanScada& clean, std::size_t lags) {
    const ScadaTable& t = clean.table;
    if (lags == 0) throw std::invalid_argument("window_scada: lags must be positive");
    if (t.size() < lags + 1) {
        throw std::invalid_argument("window_scada: series of " + std::to_string(t.size()) + " rows is too short for " +
                                    std::to_string(lags) + " lags");
    }
    const std::size_t width = 3 * lags + 2;
    RegressionDataset ds;
    ds.inputs = Matrix(t.size() - lags, width);
    ds.targets.resize(t.size() - lags);
    ds.time_index.resize(t.size() - lags);
    for (std::size_t t_now = lags; t_now < t.size(); ++t_now) {
        const std::size_t r = t_now - lags;
        auto row = ds.inputs.row(r);
        std::size_t c = 0;
        for (std::size_t k = lags; k >= 1; --k) {
            row[c++] = t.wind_speed[t_now - k];
            row[c++] = t.wind_direction[t_now - k];
            row[c++] = t.active_power[t_now - k];
        }
        row[c++] = t.wind_speed[t_now];
        row[c++] = t.wind_direction[t_now];
        ds.targets[r] = t.active_power[t_now];
        ds.time_index[r] = t_now;
    }
    ds.input_stats.reserve(width);
    for (std::size_t k = 0; k < lags; ++k) {
        ds.input_stats.push_back(clean.speed_stats);
        ds.input_stats.push_back(clean.direction_stats);
        ds.input_stats.push_back(clean.power_stats);
    }
    ds.input_stats.push_back(clean.speed_stats);
    ds.input_stats.push_back(clean.direction_stats);
    ds.target_stats = clean.power_stats;
    ds.provenance = "SCADA window, lags " + std::to_string(lags);
    return ds;
}

ChronoSplit split_chronological(const RegressionDataset& data, double train_part, double val_part,
                                double test_part) {
    if (!(train_part > 0 && val_part > 0 && test_part > 0)) {
        throw std::invalid_argument("split: proportions must be positive");
    }
    const double total = train_part + val_part + test_part;
    const std::size_t n = data.size();
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_part / total));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_part / total));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw std::invalid_argument("split: " + std::to_string(n) + " samples are too few for a non-empty " +
                                    "train/val/test split");
    }
    std::vector<std::size_t> a(n_train), b(n_val), c(n - n_train - n_val);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), n_train);
    std::iota(c.begin(), c.end(), n_train + n_val);
    return ChronoSplit{data.select(a, SplitTag::train), data.select(b, SplitTag::val), data.select(c, SplitTag::test)};
}

// ---------------------------------------------------------------------------

HourlySeries parse_hourly_csv(std::istream& is, const std::string& value_column, const std::string& timestamp_column) {
    const auto header = read_header(is);
    const std::size_t c_val = require_column(header, value_column);
    const auto c_ts = csv::find_column(header, timestamp_column);
    HourlySeries series;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_line(line);
        double v = std::numeric_limits<double>::quiet_NaN();
        if (c_val < fields.size()) {
            const auto parsed = csv::parse_cell(fields[c_val]);
            if (!parsed) throw std::runtime_error("hourly csv line " + std::to_string(line_no) + ": bad value");
            v = *parsed;
        }
        series.value.push_back(v);
        series.timestamp.push_back(c_ts && *c_ts < fields.size() ? fields[*c_ts] : std::to_string(line_no - 2));
    }
    if (series.value.empty()) throw std::runtime_error("hourly csv: no data rows");
    return series;
}

HourlySeries load_hourly_csv(const std::filesystem::path& path, const std::string& value_column,
                             const std::string& timestamp_column) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open hourly series " + path.string());
    return parse_hourly_csv(is, value_column, timestamp_column);
}

CleanSeries preprocess_series(const HourlySeries& series) {
    CleanSeries out;
    for (std::size_t i = 0; i < series.value.size(); ++i) {
        if (std::isnan(series.value[i])) continue;
        out.values.push_back(series.value[i]);
        out.source_index.push_back(i);
    }
    if (out.values.empty()) throw std::runtime_error("preprocess_series: series is entirely NaN");
    out.stats = ColumnStats::fit_min_max(out.values);
    for (double& v : out.values) v = out.stats.normalize(v);
    return out;
}

RegressionDataset window_univariate(const CleanSeries& series, std::size_t lags) {
    const auto& v = series.values;
    if (lags == 0) throw std::invalid_argument("window_univariate: lags must be positive");
    if (v.size() < lags + 1) {
        throw std::invalid_argument("window_univariate: series of " + std::to_string(v.size()) +
                                    " points is too short for " + std::to_string(lags) + " lags");
    }
    RegressionDataset ds;
    ds.inputs = Matrix(v.size() - lags, lags);
    ds.targets.resize(v.size() - lags);
    ds.time_index.resize(v.size() - lags);
    for (std::size_t t = lags; t < v.size(); ++t) {
        const std::size_t r = t - lags;
        for (std::size_t k = 0; k < lags; ++k) ds.inputs(r, k) = v[t - lags + k];
        ds.targets[r] = v[t];
        ds.time_index[r] = series.source_index.empty() ? t : series.source_index[t];
    }
    ds.input_stats.assign(lags, series.stats);
    ds.target_stats = series.stats;
    ds.provenance = "univariate window, lags " + std::to_string(lags);
    return ds;
}

TrainTestSplit split_recent(const RegressionDataset& data, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("split_recent: test fraction must lie in (0,1)");
    }
    const std::size_t n = data.size();
    const auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction));
    if (n_test == 0 || n_test >= n) throw std::invalid_argument("split_recent: too few samples to split");
    std::vector<std::size_t> a(n - n_test), b(n_test);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), n - n_test);
    return TrainTestSplit{data.select(a, SplitTag::train), data.select(b, SplitTag::test)};
}

RegressionDataset subsample(const RegressionDataset& train, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("subsample: ratio must lie in (0,1]");
    const std::size_t n = train.size();
    const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (k == 0) throw std::invalid_argument("subsample: ratio yields an empty training set");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed, {0x5b5});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    RegressionDataset out = train.select(idx, train.split);
    out.provenance = train.provenance + "; subsample ratio " + csv::format(ratio) + " seed " + std::to_string(seed);
    return out;
}

// ---------------------------------------------------------------------------

void PowerCurveSpec::validate() const {
    if (!(cut_in > 0.0 && cut_in < rated_speed)) throw std::invalid_argument("power curve: need 0 < cut_in < rated_speed");
    if (!(rated_power > 0.0)) throw std::invalid_argument("power curve: rated_power must be positive");
    if (!(weibull_shape > 0.0 && weibull_scale > 0.0)) throw std::invalid_argument("power curve: bad Weibull parameters");
    if (!(autocorrelation >= 0.0 && autocorrelation < 1.0)) {
        throw std::invalid_argument("power curve: autocorrelation must lie in [0,1)");
    }
    if (!(noise_floor >= 0.0 && noise_peak >= 0.0)) throw std::invalid_argument("power curve: noise must be nonnegative");
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 0.2)) {
        throw std::invalid_argument("power curve: outlier_fraction must lie in [0, 0.2)");
    }
}

double power_curve(const PowerCurveSpec& spec, double speed) {
    if (speed < spec.cut_in) return 0.0;
    if (speed >= spec.rated_speed) return spec.rated_power;
    const double c3 = spec.cut_in * spec.cut_in * spec.cut_in;
    const double r3 = spec.rated_speed * spec.rated_speed * spec.rated_speed;
    return spec.rated_power * (speed * speed * speed - c3) / (r3 - c3);
}

double power_noise_std(const PowerCurveSpec& spec, double speed) {
    const double t = std::clamp((speed - spec.cut_in) / (spec.rated_speed - spec.cut_in), 0.0, 1.0);
    return spec.rated_power * (spec.noise_floor + (spec.noise_peak - spec.noise_floor) * t);
}

namespace {

struct WindDraw {
    double speed;
    double direction;
};

class WindProcess {
public:
    explicit WindProcess(const PowerCurveSpec& spec)
        : spec_(spec), rng_(make_rng(spec.seed, {0x3c1})), state_(0.0), direction_(180.0) {
        state_ = unit_(rng_);
    }

    WindDraw next() {
        const double phi = spec_.autocorrelation;
        state_ = phi * state_ + std::sqrt(1.0 - phi * phi) * unit_(rng_);
        // Upper tail of N(0,1) mapped through the Weibull quantile.
        const double tail = std::max(0.5 * std::erfc(state_ / std::sqrt(2.0)), 1e-300);
        const double speed = spec_.weibull_scale * std::pow(-std::log(tail), 1.0 / spec_.weibull_shape);
        direction_ = std::fmod(direction_ + spec_.direction_step * unit_(rng_) + 360.0, 360.0);
        return {speed, direction_};
    }

    double power_at(double speed) {
        const double noise = unit_(rng_);
        const double u_out = uniform_open(rng_);
        const double scale = uniform_open(rng_);
        double p = power_curve(spec_, speed) + power_noise_std(spec_, speed) * noise;
        if (u_out < spec_.outlier_fraction) p = power_curve(spec_, speed) * 0.5 * scale;
        return std::max(p, 0.0);
    }

private:
    const PowerCurveSpec& spec_;
    Rng rng_;
    std::normal_distribution<double> unit_{0.0, 1.0};
    double state_;
    double direction_;
};

std::string stamp(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%07zu", prefix, i);
    return buf;
}

} // namespace

ScadaTable gen_power_curve(const PowerCurveSpec& spec, std::size_t rows) {
    spec.validate();
    WindProcess process(spec);
    ScadaTable table;
    for (std::size_t i = 0; i < rows; ++i) {
        const WindDraw w = process.next();
        table.push_back(stamp('t', i), w.speed, w.direction, process.power_at(w.speed));
    }
    return table;
}

HourlySeries gen_hourly_series(const PowerCurveSpec& spec, std::size_t hours) {
    spec.validate();
    WindProcess process(spec);
    HourlySeries series;
    for (std::size_t i = 0; i < hours; ++i) {
        const WindDraw w = process.next();
        series.timestamp.push_back(stamp('h', i));
        series.value.push_back(process.power_at(w.speed) / spec.rated_power);
    }
    return series;
}

// ---------------------------------------------------------------------------

DatasetFingerprint fingerprint(const RegressionDataset& data) {
    std::string text;
    auto add = [&](const ColumnStats& s) {
        text += s.kind == NormKind::none ? "none" : "minmax";
        text += ' ' + textio::format_exact(s.lo) + ' ' + textio::format_exact(s.hi) + ';';
    };
    for (const auto& s : data.input_stats) add(s);
    add(data.target_stats);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return DatasetFingerprint{data.size(), data.input_dim(), buf};
}

void write_dataset_snapshot(const RegressionDataset& data, const std::filesystem::path& csv_path,
                            const std::filesystem::path& sidecar_path,
                            const std::map<std::string, std::string>& metadata) {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write " + csv_path.string());
    std::vector<std::string> header;
    for (std::size_t c = 0; c < data.input_dim(); ++c) header.push_back("x" + std::to_string(c));
    header.push_back("y");
    os << csv::join(header) << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        std::vector<std::string> fields;
        for (double v : data.inputs.row(r)) fields.push_back(csv::format(v));
        fields.push_back(csv::format(data.targets[r]));
        os << csv::join(fields) << '\n';
    }

    nlohmann::ordered_json side;
    side["rows"] = data.size();
    side["cols"] = data.input_dim();
    side["split"] = to_string(data.split);
    side["provenance"] = data.provenance;
    auto stats_json = [](const ColumnStats& s) {
        return nlohmann::ordered_json{{"kind", s.kind == NormKind::none ? "none" : "min_max"}, {"lo", s.lo}, {"hi", s.hi}};
    };
    side["target_stats"] = stats_json(data.target_stats);
    side["input_stats"] = nlohmann::ordered_json::array();
    for (const auto& s : data.input_stats) side["input_stats"].push_back(stats_json(s));
    for (const auto& [k, v] : metadata) side["metadata"][k] = v;
    std::ofstream js(sidecar_path);
    if (!js) throw std::runtime_error("cannot write " + sidecar_path.string());
    js << side.dump(2) << '\n';
}

} // namespace varsplit
