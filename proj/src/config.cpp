#include "varsplit/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace varsplit {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
    return d;
}

std::uint64_t to_u64(const std::string& v) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw std::invalid_argument("expected a nonnegative integer, got '" + v + "'");
    }
    return std::stoull(v);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(item));
    if (out.empty()) throw std::invalid_argument("expected a non-empty list");
    return out;
}

std::pair<double, double> to_range(const std::string& v) {
    const auto xs = to_doubles(v);
    if (xs.size() != 2) throw std::invalid_argument("expected two values 'lo, hi'");
    return {xs[0], xs[1]};
}

template <class T>
std::string join_values(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            out += fmt(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

SamplerPlan plan(SamplerKind kind, std::vector<double> betas, std::size_t epochs, LearningRateSchedule lr,
                 std::size_t samples) {
    SamplerPlan p;
    p.kind = kind;
    p.betas = std::move(betas);
    p.epochs = epochs;
    p.batch_size = 128;
    p.lr = lr;
    p.samples = samples;
    return p;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using PlanSetter = std::function<void(SamplerPlan&, const std::string&)>;

const std::map<std::string, PlanSetter>& plan_setters() {
    static const std::map<std::string, PlanSetter> setters = {
        {"betas", [](SamplerPlan& p, const std::string& v) { p.betas = to_doubles(v); }},
        {"beta", [](SamplerPlan& p, const std::string& v) { p.betas = to_doubles(v); }},
        {"epochs", [](SamplerPlan& p, const std::string& v) { p.epochs = to_u64(v); }},
        {"batch_size", [](SamplerPlan& p, const std::string& v) { p.batch_size = to_u64(v); }},
        {"lr",
         [](SamplerPlan& p, const std::string& v) {
             const auto xs = to_doubles(v);
             if (xs.size() != 3) throw std::invalid_argument("lr expects 'initial_rate, decay_step, decay_factor'");
             if (xs[1] < 1.0 || xs[1] != static_cast<double>(static_cast<std::size_t>(xs[1]))) {
                 throw std::invalid_argument("lr decay step must be a positive integer");
             }
             p.lr = LearningRateSchedule{xs[0], static_cast<std::size_t>(xs[1]), xs[2]};
         }},
        {"optimizer", [](SamplerPlan& p, const std::string& v) { p.optimizer = parse_optimizer(v); }},
        {"samples", [](SamplerPlan& p, const std::string& v) { p.samples = to_u64(v); }},
        {"drop_rate", [](SamplerPlan& p, const std::string& v) { p.drop_rate = to_double(v); }},
        {"kl_weight",
         [](SamplerPlan& p, const std::string& v) {
             if (v == "auto") {
                 p.kl_weight.reset();
                 return;
             }
             // "1/316" is accepted as well as a plain number
             const auto slash = v.find('/');
             p.kl_weight = slash == std::string::npos
                               ? to_double(v)
                               : to_double(trim(v.substr(0, slash))) / to_double(trim(v.substr(slash + 1)));
         }},
        {"initial_rho", [](SamplerPlan& p, const std::string& v) { p.initial_rho = to_double(v); }},
    };
    return setters;
}

const std::map<std::string, Setter>& global_setters() {
    static const std::map<std::string, Setter> setters = {
        {"experiment", [](ExperimentConfig&, const std::string&) {}},
        {"samplers", [](ExperimentConfig&, const std::string&) {}},
        {"seeds",
         [](ExperimentConfig& c, const std::string& v) {
             c.seeds.clear();
             for (const auto& s : split_list(v)) c.seeds.push_back(to_u64(s));
         }},
        {"hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.hidden.clear();
             for (const auto& s : split_list(v)) c.hidden.push_back(to_u64(s));
         }},
        {"activation", [](ExperimentConfig& c, const std::string& v) { c.activation = parse_activation(v); }},
        {"variance_floor", [](ExperimentConfig& c, const std::string& v) { c.variance_floor = to_double(v); }},
        {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
        {"save_posteriors", [](ExperimentConfig& c, const std::string& v) { c.save_posteriors = to_bool(v); }},
        {"write_snapshot", [](ExperimentConfig& c, const std::string& v) { c.write_snapshot = to_bool(v); }},
        {"threads", [](ExperimentConfig& c, const std::string& v) { c.threads = to_u64(v); }},
        {"n_train", [](ExperimentConfig& c, const std::string& v) { c.sine.n_train = to_u64(v); }},
        {"n_test", [](ExperimentConfig& c, const std::string& v) { c.sine.n_test = to_u64(v); }},
        {"noise_scale", [](ExperimentConfig& c, const std::string& v) { c.sine.noise_scale = to_double(v); }},
        {"train_range",
         [](ExperimentConfig& c, const std::string& v) { std::tie(c.sine.train_lo, c.sine.train_hi) = to_range(v); }},
        {"test_range",
         [](ExperimentConfig& c, const std::string& v) { std::tie(c.sine.test_lo, c.sine.test_hi) = to_range(v); }},
        {"normalize_inputs", [](ExperimentConfig& c, const std::string& v) { c.sine.normalize_inputs = to_bool(v); }},
        {"grid_points", [](ExperimentConfig& c, const std::string& v) { c.grid_points = to_u64(v); }},
        {"grid_range", [](ExperimentConfig& c, const std::string& v) { std::tie(c.grid_lo, c.grid_hi) = to_range(v); }},
        {"dataset",
         [](ExperimentConfig& c, const std::string& v) {
             if (v.empty()) {
                 c.dataset.reset();
             } else {
                 c.dataset = v;
             }
         }},
        {"surrogate", [](ExperimentConfig& c, const std::string& v) { c.surrogate = to_bool(v); }},
        {"surrogate_rows", [](ExperimentConfig& c, const std::string& v) { c.surrogate_rows = to_u64(v); }},
        {"lags", [](ExperimentConfig& c, const std::string& v) { c.lags = to_u64(v); }},
        {"power_curve.cut_in", [](ExperimentConfig& c, const std::string& v) { c.power_curve.cut_in = to_double(v); }},
        {"power_curve.rated_speed",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.rated_speed = to_double(v); }},
        {"power_curve.rated_power",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.rated_power = to_double(v); }},
        {"power_curve.weibull_shape",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.weibull_shape = to_double(v); }},
        {"power_curve.weibull_scale",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.weibull_scale = to_double(v); }},
        {"power_curve.autocorrelation",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.autocorrelation = to_double(v); }},
        {"power_curve.noise_floor",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.noise_floor = to_double(v); }},
        {"power_curve.noise_peak",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.noise_peak = to_double(v); }},
        {"power_curve.outlier_fraction",
         [](ExperimentConfig& c, const std::string& v) { c.power_curve.outlier_fraction = to_double(v); }},
        {"schema",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "kaggle_turbine") {
                 c.schema = ScadaSchema::kaggle_turbine();
             } else if (v == "default") {
                 c.schema = ScadaSchema{};
             } else {
                 throw std::invalid_argument("schema preset must be 'default' or 'kaggle_turbine'");
             }
         }},
        {"schema.timestamp", [](ExperimentConfig& c, const std::string& v) { c.schema.timestamp = v; }},
        {"schema.wind_speed", [](ExperimentConfig& c, const std::string& v) { c.schema.wind_speed = v; }},
        {"schema.wind_direction", [](ExperimentConfig& c, const std::string& v) { c.schema.wind_direction = v; }},
        {"schema.active_power", [](ExperimentConfig& c, const std::string& v) { c.schema.active_power = v; }},
        {"density_bins", [](ExperimentConfig& c, const std::string& v) { c.density_bins = to_u64(v); }},
        {"speed_band", [](ExperimentConfig& c, const std::string& v) { std::tie(c.band_lo, c.band_hi) = to_range(v); }},
        {"series_column", [](ExperimentConfig& c, const std::string& v) { c.series_column = v; }},
        {"timestamp_column", [](ExperimentConfig& c, const std::string& v) { c.timestamp_column = v; }},
        {"ratios", [](ExperimentConfig& c, const std::string& v) { c.ratios = to_doubles(v); }},
        {"test_fraction", [](ExperimentConfig& c, const std::string& v) { c.test_fraction = to_double(v); }},
    };
    return setters;
}

struct Entry {
    std::size_t line;
    std::string key;
    std::string value;
};

[[noreturn]] void fail_at(const Entry& e, const std::string& why) {
    throw std::invalid_argument("config line " + std::to_string(e.line) + " ('" + e.key + "'): " + why);
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::synthetic_ood: return "synthetic_ood";
    case ExperimentKind::data_property: return "data_property";
    case ExperimentKind::dataset_scaling: return "dataset_scaling";
    }
    return "synthetic_ood";
}

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "synthetic_ood") return ExperimentKind::synthetic_ood;
    if (name == "data_property") return ExperimentKind::data_property;
    if (name == "dataset_scaling") return ExperimentKind::dataset_scaling;
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected synthetic_ood, data_property or dataset_scaling)");
}

const SamplerPlan* ExperimentConfig::plan_for(SamplerKind kind) const {
    for (const auto& p : samplers) {
        if (p.kind == kind) return &p;
    }
    return nullptr;
}

void ExperimentConfig::validate() const {
    if (samplers.empty()) throw std::invalid_argument("config: at least one sampler is required");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (hidden.empty() || std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
        throw std::invalid_argument("config: hidden widths must be non-empty and positive");
    }
    for (const auto& p : samplers) {
        const std::string who = " for " + to_string(p.kind);
        if (p.betas.empty()) throw std::invalid_argument("config: beta list is empty" + who);
        for (double b : p.betas) {
            if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("config: beta outside [0,1]" + who);
        }
        if (p.batch_size == 0) throw std::invalid_argument("config: batch_size must be positive" + who);
        if (p.samples == 0) throw std::invalid_argument("config: samples must be positive" + who);
        p.lr.validate();
        if (p.kind == SamplerKind::mc_dropconnect && !(p.drop_rate >= 0.0 && p.drop_rate < 1.0)) {
            throw std::invalid_argument("config: drop_rate must lie in [0,1)" + who);
        }
        if (p.kl_weight && !(*p.kl_weight > 0.0)) throw std::invalid_argument("config: kl_weight must be positive" + who);
    }
    if (threads == 0) throw std::invalid_argument("config: threads must be positive");
    switch (experiment) {
    case ExperimentKind::synthetic_ood:
        sine.validate();
        if (grid_points == 0) throw std::invalid_argument("config: grid_points must be positive");
        if (!(grid_lo < grid_hi)) throw std::invalid_argument("config: grid_range must be ordered");
        break;
    case ExperimentKind::data_property:
        if (density_bins == 0) throw std::invalid_argument("config: density_bins must be positive");
        if (!(band_lo < band_hi)) throw std::invalid_argument("config: speed_band must be ordered");
        [[fallthrough]];
    case ExperimentKind::dataset_scaling:
        if (lags == 0) throw std::invalid_argument("config: lags must be positive");
        if (surrogate) power_curve.validate();
        for (double r : ratios) {
            if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("config: ratios must lie in (0,1]");
        }
        break;
    }
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    c.threads = std::max(1u, std::thread::hardware_concurrency());
    switch (kind) {
    case ExperimentKind::synthetic_ood: {
        c.out_dir = "out/synthetic";
        c.hidden = {32, 32};
        const std::vector<double> betas{0.0, 0.5, 1.0};
        // One training budget for every beta.
        const LearningRateSchedule lr{5e-3, 150, 0.3};
        SamplerPlan ens = plan(SamplerKind::deep_ensemble, betas, 300, lr, 5);
        ens.batch_size = 32;
        SamplerPlan dc = plan(SamplerKind::mc_dropconnect, betas, 300, lr, 30);
        dc.batch_size = 32;
        dc.drop_rate = 0.05;
        SamplerPlan bbb = plan(SamplerKind::bayes_by_backprop, betas, 300, lr, 30);
        bbb.batch_size = 32;
        c.samplers = {dc, bbb, ens};
        break;
    }
    case ExperimentKind::data_property: {
        c.out_dir = "out/data_property";
        c.hidden = {64, 64, 64};
        c.lags = 10;
        SamplerPlan dc = plan(SamplerKind::mc_dropconnect, {0.4, 0.8}, 150, {1e-3, 60, 0.1}, 30);
        dc.drop_rate = 0.01;
        SamplerPlan bbb = plan(SamplerKind::bayes_by_backprop, {0.4, 0.6}, 300, {1e-3, 100, 0.1}, 30);
        SamplerPlan ens = plan(SamplerKind::deep_ensemble, {0.2, 0.8}, 20, {1e-3, 10, 0.1}, 5);
        c.samplers = {dc, bbb, ens};
        break;
    }
    case ExperimentKind::dataset_scaling: {
        c.out_dir = "out/scaling";
        c.hidden = {64, 64, 64};
        c.lags = 24;
        // Three years of hourly data plus the initial lag window.
        c.surrogate_rows = 26280 + 24;
        c.power_curve.autocorrelation = 0.95;
        SamplerPlan dc = plan(SamplerKind::mc_dropconnect, {0.6}, 120, {1e-3, 100, 0.1}, 30);
        dc.drop_rate = 0.01;
        SamplerPlan bbb = plan(SamplerKind::bayes_by_backprop, {0.6}, 200, {1e-4, 100, 0.1}, 30);
        SamplerPlan ens = plan(SamplerKind::deep_ensemble, {0.6}, 15, {1e-3, 10, 0.1}, 5);
        c.samplers = {dc, bbb, ens};
        break;
    }
    }
    return c;
}

ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> fallback) {
    std::vector<Entry> entries;
    {
        std::istringstream is{std::string(text)};
        std::string line;
        std::size_t no = 0;
        while (std::getline(is, line)) {
            ++no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("config line " + std::to_string(no) + ": expected 'key = value'");
            }
            entries.push_back(Entry{no, trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
        }
    }

    std::optional<ExperimentKind> kind = fallback;
    for (const auto& e : entries) {
        if (e.key != "experiment") continue;
        try {
            const ExperimentKind declared = parse_experiment(e.value);
            if (fallback && declared != *fallback) {
                fail_at(e, "config is for '" + e.value + "' but the command runs '" + to_string(*fallback) + "'");
            }
            kind = declared;
        } catch (const std::invalid_argument& ex) {
            if (std::string(ex.what()).rfind("config line", 0) == 0) throw;
            fail_at(e, ex.what());
        }
    }
    if (!kind) throw std::invalid_argument("config: 'experiment' key is required");

    ExperimentConfig cfg = default_config(*kind);
    std::map<SamplerKind, SamplerPlan> plans;
    std::vector<SamplerKind> active;
    for (const auto& p : cfg.samplers) {
        plans[p.kind] = p;
        active.push_back(p.kind);
    }

    for (const auto& e : entries) {
        if (e.key != "samplers") continue;
        active.clear();
        try {
            for (const auto& name : split_list(e.value)) {
                const SamplerKind k = parse_sampler(name);
                if (std::find(active.begin(), active.end(), k) != active.end()) fail_at(e, "duplicate sampler " + name);
                active.push_back(k);
            }
        } catch (const std::invalid_argument& ex) {
            if (std::string(ex.what()).rfind("config line", 0) == 0) throw;
            fail_at(e, ex.what());
        }
        if (active.empty()) fail_at(e, "sampler list is empty");
    }

    const auto& globals = global_setters();
    const auto& per_plan = plan_setters();
    // Global assignments first, then per-sampler overrides, each in file order.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& e : entries) {
            std::string base = e.key;
            std::optional<SamplerKind> target;
            const auto dot = e.key.rfind('.');
            if (dot != std::string::npos && per_plan.count(e.key.substr(0, dot))) {
                base = e.key.substr(0, dot);
                try {
                    target = parse_sampler(e.key.substr(dot + 1));
                } catch (const std::invalid_argument& ex) {
                    fail_at(e, ex.what());
                }
            }
            if ((pass == 1) != target.has_value()) continue;
            try {
                if (target) {
                    per_plan.at(base)(plans[*target], e.value);
                } else if (auto it = per_plan.find(base); it != per_plan.end()) {
                    for (auto& [k, p] : plans) it->second(p, e.value);
                } else if (auto g = globals.find(base); g != globals.end()) {
                    g->second(cfg, e.value);
                } else {
                    fail_at(e, "unknown key");
                }
            } catch (const std::invalid_argument& ex) {
                if (std::string(ex.what()).rfind("config line", 0) == 0) throw;
                fail_at(e, ex.what());
            }
        }
    }

    cfg.samplers.clear();
    for (SamplerKind k : active) cfg.samplers.push_back(plans[k]);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> fallback) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), fallback);
}

std::map<std::string, std::string> to_key_values(const ExperimentConfig& c) {
    std::map<std::string, std::string> kv;
    kv["experiment"] = to_string(c.experiment);
    std::vector<std::string> names;
    for (const auto& p : c.samplers) names.push_back(to_string(p.kind));
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) joined += (i ? ", " : "") + names[i];
    kv["samplers"] = joined;
    kv["seeds"] = join_values(c.seeds);
    kv["hidden"] = join_values(c.hidden);
    kv["activation"] = to_string(c.activation);
    kv["variance_floor"] = fmt(c.variance_floor);
    kv["out_dir"] = c.out_dir.string();
    kv["save_posteriors"] = c.save_posteriors ? "true" : "false";
    kv["write_snapshot"] = c.write_snapshot ? "true" : "false";
    kv["threads"] = std::to_string(c.threads);
    for (const auto& p : c.samplers) {
        const std::string s = "." + to_string(p.kind);
        kv["betas" + s] = join_values(p.betas);
        kv["epochs" + s] = std::to_string(p.epochs);
        kv["batch_size" + s] = std::to_string(p.batch_size);
        kv["lr" + s] = fmt(p.lr.initial_rate) + ", " + std::to_string(p.lr.decay_step) + ", " + fmt(p.lr.decay_factor);
        kv["optimizer" + s] = to_string(p.optimizer);
        kv["samples" + s] = std::to_string(p.samples);
        kv["drop_rate" + s] = fmt(p.drop_rate);
        kv["kl_weight" + s] = p.kl_weight ? fmt(*p.kl_weight) : "auto";
        kv["initial_rho" + s] = fmt(p.initial_rho);
    }
    switch (c.experiment) {
    case ExperimentKind::synthetic_ood:
        kv["n_train"] = std::to_string(c.sine.n_train);
        kv["n_test"] = std::to_string(c.sine.n_test);
        kv["noise_scale"] = fmt(c.sine.noise_scale);
        kv["train_range"] = fmt(c.sine.train_lo) + ", " + fmt(c.sine.train_hi);
        kv["test_range"] = fmt(c.sine.test_lo) + ", " + fmt(c.sine.test_hi);
        kv["normalize_inputs"] = c.sine.normalize_inputs ? "true" : "false";
        kv["grid_points"] = std::to_string(c.grid_points);
        kv["grid_range"] = fmt(c.grid_lo) + ", " + fmt(c.grid_hi);
        break;
    case ExperimentKind::data_property:
        kv["schema.timestamp"] = c.schema.timestamp;
        kv["schema.wind_speed"] = c.schema.wind_speed;
        kv["schema.wind_direction"] = c.schema.wind_direction;
        kv["schema.active_power"] = c.schema.active_power;
        kv["density_bins"] = std::to_string(c.density_bins);
        kv["speed_band"] = fmt(c.band_lo) + ", " + fmt(c.band_hi);
        [[fallthrough]];
    case ExperimentKind::dataset_scaling:
        if (c.dataset) kv["dataset"] = c.dataset->string();
        kv["surrogate"] = c.surrogate ? "true" : "false";
        kv["surrogate_rows"] = std::to_string(c.surrogate_rows);
        kv["lags"] = std::to_string(c.lags);
        kv["power_curve.cut_in"] = fmt(c.power_curve.cut_in);
        kv["power_curve.rated_speed"] = fmt(c.power_curve.rated_speed);
        kv["power_curve.rated_power"] = fmt(c.power_curve.rated_power);
        kv["power_curve.weibull_shape"] = fmt(c.power_curve.weibull_shape);
        kv["power_curve.weibull_scale"] = fmt(c.power_curve.weibull_scale);
        kv["power_curve.autocorrelation"] = fmt(c.power_curve.autocorrelation);
        kv["power_curve.noise_floor"] = fmt(c.power_curve.noise_floor);
        kv["power_curve.noise_peak"] = fmt(c.power_curve.noise_peak);
        kv["power_curve.outlier_fraction"] = fmt(c.power_curve.outlier_fraction);
        if (c.experiment == ExperimentKind::dataset_scaling) {
            kv["series_column"] = c.series_column;
            kv["timestamp_column"] = c.timestamp_column;
            kv["ratios"] = join_values(c.ratios);
            kv["test_fraction"] = fmt(c.test_fraction);
        }
        break;
    }
    return kv;
}

std::string render_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : to_key_values(cfg)) out += k + " = " + v + "\n";
    return out;
}

} // namespace varsplit
