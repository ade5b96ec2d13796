#pragma once

/**
 * @file config.hpp
 * @brief Experiment configuration and its flat key-value text format.
 *
 * One `key = value` per line, `#` starts a comment. Lists are comma
 * separated. Training keys accept a `.<sampler>` suffix that overrides the
 * value for one sampler only, e.g.
 *
 *     experiment = data_property
 *     samplers = mc_dropconnect, deep_ensemble
 *     batch_size = 128
 *     epochs.mc_dropconnect = 150
 *     lr.mc_dropconnect = 0.001, 60, 0.1
 *     betas.deep_ensemble = 0.2, 0.8
 *
 * Unknown keys are rejected.
 */

#include "varsplit/data.hpp"
#include "varsplit/nn.hpp"
#include "varsplit/objectives.hpp"
#include "varsplit/posterior.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace varsplit {

enum class ExperimentKind { synthetic_ood, data_property, dataset_scaling };
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

/// Training and sampling settings for one posterior approximation.
struct SamplerPlan {
    SamplerKind kind = SamplerKind::deep_ensemble;
    std::vector<double> betas{0.5};
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    LearningRateSchedule lr;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::size_t samples = 5;
    double drop_rate = 0.01;
    /// Unset: 1 / round(n_train / batch_size), recomputed per training set.
    std::optional<double> kl_weight;
    double initial_rho = -5.0;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::synthetic_ood;
    std::vector<SamplerPlan> samplers;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::size_t> hidden{32, 32};
    Activation activation = Activation::relu;
    double variance_floor = 1e-6;
    std::filesystem::path out_dir = "out";
    bool save_posteriors = false;
    bool write_snapshot = false;
    std::size_t threads = 1;

    // synthetic_ood
    SyntheticSineSpec sine;
    std::size_t grid_points = 301;
    double grid_lo = 0.0;
    double grid_hi = 15.0;

    // data_property and dataset_scaling
    std::optional<std::filesystem::path> dataset;
    bool surrogate = false;
    PowerCurveSpec power_curve;
    std::size_t surrogate_rows = 6000;
    std::size_t lags = 10;

    // data_property
    ScadaSchema schema;
    std::size_t density_bins = 30;
    double band_lo = 2.0;
    double band_hi = 11.0;

    // dataset_scaling
    std::string series_column = "power";
    std::string timestamp_column = "timestamp";
    std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double test_fraction = 0.1;

    const SamplerPlan* plan_for(SamplerKind kind) const;
    void validate() const;
};

/// Default settings for each experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses config text on top of the defaults for its `experiment` key (or for
/// `fallback` when the key is absent). Throws std::invalid_argument naming
/// the offending line for unknown keys or malformed values.
ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> fallback = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> fallback = std::nullopt);

/// Resolved configuration as key-value pairs in the same syntax parse_config
/// accepts (used for manifests and exact reruns).
std::map<std::string, std::string> to_key_values(const ExperimentConfig& cfg);
std::string render_config(const ExperimentConfig& cfg);

} // namespace varsplit
