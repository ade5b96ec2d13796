#pragma once

/**
 * @file harness.hpp
 * @brief Experiment runners for the synthetic OOD study, the SCADA data
 *        property study and the dataset-size scaling study.
 *
 * Every runner writes its result CSVs, a training trace and manifest.json
 * into cfg.out_dir and returns the same numbers in typed form. A cell is one
 * (sampler, beta, seed[, ratio]) combination; a cell that fails to train is
 * kept in every table with a "failed: ..." status.
 */

#include "varsplit/config.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace varsplit {

struct SyntheticSummary {
    SamplerKind sampler = SamplerKind::deep_ensemble;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double train_mse = 0.0;
    double test_mse = 0.0;
    double eu_id_mean = 0.0;
    double eu_ood_mean = 0.0;
    double eu_ratio = 0.0;
    std::optional<double> spearman_au_x;
    double au_iqr_id = 0.0;
};

struct DataPropertySummary {
    SamplerKind sampler = SamplerKind::deep_ensemble;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double mse = 0.0;
    double eu_in_band = 0.0;
    double eu_out_band = 0.0;
    std::size_t n_in_band = 0;
    std::size_t n_out_band = 0;
    std::optional<double> spearman_au_density;
    double mean_au = 0.0;
    double mean_eu = 0.0;
};

struct ScalingPoint {
    SamplerKind sampler = SamplerKind::deep_ensemble;
    double beta = 0.0;
    std::uint64_t seed = 0;
    double ratio = 1.0;
    std::size_t n_train = 0;
    std::optional<double> kl_weight;
    std::string status = "ok";
    double mean_au = 0.0;
    double mean_eu = 0.0;
    double mse = 0.0;
};

struct ScalingSummary {
    SamplerKind sampler = SamplerKind::deep_ensemble;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> spearman_ratio_eu;
    std::optional<double> eu_at_min_ratio;
    std::optional<double> eu_at_max_ratio;
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::synthetic_ood;
    std::vector<SyntheticSummary> synthetic;
    std::vector<DataPropertySummary> data_property;
    std::vector<ScalingPoint> scaling;
    std::vector<ScalingSummary> scaling_summary;
    std::vector<std::filesystem::path> artifacts;
    std::filesystem::path manifest;
    std::size_t failed_cells = 0;
    double wall_seconds = 0.0;
};

/// KL weight used when the plan leaves it unset: 1 / round(n_train / batch_size).
double default_kl_weight(std::size_t n_train, std::size_t batch_size);

/// Evenly spaced points from lo to hi inclusive. Throws on zero points.
std::vector<double> linspace(double lo, double hi, std::size_t points);

ExperimentReport run_synthetic_ood(const ExperimentConfig& cfg);
ExperimentReport run_data_property(const ExperimentConfig& cfg);
ExperimentReport run_dataset_scaling(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Manifest for a run that stopped before producing results.
void write_failure_manifest(const std::filesystem::path& out_dir, const std::string& command, const std::string& error,
                            const std::map<std::string, std::string>& config = {});

} // namespace varsplit
