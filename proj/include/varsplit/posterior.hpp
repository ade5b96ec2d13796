#pragma once

/**
 * @file posterior.hpp
 * @brief Posterior approximations that produce S parameter samples:
 *        deep ensembles, MC-DropConnect and Bayes by Backprop.
 *
 * Each fitted posterior can hand out S parameter vectors for a seed; the
 * disentangle module turns the corresponding predictions into AU / EU.
 */

#include "varsplit/data.hpp"
#include "varsplit/nn.hpp"
#include "varsplit/objectives.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace varsplit {

enum class SamplerKind { deep_ensemble, mc_dropconnect, bayes_by_backprop };
std::string to_string(SamplerKind kind);
SamplerKind parse_sampler(const std::string& name);

/// Masks individual weights (never biases) with probability drop_rate. A new
/// mask is drawn for every training batch and for every inference sample.
struct DropConnectConfig {
    double drop_rate = 0.01;
    void validate() const;
};

struct VariationalConfig {
    double initial_rho = -5.0; // initial std = softplus(-5) ~ 6.7e-3
};

struct PosteriorSampler {
    SamplerKind kind = SamplerKind::deep_ensemble;
    std::size_t sample_count = 5; // ensemble size, or MC samples
    DropConnectConfig dropconnect;
    VariationalConfig variational;

    void validate() const;
};

/// Factorized Gaussian q(theta) = prod N(mean_i, softplus(rho_i)^2) with a
/// unit zero-mean Gaussian prior.
struct VariationalPosterior {
    std::vector<double> mean;
    std::vector<double> rho;
    double kl_weight = 1.0;

    double std_at(std::size_t i) const { return softplus(rho[i]); }
    void validate() const;
};

/// KL(q || N(0, I)) = sum_i [ log(1/s_i) + (s_i^2 + m_i^2 - 1) / 2 ].
double kl_factorized_gaussian(const VariationalPosterior& q);

struct FittedPosterior {
    SamplerKind kind = SamplerKind::deep_ensemble;
    std::size_t sample_count = 0;
    ArchitectureSpec spec;
    /// Ensemble members; a single trained network for DropConnect; the mean
    /// network for the variational posterior.
    std::vector<TwoHeadNetwork> members;
    DropConnectConfig dropconnect;
    std::optional<VariationalPosterior> variational;
    TrainingConfig training;
    std::vector<std::uint64_t> seeds;
    std::vector<TrainingTrace> traces;
};

/// Trains the posterior approximation. kl_weight in cfg must be set for
/// bayes_by_backprop and absent otherwise.
FittedPosterior fit(const PosteriorSampler& sampler, const ArchitectureSpec& spec, const RegressionDataset& data,
                    const TrainingConfig& cfg);

/// S parameter vectors drawn from the fitted posterior. Ensembles ignore the
/// seed and require S == ensemble size.
std::vector<std::vector<double>> draw_parameters(const FittedPosterior& fp, std::size_t samples, std::uint64_t seed);

std::vector<GaussianPrediction> draw_predictions(const FittedPosterior& fp, std::span<const double> x,
                                                 std::size_t samples, std::uint64_t seed);

/// 1 keeps a parameter, 0 drops it; biases are always kept.
std::vector<unsigned char> sample_dropconnect_mask(const ParameterLayout& layout, double drop_rate, Rng& rng);

/// Directory layout: manifest.txt plus member_<k>.ckpt (ensemble),
/// network.ckpt (DropConnect) or variational.ckpt (Bayes by Backprop), and
/// trace_<k>.csv per trained network.
void save_posterior(const FittedPosterior& fp, const std::filesystem::path& dir);
FittedPosterior load_posterior(const std::filesystem::path& dir);

} // namespace varsplit
