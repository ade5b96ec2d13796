#pragma once

/**
 * @file objectives.hpp
 * @brief NLL / beta-NLL / MSE objectives, optimizers and the mini-batch
 *        training loop shared by every posterior approximation.
 *
 * beta-NLL multiplies the Gaussian NLL by sigma^(2 beta) held constant under
 * differentiation, so the per-output partials are
 *
 *   dL/dmu      = (mu - y) / (sigma^2)^(1 - beta)
 *   dL/dsigma^2 = (sigma^2 - (y - mu)^2) / (2 (sigma^2)^(2 - beta))
 *
 * beta = 0 recovers plain NLL; beta = 1 gives an MSE-like mean gradient.
 */

#include "varsplit/data.hpp"
#include "varsplit/nn.hpp"
#include "varsplit/rng.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varsplit {

double nll_loss(const GaussianPrediction& pred, double y);

struct BetaNllLoss {
    double value = 0.0;
    double weight = 1.0; // sigma^(2 beta), constant w.r.t. parameters
};

BetaNllLoss beta_nll_loss(const GaussianPrediction& pred, double y, double beta);
OutputGrad beta_nll_output_grads(const GaussianPrediction& pred, double y, double beta);

double mse_loss(const GaussianPrediction& pred, double y);

enum class OptimizerKind { adam, sgd };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

/// Step decay: rate(epoch) = initial_rate * decay_factor^floor(epoch / decay_step).
struct LearningRateSchedule {
    double initial_rate = 1e-3;
    std::size_t decay_step = 10;
    double decay_factor = 0.1;

    double rate_at(std::size_t epoch) const;
    void validate() const;
};

struct TrainingConfig {
    double beta = 0.5;
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    LearningRateSchedule lr;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 0;
    std::optional<double> kl_weight; // variational training only

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double mse = 0.0;
    double learning_rate = 0.0;
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;

    /// Columns: epoch,mean_loss,mse,learning_rate
    void write_csv(std::ostream& os) const;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

/// Hook that decides which weights each batch sees and how their gradient
/// maps back onto the optimized variables (DropConnect masks, reparameterized
/// variational weights plus a KL regularizer).
class WeightParameterization {
public:
    virtual ~WeightParameterization() = default;

    virtual std::span<double> variables() = 0;

    /// Network weights for the next batch.
    virtual std::span<const double> draw(Rng& rng) = 0;

    /// grad_weights is the gradient of the batch-mean data loss at the drawn
    /// weights. Writes the gradient of (sum of data losses + R) / batch_rows
    /// w.r.t. variables() and returns the regularizer value R.
    virtual double pullback(std::span<const double> grad_weights, std::size_t batch_rows,
                            std::span<double> grad_variables) = 0;

    /// Weights stored in the returned network after training.
    virtual std::vector<double> point_weights() const = 0;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(std::span<double> variables, std::span<const double> grad, double learning_rate) = 0;
};

/// Adam uses beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t size);

struct TrainResult {
    TwoHeadNetwork network;
    TrainingTrace trace;
};

/// Mini-batch training of the beta-NLL objective. Deterministic given
/// (cfg.seed, data); batch order is reshuffled every epoch.
TrainResult train(TwoHeadNetwork net, const RegressionDataset& data, const TrainingConfig& cfg,
                  WeightParameterization* hook = nullptr);

} // namespace varsplit
