#include "varsplit/objectives.hpp"

#include "varsplit/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace varsplit {

namespace {

void require_positive_variance(const GaussianPrediction& pred) {
    if (!(pred.sigma2 > 0.0)) throw std::invalid_argument("loss: sigma2 must be positive");
}

void require_beta(double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta-NLL: beta must lie in [0,1]");
}

class Adam final : public Optimizer {
public:
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> x, std::span<const double> g, double lr) override {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < x.size(); ++i) {
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
            x[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

class Sgd final : public Optimizer {
public:
    void step(std::span<double> x, std::span<const double> g, double lr) override {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * g[i];
    }
};

class IdentityParameterization final : public WeightParameterization {
public:
    explicit IdentityParameterization(std::span<const double> init) : weights_(init.begin(), init.end()) {}

    std::span<double> variables() override { return weights_; }
    std::span<const double> draw(Rng&) override { return weights_; }
    double pullback(std::span<const double> g, std::size_t, std::span<double> out) override {
        std::copy(g.begin(), g.end(), out.begin());
        return 0.0;
    }
    std::vector<double> point_weights() const override { return weights_; }

private:
    std::vector<double> weights_;
};

} // namespace

double nll_loss(const GaussianPrediction& pred, double y) {
    require_positive_variance(pred);
    const double r = pred.mu - y;
    return 0.5 * std::log(pred.sigma2) + r * r / (2.0 * pred.sigma2);
}

BetaNllLoss beta_nll_loss(const GaussianPrediction& pred, double y, double beta) {
    require_beta(beta);
    const double nll = nll_loss(pred, y);
    if (beta == 0.0) return {nll, 1.0};
    const double weight = std::pow(pred.sigma2, beta);
    return {weight * nll, weight};
}

OutputGrad beta_nll_output_grads(const GaussianPrediction& pred, double y, double beta) {
    require_positive_variance(pred);
    require_beta(beta);
    const double s = pred.sigma2;
    const double r = pred.mu - y;
    return OutputGrad{r / std::pow(s, 1.0 - beta), (s - r * r) / (2.0 * std::pow(s, 2.0 - beta))};
}

double mse_loss(const GaussianPrediction& pred, double y) {
    const double r = pred.mu - y;
    return r * r;
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected adam or sgd)");
}

double LearningRateSchedule::rate_at(std::size_t epoch) const {
    return initial_rate * std::pow(decay_factor, static_cast<double>(epoch / decay_step));
}

void LearningRateSchedule::validate() const {
    if (!(initial_rate > 0.0)) throw std::invalid_argument("learning rate: initial rate must be positive");
    if (decay_step == 0) throw std::invalid_argument("learning rate: decay step must be positive");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
        throw std::invalid_argument("learning rate: decay factor must lie in (0,1]");
    }
}

void TrainingConfig::validate() const {
    require_beta(beta);
    if (batch_size == 0) throw std::invalid_argument("training: batch size must be positive");
    lr.validate();
    if (kl_weight && !(*kl_weight > 0.0)) throw std::invalid_argument("training: kl_weight must be positive");
}

void TrainingTrace::write_csv(std::ostream& os) const {
    os << "epoch,mean_loss,mse,learning_rate\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << csv::format(e.mean_loss) << ',' << csv::format(e.mse) << ','
           << csv::format(e.learning_rate) << '\n';
    }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t size) {
    if (kind == OptimizerKind::adam) return std::make_unique<Adam>(size);
    return std::make_unique<Sgd>();
}

TrainResult train(TwoHeadNetwork net, const RegressionDataset& data, const TrainingConfig& cfg,
                  WeightParameterization* hook) {
    cfg.validate();
    data.validate();
    if (data.input_dim() != net.spec().input_dim) {
        throw std::invalid_argument("train: dataset has " + std::to_string(data.input_dim()) +
                                    " features, network expects " + std::to_string(net.spec().input_dim));
    }
    TrainingTrace trace;
    if (cfg.epochs == 0) return TrainResult{std::move(net), std::move(trace)};

    IdentityParameterization identity(net.parameters());
    WeightParameterization& param = hook ? *hook : identity;
    const std::size_t n_vars = param.variables().size();
    auto optimizer = make_optimizer(cfg.optimizer, n_vars);

    const std::size_t n = data.size();
    const double sigma2_min = std::max(net.spec().variance_floor, 1e-12);
    std::vector<std::size_t> order(n);
    std::vector<double> grad_weights(net.parameter_count());
    std::vector<double> grad_vars(n_vars);
    ForwardTape tape;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr.rate_at(epoch);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = make_rng(cfg.seed, {epoch, 0x5f});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        Rng weight_rng = make_rng(cfg.seed, {epoch, 0xa7});

        double loss_sum = 0.0;
        double sq_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::size_t rows = stop - start;
            const double inv_rows = 1.0 / static_cast<double>(rows);
            const std::span<const double> weights = param.draw(weight_rng);
            std::fill(grad_weights.begin(), grad_weights.end(), 0.0);

            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = order[k];
                const double y = data.targets[i];
                GaussianPrediction pred = forward_with(net, weights, data.inputs.row(i), &tape);
                pred.sigma2 = std::max(pred.sigma2, sigma2_min);
                batch_loss += beta_nll_loss(pred, y, cfg.beta).value;
                sq_sum += mse_loss(pred, y);
                OutputGrad g = beta_nll_output_grads(pred, y, cfg.beta);
                g.d_mu *= inv_rows;
                g.d_sigma2 *= inv_rows;
                if (!std::isfinite(g.d_mu) || !std::isfinite(g.d_sigma2)) {
                    throw TrainingError("train: non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(batch_index),
                                        epoch, batch_index);
                }
                accumulate_backward(net, weights, tape, g, grad_weights);
            }
            batch_loss += param.pullback(grad_weights, rows, grad_vars);
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("train: NaN/inf loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index),
                                    epoch, batch_index);
            }
            loss_sum += batch_loss;
            optimizer->step(param.variables(), grad_vars, lr);
        }
        trace.epochs.push_back(EpochRecord{epoch, loss_sum / static_cast<double>(n), sq_sum / static_cast<double>(n), lr});
    }

    std::vector<double> point = param.point_weights();
    std::copy(point.begin(), point.end(), net.mutable_parameters().begin());
    return TrainResult{std::move(net), std::move(trace)};
}

} // namespace varsplit
