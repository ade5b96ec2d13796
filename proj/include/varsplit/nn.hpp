#pragma once

/**
 * @file nn.hpp
 * @brief Fully-connected two-head regressor (mean head + variance head).
 *
 * All weights and biases live in one flat parameter vector. The layout is
 * fixed: for each hidden layer in order, a row-major weight matrix
 * (fan_out x fan_in) followed by its bias vector; then the mean head
 * (weights, bias) and finally the variance head (weights, bias).
 *
 *   h_0 = x
 *   h_l = act(W_l h_{l-1} + b_l)
 *   mu      = w_mu . h_L + b_mu
 *   sigma^2 = softplus(w_var . h_L + b_var) + variance_floor
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace varsplit {

enum class Activation { relu, sigmoid };
enum class VarianceActivation { softplus };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct ArchitectureSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_widths{32, 32};
    Activation hidden_activation = Activation::relu;
    VarianceActivation variance_activation = VarianceActivation::softplus;
    double variance_floor = 1e-6;

    /// Throws std::invalid_argument on zero dims, empty hidden list or a bad floor.
    void validate() const;
    std::size_t parameter_count() const;

    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct LayerSlice {
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;

    std::size_t weight_count() const { return fan_in * fan_out; }
};

/// Index ranges of each layer inside the flat parameter vector.
struct ParameterLayout {
    std::vector<LayerSlice> hidden;
    LayerSlice mean_head;
    LayerSlice variance_head;
    std::size_t total = 0;

    static ParameterLayout from_spec(const ArchitectureSpec& spec);

    /// True when index i addresses a weight (as opposed to a bias).
    bool is_weight(std::size_t i) const;
    std::vector<LayerSlice> all_layers() const;
};

struct GaussianPrediction {
    double mu = 0.0;
    double sigma2 = 1.0;
};

/// Loss partials with respect to the two network outputs.
struct OutputGrad {
    double d_mu = 0.0;
    double d_sigma2 = 0.0;
};

class TwoHeadNetwork {
public:
    TwoHeadNetwork(ArchitectureSpec spec, std::vector<double> parameters, std::uint64_t init_seed = 0);

    static TwoHeadNetwork zeros(const ArchitectureSpec& spec);

    const ArchitectureSpec& spec() const noexcept { return spec_; }
    const ParameterLayout& layout() const noexcept { return layout_; }
    std::span<const double> parameters() const noexcept { return parameters_; }
    std::span<double> mutable_parameters() noexcept { return parameters_; }
    std::size_t parameter_count() const noexcept { return parameters_.size(); }
    std::uint64_t init_seed() const noexcept { return init_seed_; }

private:
    ArchitectureSpec spec_;
    ParameterLayout layout_;
    std::vector<double> parameters_;
    std::uint64_t init_seed_ = 0;
};

/// Per-sample intermediate values kept for the backward pass.
struct ForwardTape {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    double mean_pre = 0.0;
    double variance_pre = 0.0;
};

/// He-style uniform init for relu (limit sqrt(6/fan_in)), LeCun uniform
/// (limit sqrt(3/fan_in)) for sigmoid layers and both heads; zero biases.
TwoHeadNetwork init_parameters(const ArchitectureSpec& spec, std::uint64_t seed);

GaussianPrediction forward(const TwoHeadNetwork& net, std::span<const double> x);

/// Forward pass of net's architecture evaluated at an external parameter
/// vector (masked or sampled weights). Fills tape when non-null.
GaussianPrediction forward_with(const TwoHeadNetwork& net, std::span<const double> params,
                                std::span<const double> x, ForwardTape* tape = nullptr);

/// dL/dtheta for a loss whose output partials are `upstream`.
std::vector<double> backward(const TwoHeadNetwork& net, std::span<const double> x, OutputGrad upstream);

/// Adds dL/dtheta into grad using a tape recorded by forward_with at params.
void accumulate_backward(const TwoHeadNetwork& net, std::span<const double> params, const ForwardTape& tape,
                         OutputGrad upstream, std::span<double> grad);

double softplus(double z);
double sigmoid(double z);

// Checkpoints: text record of spec, init seed, layout version and exact parameters.
void write_network(std::ostream& os, const TwoHeadNetwork& net);
TwoHeadNetwork read_network(std::istream& is);
void write_architecture(std::ostream& os, const ArchitectureSpec& spec);
ArchitectureSpec read_architecture(std::istream& is);
void save_checkpoint(const TwoHeadNetwork& net, const std::filesystem::path& path);
TwoHeadNetwork load_checkpoint(const std::filesystem::path& path);

} // namespace varsplit
