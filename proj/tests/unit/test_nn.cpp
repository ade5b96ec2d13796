#include <doctest.h>

#include "varsplit/nn.hpp"
#include "varsplit/rng.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

using namespace varsplit;

namespace {

ArchitectureSpec spec_of(std::size_t in, std::vector<std::size_t> hidden, Activation a = Activation::relu) {
    ArchitectureSpec s;
    s.input_dim = in;
    s.hidden_widths = std::move(hidden);
    s.hidden_activation = a;
    return s;
}

// Loss used for gradient checks: L = a * mu + b * sigma2.
double probe_loss(const TwoHeadNetwork& net, std::span<const double> params, std::span<const double> x, double a,
                  double b) {
    const auto p = forward_with(net, params, x);
    return a * p.mu + b * p.sigma2;
}

} // namespace

TEST_CASE("parameter count of the 1-[32,32] network is 1186") {
    const ArchitectureSpec s = spec_of(1, {32, 32});
    CHECK(s.parameter_count() == 1186);
    const auto layout = ParameterLayout::from_spec(s);
    CHECK(layout.hidden.size() == 2);
    CHECK(layout.hidden[0].weight_offset == 0);
    CHECK(layout.hidden[0].bias_offset == 32);
    CHECK(layout.hidden[1].weight_offset == 64);
    CHECK(layout.mean_head.weight_offset == 64 + 1024 + 32);
    CHECK(layout.variance_head.bias_offset == 1185);
    CHECK(layout.is_weight(0));
    CHECK_FALSE(layout.is_weight(32));
    CHECK_FALSE(layout.is_weight(1185));
}

TEST_CASE("initialization is deterministic and seed dependent") {
    const ArchitectureSpec s = spec_of(3, {16, 8});
    const auto a = init_parameters(s, 42);
    const auto b = init_parameters(s, 42);
    const auto c = init_parameters(s, 43);
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));

    // Biases start at zero; weights respect the fan-in limit of their layer.
    const auto& layout = a.layout();
    for (const auto& l : layout.all_layers()) {
        for (std::size_t i = l.bias_offset; i < l.bias_offset + l.fan_out; ++i) CHECK(a.parameters()[i] == 0.0);
    }
    const auto& first = layout.hidden.front();
    for (std::size_t i = first.weight_offset; i < first.bias_offset; ++i) {
        CHECK(std::abs(a.parameters()[i]) <= std::sqrt(6.0 / 3.0));
    }
    const auto& head = layout.mean_head;
    for (std::size_t i = head.weight_offset; i < head.bias_offset; ++i) {
        CHECK(std::abs(a.parameters()[i]) <= std::sqrt(3.0 / 8.0));
    }
}

TEST_CASE("invalid architectures are rejected") {
    CHECK_THROWS_AS(init_parameters(spec_of(1, {}), 1), std::invalid_argument);
    CHECK_THROWS_AS(init_parameters(spec_of(0, {4}), 1), std::invalid_argument);
    CHECK_THROWS_AS(init_parameters(spec_of(1, {4, 0}), 1), std::invalid_argument);
    ArchitectureSpec bad = spec_of(1, {4});
    bad.variance_floor = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("all-zero parameters give mu = 0 and sigma2 = ln 2 + floor") {
    const ArchitectureSpec s = spec_of(2, {5, 3});
    const auto net = TwoHeadNetwork::zeros(s);
    const std::vector<double> x{0.3, -1.7};
    const auto p = forward(net, x);
    CHECK(p.mu == 0.0);
    CHECK(p.sigma2 == doctest::Approx(std::log(2.0) + s.variance_floor).epsilon(1e-15));
}

TEST_CASE("forward pass matches a hand computation") {
    // 1 input, one hidden layer of 2 relu units.
    const ArchitectureSpec s = spec_of(1, {2});
    // W1 = [1, -1], b1 = [0.5, 0.25], w_mu = [2, 3], b_mu = 0.1, w_var = [-1, 0.5], b_var = 0.2
    std::vector<double> params{1.0, -1.0, 0.5, 0.25, 2.0, 3.0, 0.1, -1.0, 0.5, 0.2};
    const TwoHeadNetwork net(s, params);
    const std::vector<double> x{2.0};
    // h = relu([2.5, -1.75]) = [2.5, 0]
    const auto p = forward(net, x);
    CHECK(p.mu == doctest::Approx(2.0 * 2.5 + 0.1));
    CHECK(p.sigma2 == doctest::Approx(std::log1p(std::exp(-2.5 + 0.2)) + 1e-6));

    const ArchitectureSpec sg = spec_of(1, {2}, Activation::sigmoid);
    const TwoHeadNetwork snet(sg, params);
    const double h0 = 1.0 / (1.0 + std::exp(-2.5));
    const double h1 = 1.0 / (1.0 + std::exp(1.75));
    const auto q = forward(snet, x);
    CHECK(q.mu == doctest::Approx(2.0 * h0 + 3.0 * h1 + 0.1));
    CHECK(q.sigma2 == doctest::Approx(std::log1p(std::exp(-h0 + 0.5 * h1 + 0.2)) + 1e-6));
}

TEST_CASE("wrong input or parameter length is an error") {
    const ArchitectureSpec s = spec_of(3, {4});
    const auto net = init_parameters(s, 1);
    const std::vector<double> x2{1.0, 2.0};
    CHECK_THROWS_AS(forward(net, x2), std::invalid_argument);
    const std::vector<double> short_params(net.parameter_count() - 1, 0.0);
    const std::vector<double> x3{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(forward_with(net, short_params, x3), std::invalid_argument);
    CHECK_THROWS_AS(TwoHeadNetwork(s, short_params), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Activation act : {Activation::relu, Activation::sigmoid}) {
        const ArchitectureSpec s = spec_of(3, {6, 5}, act);
        for (int trial = 0; trial < 5; ++trial) {
            auto net = init_parameters(s, 100 + trial);
            // Nonzero biases so relu kinks are unlikely to sit near zero.
            for (auto& v : net.mutable_parameters()) v += 0.1 * u(rng);
            const std::vector<double> x{u(rng), u(rng), u(rng)};
            const double a = u(rng), b = u(rng);
            const auto grad = backward(net, x, OutputGrad{a, b});
            std::vector<double> p(net.parameters().begin(), net.parameters().end());
            const double h = 1e-6;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double keep = p[i];
                p[i] = keep + h;
                const double up = probe_loss(net, p, x, a, b);
                p[i] = keep - h;
                const double down = probe_loss(net, p, x, a, b);
                p[i] = keep;
                const double fd = (up - down) / (2.0 * h);
                const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-4});
                CHECK(std::abs(fd - grad[i]) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("zero upstream gives a zero gradient and the mean bias gradient equals d_mu") {
    const ArchitectureSpec s = spec_of(2, {4, 4});
    const auto net = init_parameters(s, 9);
    const std::vector<double> x{0.2, -0.4};
    const auto zero = backward(net, x, OutputGrad{0.0, 0.0});
    for (double g : zero) CHECK(g == 0.0);
    const auto g = backward(net, x, OutputGrad{0.75, 0.0});
    CHECK(g[net.layout().mean_head.bias_offset] == 0.75);
    CHECK_THROWS_AS(backward(net, x, OutputGrad{std::nan(""), 0.0}), std::invalid_argument);
}

TEST_CASE("predicted variance is always positive") {
    const ArchitectureSpec s = spec_of(2, {8, 8});
    Rng rng(11);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 10000; ++i) {
        auto net = init_parameters(s, static_cast<std::uint64_t>(i));
        // Push the variance head strongly negative now and then.
        net.mutable_parameters()[net.layout().variance_head.bias_offset] = n(rng) * 20.0;
        const std::vector<double> x{n(rng), n(rng)};
        const auto p = forward(net, x);
        CHECK(p.sigma2 > 0.0);
        if (!(p.sigma2 > 0.0)) break;
    }
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(softplus(800.0) == 800.0);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    ArchitectureSpec s = spec_of(4, {7, 3}, Activation::sigmoid);
    s.variance_floor = 1.25e-5;
    auto net = init_parameters(s, 1234);
    net.mutable_parameters()[0] = 0.1; // not exactly representable in binary
    net.mutable_parameters()[1] = -1e-300;
    std::stringstream ss;
    write_network(ss, net);
    const auto back = read_network(ss);
    CHECK(back.spec() == net.spec());
    CHECK(back.init_seed() == 1234);
    REQUIRE(back.parameter_count() == net.parameter_count());
    for (std::size_t i = 0; i < net.parameter_count(); ++i) CHECK(back.parameters()[i] == net.parameters()[i]);

    const auto dir = std::filesystem::temp_directory_path() / "varsplit_nn_ckpt";
    std::filesystem::create_directories(dir);
    save_checkpoint(net, dir / "net.ckpt");
    const auto loaded = load_checkpoint(dir / "net.ckpt");
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    CHECK(forward(loaded, x).mu == forward(net, x).mu);
    CHECK(forward(loaded, x).sigma2 == forward(net, x).sigma2);
    std::filesystem::remove_all(dir);

    std::stringstream bad("varsplit-network 99\n");
    CHECK_THROWS(read_network(bad));
}
