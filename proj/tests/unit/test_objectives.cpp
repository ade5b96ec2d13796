#include <doctest.h>

#include "varsplit/data.hpp"
#include "varsplit/objectives.hpp"
#include "varsplit/rng.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace varsplit;

TEST_CASE("nll examples") {
    CHECK(nll_loss({0.0, 1.0}, 0.0) == 0.0);
    CHECK(nll_loss({0.0, 1.0}, 2.0) == 2.0);
    CHECK(nll_loss({1.0, 4.0}, 3.0) == doctest::Approx(1.19315).epsilon(1e-5));
    CHECK(nll_loss({1.0, 4.0}, 3.0) == doctest::Approx(std::log(4.0) / 2.0 + 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(nll_loss({0.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(nll_loss({0.0, -1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("beta-NLL values and stop-gradient weight") {
    const auto b0 = beta_nll_loss({1.0, 4.0}, 3.0, 0.0);
    CHECK(b0.value == nll_loss({1.0, 4.0}, 3.0));
    CHECK(b0.weight == 1.0);
    const auto b1 = beta_nll_loss({1.0, 4.0}, 3.0, 1.0);
    CHECK(b1.value == doctest::Approx(4.77259).epsilon(1e-5));
    CHECK(b1.weight == doctest::Approx(4.0));
    const auto bh = beta_nll_loss({1.0, 4.0}, 3.0, 0.5);
    CHECK(bh.weight == doctest::Approx(2.0));
    CHECK_THROWS_AS(beta_nll_loss({1.0, 4.0}, 3.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(beta_nll_loss({1.0, 4.0}, 3.0, 1.1), std::invalid_argument);
}

TEST_CASE("output gradient examples") {
    CHECK(beta_nll_output_grads({1.0, 2.0}, 0.0, 0.0).d_mu == doctest::Approx(0.5));
    for (double beta : {0.0, 0.3, 0.5, 1.0}) {
        CHECK(beta_nll_output_grads({0.0, 1.0}, 1.0, beta).d_sigma2 == 0.0);
        CHECK(beta_nll_output_grads({2.0, 1.0}, 1.0, beta).d_sigma2 == 0.0);
    }
    // beta = 1: d/dmu = mu - y for every sigma2.
    for (double s2 : {1e-4, 0.3, 1.0, 17.0}) CHECK(beta_nll_output_grads({1.5, s2}, -0.5, 1.0).d_mu == 2.0);
    CHECK_THROWS_AS(beta_nll_output_grads({0.0, 0.0}, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("output gradients match finite differences with the weight held fixed") {
    Rng rng(3);
    std::uniform_real_distribution<double> umu(-3.0, 3.0), us2(0.05, 5.0), ubeta(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double mu = umu(rng), y = umu(rng), s2 = us2(rng), beta = ubeta(rng);
        const double w = beta_nll_loss({mu, s2}, y, beta).weight;
        auto fixed = [&](double m, double v) { return w * nll_loss({m, v}, y); };
        const double h = 1e-6;
        const double fd_mu = (fixed(mu + h, s2) - fixed(mu - h, s2)) / (2 * h);
        const double fd_s2 = (fixed(mu, s2 + h) - fixed(mu, s2 - h)) / (2 * h);
        const auto g = beta_nll_output_grads({mu, s2}, y, beta);
        CHECK(std::abs(g.d_mu - fd_mu) / std::max(std::abs(fd_mu), 1e-3) < 1e-6);
        CHECK(std::abs(g.d_sigma2 - fd_s2) / std::max(std::abs(fd_s2), 1e-3) < 1e-6);
    }
}

TEST_CASE("gradients do not flow through the stop-gradient weight") {
    // Differentiating the full product sigma^(2 beta) * NLL w.r.t. sigma2 would
    // add beta * sigma^(2 beta - 2) * NLL; the analytic gradient must not.
    const GaussianPrediction p{0.2, 2.5};
    const double y = 1.0, beta = 0.7;
    const auto g = beta_nll_output_grads(p, y, beta);
    const double h = 1e-6;
    auto full = [&](double v) { return beta_nll_loss({p.mu, v}, y, beta).value; };
    const double fd_full = (full(p.sigma2 + h) - full(p.sigma2 - h)) / (2 * h);
    const double extra = beta * std::pow(p.sigma2, beta - 1.0) * nll_loss(p, y);
    CHECK(fd_full == doctest::Approx(g.d_sigma2 + extra).epsilon(1e-6));
    CHECK(std::abs(fd_full - g.d_sigma2) > 1e-3);
}

TEST_CASE("mse loss") {
    CHECK(mse_loss({1.0, 3.0}, 1.0) == 0.0);
    CHECK(mse_loss({1.0, 3.0}, 3.0) == 4.0);
}

TEST_CASE("step-decay learning rate") {
    const LearningRateSchedule s{0.001, 60, 0.1};
    for (std::size_t e = 0; e < 60; ++e) CHECK(s.rate_at(e) == 0.001);
    for (std::size_t e = 60; e < 120; ++e) CHECK(s.rate_at(e) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(s.rate_at(120) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK_THROWS_AS((LearningRateSchedule{0.0, 10, 0.1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((LearningRateSchedule{0.1, 0, 0.1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((LearningRateSchedule{0.1, 10, 1.5}.validate()), std::invalid_argument);
    CHECK_NOTHROW((LearningRateSchedule{0.1, 10, 1.0}.validate()));
}

TEST_CASE("optimizer names") {
    CHECK(parse_optimizer("adam") == OptimizerKind::adam);
    CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
    CHECK(to_string(OptimizerKind::adam) == "adam");
    CHECK_THROWS_AS(parse_optimizer("rmsprop"), std::invalid_argument);
}

namespace {

RegressionDataset sine_train(std::uint64_t seed, std::size_t n = 1000) {
    SyntheticSineSpec spec;
    spec.seed = seed;
    spec.n_train = n;
    spec.normalize_inputs = true;
    return gen_sine(spec).train;
}

ArchitectureSpec small_arch() {
    ArchitectureSpec a;
    a.hidden_widths = {32, 32};
    return a;
}

} // namespace

TEST_CASE("zero epochs return the input network unchanged") {
    const auto data = sine_train(1, 50);
    const auto net = init_parameters(small_arch(), 5);
    TrainingConfig cfg;
    cfg.epochs = 0;
    const auto r = train(net, data, cfg);
    CHECK(r.trace.epochs.empty());
    CHECK(std::equal(net.parameters().begin(), net.parameters().end(), r.network.parameters().begin()));
}

TEST_CASE("ensemble-style training run lowers the training MSE") {
    const auto data = sine_train(2);
    TrainingConfig cfg;
    cfg.beta = 0.5;
    cfg.epochs = 20;
    cfg.batch_size = 128;
    cfg.lr = {0.001, 10, 0.1};
    cfg.seed = 11;
    const auto r = train(init_parameters(small_arch(), 11), data, cfg);
    REQUIRE(r.trace.epochs.size() == 20);
    std::size_t decreases = 0;
    for (std::size_t e = 1; e < 20; ++e) decreases += r.trace.epochs[e].mse < r.trace.epochs[e - 1].mse;
    CHECK(decreases >= 16); // at least 80% of the 19 transitions
    CHECK(r.trace.epochs.back().mse < r.trace.epochs.front().mse);
    CHECK(r.trace.epochs[0].learning_rate == 0.001);
    CHECK(r.trace.epochs[10].learning_rate == doctest::Approx(1e-4));

    std::ostringstream os;
    r.trace.write_csv(os);
    CHECK(os.str().rfind("epoch,mean_loss,mse,learning_rate\n0,", 0) == 0);
}

TEST_CASE("training is deterministic given the seed") {
    const auto data = sine_train(3, 200);
    TrainingConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.seed = 99;
    const auto a = train(init_parameters(small_arch(), 1), data, cfg);
    const auto b = train(init_parameters(small_arch(), 1), data, cfg);
    CHECK(std::equal(a.network.parameters().begin(), a.network.parameters().end(), b.network.parameters().begin()));
    cfg.seed = 100;
    const auto c = train(init_parameters(small_arch(), 1), data, cfg);
    CHECK_FALSE(
        std::equal(a.network.parameters().begin(), a.network.parameters().end(), c.network.parameters().begin()));

    TrainingConfig sgd = cfg;
    sgd.optimizer = OptimizerKind::sgd;
    sgd.lr.initial_rate = 1e-4;
    const auto d = train(init_parameters(small_arch(), 1), data, sgd);
    CHECK(d.trace.epochs.size() == 3);
}

TEST_CASE("non-finite training aborts with the epoch and batch") {
    auto data = sine_train(4, 64);
    data.targets[5] = 1e300; // squared residual overflows
    TrainingConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    try {
        train(init_parameters(small_arch(), 1), data, cfg);
        FAIL("expected a TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() == 0);
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }

    auto bad = sine_train(4, 8);
    bad.targets[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(init_parameters(small_arch(), 1), bad, cfg), std::invalid_argument);
}

TEST_CASE("training config validation") {
    TrainingConfig cfg;
    cfg.beta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.beta = 0.5;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.batch_size = 4;
    cfg.kl_weight = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    const auto data = sine_train(1, 10);
    ArchitectureSpec two_inputs = small_arch();
    two_inputs.input_dim = 2;
    CHECK_THROWS_AS(train(init_parameters(two_inputs, 1), data, TrainingConfig{}), std::invalid_argument);
}
