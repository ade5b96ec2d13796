#include "varsplit/posterior.hpp"

#include "varsplit/textio.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace varsplit {

namespace {

constexpr int kPosteriorFormat = 1;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class DropConnectParameterization final : public WeightParameterization {
public:
    DropConnectParameterization(const TwoHeadNetwork& net, double rate)
        : layout_(net.layout()), rate_(rate), weights_(net.parameters().begin(), net.parameters().end()),
          masked_(weights_.size()), mask_(weights_.size(), 1) {}

    std::span<double> variables() override { return weights_; }

    std::span<const double> draw(Rng& rng) override {
        mask_ = sample_dropconnect_mask(layout_, rate_, rng);
        for (std::size_t i = 0; i < weights_.size(); ++i) masked_[i] = mask_[i] ? weights_[i] : 0.0;
        return masked_;
    }

    double pullback(std::span<const double> g, std::size_t, std::span<double> out) override {
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = mask_[i] ? g[i] : 0.0;
        return 0.0;
    }

    std::vector<double> point_weights() const override { return weights_; }

private:
    ParameterLayout layout_;
    double rate_;
    std::vector<double> weights_;
    std::vector<double> masked_;
    std::vector<unsigned char> mask_;
};

// Variables are [means..., rhos...]; one reparameterized weight draw per batch.
class VariationalParameterization final : public WeightParameterization {
public:
    VariationalParameterization(const TwoHeadNetwork& init, double initial_rho, double kl_weight)
        : n_(init.parameter_count()), kl_weight_(kl_weight), vars_(2 * n_), weights_(n_), eps_(n_) {
        std::copy(init.parameters().begin(), init.parameters().end(), vars_.begin());
        std::fill(vars_.begin() + static_cast<std::ptrdiff_t>(n_), vars_.end(), initial_rho);
    }

    std::span<double> variables() override { return vars_; }

    std::span<const double> draw(Rng& rng) override {
        std::normal_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < n_; ++i) {
            eps_[i] = unit(rng);
            weights_[i] = vars_[i] + softplus(vars_[n_ + i]) * eps_[i];
        }
        return weights_;
    }

    double pullback(std::span<const double> g, std::size_t rows, std::span<double> out) override {
        const double reg_scale = kl_weight_ / static_cast<double>(rows);
        double kl = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double m = vars_[i];
            const double rho = vars_[n_ + i];
            const double s = softplus(rho);
            const double ds_drho = sigmoid(rho);
            kl += -std::log(s) + 0.5 * (s * s + m * m - 1.0);
            out[i] = g[i] + reg_scale * m;
            out[n_ + i] = (g[i] * eps_[i] + reg_scale * (s - 1.0 / s)) * ds_drho;
        }
        return kl_weight_ * kl;
    }

    std::vector<double> point_weights() const override {
        return std::vector<double>(vars_.begin(), vars_.begin() + static_cast<std::ptrdiff_t>(n_));
    }

    VariationalPosterior posterior() const {
        VariationalPosterior q;
        q.mean.assign(vars_.begin(), vars_.begin() + static_cast<std::ptrdiff_t>(n_));
        q.rho.assign(vars_.begin() + static_cast<std::ptrdiff_t>(n_), vars_.end());
        q.kl_weight = kl_weight_;
        return q;
    }

private:
    std::size_t n_;
    double kl_weight_;
    std::vector<double> vars_;
    std::vector<double> weights_;
    std::vector<double> eps_;
};

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open posterior manifest " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto space = line.find(' ');
        kv[line.substr(0, space)] = space == std::string::npos ? "" : line.substr(space + 1);
    }
    return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("posterior manifest: missing key '" + key + "'");
    return it->second;
}

} // namespace

std::string to_string(SamplerKind kind) {
    switch (kind) {
    case SamplerKind::deep_ensemble: return "deep_ensemble";
    case SamplerKind::mc_dropconnect: return "mc_dropconnect";
    case SamplerKind::bayes_by_backprop: return "bayes_by_backprop";
    }
    return "deep_ensemble";
}

SamplerKind parse_sampler(const std::string& name) {
    if (name == "deep_ensemble") return SamplerKind::deep_ensemble;
    if (name == "mc_dropconnect") return SamplerKind::mc_dropconnect;
    if (name == "bayes_by_backprop") return SamplerKind::bayes_by_backprop;
    throw std::invalid_argument("unknown sampler '" + name +
                                "' (expected deep_ensemble, mc_dropconnect or bayes_by_backprop)");
}

void DropConnectConfig::validate() const {
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw std::invalid_argument("dropconnect: drop_rate must lie in [0,1)");
}

void PosteriorSampler::validate() const {
    if (sample_count == 0) throw std::invalid_argument("sampler: sample count must be at least 1");
    if (kind == SamplerKind::mc_dropconnect) dropconnect.validate();
}

void VariationalPosterior::validate() const {
    if (mean.size() != rho.size()) throw std::invalid_argument("variational posterior: mean/rho length mismatch");
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(std_at(i) > 0.0)) throw std::invalid_argument("variational posterior: std must be positive");
    }
    if (!(kl_weight > 0.0)) throw std::invalid_argument("variational posterior: kl_weight must be positive");
}

double kl_factorized_gaussian(const VariationalPosterior& q) {
    if (q.mean.size() != q.rho.size()) throw std::invalid_argument("kl: mean/rho length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < q.mean.size(); ++i) {
        const double s = q.std_at(i);
        if (!(s > 0.0)) throw std::invalid_argument("kl: std must be positive");
        kl += -std::log(s) + 0.5 * (s * s + q.mean[i] * q.mean[i] - 1.0);
    }
    return kl;
}

std::vector<unsigned char> sample_dropconnect_mask(const ParameterLayout& layout, double drop_rate, Rng& rng) {
    std::vector<unsigned char> mask(layout.total, 1);
    for (const LayerSlice& s : layout.all_layers()) {
        for (std::size_t i = s.weight_offset; i < s.bias_offset; ++i) mask[i] = uniform01(rng) < drop_rate ? 0 : 1;
    }
    return mask;
}

FittedPosterior fit(const PosteriorSampler& sampler, const ArchitectureSpec& spec, const RegressionDataset& data,
                    const TrainingConfig& cfg) {
    sampler.validate();
    cfg.validate();
    if (spec.input_dim != data.input_dim()) throw std::invalid_argument("fit: architecture/dataset dimension mismatch");
    const bool variational = sampler.kind == SamplerKind::bayes_by_backprop;
    if (variational != cfg.kl_weight.has_value()) {
        throw std::invalid_argument(variational ? "fit: bayes_by_backprop requires kl_weight"
                                                : "fit: kl_weight is only valid for bayes_by_backprop");
    }

    FittedPosterior fp;
    fp.kind = sampler.kind;
    fp.sample_count = sampler.sample_count;
    fp.spec = spec;
    fp.dropconnect = sampler.dropconnect;
    fp.training = cfg;

    switch (sampler.kind) {
    case SamplerKind::deep_ensemble:
        for (std::size_t k = 0; k < sampler.sample_count; ++k) {
            TrainingConfig member_cfg = cfg;
            member_cfg.seed = derive_seed(cfg.seed, {k, 0xe5});
            TrainResult r = train(init_parameters(spec, member_cfg.seed), data, member_cfg);
            fp.members.push_back(std::move(r.network));
            fp.traces.push_back(std::move(r.trace));
            fp.seeds.push_back(member_cfg.seed);
        }
        break;
    case SamplerKind::mc_dropconnect: {
        TrainingConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(cfg.seed, {0, 0xdc});
        TwoHeadNetwork init = init_parameters(spec, run_cfg.seed);
        DropConnectParameterization hook(init, sampler.dropconnect.drop_rate);
        TrainResult r = train(std::move(init), data, run_cfg, &hook);
        fp.members.push_back(std::move(r.network));
        fp.traces.push_back(std::move(r.trace));
        fp.seeds.push_back(run_cfg.seed);
        break;
    }
    case SamplerKind::bayes_by_backprop: {
        TrainingConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(cfg.seed, {0, 0xbb});
        TwoHeadNetwork init = init_parameters(spec, run_cfg.seed);
        VariationalParameterization hook(init, sampler.variational.initial_rho, *cfg.kl_weight);
        TrainResult r = train(std::move(init), data, run_cfg, &hook);
        fp.variational = hook.posterior();
        fp.members.push_back(std::move(r.network));
        fp.traces.push_back(std::move(r.trace));
        fp.seeds.push_back(run_cfg.seed);
        break;
    }
    }
    return fp;
}

std::vector<std::vector<double>> draw_parameters(const FittedPosterior& fp, std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw std::invalid_argument("draw: sample count must be positive");
    if (fp.members.empty()) throw std::invalid_argument("draw: posterior has no networks");
    std::vector<std::vector<double>> out;
    out.reserve(samples);
    switch (fp.kind) {
    case SamplerKind::deep_ensemble:
        if (samples != fp.members.size()) {
            throw std::invalid_argument("draw: ensemble has " + std::to_string(fp.members.size()) +
                                        " members but " + std::to_string(samples) + " samples were requested");
        }
        for (const auto& m : fp.members) out.emplace_back(m.parameters().begin(), m.parameters().end());
        break;
    case SamplerKind::mc_dropconnect: {
        const TwoHeadNetwork& net = fp.members.front();
        Rng rng = make_rng(seed, {0xd4});
        for (std::size_t s = 0; s < samples; ++s) {
            const auto mask = sample_dropconnect_mask(net.layout(), fp.dropconnect.drop_rate, rng);
            std::vector<double> theta(net.parameters().begin(), net.parameters().end());
            for (std::size_t i = 0; i < theta.size(); ++i) {
                if (!mask[i]) theta[i] = 0.0;
            }
            out.push_back(std::move(theta));
        }
        break;
    }
    case SamplerKind::bayes_by_backprop: {
        if (!fp.variational) throw std::invalid_argument("draw: variational posterior missing");
        const VariationalPosterior& q = *fp.variational;
        Rng rng = make_rng(seed, {0xd4});
        std::normal_distribution<double> unit(0.0, 1.0);
        for (std::size_t s = 0; s < samples; ++s) {
            std::vector<double> theta(q.mean.size());
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = q.mean[i] + q.std_at(i) * unit(rng);
            out.push_back(std::move(theta));
        }
        break;
    }
    }
    return out;
}

std::vector<GaussianPrediction> draw_predictions(const FittedPosterior& fp, std::span<const double> x,
                                                 std::size_t samples, std::uint64_t seed) {
    const auto thetas = draw_parameters(fp, samples, seed);
    std::vector<GaussianPrediction> preds;
    preds.reserve(samples);
    for (const auto& theta : thetas) preds.push_back(forward_with(fp.members.front(), theta, x));
    return preds;
}

void save_posterior(const FittedPosterior& fp, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw std::runtime_error("cannot write posterior manifest in " + dir.string());
    const TrainingConfig& c = fp.training;
    m << "varsplit-posterior " << kPosteriorFormat << '\n'
      << "kind " << to_string(fp.kind) << '\n'
      << "sample_count " << fp.sample_count << '\n'
      << "drop_rate " << textio::format_exact(fp.dropconnect.drop_rate) << '\n'
      << "networks " << fp.members.size() << '\n'
      << "seeds";
    for (auto s : fp.seeds) m << ' ' << s;
    m << '\n'
      << "beta " << textio::format_exact(c.beta) << '\n'
      << "epochs " << c.epochs << '\n'
      << "batch_size " << c.batch_size << '\n'
      << "lr_initial " << textio::format_exact(c.lr.initial_rate) << '\n'
      << "lr_decay_step " << c.lr.decay_step << '\n'
      << "lr_decay_factor " << textio::format_exact(c.lr.decay_factor) << '\n'
      << "optimizer " << to_string(c.optimizer) << '\n'
      << "seed " << c.seed << '\n'
      << "kl_weight " << (c.kl_weight ? textio::format_exact(*c.kl_weight) : std::string("none")) << '\n'
      << "prior " << (fp.variational ? "unit_gaussian" : "none") << '\n';

    if (fp.kind == SamplerKind::bayes_by_backprop) {
        std::ofstream v(dir / "variational.ckpt");
        v << "varsplit-variational " << kPosteriorFormat << '\n';
        write_architecture(v, fp.spec);
        v << "prior unit_gaussian\n";
        v << "kl_weight " << textio::format_exact(fp.variational->kl_weight) << '\n';
        textio::write_reals(v, "mean", fp.variational->mean);
        textio::write_reals(v, "rho", fp.variational->rho);
        v << "end\n";
    } else if (fp.kind == SamplerKind::mc_dropconnect) {
        save_checkpoint(fp.members.front(), dir / "network.ckpt");
    } else {
        for (std::size_t k = 0; k < fp.members.size(); ++k) {
            save_checkpoint(fp.members[k], dir / ("member_" + std::to_string(k) + ".ckpt"));
        }
    }
    for (std::size_t k = 0; k < fp.traces.size(); ++k) {
        std::ofstream t(dir / ("trace_" + std::to_string(k) + ".csv"));
        fp.traces[k].write_csv(t);
    }
}

FittedPosterior load_posterior(const std::filesystem::path& dir) {
    const auto kv = read_manifest(dir / "manifest.txt");
    if (need(kv, "varsplit-posterior") != std::to_string(kPosteriorFormat)) {
        throw std::runtime_error("posterior manifest: unsupported format version");
    }
    FittedPosterior fp;
    fp.kind = parse_sampler(need(kv, "kind"));
    fp.sample_count = std::stoul(need(kv, "sample_count"));
    fp.dropconnect.drop_rate = textio::parse_exact(need(kv, "drop_rate"));
    {
        std::istringstream seeds(need(kv, "seeds"));
        std::uint64_t s;
        while (seeds >> s) fp.seeds.push_back(s);
    }
    TrainingConfig& c = fp.training;
    c.beta = textio::parse_exact(need(kv, "beta"));
    c.epochs = std::stoul(need(kv, "epochs"));
    c.batch_size = std::stoul(need(kv, "batch_size"));
    c.lr.initial_rate = textio::parse_exact(need(kv, "lr_initial"));
    c.lr.decay_step = std::stoul(need(kv, "lr_decay_step"));
    c.lr.decay_factor = textio::parse_exact(need(kv, "lr_decay_factor"));
    c.optimizer = parse_optimizer(need(kv, "optimizer"));
    c.seed = std::stoull(need(kv, "seed"));
    if (need(kv, "kl_weight") != "none") c.kl_weight = textio::parse_exact(need(kv, "kl_weight"));

    if (fp.kind == SamplerKind::bayes_by_backprop) {
        std::ifstream v(dir / "variational.ckpt");
        if (!v) throw std::runtime_error("cannot open variational checkpoint in " + dir.string());
        textio::read_field(v, "varsplit-variational");
        fp.spec = read_architecture(v);
        if (textio::read_field(v, "prior") != "unit_gaussian") throw std::runtime_error("unsupported prior");
        VariationalPosterior q;
        q.kl_weight = textio::parse_exact(textio::read_field(v, "kl_weight"));
        q.mean = textio::read_reals(v, "mean");
        q.rho = textio::read_reals(v, "rho");
        textio::read_field(v, "end");
        q.validate();
        fp.members.emplace_back(fp.spec, q.mean, fp.seeds.empty() ? 0 : fp.seeds.front());
        fp.variational = std::move(q);
    } else if (fp.kind == SamplerKind::mc_dropconnect) {
        fp.members.push_back(load_checkpoint(dir / "network.ckpt"));
        fp.spec = fp.members.front().spec();
    } else {
        const std::size_t count = std::stoul(need(kv, "networks"));
        for (std::size_t k = 0; k < count; ++k) {
            fp.members.push_back(load_checkpoint(dir / ("member_" + std::to_string(k) + ".ckpt")));
        }
        if (fp.members.empty()) throw std::runtime_error("posterior: ensemble without members");
        fp.spec = fp.members.front().spec();
    }
    return fp;
}

} // namespace varsplit
