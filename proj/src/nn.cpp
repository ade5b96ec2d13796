#include "varsplit/nn.hpp"

#include "varsplit/rng.hpp"
#include "varsplit/textio.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varsplit {

namespace {

constexpr int kLayoutVersion = 1;

double activate(Activation a, double z) {
    switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return sigmoid(z);
    }
    return z;
}

double activation_slope(Activation a, double pre, double post) {
    switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return post * (1.0 - post);
    }
    return 1.0;
}

LayerSlice make_slice(std::size_t& cursor, std::size_t fan_in, std::size_t fan_out) {
    LayerSlice s;
    s.fan_in = fan_in;
    s.fan_out = fan_out;
    s.weight_offset = cursor;
    cursor += fan_in * fan_out;
    s.bias_offset = cursor;
    cursor += fan_out;
    return s;
}

double dot(const double* w, const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i];
    return acc;
}

} // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown hidden activation '" + name + "' (expected relu or sigmoid)");
}

void ArchitectureSpec::validate() const {
    if (input_dim == 0) throw std::invalid_argument("architecture: input_dim must be positive");
    if (hidden_widths.empty()) throw std::invalid_argument("architecture: at least one hidden layer is required");
    for (std::size_t w : hidden_widths) {
        if (w == 0) throw std::invalid_argument("architecture: hidden layer widths must be positive");
    }
    if (!(variance_floor >= 0.0) || !std::isfinite(variance_floor)) {
        throw std::invalid_argument("architecture: variance_floor must be finite and nonnegative");
    }
}

std::size_t ArchitectureSpec::parameter_count() const { return ParameterLayout::from_spec(*this).total; }

ParameterLayout ParameterLayout::from_spec(const ArchitectureSpec& spec) {
    spec.validate();
    ParameterLayout layout;
    std::size_t cursor = 0;
    std::size_t fan_in = spec.input_dim;
    for (std::size_t width : spec.hidden_widths) {
        layout.hidden.push_back(make_slice(cursor, fan_in, width));
        fan_in = width;
    }
    layout.mean_head = make_slice(cursor, fan_in, 1);
    layout.variance_head = make_slice(cursor, fan_in, 1);
    layout.total = cursor;
    return layout;
}

bool ParameterLayout::is_weight(std::size_t i) const {
    for (const LayerSlice& s : all_layers()) {
        if (i >= s.weight_offset && i < s.bias_offset) return true;
    }
    return false;
}

std::vector<LayerSlice> ParameterLayout::all_layers() const {
    std::vector<LayerSlice> out = hidden;
    out.push_back(mean_head);
    out.push_back(variance_head);
    return out;
}

TwoHeadNetwork::TwoHeadNetwork(ArchitectureSpec spec, std::vector<double> parameters, std::uint64_t init_seed)
    : spec_(std::move(spec)), layout_(ParameterLayout::from_spec(spec_)), parameters_(std::move(parameters)),
      init_seed_(init_seed) {
    if (parameters_.size() != layout_.total) {
        throw std::invalid_argument("network: expected " + std::to_string(layout_.total) + " parameters, got " +
                                    std::to_string(parameters_.size()));
    }
}

TwoHeadNetwork TwoHeadNetwork::zeros(const ArchitectureSpec& spec) {
    return TwoHeadNetwork(spec, std::vector<double>(spec.parameter_count(), 0.0));
}

TwoHeadNetwork init_parameters(const ArchitectureSpec& spec, std::uint64_t seed) {
    const ParameterLayout layout = ParameterLayout::from_spec(spec);
    std::vector<double> params(layout.total, 0.0);
    Rng rng(derive_seed(seed, {0x1417}));
    auto fill = [&](const LayerSlice& s, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t i = 0; i < s.weight_count(); ++i) params[s.weight_offset + i] = dist(rng);
    };
    for (const LayerSlice& s : layout.hidden) {
        const double scale = spec.hidden_activation == Activation::relu ? 6.0 : 3.0;
        fill(s, std::sqrt(scale / static_cast<double>(s.fan_in)));
    }
    fill(layout.mean_head, std::sqrt(3.0 / static_cast<double>(layout.mean_head.fan_in)));
    fill(layout.variance_head, std::sqrt(3.0 / static_cast<double>(layout.variance_head.fan_in)));
    return TwoHeadNetwork(spec, std::move(params), seed);
}

GaussianPrediction forward(const TwoHeadNetwork& net, std::span<const double> x) {
    return forward_with(net, net.parameters(), x, nullptr);
}

GaussianPrediction forward_with(const TwoHeadNetwork& net, std::span<const double> params,
                                std::span<const double> x, ForwardTape* tape) {
    const ArchitectureSpec& spec = net.spec();
    const ParameterLayout& layout = net.layout();
    if (x.size() != spec.input_dim) {
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) + " features, network expects " +
                                    std::to_string(spec.input_dim));
    }
    if (params.size() != layout.total) throw std::invalid_argument("forward: parameter vector size mismatch");

    ForwardTape local;
    ForwardTape& t = tape ? *tape : local;
    t.input.assign(x.begin(), x.end());
    t.pre.resize(layout.hidden.size());
    t.act.resize(layout.hidden.size());

    const double* p = params.data();
    const double* in = t.input.data();
    for (std::size_t l = 0; l < layout.hidden.size(); ++l) {
        const LayerSlice& s = layout.hidden[l];
        auto& pre = t.pre[l];
        auto& act = t.act[l];
        pre.resize(s.fan_out);
        act.resize(s.fan_out);
        for (std::size_t o = 0; o < s.fan_out; ++o) {
            pre[o] = dot(p + s.weight_offset + o * s.fan_in, in, s.fan_in) + p[s.bias_offset + o];
            act[o] = activate(spec.hidden_activation, pre[o]);
        }
        in = act.data();
    }
    const LayerSlice& mh = layout.mean_head;
    const LayerSlice& vh = layout.variance_head;
    t.mean_pre = dot(p + mh.weight_offset, in, mh.fan_in) + p[mh.bias_offset];
    t.variance_pre = dot(p + vh.weight_offset, in, vh.fan_in) + p[vh.bias_offset];
    return GaussianPrediction{t.mean_pre, softplus(t.variance_pre) + spec.variance_floor};
}

void accumulate_backward(const TwoHeadNetwork& net, std::span<const double> params, const ForwardTape& tape,
                         OutputGrad upstream, std::span<double> grad) {
    const ParameterLayout& layout = net.layout();
    if (!std::isfinite(upstream.d_mu) || !std::isfinite(upstream.d_sigma2)) {
        throw std::invalid_argument("backward: upstream gradients must be finite");
    }
    if (grad.size() != layout.total || params.size() != layout.total) {
        throw std::invalid_argument("backward: gradient/parameter size mismatch");
    }
    const double* p = params.data();
    double* g = grad.data();
    const std::size_t depth = layout.hidden.size();
    const std::vector<double>& last = tape.act[depth - 1];

    const double d_mean_pre = upstream.d_mu;
    const double d_var_pre = upstream.d_sigma2 * sigmoid(tape.variance_pre);

    const LayerSlice& mh = layout.mean_head;
    const LayerSlice& vh = layout.variance_head;
    for (std::size_t i = 0; i < mh.fan_in; ++i) {
        g[mh.weight_offset + i] += d_mean_pre * last[i];
        g[vh.weight_offset + i] += d_var_pre * last[i];
    }
    g[mh.bias_offset] += d_mean_pre;
    g[vh.bias_offset] += d_var_pre;

    // delta holds dL/d(activation) of the current layer, then dL/d(pre-activation).
    std::vector<double> delta(mh.fan_in);
    for (std::size_t i = 0; i < mh.fan_in; ++i) {
        delta[i] = d_mean_pre * p[mh.weight_offset + i] + d_var_pre * p[vh.weight_offset + i];
    }
    std::vector<double> next;
    for (std::size_t l = depth; l-- > 0;) {
        const LayerSlice& s = layout.hidden[l];
        const auto& pre = tape.pre[l];
        const auto& act = tape.act[l];
        for (std::size_t o = 0; o < s.fan_out; ++o) {
            delta[o] *= activation_slope(net.spec().hidden_activation, pre[o], act[o]);
        }
        const double* in = l == 0 ? tape.input.data() : tape.act[l - 1].data();
        for (std::size_t o = 0; o < s.fan_out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            double* gw = g + s.weight_offset + o * s.fan_in;
            for (std::size_t i = 0; i < s.fan_in; ++i) gw[i] += d * in[i];
            g[s.bias_offset + o] += d;
        }
        if (l == 0) break;
        next.assign(s.fan_in, 0.0);
        for (std::size_t o = 0; o < s.fan_out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* w = p + s.weight_offset + o * s.fan_in;
            for (std::size_t i = 0; i < s.fan_in; ++i) next[i] += d * w[i];
        }
        delta.swap(next);
    }
}

std::vector<double> backward(const TwoHeadNetwork& net, std::span<const double> x, OutputGrad upstream) {
    ForwardTape tape;
    forward_with(net, net.parameters(), x, &tape);
    std::vector<double> grad(net.parameter_count(), 0.0);
    accumulate_backward(net, net.parameters(), tape, upstream, grad);
    return grad;
}

void write_architecture(std::ostream& os, const ArchitectureSpec& spec) {
    os << "input_dim " << spec.input_dim << '\n';
    os << "hidden_widths " << spec.hidden_widths.size();
    for (std::size_t w : spec.hidden_widths) os << ' ' << w;
    os << '\n';
    os << "hidden_activation " << to_string(spec.hidden_activation) << '\n';
    os << "variance_activation softplus\n";
    os << "variance_floor " << textio::format_exact(spec.variance_floor) << '\n';
}

ArchitectureSpec read_architecture(std::istream& is) {
    ArchitectureSpec spec;
    spec.input_dim = std::stoul(textio::read_field(is, "input_dim"));
    std::istringstream widths(textio::read_field(is, "hidden_widths"));
    std::size_t count = 0;
    widths >> count;
    spec.hidden_widths.assign(count, 0);
    for (auto& w : spec.hidden_widths) {
        if (!(widths >> w)) throw std::runtime_error("checkpoint: truncated hidden_widths");
    }
    spec.hidden_activation = parse_activation(textio::read_field(is, "hidden_activation"));
    if (textio::read_field(is, "variance_activation") != "softplus") {
        throw std::runtime_error("checkpoint: unsupported variance activation");
    }
    spec.variance_floor = textio::parse_exact(textio::read_field(is, "variance_floor"));
    spec.validate();
    return spec;
}

void write_network(std::ostream& os, const TwoHeadNetwork& net) {
    os << "varsplit-network " << kLayoutVersion << '\n';
    write_architecture(os, net.spec());
    os << "init_seed " << net.init_seed() << '\n';
    textio::write_reals(os, "parameters", net.parameters());
    os << "end\n";
}

TwoHeadNetwork read_network(std::istream& is) {
    const std::string version = textio::read_field(is, "varsplit-network");
    if (version != std::to_string(kLayoutVersion)) {
        throw std::runtime_error("checkpoint: unsupported layout version " + version);
    }
    ArchitectureSpec spec = read_architecture(is);
    const std::uint64_t seed = std::stoull(textio::read_field(is, "init_seed"));
    std::vector<double> params = textio::read_reals(is, "parameters");
    textio::read_field(is, "end");
    return TwoHeadNetwork(std::move(spec), std::move(params), seed);
}

void save_checkpoint(const TwoHeadNetwork& net, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    write_network(os, net);
}

TwoHeadNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_network(is);
}

} // namespace varsplit
