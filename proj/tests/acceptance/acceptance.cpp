// Runs acceptance criteria 1-9 and prints one PASS / FAIL / SKIP line each.
// Exit status is nonzero when any criterion fails.

#include "varsplit/cli.hpp"
#include "varsplit/config.hpp"
#include "varsplit/disentangle.hpp"
#include "varsplit/harness.hpp"
#include "varsplit/objectives.hpp"
#include "varsplit/posterior.hpp"
#include "varsplit/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace varsplit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum class Status { pass, fail, skip } status = Status::fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
    return {ok ? Outcome::Status::pass : Outcome::Status::fail, std::move(detail)};
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

fs::path work_root() {
    if (const char* env = std::getenv("VARSPLIT_ACCEPTANCE_DIR"); env && *env) return env;
    return fs::temp_directory_path() / "varsplit_acceptance";
}

fs::path config_path(const std::string& name) { return fs::path(VARSPLIT_SOURCE_DIR) / "configs" / name; }

std::size_t hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double mixture_sample_variance(const std::vector<GaussianPrediction>& preds, std::size_t draws, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, preds.size() - 1);
    std::normal_distribution<double> unit(0.0, 1.0);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t n = 1; n <= draws; ++n) {
        const auto& c = preds[pick(rng)];
        const double y = c.mu + std::sqrt(c.sigma2) * unit(rng);
        const double d = y - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (y - mean);
    }
    return m2 / static_cast<double>(draws);
}

std::vector<GaussianPrediction> random_set(Rng& rng, std::size_t s) {
    std::uniform_real_distribution<double> um(-10.0, 10.0), ulv(-4.0, 2.0);
    std::vector<GaussianPrediction> out(s);
    for (auto& p : out) p = {um(rng), std::exp(ulv(rng))};
    return out;
}

// 1. tu = au + eu, checked against a long-double two-pass mixture variance and
// against sampled mixtures.
Outcome mixture_identity() {
    Rng rng(101);
    std::uniform_int_distribution<std::size_t> us(1, 64);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto preds = random_set(rng, us(rng));
        const auto u = decompose(preds);
        long double mbar = 0.0L;
        for (const auto& p : preds) mbar += p.mu;
        mbar /= static_cast<long double>(preds.size());
        long double var = 0.0L;
        for (const auto& p : preds) var += p.sigma2 + (p.mu - mbar) * (p.mu - mbar);
        var /= static_cast<long double>(preds.size());
        worst = std::max(worst, static_cast<double>(std::fabs((u.au + u.eu) - var) / var));
        worst = std::max(worst, std::abs(u.tu - (u.au + u.eu)) / u.tu);
    }
    double worst_mc = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto preds = random_set(rng, us(rng));
        const auto u = decompose(preds);
        worst_mc = std::max(worst_mc, std::abs(mixture_sample_variance(preds, 1000000, rng) - u.tu) / u.tu);
    }
    return verdict(worst <= 1e-12 && worst_mc < 0.01,
                   "max rel err " + num(worst) + ", max sampled rel err " + num(worst_mc));
}

// 2. Analytic beta-NLL gradient through the network vs central differences,
// with the stop-gradient weight held at its unperturbed value.
Outcome gradient_check() {
    Rng rng(202);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (double beta : {0.0, 0.5, 1.0}) {
        for (int trial = 0; trial < 50; ++trial) {
            ArchitectureSpec spec;
            spec.input_dim = 3;
            spec.hidden_widths = {8, 6};
            auto net = init_parameters(spec, 1000 + trial);
            for (auto& v : net.mutable_parameters()) v += 0.1 * u(rng);
            const std::vector<double> x{u(rng), u(rng), u(rng)};
            const double y = 2.0 * u(rng);
            const auto pred = forward(net, x);
            const double w = beta_nll_loss(pred, y, beta).weight;
            const auto grad = backward(net, x, beta_nll_output_grads(pred, y, beta));
            std::vector<double> p(net.parameters().begin(), net.parameters().end());
            auto loss = [&] { return w * nll_loss(forward_with(net, p, x), y); };
            double diff2 = 0.0, ref2 = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double keep = p[i];
                p[i] = keep + h;
                const double up = loss();
                p[i] = keep - h;
                const double down = loss();
                p[i] = keep;
                const double fd = (up - down) / (2.0 * h);
                diff2 += (fd - grad[i]) * (fd - grad[i]);
                ref2 += fd * fd;
            }
            worst = std::max(worst, std::sqrt(diff2 / ref2));
        }
    }
    return verdict(worst < 1e-5, "max relative error " + num(worst) + " over 150 triples");
}

// 3. beta = 0 is the NLL exactly; at beta = 1 the mean gradient ignores sigma2.
Outcome beta_endpoints() {
    Rng rng(303);
    std::uniform_real_distribution<double> um(-5.0, 5.0), ulv(-6.0, 3.0);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const GaussianPrediction p{um(rng), std::exp(ulv(rng))};
        const double y = um(rng);
        if (beta_nll_loss(p, y, 0.0).value != nll_loss(p, y)) ++mismatches;
        const double a = beta_nll_output_grads(p, y, 1.0).d_mu;
        const double b = beta_nll_output_grads({p.mu, std::exp(ulv(rng))}, y, 1.0).d_mu;
        if (a != b) ++mismatches;
    }
    return verdict(mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 draws");
}

// 4. Synthetic OOD study with deep ensembles.
Outcome synthetic_direction(const fs::path& out) {
    ExperimentConfig cfg = load_config(config_path("exp1.cfg"));
    cfg.samplers.erase(std::remove_if(cfg.samplers.begin(), cfg.samplers.end(),
                                      [](const SamplerPlan& p) { return p.kind != SamplerKind::deep_ensemble; }),
                       cfg.samplers.end());
    cfg.samplers.front().betas = {0.0, 0.5, 1.0};
    cfg.samplers.front().samples = 5;
    cfg.seeds = {1, 2, 3};
    cfg.out_dir = out;
    cfg.threads = hardware_threads();
    const auto report = run_experiment(cfg);
    std::map<std::pair<double, std::uint64_t>, SyntheticSummary> cell;
    for (const auto& s : report.synthetic) cell[{s.beta, s.seed}] = s;
    int eu_ok = 0, rho_ok = 0, iqr_ok = 0;
    std::string detail;
    for (std::uint64_t seed : cfg.seeds) {
        const auto& mid = cell[{0.5, seed}];
        const auto& b0 = cell[{0.0, seed}];
        const auto& b1 = cell[{1.0, seed}];
        const bool ok = mid.status == "ok" && b0.status == "ok" && b1.status == "ok";
        const double iqr_ratio = b1.au_iqr_id / b0.au_iqr_id;
        eu_ok += ok && mid.eu_ratio >= 2.0;
        rho_ok += ok && mid.spearman_au_x && *mid.spearman_au_x >= 0.5;
        iqr_ok += ok && iqr_ratio <= 0.6;
        detail += "seed " + std::to_string(seed) + ": EU ood/id " + num(mid.eu_ratio) + ", rho(AU,x) " +
                  (mid.spearman_au_x ? num(*mid.spearman_au_x) : "n/a") + ", IQR b1/b0 " + num(iqr_ratio) + "; ";
    }
    return verdict(eu_ok >= 2 && rho_ok >= 2 && iqr_ok >= 2, detail);
}

// 5. Data-density study on the power-curve surrogate, smaller beta per sampler.
Outcome density_direction(const fs::path& out) {
    ExperimentConfig cfg = load_config(config_path("exp2.cfg"));
    for (auto& p : cfg.samplers) p.betas = {*std::min_element(p.betas.begin(), p.betas.end())};
    cfg.out_dir = out;
    cfg.threads = hardware_threads();
    const auto report = run_experiment(cfg);
    bool ok = report.data_property.size() == 3;
    std::string detail;
    for (const auto& s : report.data_property) {
        const bool band = s.status == "ok" && s.eu_in_band < s.eu_out_band;
        const bool needs_rho = s.sampler != SamplerKind::bayes_by_backprop;
        const bool rho = !needs_rho || (s.spearman_au_density && *s.spearman_au_density < 0.0);
        ok = ok && band && rho;
        detail += to_string(s.sampler) + " b" + num(s.beta) + ": EU in " + num(s.eu_in_band) + " < out " +
                  num(s.eu_out_band) + ", rho(AU,density) " +
                  (s.spearman_au_density ? num(*s.spearman_au_density) : "n/a") + "; ";
    }
    return verdict(ok, detail);
}

// 6. Real SCADA numbers, only when the file is supplied.
Outcome real_scada(const fs::path& out) {
    const char* path = std::getenv("VARSPLIT_SCADA_CSV");
    if (!path || !*path) return {Outcome::Status::skip, "set VARSPLIT_SCADA_CSV to the turbine SCADA export to run"};
    ExperimentConfig cfg = load_config(config_path("exp2.cfg"));
    cfg.surrogate = false;
    cfg.dataset = fs::path(path);
    cfg.schema = ScadaSchema::kaggle_turbine();
    if (const char* schema = std::getenv("VARSPLIT_SCADA_SCHEMA"); schema && std::string(schema) == "default") {
        cfg.schema = ScadaSchema{};
    }
    cfg.samplers.erase(std::remove_if(cfg.samplers.begin(), cfg.samplers.end(),
                                      [](const SamplerPlan& p) { return p.kind != SamplerKind::deep_ensemble; }),
                       cfg.samplers.end());
    cfg.out_dir = out;
    cfg.threads = hardware_threads();
    const auto report = run_experiment(cfg);
    bool ok = !report.data_property.empty();
    std::string detail;
    for (const auto& s : report.data_property) {
        ok = ok && s.status == "ok" && s.mse <= 0.003;
        detail += "ensemble b" + num(s.beta) + " mse " + num(s.mse) + "; ";
    }
    return verdict(ok, detail);
}

// 7. EU versus training-set size on the hourly surrogate.
Outcome scaling_trend(const fs::path& out) {
    ExperimentConfig cfg = load_config(config_path("exp3_quick.cfg"));
    if (const char* series = std::getenv("VARSPLIT_SERIES_CSV"); series && *series) {
        cfg.surrogate = false;
        cfg.dataset = fs::path(series);
    }
    cfg.out_dir = out;
    cfg.threads = hardware_threads();
    const auto report = run_experiment(cfg);
    std::map<SamplerKind, int> passes;
    std::string detail;
    for (const auto& s : report.scaling_summary) {
        const bool ok = s.spearman_ratio_eu && s.eu_at_min_ratio && s.eu_at_max_ratio &&
                        *s.eu_at_max_ratio < *s.eu_at_min_ratio && *s.spearman_ratio_eu <= -0.6;
        passes[s.sampler] += ok;
        detail += to_string(s.sampler) + " s" + std::to_string(s.seed) + " rho " +
                  (s.spearman_ratio_eu ? num(*s.spearman_ratio_eu) : "n/a") + "; ";
    }
    bool ok = passes.size() == cfg.samplers.size();
    for (const auto& [k, n] : passes) ok = ok && 2 * n > static_cast<int>(cfg.seeds.size());
    return verdict(ok, detail);
}

// 8. Posterior properties: KL, mask rate, exact zero EU.
Outcome posterior_properties() {
    bool ok = true;
    std::string detail;

    const double rho_unit = std::log(std::exp(1.0) - 1.0);
    VariationalPosterior prior;
    prior.mean.assign(10, 0.0);
    prior.rho.assign(10, rho_unit);
    const double kl_prior = kl_factorized_gaussian(prior);
    ok = ok && std::abs(kl_prior) < 1e-12;

    Rng rng(808);
    std::uniform_real_distribution<double> um(-2.0, 2.0), ur(-4.0, 2.0);
    double min_kl = 1e300;
    for (int i = 0; i < 1000; ++i) {
        VariationalPosterior q;
        for (int k = 0; k < 4; ++k) {
            q.mean.push_back(um(rng));
            q.rho.push_back(ur(rng));
        }
        min_kl = std::min(min_kl, kl_factorized_gaussian(q));
    }
    ok = ok && min_kl > 0.0;

    VariationalPosterior q;
    q.mean = {0.8, -1.2, 0.1};
    q.rho = {-0.5, 0.3, -1.5};
    const double kl = kl_factorized_gaussian(q);
    std::normal_distribution<double> unit(0.0, 1.0);
    double acc = 0.0;
    const int draws = 1000000;
    for (int d = 0; d < draws; ++d) {
        for (std::size_t i = 0; i < q.mean.size(); ++i) {
            const double s = q.std_at(i), e = unit(rng), w = q.mean[i] + s * e;
            acc += -std::log(s) - 0.5 * e * e + 0.5 * w * w;
        }
    }
    const double kl_err = std::abs(acc / draws - kl) / kl;
    ok = ok && kl_err < 0.01;
    detail += "KL(prior) " + num(kl_prior) + ", min KL " + num(min_kl) + ", MC rel err " + num(kl_err);

    ArchitectureSpec big;
    big.hidden_widths = {200, 200};
    const auto layout = ParameterLayout::from_spec(big);
    for (double rate : {0.01, 0.05}) {
        std::size_t weights = 0, dropped = 0;
        while (weights < 100000) {
            const auto mask = sample_dropconnect_mask(layout, rate, rng);
            for (std::size_t i = 0; i < mask.size(); ++i) {
                if (!layout.is_weight(i)) {
                    ok = ok && mask[i] == 1;
                    continue;
                }
                ++weights;
                dropped += mask[i] == 0;
            }
        }
        const double got = static_cast<double>(dropped) / static_cast<double>(weights);
        ok = ok && std::abs(got - rate) <= 0.005;
        detail += ", mask rate " + num(got) + " (target " + num(rate) + ")";
    }

    std::size_t nonzero = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto one = random_set(rng, 1).front();
        const std::vector<GaussianPrediction> same(1 + i % 64, one);
        nonzero += decompose(same).eu != 0.0;
    }
    ok = ok && nonzero == 0;
    detail += ", nonzero EU for identical sets " + std::to_string(nonzero);
    return verdict(ok, detail);
}

std::map<std::string, std::string> read_csvs(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        out[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
    return out;
}

// 9. Two CLI runs with one config give byte-identical CSVs.
Outcome determinism(const fs::path& out) {
    fs::create_directories(out);
    const fs::path syn = out / "synthetic.cfg", sc = out / "scaling.cfg";
    std::ofstream(syn) << "experiment = synthetic_ood\nhidden = 16\nseeds = 1, 2\nbetas = 0.5\nn_train = 200\n"
                          "epochs = 5\nsamples = 6\nsamples.deep_ensemble = 3\ngrid_points = 31\n";
    std::ofstream(sc) << "experiment = dataset_scaling\nsurrogate = true\nsurrogate_rows = 400\nhidden = 8\n"
                         "lags = 6\nratios = 0.5, 1.0\nepochs = 2\nbatch_size = 32\nsamples = 4\n";
    bool ok = true;
    std::string detail;
    for (const auto& [command, file] : {std::pair{"synthetic", syn}, std::pair{"scaling", sc}}) {
        std::vector<std::map<std::string, std::string>> runs;
        for (int r = 0; r < 2; ++r) {
            const fs::path dir = out / (std::string(command) + "_" + std::to_string(r));
            fs::remove_all(dir);
            std::ostringstream o, e;
            const int code = run_cli({command, "--config", file.string(), "--out-dir", dir.string(), "--threads",
                                      std::to_string(r == 0 ? 1 : hardware_threads() + 1)},
                                     o, e);
            ok = ok && code == 0;
            runs.push_back(read_csvs(dir));
        }
        ok = ok && !runs[0].empty() && runs[0] == runs[1];
        detail += std::string(command) + ": " + std::to_string(runs[0].size()) + " CSVs " +
                  (runs[0] == runs[1] ? "identical" : "differ") + "; ";
    }
    return verdict(ok, detail);
}

} // namespace

int main() {
    const fs::path root = work_root();
    fs::remove_all(root);
    fs::create_directories(root);

    struct Criterion {
        int id;
        std::string name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "mixture variance identity", 30, mixture_identity},
        {2, "beta-NLL gradient vs finite differences", 30, gradient_check},
        {3, "beta endpoint identities", 5, beta_endpoints},
        {4, "synthetic OOD direction (ensembles)", 300, [&] { return synthetic_direction(root / "c4"); }},
        {5, "density direction on the surrogate", 600, [&] { return density_direction(root / "c5"); }},
        {6, "real SCADA ensemble MSE", 3600, [&] { return real_scada(root / "c6"); }},
        {7, "EU decreases with training-set size", 900, [&] { return scaling_trend(root / "c7"); }},
        {8, "posterior property suite", 60, posterior_properties},
        {9, "byte-identical reruns", 600, [&] { return determinism(root / "c9"); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Outcome::Status::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.status != Outcome::Status::skip && secs > c.budget_seconds) {
            o.status = Outcome::Status::fail;
            o.detail += " runtime over budget (" + num(c.budget_seconds) + " s)";
        }
        const char* tag = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::skip ? "SKIP" : "FAIL";
        failures += o.status == Outcome::Status::fail;
        std::cout << tag << " criterion " << c.id << ": " << c.name << " [" << num(secs) << " s] " << o.detail
                  << std::endl;
    }
    std::cout << (failures == 0 ? "acceptance: all criteria passed or skipped" : "acceptance: failures") << std::endl;
    return failures == 0 ? 0 : 1;
}
