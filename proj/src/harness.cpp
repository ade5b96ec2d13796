#include "varsplit/harness.hpp"

#include "varsplit/csv.hpp"
#include "varsplit/disentangle.hpp"
#include "varsplit/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace varsplit {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;
using Json = nlohmann::ordered_json;

constexpr std::uint64_t kDataStream = 0x51;
constexpr std::uint64_t kTrainStream = 0x7e;
constexpr std::uint64_t kDecomposeStream = 0xde;
constexpr std::uint64_t kSubsampleStream = 0x5b;

std::uint64_t kind_index(SamplerKind k) { return static_cast<std::uint64_t>(k); }

/// Runs fn(0..n-1) on up to `threads` workers. fn must not throw.
void for_each_cell(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

ArchitectureSpec architecture(const ExperimentConfig& cfg, std::size_t input_dim) {
    ArchitectureSpec spec;
    spec.input_dim = input_dim;
    spec.hidden_widths = cfg.hidden;
    spec.hidden_activation = cfg.activation;
    spec.variance_floor = cfg.variance_floor;
    spec.validate();
    return spec;
}

PosteriorSampler sampler_of(const SamplerPlan& plan) {
    PosteriorSampler s;
    s.kind = plan.kind;
    s.sample_count = plan.samples;
    s.dropconnect.drop_rate = plan.drop_rate;
    s.variational.initial_rho = plan.initial_rho;
    return s;
}

TrainingConfig training_of(const SamplerPlan& plan, double beta, std::uint64_t run_seed, std::size_t n_train) {
    TrainingConfig t;
    t.beta = beta;
    t.epochs = plan.epochs;
    t.batch_size = plan.batch_size;
    t.lr = plan.lr;
    t.optimizer = plan.optimizer;
    t.seed = derive_seed(run_seed, {kind_index(plan.kind), kTrainStream});
    if (plan.kind == SamplerKind::bayes_by_backprop) {
        t.kl_weight = plan.kl_weight ? *plan.kl_weight : default_kl_weight(n_train, plan.batch_size);
    }
    return t;
}

std::uint64_t decompose_seed(SamplerKind kind, std::uint64_t run_seed) {
    return derive_seed(run_seed, {kind_index(kind), kDecomposeStream});
}

std::string fmt(double v) { return csv::format(v); }
std::string fmt(const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); }

std::string beta_tag(double beta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", beta);
    return buf;
}

std::string failure_status(const std::exception& e) { return std::string("failed: ") + e.what(); }

std::vector<double> mu_bars(const std::vector<PointDecomposition>& d) {
    std::vector<double> out;
    out.reserve(d.size());
    for (const auto& p : d) out.push_back(p.mu_bar);
    return out;
}

/// Collects output files and writes the manifest.
class ArtifactSink {
public:
    explicit ArtifactSink(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path path = dir_ / name;
        fs::create_directories(path.parent_path());
        {
            std::ofstream os(path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + path.string());
            body(os);
            if (!os) throw std::runtime_error("write failed for " + path.string());
        }
        add(path);
    }

    void add(const fs::path& path) {
        std::lock_guard<std::mutex> lock(mutex_);
        files_.push_back(path);
    }

    void add_tree(const fs::path& root) {
        std::vector<fs::path> found;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        for (auto& p : found) add(p);
    }

    std::vector<fs::path> files() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return files_;
    }

private:
    fs::path dir_;
    mutable std::mutex mutex_;
    std::vector<fs::path> files_;
};

struct ManifestRun {
    SamplerKind sampler;
    double beta;
    std::uint64_t seed;
    std::optional<double> ratio;
    std::string status;
    double mse;
};

struct ManifestDataset {
    std::string name;
    DatasetFingerprint fp;
    std::string provenance;
};

void write_manifest(ArtifactSink& sink, const ExperimentConfig& cfg, const std::vector<ManifestDataset>& datasets,
                    const std::vector<ManifestRun>& runs, double wall_seconds, const Json& extra,
                    ExperimentReport& report) {
    const auto files = sink.files();
    Json artifacts = Json::array();
    for (const auto& f : files) {
        std::error_code ec;
        const auto size = fs::file_size(f, ec);
        if (ec || size == 0) throw std::runtime_error("artifact missing or empty: " + f.string());
        artifacts.push_back(Json{{"path", fs::relative(f, sink.dir()).generic_string()}, {"bytes", size}});
    }
    Json m;
    m["experiment"] = to_string(cfg.experiment);
    std::size_t failed = 0;
    for (const auto& r : runs) failed += r.status != "ok";
    m["status"] = failed == 0 ? "ok" : "partial";
    m["failed_cells"] = failed;
    m["config"] = to_key_values(cfg);
    Json ds = Json::array();
    for (const auto& d : datasets) {
        ds.push_back(Json{{"name", d.name},
                          {"rows", d.fp.rows},
                          {"cols", d.fp.cols},
                          {"stats_hash", d.fp.stats_hash},
                          {"provenance", d.provenance}});
    }
    m["datasets"] = ds;
    Json jr = Json::array();
    for (const auto& r : runs) {
        Json e{{"sampler", to_string(r.sampler)}, {"beta", r.beta}, {"seed", r.seed}};
        if (r.ratio) e["ratio"] = *r.ratio;
        e["status"] = r.status;
        if (r.status == "ok") {
            e["mse"] = r.mse;
        } else {
            e["mse"] = nullptr;
        }
        jr.push_back(e);
    }
    m["runs"] = jr;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    m["wall_seconds"] = wall_seconds;
    m["artifacts"] = artifacts;
    m["note"] = std::string(kBiasResidualNote);

    const fs::path path = sink.dir() / "manifest.json";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << m.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed for " + path.string());
    report.manifest = path;
    report.artifacts = files;
    report.failed_cells = failed;
    report.wall_seconds = wall_seconds;
}

struct TraceBlock {
    std::vector<std::string> prefix;
    std::vector<TrainingTrace> traces;
};

void write_traces(ArtifactSink& sink, const std::vector<std::string>& prefix_header,
                  const std::vector<TraceBlock>& blocks) {
    sink.write("training_trace.csv", [&](std::ostream& os) {
        auto header = prefix_header;
        for (const char* c : {"member", "epoch", "mean_loss", "mse", "learning_rate"}) header.emplace_back(c);
        os << csv::join(header) << '\n';
        for (const auto& b : blocks) {
            for (std::size_t m = 0; m < b.traces.size(); ++m) {
                for (const auto& e : b.traces[m].epochs) {
                    auto row = b.prefix;
                    row.push_back(std::to_string(m));
                    row.push_back(std::to_string(e.epoch));
                    row.push_back(fmt(e.mean_loss));
                    row.push_back(fmt(e.mse));
                    row.push_back(fmt(e.learning_rate));
                    os << csv::join(row) << '\n';
                }
            }
        }
    });
}

void maybe_save_posterior(const ExperimentConfig& cfg, ArtifactSink& sink, const FittedPosterior& fp,
                          const std::string& name) {
    if (!cfg.save_posteriors) return;
    const fs::path dir = sink.dir() / "posteriors" / name;
    save_posterior(fp, dir);
    sink.add_tree(dir);
}

void snapshot(const ExperimentConfig& cfg, ArtifactSink& sink, const RegressionDataset& data, const std::string& stem,
              const std::map<std::string, std::string>& metadata) {
    if (!cfg.write_snapshot) return;
    const fs::path csv_path = sink.dir() / "datasets" / (stem + ".csv");
    const fs::path side_path = sink.dir() / "datasets" / (stem + ".json");
    fs::create_directories(csv_path.parent_path());
    write_dataset_snapshot(data, csv_path, side_path, metadata);
    sink.add(csv_path);
    sink.add(side_path);
}

void require_dataset_source(const ExperimentConfig& cfg) {
    if (!cfg.dataset && !cfg.surrogate) {
        throw std::invalid_argument("no dataset: pass --dataset <path> or --surrogate");
    }
}

std::string cell_name(SamplerKind k, double beta, std::uint64_t seed) {
    return to_string(k) + "_b" + beta_tag(beta) + "_s" + std::to_string(seed);
}

template <class Body>
ExperimentReport guarded(const ExperimentConfig& cfg, ExperimentKind expected, Body&& body) {
    try {
        if (cfg.experiment != expected) {
            throw std::invalid_argument("config is for " + to_string(cfg.experiment) + ", not " + to_string(expected));
        }
        cfg.validate();
        return body();
    } catch (const std::exception& e) {
        try {
            write_failure_manifest(cfg.out_dir, to_string(expected), e.what(), to_key_values(cfg));
        } catch (const std::exception&) {
            // The original error is the one worth reporting.
        }
        throw;
    }
}

// ---------------------------------------------------------------------------

struct SyntheticCell {
    std::size_t plan = 0;
    double beta = 0.0;
    std::size_t seed_index = 0;
};

struct SyntheticOutcome {
    SyntheticSummary summary;
    std::vector<PointDecomposition> grid;
    std::vector<TrainingTrace> traces;
};

ExperimentReport synthetic_impl(const ExperimentConfig& cfg) {
    const auto start = Clock::now();
    ArtifactSink sink(cfg.out_dir);
    const std::vector<double> grid_x = linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);

    std::vector<SinePair> data;
    std::vector<ManifestDataset> datasets;
    for (std::uint64_t seed : cfg.seeds) {
        SyntheticSineSpec spec = cfg.sine;
        spec.seed = derive_seed(seed, {kDataStream});
        data.push_back(gen_sine(spec));
        const auto& d = data.back();
        datasets.push_back({"sine_train_s" + std::to_string(seed), fingerprint(d.train), d.train.provenance});
        datasets.push_back({"sine_test_s" + std::to_string(seed), fingerprint(d.test), d.test.provenance});
        const std::map<std::string, std::string> meta{{"seed", std::to_string(seed)},
                                                      {"data_seed", std::to_string(spec.seed)}};
        snapshot(cfg, sink, d.train, "sine_train_s" + std::to_string(seed), meta);
        snapshot(cfg, sink, d.test, "sine_test_s" + std::to_string(seed), meta);
    }

    std::vector<SyntheticCell> cells;
    for (std::size_t p = 0; p < cfg.samplers.size(); ++p) {
        for (double beta : cfg.samplers[p].betas) {
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({p, beta, s});
        }
    }

    std::vector<SyntheticOutcome> out(cells.size());
    for_each_cell(cells.size(), cfg.threads, [&](std::size_t i) {
        const SyntheticCell& c = cells[i];
        const SamplerPlan& plan = cfg.samplers[c.plan];
        const std::uint64_t seed = cfg.seeds[c.seed_index];
        const SinePair& d = data[c.seed_index];
        SyntheticSummary& sum = out[i].summary;
        sum.sampler = plan.kind;
        sum.beta = c.beta;
        sum.seed = seed;
        try {
            const ArchitectureSpec spec = architecture(cfg, 1);
            const FittedPosterior fp =
                fit(sampler_of(plan), spec, d.train, training_of(plan, c.beta, seed, d.train.size()));
            out[i].traces = fp.traces;
            const std::uint64_t dseed = decompose_seed(plan.kind, seed);

            Matrix grid(grid_x.size(), 1);
            const ColumnStats& xs = d.train.input_stats.front();
            for (std::size_t g = 0; g < grid_x.size(); ++g) grid(g, 0) = xs.normalize(grid_x[g]);
            out[i].grid = decompose_batch(fp, grid, plan.samples, dseed);

            sum.train_mse = mse(mu_bars(decompose_batch(fp, d.train.inputs, plan.samples, dseed)), d.train.targets);
            sum.test_mse = mse(mu_bars(decompose_batch(fp, d.test.inputs, plan.samples, dseed)), d.test.targets);

            std::vector<double> eu_id, eu_ood, au_id, x_id;
            for (std::size_t g = 0; g < grid_x.size(); ++g) {
                const double x = grid_x[g];
                const auto& u = out[i].grid[g].u;
                if (x >= cfg.sine.train_lo && x <= cfg.sine.train_hi) {
                    eu_id.push_back(u.eu);
                    au_id.push_back(u.au);
                    x_id.push_back(x);
                } else if (x > cfg.sine.train_hi) {
                    eu_ood.push_back(u.eu);
                }
            }
            if (eu_id.empty() || eu_ood.empty()) {
                throw std::invalid_argument("grid must cover both the training range and inputs beyond it");
            }
            sum.eu_id_mean = mean(eu_id);
            sum.eu_ood_mean = mean(eu_ood);
            sum.eu_ratio = sum.eu_ood_mean / sum.eu_id_mean;
            sum.spearman_au_x = au_id.size() >= 2 ? spearman(au_id, x_id) : std::nullopt;
            sum.au_iqr_id = interquartile_range(au_id);
            maybe_save_posterior(cfg, sink, fp, cell_name(plan.kind, c.beta, seed));
        } catch (const std::exception& e) {
            sum.status = failure_status(e);
            out[i].grid.clear();
        }
    });

    ExperimentReport report;
    report.kind = cfg.experiment;
    sink.write("synthetic_grid.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,x,mu_bar,au,eu,tu\n";
        for (const auto& o : out) {
            for (std::size_t g = 0; g < o.grid.size(); ++g) {
                const auto& p = o.grid[g];
                os << csv::join({to_string(o.summary.sampler), fmt(o.summary.beta), std::to_string(o.summary.seed),
                                 fmt(grid_x[g]), fmt(p.mu_bar), fmt(p.u.au), fmt(p.u.eu), fmt(p.u.tu)})
                   << '\n';
            }
        }
    });
    sink.write("synthetic_summary.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,status,train_mse,test_mse,eu_id_mean,eu_ood_mean,eu_ratio,spearman_au_x,au_iqr_id\n";
        for (const auto& o : out) {
            const auto& s = o.summary;
            const bool ok = s.status == "ok";
            os << csv::join({to_string(s.sampler), fmt(s.beta), std::to_string(s.seed), s.status,
                             ok ? fmt(s.train_mse) : "", ok ? fmt(s.test_mse) : "", ok ? fmt(s.eu_id_mean) : "",
                             ok ? fmt(s.eu_ood_mean) : "", ok ? fmt(s.eu_ratio) : "", fmt(s.spearman_au_x),
                             ok ? fmt(s.au_iqr_id) : ""})
               << '\n';
        }
    });
    std::vector<TraceBlock> blocks;
    std::vector<ManifestRun> runs;
    for (const auto& o : out) {
        const auto& s = o.summary;
        blocks.push_back({{to_string(s.sampler), fmt(s.beta), std::to_string(s.seed)}, o.traces});
        runs.push_back({s.sampler, s.beta, s.seed, std::nullopt, s.status, s.test_mse});
        report.synthetic.push_back(s);
    }
    write_traces(sink, {"sampler", "beta", "seed"}, blocks);
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(sink, cfg, datasets, runs, wall, Json::object(), report);
    return report;
}

// ---------------------------------------------------------------------------

struct ScadaPrepared {
    CleanScada clean;
    RegressionDataset windowed;
    ChronoSplit split;
    std::vector<double> ref_speed;
    std::vector<double> ref_power;
    std::vector<double> density;
    std::vector<double> density_rank;
};

ScadaPrepared prepare_scada(const ExperimentConfig& cfg, std::uint64_t seed) {
    ScadaPrepared p;
    if (cfg.dataset) {
        p.clean = preprocess_scada(load_scada_csv(*cfg.dataset, cfg.schema));
    } else {
        PowerCurveSpec pc = cfg.power_curve;
        pc.seed = derive_seed(seed, {kDataStream});
        p.clean = preprocess_scada(gen_power_curve(pc, cfg.surrogate_rows));
    }
    p.windowed = window_scada(p.clean, cfg.lags);
    p.windowed.provenance = cfg.dataset ? "scada csv " + cfg.dataset->string()
                                        : "power-curve surrogate, " + std::to_string(cfg.surrogate_rows) + " rows";
    p.split = split_chronological(p.windowed);
    if (p.split.train.size() == 0 || p.split.test.size() == 0) {
        throw std::invalid_argument("data_property: too few samples for a 9:1:1 split");
    }
    const std::size_t col = current_speed_column(cfg.lags);
    p.ref_speed = p.windowed.inputs.column(col);
    p.ref_power = p.windowed.targets;
    const auto q_speed = p.split.test.inputs.column(col);
    p.density = hist2d_density(p.ref_speed, p.ref_power, q_speed, p.split.test.targets, cfg.density_bins);
    p.density_rank = average_ranks(p.density);
    return p;
}

struct DataPropertyCell {
    std::size_t plan = 0;
    double beta = 0.0;
    std::size_t data_index = 0;
    std::size_t seed_index = 0;
};

struct DataPropertyOutcome {
    DataPropertySummary summary;
    std::vector<PointDecomposition> test;
    std::vector<TrainingTrace> traces;
};

ExperimentReport data_property_impl(const ExperimentConfig& cfg) {
    require_dataset_source(cfg);
    const auto start = Clock::now();
    ArtifactSink sink(cfg.out_dir);

    // A supplied CSV is shared by every seed; the surrogate is regenerated per seed.
    std::vector<ScadaPrepared> data;
    std::vector<ManifestDataset> datasets;
    const std::size_t n_data = cfg.dataset ? 1 : cfg.seeds.size();
    for (std::size_t k = 0; k < n_data; ++k) {
        data.push_back(prepare_scada(cfg, cfg.seeds[k]));
        const auto& d = data.back();
        const std::string stem = cfg.dataset ? "scada" : "scada_s" + std::to_string(cfg.seeds[k]);
        datasets.push_back({stem, fingerprint(d.windowed), d.windowed.provenance});
        const std::map<std::string, std::string> meta{
            {"lags", std::to_string(cfg.lags)},
            {"dropped_rows", std::to_string(d.clean.dropped_rows)},
            {"replaced_negatives", std::to_string(d.clean.replaced_negatives)},
            {"train_rows", std::to_string(d.split.train.size())},
            {"val_rows", std::to_string(d.split.val.size())},
            {"test_rows", std::to_string(d.split.test.size())}};
        snapshot(cfg, sink, d.split.train, stem + "_train", meta);
        snapshot(cfg, sink, d.split.val, stem + "_val", meta);
        snapshot(cfg, sink, d.split.test, stem + "_test", meta);
    }

    std::vector<DataPropertyCell> cells;
    for (std::size_t p = 0; p < cfg.samplers.size(); ++p) {
        for (double beta : cfg.samplers[p].betas) {
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({p, beta, cfg.dataset ? 0 : s, s});
        }
    }

    const std::size_t col = current_speed_column(cfg.lags);
    std::vector<DataPropertyOutcome> out(cells.size());
    for_each_cell(cells.size(), cfg.threads, [&](std::size_t i) {
        const DataPropertyCell& c = cells[i];
        const SamplerPlan& plan = cfg.samplers[c.plan];
        const std::uint64_t seed = cfg.seeds[c.seed_index];
        const ScadaPrepared& d = data[c.data_index];
        DataPropertySummary& sum = out[i].summary;
        sum.sampler = plan.kind;
        sum.beta = c.beta;
        sum.seed = seed;
        try {
            const ArchitectureSpec spec = architecture(cfg, d.split.train.input_dim());
            const FittedPosterior fp =
                fit(sampler_of(plan), spec, d.split.train, training_of(plan, c.beta, seed, d.split.train.size()));
            out[i].traces = fp.traces;
            out[i].test = decompose_batch(fp, d.split.test.inputs, plan.samples, decompose_seed(plan.kind, seed));
            const auto& test = out[i].test;
            sum.mse = mse(mu_bars(test), d.split.test.targets);

            std::vector<double> eu_in, eu_out, au, eu;
            for (std::size_t r = 0; r < test.size(); ++r) {
                const double speed = d.clean.speed_stats.denormalize(d.split.test.inputs(r, col));
                const auto& u = test[r].u;
                (speed >= cfg.band_lo && speed <= cfg.band_hi ? eu_in : eu_out).push_back(u.eu);
                au.push_back(u.au);
                eu.push_back(u.eu);
            }
            sum.n_in_band = eu_in.size();
            sum.n_out_band = eu_out.size();
            sum.eu_in_band = eu_in.empty() ? std::nan("") : mean(eu_in);
            sum.eu_out_band = eu_out.empty() ? std::nan("") : mean(eu_out);
            sum.spearman_au_density = spearman(au, d.density);
            sum.mean_au = mean(au);
            sum.mean_eu = mean(eu);
            maybe_save_posterior(cfg, sink, fp, cell_name(plan.kind, c.beta, seed));
        } catch (const std::exception& e) {
            sum.status = failure_status(e);
            out[i].test.clear();
        }
    });

    ExperimentReport report;
    report.kind = cfg.experiment;
    sink.write("data_property_samples.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,wind_speed,power,mu_bar,au,eu,tu,density,density_rank\n";
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto& o = out[i];
            const ScadaPrepared& d = data[cells[i].data_index];
            for (std::size_t r = 0; r < o.test.size(); ++r) {
                const auto& p = o.test[r];
                os << csv::join({to_string(o.summary.sampler), fmt(o.summary.beta), std::to_string(o.summary.seed),
                                 fmt(d.clean.speed_stats.denormalize(d.split.test.inputs(r, col))),
                                 fmt(d.clean.power_stats.denormalize(d.split.test.targets[r])), fmt(p.mu_bar),
                                 fmt(p.u.au), fmt(p.u.eu), fmt(p.u.tu), fmt(d.density[r]), fmt(d.density_rank[r])})
                   << '\n';
            }
        }
    });
    sink.write("data_property_summary.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,status,mse,eu_in_band,eu_out_band,n_in_band,n_out_band,spearman_au_density,mean_au,"
              "mean_eu\n";
        for (const auto& o : out) {
            const auto& s = o.summary;
            const bool ok = s.status == "ok";
            os << csv::join({to_string(s.sampler), fmt(s.beta), std::to_string(s.seed), s.status,
                             ok ? fmt(s.mse) : "", ok ? fmt(s.eu_in_band) : "", ok ? fmt(s.eu_out_band) : "",
                             ok ? std::to_string(s.n_in_band) : "", ok ? std::to_string(s.n_out_band) : "",
                             fmt(s.spearman_au_density), ok ? fmt(s.mean_au) : "", ok ? fmt(s.mean_eu) : ""})
               << '\n';
        }
    });

    std::vector<TraceBlock> blocks;
    std::vector<ManifestRun> runs;
    Json extra = Json::object();
    extra["density_bins"] = cfg.density_bins;
    extra["density_reference"] = "all windowed samples, normalized current wind speed x normalized power";
    Json checks = Json::array();
    for (const auto& o : out) {
        const auto& s = o.summary;
        blocks.push_back({{to_string(s.sampler), fmt(s.beta), std::to_string(s.seed)}, o.traces});
        runs.push_back({s.sampler, s.beta, s.seed, std::nullopt, s.status, s.mse});
        report.data_property.push_back(s);
        if (cfg.dataset && s.sampler == SamplerKind::deep_ensemble && s.status == "ok") {
            checks.push_back(Json{{"sampler", to_string(s.sampler)},
                                  {"beta", s.beta},
                                  {"seed", s.seed},
                                  {"mse", s.mse},
                                  {"bound", 0.003},
                                  {"pass", s.mse <= 0.003}});
        }
    }
    if (cfg.dataset) extra["real_data_mse_checks"] = checks;
    write_traces(sink, {"sampler", "beta", "seed"}, blocks);
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(sink, cfg, datasets, runs, wall, extra, report);
    return report;
}

// ---------------------------------------------------------------------------

struct SeriesPrepared {
    RegressionDataset windowed;
    TrainTestSplit split;
    std::vector<RegressionDataset> subsets; // one per ratio
};

SeriesPrepared prepare_series(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeriesPrepared p;
    HourlySeries series;
    if (cfg.dataset) {
        series = load_hourly_csv(*cfg.dataset, cfg.series_column, cfg.timestamp_column);
    } else {
        PowerCurveSpec pc = cfg.power_curve;
        pc.seed = derive_seed(seed, {kDataStream});
        series = gen_hourly_series(pc, cfg.surrogate_rows);
    }
    p.windowed = window_univariate(preprocess_series(series), cfg.lags);
    p.windowed.provenance = cfg.dataset ? "hourly csv " + cfg.dataset->string()
                                        : "hourly power-curve surrogate, " + std::to_string(cfg.surrogate_rows) + " hours";
    p.split = split_recent(p.windowed, cfg.test_fraction);
    for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
        p.subsets.push_back(subsample(p.split.train, cfg.ratios[r], derive_seed(seed, {kSubsampleStream, r})));
    }
    return p;
}

struct ScalingCell {
    std::size_t plan = 0;
    double beta = 0.0;
    std::size_t ratio_index = 0;
    std::size_t data_index = 0;
    std::size_t seed_index = 0;
};

struct ScalingOutcome {
    ScalingPoint point;
    std::vector<TrainingTrace> traces;
};

ExperimentReport scaling_impl(const ExperimentConfig& cfg) {
    require_dataset_source(cfg);
    if (cfg.ratios.empty()) throw std::invalid_argument("dataset_scaling: ratio list is empty");
    const auto start = Clock::now();
    ArtifactSink sink(cfg.out_dir);

    // Subsamples depend on the seed even for a supplied series, so data is prepared per seed.
    std::vector<SeriesPrepared> data;
    std::vector<ManifestDataset> datasets;
    for (std::uint64_t seed : cfg.seeds) {
        data.push_back(prepare_series(cfg, seed));
        const auto& d = data.back();
        const std::string stem = "hourly_s" + std::to_string(seed);
        datasets.push_back({stem, fingerprint(d.windowed), d.windowed.provenance});
        const std::map<std::string, std::string> meta{{"lags", std::to_string(cfg.lags)},
                                                      {"train_rows", std::to_string(d.split.train.size())},
                                                      {"test_rows", std::to_string(d.split.test.size())}};
        snapshot(cfg, sink, d.split.train, stem + "_train", meta);
        snapshot(cfg, sink, d.split.test, stem + "_test", meta);
    }

    std::vector<ScalingCell> cells;
    for (std::size_t p = 0; p < cfg.samplers.size(); ++p) {
        for (double beta : cfg.samplers[p].betas) {
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
                for (std::size_t r = 0; r < cfg.ratios.size(); ++r) cells.push_back({p, beta, r, s, s});
            }
        }
    }

    std::vector<ScalingOutcome> out(cells.size());
    for_each_cell(cells.size(), cfg.threads, [&](std::size_t i) {
        const ScalingCell& c = cells[i];
        const SamplerPlan& plan = cfg.samplers[c.plan];
        const std::uint64_t seed = cfg.seeds[c.seed_index];
        const SeriesPrepared& d = data[c.data_index];
        const RegressionDataset& train = d.subsets[c.ratio_index];
        ScalingPoint& pt = out[i].point;
        pt.sampler = plan.kind;
        pt.beta = c.beta;
        pt.seed = seed;
        pt.ratio = cfg.ratios[c.ratio_index];
        pt.n_train = train.size();
        try {
            const TrainingConfig tc = training_of(plan, c.beta, seed, train.size());
            pt.kl_weight = tc.kl_weight;
            const ArchitectureSpec spec = architecture(cfg, train.input_dim());
            const FittedPosterior fp = fit(sampler_of(plan), spec, train, tc);
            out[i].traces = fp.traces;
            const auto test = decompose_batch(fp, d.split.test.inputs, plan.samples, decompose_seed(plan.kind, seed));
            std::vector<double> au, eu;
            for (const auto& p : test) {
                au.push_back(p.u.au);
                eu.push_back(p.u.eu);
            }
            pt.mean_au = mean(au);
            pt.mean_eu = mean(eu);
            pt.mse = mse(mu_bars(test), d.split.test.targets);
            maybe_save_posterior(cfg, sink, fp,
                                 cell_name(plan.kind, c.beta, seed) + "_r" + beta_tag(cfg.ratios[c.ratio_index]));
        } catch (const std::exception& e) {
            pt.status = failure_status(e);
        }
    });

    ExperimentReport report;
    report.kind = cfg.experiment;
    for (const auto& o : out) report.scaling.push_back(o.point);

    // One summary row per (sampler, beta, seed); cells for a group are contiguous.
    for (std::size_t start_i = 0; start_i < out.size(); start_i += cfg.ratios.size()) {
        ScalingSummary s;
        const auto& first = out[start_i].point;
        s.sampler = first.sampler;
        s.beta = first.beta;
        s.seed = first.seed;
        std::vector<double> ratios, eus;
        for (std::size_t k = start_i; k < start_i + cfg.ratios.size(); ++k) {
            const auto& pt = out[k].point;
            if (pt.status != "ok") continue;
            ratios.push_back(pt.ratio);
            eus.push_back(pt.mean_eu);
        }
        if (ratios.size() >= 2) s.spearman_ratio_eu = spearman(ratios, eus);
        if (!ratios.empty()) {
            const auto lo = std::min_element(ratios.begin(), ratios.end()) - ratios.begin();
            const auto hi = std::max_element(ratios.begin(), ratios.end()) - ratios.begin();
            s.eu_at_min_ratio = eus[lo];
            s.eu_at_max_ratio = eus[hi];
        }
        report.scaling_summary.push_back(s);
    }

    sink.write("scaling_results.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,ratio,n_train,kl_weight,mean_au,mean_eu,mse,status\n";
        for (const auto& pt : report.scaling) {
            const bool ok = pt.status == "ok";
            os << csv::join({to_string(pt.sampler), fmt(pt.beta), std::to_string(pt.seed), fmt(pt.ratio),
                             std::to_string(pt.n_train), fmt(pt.kl_weight), ok ? fmt(pt.mean_au) : "",
                             ok ? fmt(pt.mean_eu) : "", ok ? fmt(pt.mse) : "", pt.status})
               << '\n';
        }
    });
    sink.write("scaling_summary.csv", [&](std::ostream& os) {
        os << "sampler,beta,seed,spearman_ratio_eu,eu_at_min_ratio,eu_at_max_ratio\n";
        for (const auto& s : report.scaling_summary) {
            os << csv::join({to_string(s.sampler), fmt(s.beta), std::to_string(s.seed), fmt(s.spearman_ratio_eu),
                             fmt(s.eu_at_min_ratio), fmt(s.eu_at_max_ratio)})
               << '\n';
        }
    });

    std::vector<TraceBlock> blocks;
    std::vector<ManifestRun> runs;
    for (const auto& o : out) {
        const auto& pt = o.point;
        blocks.push_back({{to_string(pt.sampler), fmt(pt.beta), std::to_string(pt.seed), fmt(pt.ratio)}, o.traces});
        runs.push_back({pt.sampler, pt.beta, pt.seed, pt.ratio, pt.status, pt.mse});
    }
    write_traces(sink, {"sampler", "beta", "seed", "ratio"}, blocks);
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(sink, cfg, datasets, runs, wall, Json::object(), report);
    return report;
}

} // namespace

double default_kl_weight(std::size_t n_train, std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("default_kl_weight: batch_size must be positive");
    const double batches = std::round(static_cast<double>(n_train) / static_cast<double>(batch_size));
    return 1.0 / std::max(1.0, batches);
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
    if (points == 0) throw std::invalid_argument("grid must contain at least one point");
    std::vector<double> out(points);
    if (points == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

ExperimentReport run_synthetic_ood(const ExperimentConfig& cfg) {
    return guarded(cfg, ExperimentKind::synthetic_ood, [&] { return synthetic_impl(cfg); });
}

ExperimentReport run_data_property(const ExperimentConfig& cfg) {
    return guarded(cfg, ExperimentKind::data_property, [&] { return data_property_impl(cfg); });
}

ExperimentReport run_dataset_scaling(const ExperimentConfig& cfg) {
    return guarded(cfg, ExperimentKind::dataset_scaling, [&] { return scaling_impl(cfg); });
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case ExperimentKind::synthetic_ood: return run_synthetic_ood(cfg);
    case ExperimentKind::data_property: return run_data_property(cfg);
    case ExperimentKind::dataset_scaling: return run_dataset_scaling(cfg);
    }
    throw std::invalid_argument("unknown experiment");
}

void write_failure_manifest(const fs::path& out_dir, const std::string& command, const std::string& error,
                            const std::map<std::string, std::string>& config) {
    fs::create_directories(out_dir);
    Json m;
    m["experiment"] = command;
    m["status"] = "failed";
    m["error"] = error;
    m["config"] = config;
    m["artifacts"] = Json::array();
    m["note"] = std::string(kBiasResidualNote);
    std::ofstream os(out_dir / "manifest.json", std::ios::binary);
    os << m.dump(2) << '\n';
}

} // namespace varsplit
