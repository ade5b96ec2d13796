#include "varsplit/cli.hpp"

#include "varsplit/config.hpp"
#include "varsplit/csv.hpp"
#include "varsplit/disentangle.hpp"
#include "varsplit/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace varsplit {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnv = "VARSPLIT_OUT_DIR";

struct ExperimentFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string dataset;
    bool surrogate = false;
    std::optional<std::size_t> threads;
};

struct DecomposeFlags {
    std::string posterior;
    std::string inputs;
    std::optional<std::size_t> samples;
    std::uint64_t seed = 0;
    std::string out_dir;
};

fs::path resolve_out_dir(const std::string& flag, const fs::path& configured) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return configured;
}

void add_experiment_flags(CLI::App* sub, ExperimentFlags& f) {
    sub->add_option("--config", f.config, "Config file (key = value lines)");
    sub->add_option("--seed", f.seed, "Run with this single seed instead of the configured list");
    sub->add_option("--out-dir", f.out_dir, std::string("Output directory (overrides ") + kOutDirEnv + " and config)");
    sub->add_option("--threads", f.threads, "Worker threads for independent cells");
}

int run_experiment_command(ExperimentKind kind, const ExperimentFlags& f, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = default_config(kind);
    try {
        if (!f.config.empty()) cfg = load_config(f.config, kind);
        if (f.seed) cfg.seeds = {*f.seed};
        if (!f.dataset.empty()) cfg.dataset = fs::path(f.dataset);
        if (f.surrogate) cfg.surrogate = true;
        if (f.threads) cfg.threads = *f.threads;
        cfg.out_dir = resolve_out_dir(f.out_dir, cfg.out_dir);
        if (kind != ExperimentKind::synthetic_ood && !cfg.dataset && !cfg.surrogate) {
            throw std::invalid_argument("no dataset given: pass --dataset <path>, or --surrogate to use the bundled "
                                        "power-curve generator");
        }
        cfg.validate();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        try {
            write_failure_manifest(resolve_out_dir(f.out_dir, cfg.out_dir), to_string(kind), e.what());
        } catch (const std::exception&) {
        }
        return 1;
    }

    ExperimentReport report;
    try {
        report = run_experiment(cfg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    out << to_string(kind) << ": " << report.artifacts.size() << " files in " << cfg.out_dir.string() << " ("
        << csv::format(report.wall_seconds) << " s)\n";
    out << "manifest: " << report.manifest.string() << '\n';
    if (report.failed_cells > 0) {
        err << "warning: " << report.failed_cells << " cell(s) failed; see the status column of the result tables\n";
        return 2;
    }
    return 0;
}

Matrix read_input_matrix(const fs::path& path, std::vector<std::string>& names) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open input CSV " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("input CSV is empty: " + path.string());
    names = csv::split_line(line);
    if (!names.empty() && names.front().rfind("\xEF\xBB\xBF", 0) == 0) names.front().erase(0, 3);
    Matrix m;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != names.size()) {
            throw std::invalid_argument("input CSV line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(names.size()) + " fields");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            const auto v = csv::parse_cell(c);
            if (!v || std::isnan(*v)) {
                throw std::invalid_argument("input CSV line " + std::to_string(line_no) + ": bad value '" + c + "'");
            }
            row.push_back(*v);
        }
        m.append_row(row);
    }
    if (m.empty()) throw std::invalid_argument("input CSV has no data rows: " + path.string());
    return m;
}

int run_decompose_command(const DecomposeFlags& f, std::ostream& out, std::ostream& err) {
    const fs::path out_dir = resolve_out_dir(f.out_dir, "out/decompose");
    std::map<std::string, std::string> kv{{"posterior", f.posterior}, {"inputs", f.inputs},
                                          {"seed", std::to_string(f.seed)}};
    try {
        const FittedPosterior fp = load_posterior(f.posterior);
        const std::size_t samples = f.samples ? *f.samples : fp.sample_count;
        kv["samples"] = std::to_string(samples);
        std::vector<std::string> names;
        const Matrix inputs = read_input_matrix(f.inputs, names);
        if (inputs.cols() != fp.spec.input_dim) {
            throw std::invalid_argument("input CSV has " + std::to_string(inputs.cols()) +
                                        " columns but the posterior expects " + std::to_string(fp.spec.input_dim));
        }
        const auto rows = decompose_batch(fp, inputs, samples, f.seed);
        fs::create_directories(out_dir);
        const fs::path csv_path = out_dir / "decomposition.csv";
        {
            std::ofstream os(csv_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + csv_path.string());
            write_decomposition_csv(os, inputs, names, rows);
        }
        nlohmann::ordered_json m;
        m["experiment"] = "decompose";
        m["status"] = "ok";
        m["config"] = kv;
        m["sampler"] = to_string(fp.kind);
        m["rows"] = rows.size();
        m["artifacts"] = nlohmann::ordered_json::array(
            {nlohmann::ordered_json{{"path", "decomposition.csv"}, {"bytes", fs::file_size(csv_path)}}});
        m["note"] = std::string(kBiasResidualNote);
        std::ofstream ms(out_dir / "manifest.json", std::ios::binary);
        ms << m.dump(2) << '\n';
        out << "decompose: " << rows.size() << " rows -> " << csv_path.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        try {
            write_failure_manifest(out_dir, "decompose", e.what(), kv);
        } catch (const std::exception&) {
        }
        return 1;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Aleatoric / epistemic variance decomposition experiments", "varsplit"};
    app.require_subcommand(1);

    ExperimentFlags syn, dp, sc;
    auto* synthetic = app.add_subcommand("synthetic", "Heteroscedastic sine with an out-of-distribution range");
    add_experiment_flags(synthetic, syn);

    auto* data_property = app.add_subcommand("data-property", "SCADA power-curve study (uncertainty vs. data density)");
    add_experiment_flags(data_property, dp);
    data_property->add_option("--dataset", dp.dataset, "SCADA CSV with timestamp, speed, direction and power columns");
    data_property->add_flag("--surrogate", dp.surrogate, "Use the bundled power-curve generator instead of a CSV");

    auto* scaling = app.add_subcommand("scaling", "Epistemic uncertainty versus training-set size");
    add_experiment_flags(scaling, sc);
    scaling->add_option("--dataset", sc.dataset, "Hourly series CSV");
    scaling->add_flag("--surrogate", sc.surrogate, "Use the bundled hourly generator instead of a CSV");

    DecomposeFlags dec;
    auto* decompose = app.add_subcommand("decompose", "Decompose a saved posterior over a CSV of inputs");
    decompose->add_option("--posterior", dec.posterior, "Directory written by a run with save_posteriors = true")
        ->required();
    decompose->add_option("--dataset,--inputs", dec.inputs, "CSV of model inputs (header row, numeric columns)")
        ->required();
    decompose->add_option("--samples", dec.samples, "Posterior samples S (default: the saved sample count)");
    decompose->add_option("--seed", dec.seed, "Seed for the posterior draws");
    decompose->add_option("--out-dir", dec.out_dir, "Output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        const CLI::App* failed = &app;
        for (auto* s : {synthetic, data_property, scaling, decompose}) {
            if (s->parsed()) failed = s;
        }
        err << "error: " << e.what() << '\n' << failed->help();
        return 1;
    }

    if (synthetic->parsed()) return run_experiment_command(ExperimentKind::synthetic_ood, syn, out, err);
    if (data_property->parsed()) return run_experiment_command(ExperimentKind::data_property, dp, out, err);
    if (scaling->parsed()) return run_experiment_command(ExperimentKind::dataset_scaling, sc, out, err);
    return run_decompose_command(dec, out, err);
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace varsplit
