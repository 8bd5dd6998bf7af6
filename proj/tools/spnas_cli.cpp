// spnas: command-line driver for benchmark preparation, predictor search and
// analysis. Data goes to files or stdout; progress and errors go to stderr.
// Every failure ends with exactly one line of the form
//   error: kind=<kind> message=<text>
// and a nonzero exit status.

#include "spnas/analysis.hpp"
#include "spnas/bench_store.hpp"
#include "spnas/error.hpp"
#include "spnas/kernels.hpp"
#include "spnas/log.hpp"
#include "spnas/ranking.hpp"
#include "spnas/run_config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace spnas;

std::vector<std::size_t> parse_budgets(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &pos);
        } catch (const std::exception&) {
            throw ConfigError("bad budget '" + item + "'");
        }
        if (pos != item.size())
            throw ConfigError("bad budget '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty())
        throw ConfigError("no budgets given");
    return out;
}

struct Prepared {
    BenchStore store;
    EncodedSpace space;
};

// The EncodedSpace points into the store, so both live together on the heap.
std::unique_ptr<Prepared> prepare(const RunConfig& cfg) {
    BenchStore store = load_jsonl(cfg.benchmark);
    if (cfg.max_flops_m)
        store = subset_by_flops(store, *cfg.max_flops_m);
    auto p = std::unique_ptr<Prepared>(new Prepared{std::move(store), {}});
    p->space = EncodedSpace::build(p->store, cfg.dataset);
    log_info("loaded " + std::to_string(p->space.size()) + " architectures from " +
             cfg.benchmark.string() + " (kernels: " + std::string(kernels::active().name) + ")");
    return p;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r')
            c = ' ';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Siamese-Predictor neural architecture search toolkit"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Progress logging on stderr");

    // gen-synthetic
    SyntheticOptions syn;
    std::string syn_out;
    auto* gen = app.add_subcommand("gen-synthetic", "Write a seeded synthetic search space");
    gen->add_option("--seed", syn.seed, "Generator seed")->required();
    gen->add_option("--size", syn.size, "Number of architectures")->required();
    gen->add_option("--nodes", syn.nodes, "Data nodes per cell")->capture_default_str();
    gen->add_option("--vocab", syn.vocab_size, "Operations per edge")->capture_default_str();
    gen->add_option("--epochs", syn.epochs, "Recorded loss epochs")->capture_default_str();
    gen->add_option("--out", syn_out, "Output JSONL")->required();

    // validate
    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Check a benchmark JSONL file against the schema");
    val->add_option("bench", validate_path, "Benchmark JSONL")->required();

    // search
    std::string search_cfg;
    std::size_t workers = 1;
    auto* search = app.add_subcommand("search", "Run the configured search and write a report");
    search->add_option("--config", search_cfg, "Run config JSON")->required();
    search->add_option("--workers", workers, "Parallel runs")->capture_default_str();

    // sweep
    std::string sweep_cfg, sweep_mode, sweep_budgets, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "N-vs-K budget sweep");
    sweep->add_option("--config", sweep_cfg, "Run config JSON")->required();
    sweep->add_option("--mode", sweep_mode, "fixN or fixK")
        ->required()
        ->check(CLI::IsMember({"fixN", "fixK"}));
    sweep->add_option("--budgets", sweep_budgets, "Comma-separated total budgets")->required();
    sweep->add_option("--workers", workers, "Parallel runs")->capture_default_str();
    sweep->add_option("--out", sweep_out, "Output CSV (default <output_dir>/sweep_<mode>.csv)");

    // train
    std::string train_cfg, train_out;
    auto* train = app.add_subcommand("train", "Train one predictor (run 0) and save a checkpoint");
    train->add_option("--config", train_cfg, "Run config JSON")->required();
    train->add_option("--out", train_out, "Checkpoint path")->required();

    // subset
    double max_flops = 0.0;
    std::string subset_in, subset_out;
    auto* subset = app.add_subcommand("subset", "Keep records below a FLOPs threshold");
    subset->add_option("--max-flops", max_flops, "Threshold in MFLOPs")->required();
    subset->add_option("--in", subset_in, "Input JSONL")->required();
    subset->add_option("--out", subset_out, "Output JSONL")->required();

    // correlate
    std::string corr_bench, corr_dataset, corr_metric, corr_out;
    auto* correlate = app.add_subcommand("correlate", "Rank correlation of a prior with accuracy");
    correlate->add_option("--bench", corr_bench, "Benchmark JSONL")->required();
    correlate->add_option("--dataset", corr_dataset, "Dataset name")->required();
    correlate->add_option("--metric", corr_metric, "code | code:mean | proxy:<name>")->required();
    correlate->add_option("--out", corr_out,
                          "Directory for correlation.json and correlation_bins.csv "
                          "(default: JSON on stdout)");

    // distribution
    std::string dist_bench, dist_dataset, dist_out;
    auto* dist = app.add_subcommand("distribution", "FLOPs/accuracy CSV");
    dist->add_option("--bench", dist_bench, "Benchmark JSONL")->required();
    dist->add_option("--dataset", dist_dataset, "Dataset name")->required();
    dist->add_option("--out", dist_out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: kind=usage message=" << one_line(e.what()) << '\n';
        return 2;
    }
    set_log_level(verbose ? LogLevel::Info : LogLevel::Warn);

    try {
        if (*gen) {
            const BenchStore store = generate_synthetic(syn);
            write_file_atomic(syn_out, to_jsonl(store));
            log_info("wrote " + std::to_string(store.size()) + " records to " + syn_out);
        } else if (*val) {
            const LoadReport rep = check_jsonl(validate_path);
            std::cout << "records: " << rep.records << "\n";
            std::cout << "violations: " << rep.violations.size() << "\n";
            for (const Violation& v : rep.violations)
                std::cout << "line " << v.line << ": " << v.message << "\n";
            if (!rep.ok()) {
                std::cerr << "error: kind=validation message=" << rep.violations.size()
                          << " violations in " << validate_path << '\n';
                return 1;
            }
        } else if (*search) {
            const RunConfig cfg = load_run_config(search_cfg);
            auto prepared = prepare(cfg);
            const RunReport rep = run_search(prepared->space, cfg.search, cfg.predictor, workers);
            std::filesystem::create_directories(cfg.output_dir);
            write_file_atomic(cfg.output_dir / "run_report.csv", run_report_csv(rep));
            write_file_atomic(cfg.output_dir / "ledger.json", ledger_json(rep, cfg.search));
            std::cerr << "mean best acc " << rep.mean_best_accuracy << " (std "
                      << rep.std_best_accuracy << ") over " << rep.runs.size()
                      << " runs; pool fraction " << format_percent(rep.pool_fraction) << '\n';
        } else if (*sweep) {
            const RunConfig cfg = load_run_config(sweep_cfg);
            const auto budgets = parse_budgets(sweep_budgets);
            auto prepared = prepare(cfg);
            const SweepMode mode = sweep_mode == "fixN" ? SweepMode::FixN : SweepMode::FixK;
            const auto rows = nk_sweep(prepared->space, cfg.search, cfg.predictor, budgets, mode, workers);
            std::filesystem::path out = sweep_out.empty()
                                            ? cfg.output_dir / ("sweep_" + sweep_mode + ".csv")
                                            : std::filesystem::path(sweep_out);
            if (out.has_parent_path())
                std::filesystem::create_directories(out.parent_path());
            write_file_atomic(out, sweep_csv(rows));
        } else if (*train) {
            const RunConfig cfg = load_run_config(train_cfg);
            auto prepared = prepare(cfg);
            BudgetLedger ledger;
            BtsResult r = bts_train(prepared->space, cfg.search, cfg.predictor,
                                    run_seed(cfg.search.seed, 0), ledger);
            write_file_atomic(train_out, r.predictor.to_json() + "\n");
            std::cerr << "trained on " << r.pool.size() << " samples, " << ledger.spent()
                      << " FTE\n";
        } else if (*subset) {
            const BenchStore store = subset_by_flops(load_jsonl(subset_in), max_flops);
            write_file_atomic(subset_out, to_jsonl(store));
            std::cerr << "kept " << store.size() << " records below " << max_flops << " MFLOPs\n";
        } else if (*correlate) {
            const BenchStore store = load_jsonl(corr_bench);
            CorrelationReport rep;
            if (corr_metric == "code")
                rep = code_correlation(store, corr_dataset, CodeReduction::NegThirdLoss);
            else if (corr_metric == "code:mean")
                rep = code_correlation(store, corr_dataset, CodeReduction::NegMeanLoss);
            else if (corr_metric.rfind("proxy:", 0) == 0)
                rep = proxy_correlation(store, corr_dataset, corr_metric.substr(6));
            else
                throw ConfigError("metric must be code, code:mean or proxy:<name>");
            if (corr_out.empty()) {
                std::cout << correlation_json(rep) << '\n';
            } else {
                std::filesystem::create_directories(corr_out);
                write_file_atomic(std::filesystem::path(corr_out) / "correlation.json",
                                  correlation_json(rep) + "\n");
                write_file_atomic(std::filesystem::path(corr_out) / "correlation_bins.csv",
                                  correlation_bins_csv(rep));
            }
        } else if (*dist) {
            const BenchStore store = load_jsonl(dist_bench);
            const std::string csv = distribution_csv(distribution_export(store, dist_dataset));
            if (dist_out.empty())
                std::cout << csv;
            else
                write_file_atomic(dist_out, csv);
        }
    } catch (const Error& e) {
        std::cerr << "error: kind=" << e.kind() << " message=" << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: kind=internal message=" << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
