// abcnet command-line front end.
//
// Exit status: 0 success, 1 usage error, 2 runtime failure, 3 chains did not
// converge (outputs are still written).

#include "abcnet/core.hpp"
#include "abcnet/diagnostics.hpp"
#include "abcnet/distances.hpp"
#include "abcnet/evaluate.hpp"
#include "abcnet/io.hpp"
#include "abcnet/mcmc.hpp"
#include "abcnet/random.hpp"
#include "abcnet/simulators.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace abcnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitNotConverged = 3;

constexpr std::uint64_t kSimThetaStream = 0x73696d74ULL;
constexpr std::uint64_t kSimDataStream = 0x73696d64ULL;

const char* const kLayoutHelp =
    "Expression files are comma-separated: a header row (\"gene\", then one label per time point) followed by one "
    "row per gene (name, then its values). Rows are genes, columns are time points. Pass one file per replicate. "
    "Matrices (coefficients, adjacency) use the same layout with row = target gene and column = regulator.";

class UsageError : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
};

// Every RunConfig field as an optional flag; unset flags leave the value from
// the config file (or the default) alone.
struct RunFlags {
    std::optional<double> prior_lo, prior_hi, sigma_theta, mvt_ridge, epsilon_quantile, min_burnin_acceptance,
        retain_fraction, rhat_cutoff, epsilon;
    std::optional<int> max_fan_in, n_calibration_networks, n_chains, thin, burnin_levels, burnin_iters_per_level,
        max_burnin_repeats;
    std::optional<long> chain_length;
    std::optional<std::string> distance;
    std::optional<bool> dimension_correction;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
    const RunConfig d;
    auto def = [](auto v) {
        std::ostringstream s;
        s << v;
        return " (default " + s.str() + ")";
    };
    sub->add_option("--prior-lo", f.prior_lo, "Lower parameter bound" + def(d.prior_lo))->group("Model");
    sub->add_option("--prior-hi", f.prior_hi, "Upper parameter bound" + def(d.prior_hi))->group("Model");
    sub->add_option("--fan-in", f.max_fan_in, "Maximum regulators per gene" + def(d.max_fan_in))->group("Model");
    sub->add_option("--distance", f.distance, "canberra|euclidean|manhattan|mvt" + def(to_string(d.distance)))
        ->check(CLI::IsMember({"canberra", "euclidean", "manhattan", "mvt"}))
        ->group("Model");
    sub->add_option("--mvt-ridge", f.mvt_ridge, "Ridge added when the MVT covariance is singular" + def(d.mvt_ridge))
        ->group("Model");
    sub->add_option("--sigma-theta", f.sigma_theta, "Proposal step sd" + def(d.sigma_theta))->group("Sampler");
    sub->add_option("--epsilon-quantile", f.epsilon_quantile,
                    "Tolerance quantile of prior distances" + def(d.epsilon_quantile))
        ->group("Sampler");
    sub->add_option("--epsilon", f.epsilon, "Fixed tolerance (skips calibration)")->group("Sampler");
    sub->add_option("--calibration-networks", f.n_calibration_networks,
                    "Prior draws for calibration" + def(d.n_calibration_networks))
        ->group("Sampler");
    sub->add_option("--chains", f.n_chains, "Independent chains" + def(d.n_chains))->group("Sampler");
    sub->add_option("--chain-length", f.chain_length, "Main-phase iterations per chain" + def(d.chain_length))
        ->group("Sampler");
    sub->add_option("--thin", f.thin, "Keep every n-th state" + def(d.thin))->group("Sampler");
    sub->add_option("--burnin-levels", f.burnin_levels, "Cooling levels" + def(d.burnin_levels))->group("Sampler");
    sub->add_option("--burnin-iters-per-level", f.burnin_iters_per_level,
                    "Iterations per cooling level" + def(d.burnin_iters_per_level))
        ->group("Sampler");
    sub->add_option("--min-burnin-acceptance", f.min_burnin_acceptance,
                    "Repeat cooling below this acceptance" + def(d.min_burnin_acceptance))
        ->group("Sampler");
    sub->add_option("--max-burnin-repeats", f.max_burnin_repeats,
                    "Cooling repeats before a chain aborts" + def(d.max_burnin_repeats))
        ->group("Sampler");
    sub->add_option("--dimension-correction", f.dimension_correction,
                    "Density factor for edge birth/death moves (default true)")
        ->group("Sampler");
    sub->add_option("--retain-fraction", f.retain_fraction,
                    "Fraction of pooled samples kept, smallest distance first" + def(d.retain_fraction))
        ->group("Posterior");
    sub->add_option("--rhat-cutoff", f.rhat_cutoff, "Gelman-Rubin convergence cutoff" + def(d.rhat_cutoff))
        ->group("Posterior");
}

template <typename T, typename U>
void override(T& field, const std::optional<U>& flag) {
    if (flag) field = static_cast<T>(*flag);
}

RunConfig resolve_config(const Globals& g, const RunFlags& f) {
    RunConfig cfg;
    if (g.config) {
        try {
            apply_config_file(cfg, *g.config);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    override(cfg.prior_lo, f.prior_lo);
    override(cfg.prior_hi, f.prior_hi);
    override(cfg.max_fan_in, f.max_fan_in);
    override(cfg.sigma_theta, f.sigma_theta);
    override(cfg.mvt_ridge, f.mvt_ridge);
    override(cfg.epsilon_quantile, f.epsilon_quantile);
    override(cfg.n_calibration_networks, f.n_calibration_networks);
    override(cfg.n_chains, f.n_chains);
    override(cfg.chain_length, f.chain_length);
    override(cfg.thin, f.thin);
    override(cfg.burnin_levels, f.burnin_levels);
    override(cfg.burnin_iters_per_level, f.burnin_iters_per_level);
    override(cfg.min_burnin_acceptance, f.min_burnin_acceptance);
    override(cfg.max_burnin_repeats, f.max_burnin_repeats);
    override(cfg.retain_fraction, f.retain_fraction);
    override(cfg.rhat_cutoff, f.rhat_cutoff);
    override(cfg.dimension_correction, f.dimension_correction);
    if (f.distance) cfg.distance = parse_distance_kind(*f.distance);
    if (f.epsilon) cfg.epsilon = *f.epsilon;
    if (g.seed) cfg.seed = *g.seed;
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

void print_config(const RunConfig& cfg) {
    std::cout << "# effective configuration\n" << describe_config(cfg) << std::flush;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    return out;
}

Adjacency load_adjacency(const std::string& path) {
    const Matrix m = load_matrix_csv(path);
    return (m.array() != 0.0).cast<std::uint8_t>();
}

std::vector<std::string> data_labels(const ExpressionData& data) {
    std::vector<std::string> labels;
    for (int i = 0; i < data.p(); ++i) labels.push_back(data.label(i));
    return labels;
}

std::vector<std::string> raf_labels() {
    const auto& l = RafTruth::labels();
    return {l.begin(), l.end()};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string model = "var1";
    int genes = RafTruth::kGenes;
    int timepoints = 20;
    double noise_sd = 1.0;
    int replicates = 1;
    std::optional<std::string> structure;
    std::optional<std::string> theta;
    std::optional<std::string> theta2;
    std::string out = "data.csv";
    std::optional<std::string> theta_out;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    const std::uint64_t seed = g.seed.value_or(1);
    const GeneratorKind kind = parse_generator_kind(a.model);
    std::cout << "# effective configuration\nmodel=" << to_string(kind) << "\ngenes=" << a.genes
              << "\ntimepoints=" << a.timepoints << "\nnoise-sd=" << std::setprecision(17) << a.noise_sd
              << "\nreplicates=" << a.replicates << "\nseed=" << seed << '\n';

    std::vector<Matrix> reps;
    std::vector<std::string> labels;
    Matrix theta1;
    if (kind == GeneratorKind::ode) {
        if (a.genes != RafTruth::kGenes) throw UsageError("the ode model is fixed to the 11-gene Raf system");
        for (int r = 0; r < a.replicates; ++r)
            reps.push_back(
                generate_ode(a.timepoints, a.noise_sd, derive_seed(seed, {kSimDataStream, std::uint64_t(r)}))
                    .replicate(0));
        theta1 = RafTruth::ode_matrix();
        labels = raf_labels();
    } else {
        Adjacency structure;
        if (a.structure) {
            structure = load_adjacency(*a.structure);
        } else if (a.genes == RafTruth::kGenes) {
            structure = RafTruth::adjacency();
        } else if (!a.theta) {
            throw UsageError("--structure or --theta is required unless --genes is 11");
        }
        GeneratorSpec spec;
        spec.kind = kind;
        spec.noise_sd = a.noise_sd;
        spec.t_len = a.timepoints;
        Rng theta_rng = make_rng(seed, {kSimThetaStream, 1});
        spec.theta1 = a.theta ? load_matrix_csv(*a.theta) : sample_structured_theta(structure, theta_rng);
        if (kind == GeneratorKind::var2 || kind == GeneratorKind::var_nl2) {
            Rng rng2 = make_rng(seed, {kSimThetaStream, 2});
            spec.theta2 = a.theta2 ? load_matrix_csv(*a.theta2) : sample_structured_theta(structure, rng2);
        }
        theta1 = spec.theta1;
        for (int r = 0; r < a.replicates; ++r) {
            spec.seed = derive_seed(seed, {kSimDataStream, std::uint64_t(r)});
            ExpressionData one = generate(spec);
            if (labels.empty()) labels = one.labels();
            reps.push_back(one.replicate(0));
        }
    }
    const ExpressionData data(std::move(reps), labels);
    for (const auto& path : save_expression(data, a.out)) std::cout << "wrote " << path << '\n';
    if (a.theta_out) {
        auto out = open_out(*a.theta_out);
        write_matrix_csv(out, theta1, data_labels(data));
        std::cout << "wrote " << *a.theta_out << '\n';
    }
    return kExitOk;
}

// --------------------------------------------------------------- calibrate

int cmd_calibrate(const Globals& g, const RunFlags& f, const std::vector<std::string>& files) {
    const RunConfig cfg = resolve_config(g, f);
    print_config(cfg);
    const ExpressionData data = load_expression(files);
    Rng rng = make_rng(cfg.seed, {kCalibrationStream});
    const Calibration cal = calibrate_epsilon(data, cfg, rng);
    std::cout << std::setprecision(17) << "epsilon=" << cal.epsilon << '\n';
    for (int k = 1; k <= 10; ++k) std::cout << "quantile_" << k << "pct=" << cal.quantile(k / 100.0) << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------- infer

struct InferArgs {
    std::vector<std::string> data;
    std::string out_dir = "abcnet_out";
    int threads = 0;
    std::optional<std::string> truth;
    bool raf_truth = false;
    std::vector<double> tune;
    long tune_length = 5000;
    bool bonferroni = false;
    bool exclude_diagonal = false;
};

void write_evaluation(const fs::path& dir, const PosteriorSummary& summary, const Adjacency& truth,
                      const EvalOptions& eval) {
    const EvalReport report = roc_auc(summary, truth, eval);
    auto out = open_out(dir / "roc.csv");
    out << "alpha,tp,fp,tn,fn,fpr,tpr\n" << std::setprecision(10);
    for (std::size_t k = 0; k < report.confusion.size(); ++k) {
        const auto& c = report.confusion[k];
        out << k + 1 << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ',' << c.fpr() << ',' << c.tpr()
            << '\n';
    }
    std::cout << std::setprecision(10) << "auc=" << report.auc << '\n';
}

int cmd_infer(const Globals& g, const RunFlags& f, const InferArgs& a) {
    RunConfig cfg = resolve_config(g, f);
    const ExpressionData data = load_expression(a.data);
    const auto labels = data_labels(data);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);

    if (!a.tune.empty()) {
        const TuningResult tuned = tune_sigma_theta(data, cfg, a.tune, a.tune_length);
        for (std::size_t k = 0; k < tuned.candidates.size(); ++k)
            std::cout << "# tune sigma-theta=" << tuned.candidates[k] << " acceptance=" << tuned.acceptance[k] << '\n';
        cfg.sigma_theta = tuned.sigma_theta;
    }

    print_config(cfg);
    {
        auto out = open_out(dir / "config.txt");
        out << describe_config(cfg);
    }

    const RunResult run = run_abc_net(data, cfg, RunOptions{a.threads});

    {
        SampleWriter writer((dir / "samples.bin").string(), data.p());
        for (const auto& chain : run.chains)
            for (const auto& s : chain.samples) writer.write(s);
        writer.close();
    }
    save_samples((dir / "retained.bin").string(), data.p(), run.retained);

    {
        auto out = open_out(dir / "run.txt");
        out << std::setprecision(17) << "epsilon=" << run.epsilon << '\n';
        for (std::size_t k = 0; k < run.schedule.levels.size(); ++k)
            out << "cooling_level_" << k + 1 << '=' << run.schedule.levels[k] << '\n';
        for (std::size_t c = 0; c < run.chains.size(); ++c) {
            const auto& st = run.chains[c].stats;
            out << "chain_" << c << "_status=" << (run.chain_errors[c].empty() ? "ok" : run.chain_errors[c]) << '\n'
                << "chain_" << c << "_burnin_iterations=" << st.burnin_iterations << '\n'
                << "chain_" << c << "_burnin_repeats=" << st.burnin_repeats << '\n'
                << "chain_" << c << "_main_acceptance=" << st.main_acceptance() << '\n';
        }
        out << "pooled_samples=" << run.pooled_samples << '\n'
            << "retained_samples=" << run.retained.size() << '\n'
            << "max_rhat=" << run.max_rhat << '\n'
            << "rhat_exceeding=" << run.rhat_exceeding << '\n'
            << "converged=" << (run.converged ? "true" : "false") << '\n';
    }
    if (!run.rhat.empty()) {
        auto out = open_out(dir / "rhat.csv");
        write_rhat_csv(out, run.rhat, data.p(), labels, cfg.rhat_cutoff);
    }

    std::cout << std::setprecision(17) << "epsilon=" << run.epsilon << '\n';
    for (std::size_t c = 0; c < run.chain_errors.size(); ++c)
        if (!run.chain_errors[c].empty()) std::cerr << "warning: " << run.chain_errors[c] << '\n';
    if (run.retained.empty()) throw Error("no chain produced samples");

    const PosteriorSummary summary = summarize(run.retained, cfg);
    {
        auto out = open_out(dir / "summary.csv");
        write_summary_csv(out, summary, labels);
        auto hist = open_out(dir / "histograms.csv");
        write_histogram_csv(hist, summary, labels);
    }
    if (a.truth || a.raf_truth) {
        const Adjacency truth = a.truth ? load_adjacency(*a.truth) : RafTruth::adjacency();
        write_evaluation(dir, summary, truth, EvalOptions{a.bonferroni, !a.exclude_diagonal});
    }
    std::cout << "max_rhat=" << run.max_rhat << " rhat_exceeding=" << run.rhat_exceeding << '\n'
              << "wrote " << dir.string() << '\n';
    if (!run.converged) {
        std::cerr << "warning: chains did not converge (R-hat cutoff " << cfg.rhat_cutoff << ")\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- diagnose

int cmd_diagnose(const Globals& g, const RunFlags& f, const std::string& samples_path, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(g, f);
    print_config(cfg);
    const SampleFile file = load_samples(samples_path);
    if (file.samples.empty()) throw Error(samples_path + ": no samples");
    std::map<int, std::vector<const ChainSample*>> by_chain;
    for (const auto& s : file.samples) by_chain[s.chain_id].push_back(&s);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::vector<std::string> labels;
    for (int i = 0; i < file.p; ++i) labels.push_back("g" + std::to_string(i + 1));
    if (file.p == RafTruth::kGenes) labels = raf_labels();

    bool converged = false;
    if (by_chain.size() >= 2) {
        std::vector<double> rhat;
        std::vector<std::vector<double>> draws(by_chain.size());
        for (int i = 0; i < file.p; ++i)
            for (int j = 0; j < file.p; ++j) {
                std::size_t c = 0;
                for (const auto& [id, chain] : by_chain) {
                    draws[c].clear();
                    for (const auto* s : chain) draws[c].push_back(s->network.weight(i, j));
                    ++c;
                }
                rhat.push_back(gelman_rubin(draws));
            }
        const auto exceeding = std::count_if(rhat.begin(), rhat.end(), [&](double r) { return !(r < cfg.rhat_cutoff); });
        converged = exceeding == 0;
        auto out = open_out(dir / "rhat.csv");
        write_rhat_csv(out, rhat, file.p, labels, cfg.rhat_cutoff);
        std::cout << "chains=" << by_chain.size() << " max_rhat=" << *std::max_element(rhat.begin(), rhat.end())
                  << " rhat_exceeding=" << exceeding << '\n';
    } else {
        std::cerr << "warning: fewer than two chains; R-hat not computed\n";
    }

    const auto retained = retain_smallest(file.samples, cfg.retain_fraction);
    const PosteriorSummary summary = summarize(retained, cfg);
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, summary, labels);
    auto hist = open_out(dir / "histograms.csv");
    write_histogram_csv(hist, summary, labels);
    std::cout << "retained=" << retained.size() << "\nwrote " << dir.string() << '\n';
    return converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Globals& g, const RunFlags& f, const std::string& samples_path, const InferArgs& a,
                 bool already_retained) {
    const RunConfig cfg = resolve_config(g, f);
    print_config(cfg);
    const SampleFile file = load_samples(samples_path);
    if (file.samples.empty()) throw Error(samples_path + ": no samples");
    const auto retained = already_retained ? file.samples : retain_smallest(file.samples, cfg.retain_fraction);
    const PosteriorSummary summary = summarize(retained, cfg);
    if (!a.truth && !a.raf_truth) throw UsageError("evaluate needs --truth or --raf-truth");
    const Adjacency truth = a.truth ? load_adjacency(*a.truth) : RafTruth::adjacency();
    fs::create_directories(a.out_dir);
    write_evaluation(a.out_dir, summary, truth, EvalOptions{a.bonferroni, !a.exclude_diagonal});
    return kExitOk;
}

// ------------------------------------------------------------------- study

int cmd_study(const Globals& g, const std::string& spec_path, const std::string& out, int threads) {
    StudySpec spec = load_study_spec(spec_path);
    if (g.seed) spec.base.seed = *g.seed;
    if (threads > 0) spec.threads = threads;
    print_config(spec.base);
    const StudyReport report = run_study(spec);
    {
        auto file = open_out(out);
        report.write_csv(file);
    }
    const auto cells = spec.cells();
    std::cout << std::setprecision(6);
    for (std::size_t c = 0; c < cells.size(); ++c)
        std::cout << "cell " << c << ' ' << to_string(cells[c].generator) << " noise=" << cells[c].noise_sd << ' '
                  << to_string(cells[c].distance) << " q=" << cells[c].epsilon_quantile << " bounds=("
                  << cells[c].prior_lo << ',' << cells[c].prior_hi << ") mean_auc=" << report.mean_auc(static_cast<int>(c))
                  << '\n';
    const bool any_failed =
        std::any_of(report.rows.begin(), report.rows.end(), [](const StudyRow& r) { return !r.error.empty(); });
    std::cout << "wrote " << out << '\n';
    return any_failed ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABC-MCMC inference of gene regulatory networks from expression time series.\n" +
                 std::string(kLayoutHelp)};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Expand all help");

    Globals g;
    app.add_option("--seed", g.seed, "Base random seed (default 1)");
    app.add_option("--config", g.config, "key = value file of run settings; flags override it")
        ->check(CLI::ExistingFile);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic expression dataset");
    simulate->add_option("--model", sim.model, "var1|var2|var_nl1|var_nl2|ode")
        ->check(CLI::IsMember({"var1", "var2", "var_nl1", "var_nl2", "ode"}))
        ->capture_default_str();
    simulate->add_option("--genes", sim.genes, "Gene count; 11 uses the Raf structure")->capture_default_str();
    simulate->add_option("--timepoints", sim.timepoints, "Time points")->capture_default_str();
    simulate->add_option("--noise-sd", sim.noise_sd, "Noise standard deviation")->capture_default_str();
    simulate->add_option("--replicates", sim.replicates, "Independent replicates")->capture_default_str();
    simulate->add_option("--structure", sim.structure, "Adjacency matrix CSV (nonzero = edge)")->check(CLI::ExistingFile);
    simulate->add_option("--theta", sim.theta, "First-lag coefficient matrix CSV")->check(CLI::ExistingFile);
    simulate->add_option("--theta2", sim.theta2, "Second-lag coefficient matrix CSV")->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", sim.out, "Output expression CSV")->capture_default_str();
    simulate->add_option("--theta-out", sim.theta_out, "Write the generating coefficients here");

    RunFlags run_flags;
    std::vector<std::string> cal_files;
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate the tolerance from prior draws");
    calibrate->add_option("data", cal_files, "Expression CSV, one per replicate")->required()->check(CLI::ExistingFile);
    add_run_flags(calibrate, run_flags);

    InferArgs inf;
    auto* infer = app.add_subcommand("infer", "Calibrate, sample, diagnose and summarize");
    infer->add_option("data", inf.data, "Expression CSV, one per replicate")->required()->check(CLI::ExistingFile);
    infer->add_option("-o,--out-dir", inf.out_dir, "Output directory")->capture_default_str();
    infer->add_option("--threads", inf.threads, "Worker threads (default ABCNET_THREADS or all cores)");
    infer->add_option("--truth", inf.truth, "True adjacency CSV; enables ROC output")->check(CLI::ExistingFile);
    infer->add_flag("--raf-truth", inf.raf_truth, "Score against the Raf pathway");
    infer->add_option("--tune-sigma", inf.tune, "Candidate proposal sds; the pilot picks one")->delimiter(',');
    infer->add_option("--tune-length", inf.tune_length, "Pilot chain length")->capture_default_str();
    infer->add_flag("--bonferroni", inf.bonferroni, "Bonferroni-widen intervals when calling edges");
    infer->add_flag("--exclude-diagonal", inf.exclude_diagonal, "Do not score self-edges");
    add_run_flags(infer, run_flags);

    std::string diag_samples;
    std::string diag_out = "abcnet_out";
    auto* diagnose = app.add_subcommand("diagnose", "R-hat and posterior summary from a sample file");
    diagnose->add_option("samples", diag_samples, "Sample file written by infer")->required()->check(CLI::ExistingFile);
    diagnose->add_option("-o,--out-dir", diag_out, "Output directory")->capture_default_str();
    add_run_flags(diagnose, run_flags);

    std::string eval_samples;
    InferArgs eval;
    bool eval_retained = false;
    auto* evaluate = app.add_subcommand("evaluate", "ROC/AUC of credible-interval edge calls");
    evaluate->add_option("samples", eval_samples, "Sample file written by infer")->required()->check(CLI::ExistingFile);
    evaluate->add_option("-o,--out-dir", eval.out_dir, "Output directory")->capture_default_str();
    evaluate->add_flag("--retained", eval_retained, "Samples are already the retained set");
    evaluate->add_option("--truth", eval.truth, "True adjacency CSV")->check(CLI::ExistingFile);
    evaluate->add_flag("--raf-truth", eval.raf_truth, "Score against the Raf pathway");
    evaluate->add_flag("--bonferroni", eval.bonferroni, "Bonferroni-widen intervals");
    evaluate->add_flag("--exclude-diagonal", eval.exclude_diagonal, "Do not score self-edges");
    add_run_flags(evaluate, run_flags);

    std::string study_spec;
    std::string study_out = "study.csv";
    int study_threads = 0;
    auto* study = app.add_subcommand("study", "Run a simulation-study grid from a JSON spec");
    study->add_option("spec", study_spec, "Study spec JSON")->required()->check(CLI::ExistingFile);
    study->add_option("-o,--out", study_out, "Results CSV")->capture_default_str();
    study->add_option("--threads", study_threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(g, sim);
        if (calibrate->parsed()) return cmd_calibrate(g, run_flags, cal_files);
        if (infer->parsed()) return cmd_infer(g, run_flags, inf);
        if (diagnose->parsed()) return cmd_diagnose(g, run_flags, diag_samples, diag_out);
        if (evaluate->parsed()) return cmd_evaluate(g, run_flags, eval_samples, eval, eval_retained);
        if (study->parsed()) return cmd_study(g, study_spec, study_out, study_threads);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
