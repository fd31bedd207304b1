#include "abcnet/evaluate.hpp"

#include "abcnet/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <thread>

namespace abcnet {

namespace {

constexpr std::uint64_t kTheta1Stream = 0x746831ULL;
constexpr std::uint64_t kTheta2Stream = 0x746832ULL;
constexpr std::uint64_t kDataStream = 0x64617461ULL;
constexpr std::uint64_t kRunStream = 0x72756eULL;

long scored_entries(int p, bool include_diagonal) {
    return static_cast<long>(p) * p - (include_diagonal ? 0 : p);
}

}  // namespace

Adjacency call_edges(const PosteriorSummary& summary, int alpha, const EvalOptions& options) {
    if (alpha < 1 || alpha > kCredibleLevels) throw ConfigError("alpha must lie in 1..100");
    const int p = summary.p;
    Adjacency called = Adjacency::Zero(p, p);
    const double m = static_cast<double>(scored_entries(p, options.include_diagonal));
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            const EdgeSummary& e = summary.edge(i, j);
            bool excludes = false;
            if (options.bonferroni) {
                const auto [lo, hi] = e.interval(1.0 - (1.0 - alpha / 100.0) / m);
                excludes = lo > 0.0 || hi < 0.0;
            } else {
                excludes = e.excludes_zero(alpha);
            }
            called(i, j) = excludes ? 1 : 0;
        }
    }
    return called;
}

Confusion confusion(const Adjacency& called, const Adjacency& truth, bool include_diagonal) {
    if (called.rows() != truth.rows() || called.cols() != truth.cols())
        throw DimensionError("edge calls and truth differ in shape");
    Confusion c;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        for (Eigen::Index j = 0; j < truth.cols(); ++j) {
            if (i == j && !include_diagonal) continue;
            const bool t = truth(i, j) != 0;
            const bool k = called(i, j) != 0;
            if (t && k) ++c.tp;
            else if (!t && k) ++c.fp;
            else if (!t && !k) ++c.tn;
            else ++c.fn;
        }
    }
    return c;
}

double roc_area(const std::vector<RocPoint>& points, std::vector<RocPoint>* curve) {
    std::map<double, double> best;  // fpr -> max tpr
    auto add = [&best](const RocPoint& pt) {
        auto [it, inserted] = best.emplace(pt.fpr, pt.tpr);
        if (!inserted) it->second = std::max(it->second, pt.tpr);
    };
    add({0.0, 0.0});
    add({1.0, 1.0});
    for (const auto& pt : points) add(pt);
    double area = 0.0;
    std::vector<RocPoint> ordered;
    for (const auto& [fpr, tpr] : best) ordered.push_back({fpr, tpr});
    for (std::size_t k = 1; k < ordered.size(); ++k)
        area += (ordered[k].fpr - ordered[k - 1].fpr) * 0.5 * (ordered[k].tpr + ordered[k - 1].tpr);
    if (curve) *curve = std::move(ordered);
    return area;
}

EvalReport roc_auc(const PosteriorSummary& summary, const Adjacency& truth, const EvalOptions& options) {
    if (truth.rows() != summary.p || truth.cols() != summary.p)
        throw DimensionError("truth does not match the summary's gene count");
    const Confusion base = confusion(Adjacency::Zero(summary.p, summary.p), truth, options.include_diagonal);
    if (base.fn == 0) throw Error("truth has no edges; true-positive rate is undefined");
    if (base.tn == 0) throw Error("truth has no non-edges; false-positive rate is undefined");

    EvalReport report;
    for (int alpha = 1; alpha <= kCredibleLevels; ++alpha) {
        const Confusion c = confusion(call_edges(summary, alpha, options), truth, options.include_diagonal);
        report.confusion.push_back(c);
        report.roc_points.push_back({c.fpr(), c.tpr()});
    }
    report.auc = roc_area(report.roc_points, &report.curve);
    return report;
}

std::vector<StudyCell> StudySpec::cells() const {
    std::vector<StudyCell> out;
    for (auto g : generators)
        for (double s : noise_sd)
            for (auto d : distances)
                for (double q : epsilon_quantiles)
                    for (const auto& [lo, hi] : prior_bounds) out.push_back(StudyCell{g, s, d, q, lo, hi});
    return out;
}

ExpressionData study_dataset(GeneratorKind generator, double noise_sd, int t_len, std::uint64_t seed) {
    if (generator == GeneratorKind::ode)
        return generate_ode(t_len, noise_sd, derive_seed(seed, {kDataStream, static_cast<std::uint64_t>(generator)}));
    const Adjacency structure = RafTruth::adjacency();
    GeneratorSpec spec;
    spec.kind = generator;
    spec.noise_sd = noise_sd;
    spec.t_len = t_len;
    spec.seed = derive_seed(seed, {kDataStream, static_cast<std::uint64_t>(generator)});
    Rng theta_rng = make_rng(seed, {kTheta1Stream});
    spec.theta1 = sample_structured_theta(structure, theta_rng);
    if (generator == GeneratorKind::var2 || generator == GeneratorKind::var_nl2) {
        Rng rng2 = make_rng(seed, {kTheta2Stream});
        spec.theta2 = sample_structured_theta(structure, rng2);
    }
    return generate(spec);
}

StudyRow run_study_cell(const StudyCell& cell, std::uint64_t seed, const RunConfig& base, int t_len,
                        const EvalOptions& eval, int threads, PosteriorSummary* summary_out,
                        const std::vector<double>& tune_sigma, long tune_length) {
    StudyRow row;
    row.config = cell;
    row.seed = seed;
    try {
        const ExpressionData data = study_dataset(cell.generator, cell.noise_sd, t_len, seed);
        RunConfig cfg = base;
        cfg.distance = cell.distance;
        cfg.epsilon_quantile = cell.epsilon_quantile;
        cfg.prior_lo = cell.prior_lo;
        cfg.prior_hi = cell.prior_hi;
        cfg.seed = derive_seed(seed, {kRunStream});
        if (!tune_sigma.empty()) cfg.sigma_theta = tune_sigma_theta(data, cfg, tune_sigma, tune_length).sigma_theta;
        row.sigma_theta = cfg.sigma_theta;
        const RunResult run = run_abc_net(data, cfg, RunOptions{threads});
        row.epsilon = run.epsilon;
        row.max_rhat = run.max_rhat;
        row.rhat_exceeding = run.rhat_exceeding;
        row.retained = static_cast<long>(run.retained.size());
        double acc = 0.0;
        int ok = 0;
        for (std::size_t c = 0; c < run.chains.size(); ++c) {
            if (!run.chain_errors[c].empty()) {
                ++row.failed_chains;
                continue;
            }
            acc += run.chains[c].stats.main_acceptance();
            ++ok;
        }
        row.main_acceptance = ok > 0 ? acc / ok : 0.0;
        if (run.retained.empty()) throw Error("every chain failed: " + run.chain_errors.front());
        const PosteriorSummary summary = summarize(run.retained, cfg);
        row.auc = roc_auc(summary, RafTruth::adjacency(), eval).auc;
        if (summary_out) *summary_out = summary;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

StudyReport run_study(const StudySpec& spec) {
    const auto cells = spec.cells();
    StudyReport report;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (auto seed : spec.seeds) {
            StudyRow row;
            row.cell = static_cast<int>(c);
            row.config = cells[c];
            row.seed = seed;
            report.rows.push_back(row);
        }

    const int jobs = static_cast<int>(report.rows.size());
    const int threads = std::max(1, std::min(spec.threads > 0 ? spec.threads : default_thread_count(), jobs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < jobs; k = next++) {
            StudyRow& row = report.rows[static_cast<std::size_t>(k)];
            const int cell = row.cell;
            PosteriorSummary summary;
            row = run_study_cell(row.config, row.seed, spec.base, spec.t_len, spec.eval, 1,
                                 spec.summary_dir ? &summary : nullptr, spec.tune_sigma, spec.tune_length);
            row.cell = cell;
            if (spec.summary_dir && row.error.empty()) {
                std::filesystem::create_directories(*spec.summary_dir);
                const auto path = std::filesystem::path(*spec.summary_dir) /
                                  ("cell" + std::to_string(cell) + "_seed" + std::to_string(row.seed) + ".csv");
                std::ofstream out(path);
                const auto& labels = RafTruth::labels();
                write_summary_csv(out, summary, std::vector<std::string>(labels.begin(), labels.end()));
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return report;
}

void StudyReport::write_csv(std::ostream& out) const {
    out << "cell,generator,noise_sd,distance,epsilon_quantile,prior_lo,prior_hi,seed,status,epsilon,auc,"
           "max_rhat,rhat_exceeding,main_acceptance,retained,failed_chains,sigma_theta\n";
    out << std::setprecision(10);
    for (const auto& r : rows) {
        std::string status = r.error.empty() ? "ok" : r.error;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << r.cell << ',' << to_string(r.config.generator) << ',' << r.config.noise_sd << ','
            << to_string(r.config.distance) << ',' << r.config.epsilon_quantile << ',' << r.config.prior_lo << ','
            << r.config.prior_hi << ',' << r.seed << ',' << status << ',' << r.epsilon << ',' << r.auc << ','
            << r.max_rhat << ',' << r.rhat_exceeding << ',' << r.main_acceptance << ',' << r.retained << ','
            << r.failed_chains << ',' << r.sigma_theta << '\n';
    }
}

double StudyReport::mean_auc(int cell) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.cell == cell && r.error.empty()) {
            sum += r.auc;
            ++n;
        }
    return n == 0 ? std::nan("") : sum / n;
}

}  // namespace abcnet
