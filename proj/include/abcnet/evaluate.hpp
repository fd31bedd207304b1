#pragma once

#include "abcnet/core.hpp"
#include "abcnet/diagnostics.hpp"
#include "abcnet/mcmc.hpp"
#include "abcnet/simulators.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace abcnet {

struct EvalOptions {
    /// Widen every alpha% interval to 1 - (1 - alpha/100)/m, m = number of
    /// scored entries.
    bool bonferroni = false;
    /// Score self-edges (the diagonal) along with all other entries.
    bool include_diagonal = true;
};

/// 1 where the alpha% credible interval excludes zero.
Adjacency call_edges(const PosteriorSummary& summary, int alpha, const EvalOptions& options = {});

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
    double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
    double fpr() const { return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn); }
};

Confusion confusion(const Adjacency& called, const Adjacency& truth, bool include_diagonal = true);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct EvalReport {
    std::vector<Confusion> confusion;  // index alpha - 1
    std::vector<RocPoint> roc_points;  // one per alpha, index alpha - 1
    std::vector<RocPoint> curve;       // integrated curve: unique FPR, endpoints added
    double auc = 0.0;
};

/// Trapezoid area under a set of ROC points after adding (0,0) and (1,1)
/// and keeping the largest TPR at each distinct FPR.
double roc_area(const std::vector<RocPoint>& points, std::vector<RocPoint>* curve = nullptr);

/// Sweeps alpha over 1..100 and scores the edge calls against `truth`.
/// Throws when truth has no edges or no non-edges among scored entries.
EvalReport roc_auc(const PosteriorSummary& summary, const Adjacency& truth, const EvalOptions& options = {});

/// One configuration of the simulation study.
struct StudyCell {
    GeneratorKind generator = GeneratorKind::var1;
    double noise_sd = 1.0;
    DistanceKind distance = DistanceKind::euclidean;
    double epsilon_quantile = 0.01;
    double prior_lo = -2.0;
    double prior_hi = 2.0;
};

struct StudySpec {
    RunConfig base;
    int t_len = 20;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<GeneratorKind> generators{GeneratorKind::var1};
    std::vector<double> noise_sd{1.0};
    std::vector<DistanceKind> distances{DistanceKind::euclidean};
    std::vector<double> epsilon_quantiles{0.01};
    std::vector<std::pair<double, double>> prior_bounds{{-2.0, 2.0}};
    EvalOptions eval;
    int threads = 0;
    /// Proposal sds to pick from with a pilot run per row (empty: use
    /// base.sigma_theta as is).
    std::vector<double> tune_sigma;
    long tune_length = 5000;
    /// When set, each cell's posterior summary is written there.
    std::optional<std::string> summary_dir;

    /// Cartesian product of the axes (generator, noise, distance, quantile,
    /// bounds), in that nesting order.
    std::vector<StudyCell> cells() const;
};

/// Raf-structured dataset for a study replicate. The coefficient matrices
/// depend only on the seed, and the noise stream only on (seed, generator),
/// so cells sharing a seed are paired.
ExpressionData study_dataset(GeneratorKind generator, double noise_sd, int t_len, std::uint64_t seed);

struct StudyRow {
    int cell = 0;
    StudyCell config;
    std::uint64_t seed = 0;
    std::string error;  // empty on success
    double epsilon = 0.0;
    double auc = 0.0;
    double max_rhat = 0.0;
    int rhat_exceeding = 0;
    double main_acceptance = 0.0;  // mean over successful chains
    long retained = 0;
    int failed_chains = 0;
    double sigma_theta = 0.0;  // proposal sd actually used
};

struct StudyReport {
    std::vector<StudyRow> rows;  // cell-major, then seed

    void write_csv(std::ostream& out) const;
    /// Mean AUC over successful rows of a cell; NaN when none succeeded.
    double mean_auc(int cell) const;
};

/// Single pipeline run: generate data, calibrate, run ABC-Net, evaluate
/// against the Raf truth.
StudyRow run_study_cell(const StudyCell& cell, std::uint64_t seed, const RunConfig& base, int t_len,
                        const EvalOptions& eval, int threads = 1, PosteriorSummary* summary_out = nullptr,
                        const std::vector<double>& tune_sigma = {}, long tune_length = 5000);

/// Runs every (cell, seed) pair; failures are recorded per row and the
/// study continues.
StudyReport run_study(const StudySpec& spec);

}  // namespace abcnet
