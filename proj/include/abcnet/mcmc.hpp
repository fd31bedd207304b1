#pragma once

#include "abcnet/core.hpp"
#include "abcnet/distances.hpp"
#include "abcnet/random.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace abcnet {

// Substream tags for derive_seed; chain c uses (seed, kChainStream, c).
inline constexpr std::uint64_t kCalibrationStream = 0x63616c6962ULL;
inline constexpr std::uint64_t kChainStream = 0x636861696eULL;
inline constexpr std::uint64_t kTuningStream = 0x74756e65ULL;

/// Raised when a chain cannot complete its cooling burn-in.
class ChainAbort : public Error {
public:
    using Error::Error;
};

enum class MoveKind { add, remove, reverse };

/// One structural move. For add/remove the edge is regulator -> target;
/// reverse turns regulator -> target into target -> regulator.
struct ProposalMove {
    MoveKind kind = MoveKind::add;
    int target = 0;
    int regulator = 0;

    friend bool operator==(const ProposalMove&, const ProposalMove&) = default;
};

/// Number of structures reachable by one legal move, split by kind. A move
/// is legal when it never pushes a row above `max_fan_in` regulators.
struct MoveCounts {
    long add = 0;
    long remove = 0;
    long reverse = 0;
    long total() const { return add + remove + reverse; }
};

MoveCounts count_moves(const Adjacency& adjacency, int max_fan_in);

/// All legal moves in canonical order (adds, removes, reverses; each
/// column-major over (target, regulator)).
std::vector<ProposalMove> legal_moves(const Adjacency& adjacency, int max_fan_in);

/// The k-th legal move in canonical order, 0 <= k < count_moves().total().
ProposalMove nth_move(const Adjacency& adjacency, int max_fan_in, long k);

/// Structure after a move (parameters untouched).
Adjacency apply_move(const Adjacency& adjacency, const ProposalMove& move);

/// Neighborhood size of a network; throws Error when no move is legal.
long neighborhood_size(const GeneNetwork& net, const RunConfig& cfg);

/// A draw from the prior: each row gets a regulator set drawn uniformly
/// from all subsets of size <= max_fan_in (so the structure is uniform over
/// feasible adjacency matrices) and each present edge a weight uniform on
/// (prior_lo, prior_hi).
GeneNetwork sample_prior(const RunConfig& cfg, int p, Rng& rng);

struct Proposal {
    GeneNetwork network;
    ProposalMove move;
    long n_current = 0;   // neighborhood size of the current structure
    long n_proposed = 0;  // neighborhood size of the proposed structure
    double forward_structure_prob() const { return 1.0 / static_cast<double>(n_current); }
    double reverse_structure_prob() const { return 1.0 / static_cast<double>(n_proposed); }
};

/// Two-step proposal: a legal structural move chosen uniformly, then a
/// Gaussian step of sd sigma_theta on every edge present afterwards (new
/// edges start from 0, removed edges become 0).
Proposal propose(const GeneNetwork& current, const RunConfig& cfg, Rng& rng);

/// Log of the density factor that makes add/remove moves reversible:
/// sum over removed edges of log((hi - lo) * phi(theta)) minus the same sum
/// over added edges, phi being the N(0, sigma_theta^2) density. Zero for
/// moves that keep the edge set size and the same born/removed magnitudes.
double log_dimension_factor(const GeneNetwork& current, const GeneNetwork& proposal, const RunConfig& cfg);

/// min{1, N(G)/N(G*) * dimension factor * 1(rho* < epsilon)}, or 0 when the
/// proposal violates the fan-in or parameter-bound priors.
double acceptance_probability(const ChainSample& current, const GeneNetwork& proposal, double rho_star,
                              double epsilon, long n_current, long n_proposed, const RunConfig& cfg);

/// Tolerance calibrated from distances of prior networks.
struct Calibration {
    double epsilon = 0.0;
    double quantile_level = 0.0;
    std::vector<double> sorted_distances;

    double quantile(double q) const { return sorted_quantile(sorted_distances, q); }
};

Calibration calibrate_epsilon(const ExpressionData& data, const RunConfig& cfg, Rng& rng);

/// Decreasing tolerances used during burn-in; the last equals the target.
struct CoolingSchedule {
    std::vector<double> levels;
    int iters_per_level = 200;

    double target() const { return levels.back(); }

    /// Levels at evenly spaced calibration quantiles from max(q * L, 10%)
    /// down to q (10%, 9%, ..., 1% by default), ending at `epsilon`.
    static CoolingSchedule from_calibration(const Calibration& cal, double epsilon, int levels, int iters);
    /// Levels L * eps, (L - 1) * eps, ..., eps; all infinite when eps is.
    static CoolingSchedule from_epsilon(double epsilon, int levels, int iters);
};

struct RejectionResult {
    std::vector<ChainSample> accepted;
    long proposals = 0;
    double acceptance_rate() const {
        return proposals == 0 ? 0.0 : static_cast<double>(accepted.size()) / static_cast<double>(proposals);
    }
};

/// Plain rejection ABC: independent prior draws, accepted when rho <= epsilon.
RejectionResult abc_rejection(const ExpressionData& data, const RunConfig& cfg, long n_proposals, double epsilon,
                              Rng& rng);

struct ChainStats {
    long burnin_iterations = 0;
    int burnin_repeats = 0;  // cooling passes beyond the first
    double burnin_acceptance = 0.0;  // of the final cooling pass
    long main_iterations = 0;
    long main_accepted = 0;
    double main_acceptance() const {
        return main_iterations == 0 ? 0.0 : static_cast<double>(main_accepted) / static_cast<double>(main_iterations);
    }
};

struct ChainResult {
    std::vector<ChainSample> samples;
    ChainStats stats;
};

/// Called for every retained sample as soon as it is produced.
using SampleSink = std::function<void(const ChainSample&)>;

/// Total burn-in at the target tolerance needed after cooling so that the
/// burn-in covers at least 1% of the chain.
long extra_burnin_iterations(const RunConfig& cfg);

/// One ABC-MCMC chain: prior start, cooling burn-in (repeated while its
/// acceptance rate is below min_burnin_acceptance), then chain_length
/// iterations at the target tolerance keeping every thin-th state.
ChainResult run_chain(const ExpressionData& data, const RunConfig& cfg, const CoolingSchedule& schedule,
                      int chain_id, Rng& rng, const SampleSink& sink = {});

/// Convenience overload using CoolingSchedule::from_epsilon.
ChainResult run_chain(const ExpressionData& data, const RunConfig& cfg, double epsilon, int chain_id, Rng& rng,
                      const SampleSink& sink = {});

struct RunOptions {
    /// Worker threads for the chains; 0 picks ABCNET_THREADS or the
    /// hardware concurrency.
    int threads = 0;
};

struct RunResult {
    double epsilon = 0.0;
    std::optional<Calibration> calibration;
    CoolingSchedule schedule;
    std::vector<ChainResult> chains;
    std::vector<std::string> chain_errors;  // empty string when the chain succeeded
    /// Gelman-Rubin statistic per parameter, row-major p x p (empty with
    /// fewer than two successful chains).
    std::vector<double> rhat;
    double max_rhat = 0.0;
    int rhat_exceeding = 0;
    bool converged = false;
    std::vector<ChainSample> retained;
    long pooled_samples = 0;
};

/// Worker count from ABCNET_THREADS, falling back to the hardware concurrency.
int default_thread_count();

/// Full ABC-Net run: calibrate (unless cfg.epsilon is set), run n_chains
/// independent chains with substreams derived from (seed, chain id),
/// compute Gelman-Rubin statistics and keep the retain_fraction of pooled
/// samples with the smallest distances.
RunResult run_abc_net(const ExpressionData& data, const RunConfig& cfg, const RunOptions& options = {});

/// Keeps the ceil(fraction * n) samples with smallest rho (ties broken by
/// chain id, then iteration).
std::vector<ChainSample> retain_smallest(std::vector<ChainSample> pooled, double fraction);

struct TuningResult {
    double sigma_theta = 0.0;
    std::vector<double> candidates;
    std::vector<double> acceptance;  // main-phase acceptance of each pilot
};

/// Pre-run sweep over proposal scales: runs three short pilot chains per
/// candidate (an aborted pilot counts as zero acceptance) and returns the
/// candidate whose mean acceptance lies in
/// [low, high] closest to the middle of that band, or the closest to it
/// otherwise.
TuningResult tune_sigma_theta(const ExpressionData& data, const RunConfig& cfg, const CoolingSchedule& schedule,
                              const std::vector<double>& candidates, long pilot_length, double low = 0.15,
                              double high = 0.50);

/// Same, with the cooling schedule run_abc_net would use for `cfg`.
TuningResult tune_sigma_theta(const ExpressionData& data, const RunConfig& cfg, const std::vector<double>& candidates,
                              long pilot_length);

}  // namespace abcnet
