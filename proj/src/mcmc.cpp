#include "abcnet/mcmc.hpp"

#include "abcnet/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <thread>

namespace abcnet {

namespace {


std::vector<int> row_counts(const Adjacency& adj) {
    std::vector<int> rc(static_cast<std::size_t>(adj.rows()), 0);
    for (Eigen::Index j = 0; j < adj.cols(); ++j)
        for (Eigen::Index i = 0; i < adj.rows(); ++i) rc[static_cast<std::size_t>(i)] += adj(i, j) != 0;
    return rc;
}

// Visits legal moves in canonical order; the visitor returns true to stop.
template <typename Visitor>
void for_each_move(const Adjacency& adj, int max_fan_in, Visitor&& visit) {
    const auto rc = row_counts(adj);
    const int p = static_cast<int>(adj.rows());
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
            if (!adj(i, j) && rc[static_cast<std::size_t>(i)] < max_fan_in && visit(ProposalMove{MoveKind::add, i, j}))
                return;
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
            if (adj(i, j) && visit(ProposalMove{MoveKind::remove, i, j})) return;
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
            if (i != j && adj(i, j) && !adj(j, i) && rc[static_cast<std::size_t>(j)] < max_fan_in &&
                visit(ProposalMove{MoveKind::reverse, i, j}))
                return;
}

double log_normal_density(double x, double sd) {
    return -0.5 * (x / sd) * (x / sd) - std::log(sd * std::sqrt(2.0 * std::numbers::pi));
}

bool within_prior(const Adjacency& adj, const Matrix& theta, const RunConfig& cfg) {
    const Eigen::Index p = adj.rows();
    for (Eigen::Index i = 0; i < p; ++i) {
        int fan_in = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double w = theta(i, j);
            if (adj(i, j)) {
                ++fan_in;
                if (w == 0.0 || !(w > cfg.prior_lo && w < cfg.prior_hi)) return false;
            } else if (w != 0.0) {
                return false;
            }
        }
        if (fan_in > cfg.max_fan_in) return false;
    }
    return true;
}

double log_dimension_factor(const Adjacency& cur_adj, const Matrix& cur_theta, const Adjacency& prop_adj,
                            const Matrix& prop_theta, const RunConfig& cfg) {
    const double log_width = std::log(cfg.prior_hi - cfg.prior_lo);
    double total = 0.0;
    for (Eigen::Index j = 0; j < cur_adj.cols(); ++j) {
        for (Eigen::Index i = 0; i < cur_adj.rows(); ++i) {
            const bool before = cur_adj(i, j) != 0;
            const bool after = prop_adj(i, j) != 0;
            if (before && !after) total += log_width + log_normal_density(cur_theta(i, j), cfg.sigma_theta);
            if (!before && after) total -= log_width + log_normal_density(prop_theta(i, j), cfg.sigma_theta);
        }
    }
    return total;
}

// Log of the Metropolis-Hastings ratio excluding the ABC indicator.
double log_move_ratio(const Adjacency& cur_adj, const Matrix& cur_theta, const Adjacency& prop_adj,
                      const Matrix& prop_theta, long n_current, long n_proposed, const RunConfig& cfg) {
    double log_ratio = std::log(static_cast<double>(n_current)) - std::log(static_cast<double>(n_proposed));
    if (cfg.dimension_correction) log_ratio += log_dimension_factor(cur_adj, cur_theta, prop_adj, prop_theta, cfg);
    return log_ratio;
}

struct MoveDraw {
    ProposalMove move;
    long n_current = 0;
    long n_proposed = 0;
};

// Shared two-step proposal kernel; writes the proposal into out_adj/out_theta.
MoveDraw propose_into(const Adjacency& adj, const Matrix& theta, const RunConfig& cfg, Rng& rng, Adjacency& out_adj,
                      Matrix& out_theta) {
    const long n_current = count_moves(adj, cfg.max_fan_in).total();
    if (n_current == 0) throw Error("network has no legal neighbor under the fan-in bound");
    std::uniform_int_distribution<long> pick(0, n_current - 1);
    const ProposalMove move = nth_move(adj, cfg.max_fan_in, pick(rng));

    out_adj = apply_move(adj, move);
    out_theta.resize(theta.rows(), theta.cols());
    std::normal_distribution<double> step(0.0, cfg.sigma_theta);
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
        for (Eigen::Index i = 0; i < theta.rows(); ++i) {
            if (!out_adj(i, j)) {
                out_theta(i, j) = 0.0;
                continue;
            }
            const double from = adj(i, j) ? theta(i, j) : 0.0;
            out_theta(i, j) = from + step(rng);
        }
    }
    return MoveDraw{move, n_current, count_moves(out_adj, cfg.max_fan_in).total()};
}

std::size_t retained_count(std::size_t n, double fraction) {
    if (n == 0) return 0;
    const double want = std::ceil(static_cast<double>(n) * fraction - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(want, 1.0)), 1, n);
}

template <typename Job>
void run_parallel(int jobs, int threads, Job&& job) {
    threads = std::max(1, std::min(threads, jobs));
    if (threads == 1) {
        for (int k = 0; k < jobs; ++k) job(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (int k = next++; k < jobs; k = next++) job(k);
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace

MoveCounts count_moves(const Adjacency& adj, int max_fan_in) {
    MoveCounts counts;
    const auto rc = row_counts(adj);
    const Eigen::Index p = adj.rows();
    for (Eigen::Index i = 0; i < p; ++i) {
        const int r = rc[static_cast<std::size_t>(i)];
        counts.remove += r;
        if (r < max_fan_in) counts.add += p - r;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (rc[static_cast<std::size_t>(j)] >= max_fan_in) continue;
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j && adj(i, j) && !adj(j, i)) ++counts.reverse;
    }
    return counts;
}

std::vector<ProposalMove> legal_moves(const Adjacency& adjacency, int max_fan_in) {
    std::vector<ProposalMove> moves;
    for_each_move(adjacency, max_fan_in, [&moves](const ProposalMove& m) {
        moves.push_back(m);
        return false;
    });
    return moves;
}

ProposalMove nth_move(const Adjacency& adjacency, int max_fan_in, long k) {
    std::optional<ProposalMove> found;
    long seen = 0;
    for_each_move(adjacency, max_fan_in, [&](const ProposalMove& m) {
        if (seen++ == k) {
            found = m;
            return true;
        }
        return false;
    });
    if (!found) throw Error("move index out of range");
    return *found;
}

Adjacency apply_move(const Adjacency& adjacency, const ProposalMove& move) {
    Adjacency out = adjacency;
    switch (move.kind) {
        case MoveKind::add: out(move.target, move.regulator) = 1; break;
        case MoveKind::remove: out(move.target, move.regulator) = 0; break;
        case MoveKind::reverse:
            out(move.target, move.regulator) = 0;
            out(move.regulator, move.target) = 1;
            break;
    }
    return out;
}

long neighborhood_size(const GeneNetwork& net, const RunConfig& cfg) {
    const long n = count_moves(net.adjacency(), cfg.max_fan_in).total();
    if (n == 0) throw Error("neighborhood is empty: no add, remove or reverse move is legal");
    return n;
}

GeneNetwork sample_prior(const RunConfig& cfg, int p, Rng& rng) {
    if (p < 1) throw DimensionError("prior draw needs at least one gene");
    const int max_size = std::clamp(cfg.max_fan_in, 0, p);
    // Row subsets of size k are C(p, k)-fold, so sizes are weighted by C(p, k).
    std::vector<double> weights(static_cast<std::size_t>(max_size) + 1);
    double binom = 1.0;
    for (int k = 0; k <= max_size; ++k) {
        weights[static_cast<std::size_t>(k)] = binom;
        binom = binom * static_cast<double>(p - k) / static_cast<double>(k + 1);
    }
    std::discrete_distribution<int> size_dist(weights.begin(), weights.end());
    std::uniform_real_distribution<double> weight(cfg.prior_lo, cfg.prior_hi);

    GeneNetwork net(p);
    std::vector<int> columns(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        const int k = size_dist(rng);
        for (int c = 0; c < p; ++c) columns[static_cast<std::size_t>(c)] = c;
        for (int s = 0; s < k; ++s) {
            std::uniform_int_distribution<int> pick(s, p - 1);
            std::swap(columns[static_cast<std::size_t>(s)], columns[static_cast<std::size_t>(pick(rng))]);
        }
        std::sort(columns.begin(), columns.begin() + k);
        for (int s = 0; s < k; ++s) {
            double w = weight(rng);
            while (w == 0.0 || w == cfg.prior_lo) w = weight(rng);
            net.set_edge(i, columns[static_cast<std::size_t>(s)], w);
        }
    }
    return net;
}

Proposal propose(const GeneNetwork& current, const RunConfig& cfg, Rng& rng) {
    Adjacency adj;
    Matrix theta;
    const MoveDraw draw = propose_into(current.adjacency(), current.params(), cfg, rng, adj, theta);
    return Proposal{GeneNetwork(std::move(adj), std::move(theta)), draw.move, draw.n_current, draw.n_proposed};
}

double log_dimension_factor(const GeneNetwork& current, const GeneNetwork& proposal, const RunConfig& cfg) {
    if (current.p() != proposal.p()) throw DimensionError("networks differ in size");
    return log_dimension_factor(current.adjacency(), current.params(), proposal.adjacency(), proposal.params(), cfg);
}

double acceptance_probability(const ChainSample& current, const GeneNetwork& proposal, double rho_star,
                              double epsilon, long n_current, long n_proposed, const RunConfig& cfg) {
    if (n_current < 1 || n_proposed < 1) throw Error("neighborhood sizes must be >= 1");
    if (current.network.p() != proposal.p()) throw DimensionError("networks differ in size");
    if (!(rho_star < epsilon)) return 0.0;
    if (!within_prior(proposal.adjacency(), proposal.params(), cfg)) return 0.0;
    const double log_ratio = log_move_ratio(current.network.adjacency(), current.network.params(),
                                            proposal.adjacency(), proposal.params(), n_current, n_proposed, cfg);
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

Calibration calibrate_epsilon(const ExpressionData& data, const RunConfig& cfg, Rng& rng) {
    PredictionDistance rho(DistanceSpec{cfg.distance, cfg.mvt_ridge}, data);
    Calibration cal;
    cal.quantile_level = cfg.epsilon_quantile;
    cal.sorted_distances.reserve(static_cast<std::size_t>(cfg.n_calibration_networks));
    for (int n = 0; n < cfg.n_calibration_networks; ++n) {
        const GeneNetwork net = sample_prior(cfg, data.p(), rng);
        cal.sorted_distances.push_back(rho(net.params()));
    }
    std::sort(cal.sorted_distances.begin(), cal.sorted_distances.end());
    cal.epsilon = cal.quantile(cfg.epsilon_quantile);
    return cal;
}

CoolingSchedule CoolingSchedule::from_calibration(const Calibration& cal, double epsilon, int levels, int iters) {
    if (levels < 1) throw ConfigError("cooling needs at least one level");
    CoolingSchedule schedule;
    schedule.iters_per_level = iters;
    // Evenly spaced quantiles from the top level down to the target one; the
    // top is at least 10% so tiny targets still start from a reachable level.
    const double q = cal.quantile_level;
    const double top = std::clamp(q * static_cast<double>(levels), 0.1, 1.0);
    for (int k = 0; k + 1 < levels; ++k) {
        const double frac = static_cast<double>(levels - 1 - k) / static_cast<double>(levels - 1);
        schedule.levels.push_back(cal.quantile(std::min(1.0, q + (top - q) * frac)));
    }
    schedule.levels.push_back(epsilon);
    for (int k = levels - 2; k >= 0; --k) {
        auto& level = schedule.levels[static_cast<std::size_t>(k)];
        const double below = schedule.levels[static_cast<std::size_t>(k) + 1];
        if (!(level > below) && std::isfinite(below)) level = std::nextafter(below, kInfinity);
    }
    return schedule;
}

CoolingSchedule CoolingSchedule::from_epsilon(double epsilon, int levels, int iters) {
    if (levels < 1) throw ConfigError("cooling needs at least one level");
    CoolingSchedule schedule;
    schedule.iters_per_level = iters;
    for (int k = 0; k < levels; ++k) schedule.levels.push_back(epsilon * static_cast<double>(levels - k));
    return schedule;
}

RejectionResult abc_rejection(const ExpressionData& data, const RunConfig& cfg, long n_proposals, double epsilon,
                              Rng& rng) {
    PredictionDistance rho(DistanceSpec{cfg.distance, cfg.mvt_ridge}, data);
    RejectionResult result;
    result.proposals = n_proposals;
    for (long n = 0; n < n_proposals; ++n) {
        GeneNetwork net = sample_prior(cfg, data.p(), rng);
        const double r = rho(net.params());
        if (r <= epsilon) result.accepted.push_back(ChainSample{std::move(net), r, n, 0});
    }
    return result;
}

long extra_burnin_iterations(const RunConfig& cfg) {
    const long cooling = static_cast<long>(cfg.burnin_levels) * cfg.burnin_iters_per_level;
    const long minimum = static_cast<long>(std::ceil(0.01 * static_cast<double>(cfg.chain_length)));
    return std::max(0L, minimum - cooling);
}

ChainResult run_chain(const ExpressionData& data, const RunConfig& cfg, const CoolingSchedule& schedule,
                      int chain_id, Rng& rng, const SampleSink& sink) {
    if (schedule.levels.empty()) throw ConfigError("empty cooling schedule");
    if (!(schedule.target() > 0.0)) throw ConfigError("epsilon must be > 0");

    PredictionDistance rho(DistanceSpec{cfg.distance, cfg.mvt_ridge}, data);
    Adjacency adj;
    Matrix theta;
    double rho_cur = 0.0;
    long n_cur = 0;
    auto restart = [&] {
        GeneNetwork start = sample_prior(cfg, data.p(), rng);
        adj = start.adjacency();
        theta = start.params();
        rho_cur = rho(theta);
        n_cur = count_moves(adj, cfg.max_fan_in).total();
        if (n_cur == 0) throw Error("network has no legal neighbor under the fan-in bound");
    };
    restart();

    Adjacency prop_adj;
    Matrix prop_theta;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto step = [&](double epsilon) {
        const MoveDraw draw = propose_into(adj, theta, cfg, rng, prop_adj, prop_theta);
        if (!within_prior(prop_adj, prop_theta, cfg)) return false;
        const double log_ratio =
            log_move_ratio(adj, theta, prop_adj, prop_theta, draw.n_current, draw.n_proposed, cfg);
        // Accept iff u < ratio and rho* < epsilon; the uniform is drawn first
        // so the simulation is skipped when the ratio already rejects.
        if (log_ratio < 0.0 && !(unit(rng) < std::exp(log_ratio))) return false;
        const double rho_star = rho(prop_theta);
        if (!(rho_star < epsilon)) return false;
        adj.swap(prop_adj);
        theta.swap(prop_theta);
        rho_cur = rho_star;
        n_cur = draw.n_proposed;
        return true;
    };

    ChainResult result;
    ChainStats& stats = result.stats;
    const long cooling_iters = static_cast<long>(schedule.levels.size()) * schedule.iters_per_level;
    for (int pass = 0;; ++pass) {
        long accepted = 0;
        for (double level : schedule.levels)
            for (int it = 0; it < schedule.iters_per_level; ++it) accepted += step(level);
        stats.burnin_iterations += cooling_iters;
        stats.burnin_acceptance = static_cast<double>(accepted) / static_cast<double>(cooling_iters);
        if (stats.burnin_acceptance >= cfg.min_burnin_acceptance) break;
        if (pass >= cfg.max_burnin_repeats) {
            std::ostringstream msg;
            msg << "chain " << chain_id << ": burn-in acceptance " << stats.burnin_acceptance << " stayed below "
                << cfg.min_burnin_acceptance << " after " << pass + 1
                << " cooling passes; epsilon is probably too small";
            throw ChainAbort(msg.str());
        }
        ++stats.burnin_repeats;
        // A pass without a single acceptance never left its start, so the
        // repeat begins from a new draw; otherwise it keeps the progress made.
        if (accepted == 0) restart();
    }
    const long extra = extra_burnin_iterations(cfg);
    for (long it = 0; it < extra; ++it) step(schedule.target());
    stats.burnin_iterations += extra;

    result.samples.reserve(static_cast<std::size_t>(cfg.chain_length / cfg.thin));
    for (long it = 1; it <= cfg.chain_length; ++it) {
        stats.main_accepted += step(schedule.target());
        if (it % cfg.thin != 0) continue;
        ChainSample sample{GeneNetwork(adj, theta), rho_cur, it, chain_id};
        if (sink) sink(sample);
        result.samples.push_back(std::move(sample));
    }
    stats.main_iterations = cfg.chain_length;
    return result;
}

ChainResult run_chain(const ExpressionData& data, const RunConfig& cfg, double epsilon, int chain_id, Rng& rng,
                      const SampleSink& sink) {
    return run_chain(data, cfg, CoolingSchedule::from_epsilon(epsilon, cfg.burnin_levels, cfg.burnin_iters_per_level),
                     chain_id, rng, sink);
}

int default_thread_count() {
    if (const char* env = std::getenv("ABCNET_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<ChainSample> retain_smallest(std::vector<ChainSample> pooled, double fraction) {
    const std::size_t keep = retained_count(pooled.size(), fraction);
    auto before = [](const ChainSample& a, const ChainSample& b) {
        if (a.rho != b.rho) return a.rho < b.rho;
        if (a.chain_id != b.chain_id) return a.chain_id < b.chain_id;
        return a.iteration < b.iteration;
    };
    std::partial_sort(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(keep), pooled.end(), before);
    pooled.resize(keep);
    return pooled;
}

RunResult run_abc_net(const ExpressionData& data, const RunConfig& cfg, const RunOptions& options) {
    cfg.validate();
    RunResult result;
    if (cfg.epsilon) {
        result.epsilon = *cfg.epsilon;
        result.schedule = CoolingSchedule::from_epsilon(result.epsilon, cfg.burnin_levels, cfg.burnin_iters_per_level);
    } else {
        Rng rng = make_rng(cfg.seed, {kCalibrationStream});
        result.calibration = calibrate_epsilon(data, cfg, rng);
        result.epsilon = result.calibration->epsilon;
        if (!(result.epsilon > 0.0))
            throw Error("calibrated epsilon is not positive; the data are fitted exactly by prior draws");
        result.schedule = CoolingSchedule::from_calibration(*result.calibration, result.epsilon, cfg.burnin_levels,
                                                            cfg.burnin_iters_per_level);
    }

    const int n = cfg.n_chains;
    result.chains.resize(static_cast<std::size_t>(n));
    result.chain_errors.assign(static_cast<std::size_t>(n), std::string());
    const int threads = options.threads > 0 ? options.threads : default_thread_count();
    run_parallel(n, threads, [&](int c) {
        Rng rng = make_rng(cfg.seed, {kChainStream, static_cast<std::uint64_t>(c)});
        try {
            result.chains[static_cast<std::size_t>(c)] = run_chain(data, cfg, result.schedule, c, rng);
        } catch (const Error& e) {
            result.chain_errors[static_cast<std::size_t>(c)] = e.what();
        }
    });

    std::vector<const ChainResult*> good;
    for (int c = 0; c < n; ++c)
        if (result.chain_errors[static_cast<std::size_t>(c)].empty()) good.push_back(&result.chains[static_cast<std::size_t>(c)]);

    const int p = data.p();
    if (good.size() >= 2 && good.front()->samples.size() >= 2) {
        result.rhat.assign(static_cast<std::size_t>(p) * static_cast<std::size_t>(p), 1.0);
        std::vector<std::vector<double>> draws(good.size());
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                for (std::size_t c = 0; c < good.size(); ++c) {
                    draws[c].clear();
                    for (const auto& s : good[c]->samples) draws[c].push_back(s.network.weight(i, j));
                }
                const double r = gelman_rubin(draws);
                result.rhat[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)] = r;
            }
        }
        result.max_rhat = *std::max_element(result.rhat.begin(), result.rhat.end());
        result.rhat_exceeding = static_cast<int>(
            std::count_if(result.rhat.begin(), result.rhat.end(), [&](double r) { return !(r < cfg.rhat_cutoff); }));
        result.converged = result.rhat_exceeding == 0;
    }

    std::vector<ChainSample> pooled;
    for (const auto* chain : good) pooled.insert(pooled.end(), chain->samples.begin(), chain->samples.end());
    result.pooled_samples = static_cast<long>(pooled.size());
    if (!pooled.empty()) result.retained = retain_smallest(std::move(pooled), cfg.retain_fraction);
    return result;
}

TuningResult tune_sigma_theta(const ExpressionData& data, const RunConfig& cfg, const CoolingSchedule& schedule,
                              const std::vector<double>& candidates, long pilot_length, double low, double high) {
    constexpr int kPilotChains = 3;
    if (candidates.empty()) throw ConfigError("no proposal scales to tune over");
    TuningResult result;
    result.candidates = candidates;
    const double mid = 0.5 * (low + high);
    double best_score = kInfinity;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        RunConfig pilot = cfg;
        pilot.sigma_theta = candidates[k];
        pilot.chain_length = pilot_length;
        // An aborted pilot scores zero, so scales that cannot finish burn-in lose.
        double rate = 0.0;
        for (int c = 0; c < kPilotChains; ++c) {
            Rng rng = make_rng(cfg.seed, {kTuningStream, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(c)});
            try {
                rate += run_chain(data, pilot, schedule, c, rng).stats.main_acceptance();
            } catch (const ChainAbort&) {
            }
        }
        rate /= kPilotChains;
        result.acceptance.push_back(rate);
        const bool inside = rate >= low && rate <= high;
        const double score = inside ? std::abs(rate - mid) : 1.0 + std::min(std::abs(rate - low), std::abs(rate - high));
        if (score < best_score) {
            best_score = score;
            result.sigma_theta = candidates[k];
        }
    }
    return result;
}

TuningResult tune_sigma_theta(const ExpressionData& data, const RunConfig& cfg, const std::vector<double>& candidates,
                              long pilot_length) {
    CoolingSchedule schedule;
    if (cfg.epsilon) {
        schedule = CoolingSchedule::from_epsilon(*cfg.epsilon, cfg.burnin_levels, cfg.burnin_iters_per_level);
    } else {
        Rng rng = make_rng(cfg.seed, {kCalibrationStream});
        const Calibration cal = calibrate_epsilon(data, cfg, rng);
        schedule = CoolingSchedule::from_calibration(cal, cal.epsilon, cfg.burnin_levels, cfg.burnin_iters_per_level);
    }
    return tune_sigma_theta(data, cfg, schedule, candidates, pilot_length);
}

}  // namespace abcnet
