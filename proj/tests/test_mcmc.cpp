#include "abcnet/mcmc.hpp"
#include "abcnet/simulators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace abcnet {
namespace {

Adjacency adjacency_from_bits(int p, unsigned bits) {
    Adjacency a = Adjacency::Zero(p, p);
    for (int k = 0; k < p * p; ++k) a(k / p, k % p) = (bits >> k) & 1u;
    return a;
}

unsigned bits_of(const Adjacency& a) {
    const int p = static_cast<int>(a.rows());
    unsigned bits = 0;
    for (int k = 0; k < p * p; ++k)
        if (a(k / p, k % p)) bits |= 1u << k;
    return bits;
}

bool feasible(const Adjacency& a, int fan_in) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (a.row(i).cast<int>().sum() > fan_in) return false;
    return true;
}

// Distinct feasible structures one add, delete or reversal away.
std::set<unsigned> brute_neighbors(const Adjacency& a, int fan_in) {
    const int p = static_cast<int>(a.rows());
    std::set<unsigned> out;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            Adjacency flip = a;
            flip(i, j) = a(i, j) ? 0 : 1;
            if (feasible(flip, fan_in)) out.insert(bits_of(flip));
            if (i != j && a(i, j) && !a(j, i)) {
                Adjacency rev = a;
                rev(i, j) = 0;
                rev(j, i) = 1;
                if (feasible(rev, fan_in)) out.insert(bits_of(rev));
            }
        }
    return out;
}

GeneNetwork unit_network(const Adjacency& a, double w = 0.5) {
    return GeneNetwork(a, a.cast<double>() * w);
}

// Chi-square upper-tail probability via the regularized incomplete gamma.
double chi2_sf(double x, int dof) {
    const double a = 0.5 * dof;
    const double z = 0.5 * x;
    if (z < a + 1.0) {
        double sum = 1.0 / a, term = sum;
        for (int n = 1; n < 500; ++n) {
            term *= z / (a + n);
            sum += term;
        }
        return 1.0 - std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
    }
    double b = z + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int n = 1; n < 500; ++n) {
        const double an = -n * (n - a);
        b += 2.0;
        d = an * d + b;
        c = b + an / c;
        d = 1.0 / d;
        h *= d * c;
    }
    return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

TEST(Neighborhood, HandExamples) {
    RunConfig cfg;
    cfg.max_fan_in = 1;
    EXPECT_EQ(neighborhood_size(GeneNetwork(2), cfg), 4);
    Adjacency a = Adjacency::Zero(2, 2);
    a(0, 1) = 1;
    EXPECT_EQ(neighborhood_size(unit_network(a), cfg), 4);
    const MoveCounts c = count_moves(a, 1);
    EXPECT_EQ(c.add, 2);
    EXPECT_EQ(c.remove, 1);
    EXPECT_EQ(c.reverse, 1);
}

TEST(Neighborhood, MatchesBruteForceForAllSmallGraphs) {
    for (int p = 1; p <= 3; ++p) {
        for (int fan_in = 1; fan_in <= 3; ++fan_in) {
            RunConfig cfg;
            cfg.max_fan_in = fan_in;
            for (unsigned bits = 0; bits < (1u << (p * p)); ++bits) {
                const Adjacency a = adjacency_from_bits(p, bits);
                if (!feasible(a, fan_in)) continue;
                const auto expected = brute_neighbors(a, fan_in);
                ASSERT_EQ(neighborhood_size(unit_network(a), cfg), static_cast<long>(expected.size()))
                    << "p=" << p << " fan_in=" << fan_in << " bits=" << bits;
                std::set<unsigned> produced;
                for (const auto& m : legal_moves(a, fan_in)) produced.insert(bits_of(apply_move(a, m)));
                ASSERT_EQ(produced, expected) << "p=" << p << " fan_in=" << fan_in << " bits=" << bits;
            }
        }
    }
}

TEST(Neighborhood, CanonicalOrderAddsRemovesReverses) {
    Adjacency a = Adjacency::Zero(3, 3);
    a(1, 0) = 1;
    a(2, 2) = 1;
    const auto moves = legal_moves(a, 2);
    const MoveCounts c = count_moves(a, 2);
    ASSERT_EQ(static_cast<long>(moves.size()), c.total());
    for (long k = 0; k < c.total(); ++k) {
        const auto kind = k < c.add ? MoveKind::add : (k < c.add + c.remove ? MoveKind::remove : MoveKind::reverse);
        EXPECT_EQ(moves[static_cast<std::size_t>(k)].kind, kind);
        EXPECT_EQ(nth_move(a, 2, k), moves[static_cast<std::size_t>(k)]);
    }
    EXPECT_THROW(nth_move(a, 2, c.total()), Error);
}

TEST(SamplePrior, FanInZeroGivesEmptyNetwork) {
    RunConfig cfg;
    cfg.max_fan_in = 0;
    Rng rng(1);
    for (int k = 0; k < 20; ++k) EXPECT_EQ(sample_prior(cfg, 4, rng).edge_count(), 0);
}

TEST(SamplePrior, EntryFrequenciesAreOneHalfWithoutConstraint) {
    RunConfig cfg;
    cfg.max_fan_in = 2;
    Rng rng(2);
    const int n = 100000;
    Eigen::Matrix<long, 2, 2> counts = Eigen::Matrix<long, 2, 2>::Zero();
    for (int k = 0; k < n; ++k) {
        const GeneNetwork net = sample_prior(cfg, 2, rng);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) counts(i, j) += net.has_edge(i, j);
    }
    const double se = std::sqrt(0.25 / n);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(static_cast<double>(counts(i, j)) / n, 0.5, 3 * se);
}

TEST(SamplePrior, UniformOverFeasibleStructures) {
    RunConfig cfg;
    cfg.max_fan_in = 1;
    Rng rng(3);
    const int n = 90000;
    std::map<unsigned, long> counts;
    for (int k = 0; k < n; ++k) {
        const GeneNetwork net = sample_prior(cfg, 3, rng);
        EXPECT_TRUE(validate_network(net, cfg).ok());
        ++counts[bits_of(net.adjacency())];
    }
    // 4 choices per row (none or one of three regulators).
    ASSERT_EQ(counts.size(), 64u);
    const double expected = n / 64.0;
    double chi2 = 0.0;
    for (const auto& [bits, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_GT(chi2_sf(chi2, 63), 0.01);
}

TEST(SamplePrior, WeightsAreUniformWithinBounds) {
    RunConfig cfg;
    cfg.prior_lo = -1.0;
    cfg.prior_hi = 3.0;
    Rng rng(4);
    double sum = 0.0;
    long n = 0;
    for (int k = 0; k < 5000; ++k) {
        const GeneNetwork net = sample_prior(cfg, 4, rng);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (net.has_edge(i, j)) {
                    EXPECT_GT(net.weight(i, j), -1.0);
                    EXPECT_LT(net.weight(i, j), 3.0);
                    sum += net.weight(i, j);
                    ++n;
                }
    }
    EXPECT_NEAR(sum / static_cast<double>(n), 1.0, 3.0 * std::sqrt(16.0 / 12.0 / static_cast<double>(n)));
}

TEST(Propose, RemovedEdgeIsZeroAndOthersMove) {
    RunConfig cfg;
    cfg.max_fan_in = 3;
    Adjacency a = Adjacency::Zero(3, 3);
    a(0, 1) = 1;
    a(2, 0) = 1;
    const GeneNetwork cur = unit_network(a);
    Rng rng(5);
    int removes = 0;
    for (int k = 0; k < 500; ++k) {
        const Proposal prop = propose(cur, cfg, rng);
        EXPECT_EQ(prop.n_current, neighborhood_size(cur, cfg));
        EXPECT_EQ(prop.n_proposed, count_moves(prop.network.adjacency(), cfg.max_fan_in).total());
        EXPECT_EQ(prop.network.adjacency(), apply_move(a, prop.move));
        if (prop.move.kind == MoveKind::remove) {
            ++removes;
            EXPECT_EQ(prop.network.weight(prop.move.target, prop.move.regulator), 0.0);
        }
        // G is one move away from G*.
        const auto back = legal_moves(prop.network.adjacency(), cfg.max_fan_in);
        bool found = false;
        for (const auto& m : back) found |= apply_move(prop.network.adjacency(), m) == a;
        EXPECT_TRUE(found);
    }
    EXPECT_GT(removes, 0);
}

TEST(Propose, TinyStepKeepsSurvivingWeights) {
    RunConfig cfg;
    cfg.sigma_theta = 1e-12;
    Adjacency a = Adjacency::Zero(3, 3);
    a(0, 1) = 1;
    a(1, 2) = 1;
    const GeneNetwork cur(a, a.cast<double>() * 0.7);
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
        const Proposal prop = propose(cur, cfg, rng);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (a(i, j) && prop.network.has_edge(i, j)) EXPECT_NEAR(prop.network.weight(i, j), 0.7, 1e-9);
    }
}

TEST(Propose, MoveTypeFrequenciesMatchComposition) {
    RunConfig cfg;
    cfg.max_fan_in = 2;
    Adjacency a = Adjacency::Zero(4, 4);
    a(0, 1) = 1;
    a(0, 2) = 1;
    a(1, 3) = 1;
    a(3, 3) = 1;
    const GeneNetwork cur = unit_network(a, 0.3);
    const MoveCounts c = count_moves(a, 2);
    Rng rng(7);
    const int n = 10000;
    std::map<MoveKind, long> seen;
    for (int k = 0; k < n; ++k) ++seen[propose(cur, cfg, rng).move.kind];
    const std::pair<MoveKind, long> expected[] = {
        {MoveKind::add, c.add}, {MoveKind::remove, c.remove}, {MoveKind::reverse, c.reverse}};
    for (const auto& [kind, count] : expected) {
        const double q = static_cast<double>(count) / static_cast<double>(c.total());
        const double se = std::sqrt(q * (1 - q) / n);
        EXPECT_NEAR(static_cast<double>(seen[kind]) / n, q, 3 * se + 1e-12);
    }
}

TEST(Acceptance, NeighborhoodRatioForReverseMove) {
    // A reversal whose new weight has the same magnitude as the removed one
    // makes the density terms cancel, leaving N(G)/N(G*).
    RunConfig cfg;
    cfg.max_fan_in = 2;
    Adjacency a = Adjacency::Zero(2, 2);
    a(0, 1) = 1;
    GeneNetwork cur(a, a.cast<double>() * 0.9);
    Adjacency b = apply_move(a, ProposalMove{MoveKind::reverse, 0, 1});
    GeneNetwork prop(b, b.cast<double>() * -0.9);
    const ChainSample sample{cur, 1.0, 0, 0};
    EXPECT_DOUBLE_EQ(acceptance_probability(sample, prop, 0.5, 1.0, 4, 5, cfg), 0.8);
    EXPECT_DOUBLE_EQ(acceptance_probability(sample, prop, 0.5, 1.0, 5, 4, cfg), 1.0);
    EXPECT_EQ(acceptance_probability(sample, prop, 1.0, 1.0, 4, 5, cfg), 0.0);
    EXPECT_EQ(acceptance_probability(sample, prop, 2.0, 1.0, 4, 5, cfg), 0.0);
}

TEST(Acceptance, PrintedRatioWithoutDimensionTerms) {
    RunConfig cfg;
    cfg.dimension_correction = false;
    GeneNetwork cur(2);
    GeneNetwork prop(2);
    prop.set_edge(1, 0, 0.1);
    const ChainSample sample{cur, 1.0, 0, 0};
    // Uniform priors written out: pi(G*) / pi(G) = 1 on the structure, the
    // indicator is 1 and only the structure kernels remain.
    const double n_cur = 4, n_prop = 5;
    const double expected = std::min(1.0, (1.0 / n_prop) / (1.0 / n_cur));
    EXPECT_DOUBLE_EQ(acceptance_probability(sample, prop, 0.0, 1.0, 4, 5, cfg), expected);
}

TEST(Acceptance, BirthAndDeathDensityFactor) {
    RunConfig cfg;  // bounds (-2, 2), sigma 0.5
    GeneNetwork cur(2);
    GeneNetwork prop(2);
    prop.set_edge(1, 0, 0.3);
    const double phi = std::exp(-0.5 * 0.36) / (0.5 * std::sqrt(2.0 * M_PI));
    EXPECT_NEAR(log_dimension_factor(cur, prop, cfg), -std::log(4.0 * phi), 1e-12);
    EXPECT_NEAR(log_dimension_factor(prop, cur, cfg), std::log(4.0 * phi), 1e-12);
    const ChainSample sample{cur, 1.0, 0, 0};
    EXPECT_NEAR(acceptance_probability(sample, prop, 0.0, 1.0, 4, 4, cfg), std::min(1.0, 1.0 / (4.0 * phi)), 1e-12);
}

TEST(Acceptance, OutsidePriorIsRejected) {
    RunConfig cfg;
    GeneNetwork cur(2);
    GeneNetwork prop(2);
    prop.set_edge(0, 0, 2.5);
    EXPECT_EQ(acceptance_probability(ChainSample{cur, 0, 0, 0}, prop, 0.0, 1.0, 4, 4, cfg), 0.0);
    cfg.max_fan_in = 1;
    GeneNetwork crowded(2);
    crowded.set_edge(0, 0, 0.5);
    crowded.set_edge(0, 1, 0.5);
    EXPECT_EQ(acceptance_probability(ChainSample{cur, 0, 0, 0}, crowded, 0.0, 1.0, 4, 4, cfg), 0.0);
}

ExpressionData small_data(std::uint64_t seed = 1, int p = 3, int t_len = 12) {
    GeneratorSpec spec;
    spec.theta1 = Matrix::Zero(p, p);
    spec.theta1(1, 0) = 0.8;
    spec.theta1(2, 1) = -0.6;
    spec.t_len = t_len;
    spec.noise_sd = 0.5;
    spec.seed = seed;
    return generate_var1(spec);
}

TEST(Calibration, QuantileMatchesOrderStatistics) {
    RunConfig cfg;
    const ExpressionData data = small_data();
    Rng rng(8);
    const Calibration cal = calibrate_epsilon(data, cfg, rng);
    ASSERT_EQ(cal.sorted_distances.size(), 5000u);
    EXPECT_TRUE(std::is_sorted(cal.sorted_distances.begin(), cal.sorted_distances.end()));
    // h = 0.01 * 4999 = 49.99: between the 50th and 51st order statistics.
    EXPECT_GE(cal.epsilon, cal.sorted_distances[49]);
    EXPECT_LE(cal.epsilon, cal.sorted_distances[50]);
    EXPECT_NEAR(cal.epsilon, cal.sorted_distances[49] + 0.99 * (cal.sorted_distances[50] - cal.sorted_distances[49]),
                1e-9);
    EXPECT_EQ(cal.quantile(1.0), cal.sorted_distances.back());
    Rng again(8);
    EXPECT_EQ(calibrate_epsilon(data, cfg, again).epsilon, cal.epsilon);
}

TEST(CoolingSchedule, StrictlyDecreasingToTarget) {
    Calibration cal;
    cal.quantile_level = 0.01;
    for (int k = 0; k < 1000; ++k) cal.sorted_distances.push_back(k < 200 ? 1.0 : static_cast<double>(k));
    cal.epsilon = cal.quantile(0.01);
    const CoolingSchedule s = CoolingSchedule::from_calibration(cal, cal.epsilon, 10, 200);
    ASSERT_EQ(s.levels.size(), 10u);
    EXPECT_EQ(s.target(), cal.epsilon);
    for (std::size_t k = 1; k < s.levels.size(); ++k) EXPECT_GT(s.levels[k - 1], s.levels[k]);
    // Default target 1%: levels at the 10%, 9%, ..., 2% quantiles.
    Calibration ramp;
    ramp.quantile_level = 0.01;
    for (int k = 0; k <= 1000; ++k) ramp.sorted_distances.push_back(k);
    const CoolingSchedule d = CoolingSchedule::from_calibration(ramp, 10.0, 10, 200);
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(d.levels[static_cast<std::size_t>(k)], 100.0 - 10.0 * k, 1e-9);
    // A 0.1% target still starts at the 10% quantile.
    ramp.quantile_level = 0.001;
    const CoolingSchedule t = CoolingSchedule::from_calibration(ramp, 1.0, 10, 200);
    EXPECT_NEAR(t.levels.front(), 100.0, 1e-9);
    EXPECT_NEAR(t.levels[8], 1.0 + 99.0 / 9.0, 1e-9);
    const CoolingSchedule e = CoolingSchedule::from_epsilon(2.0, 4, 10);
    EXPECT_EQ(e.levels, (std::vector<double>{8.0, 6.0, 4.0, 2.0}));
}

TEST(Rejection, InfiniteAndZeroTolerance) {
    RunConfig cfg;
    const ExpressionData data = small_data();
    Rng rng(9);
    EXPECT_DOUBLE_EQ(abc_rejection(data, cfg, 2000, kInfinity, rng).acceptance_rate(), 1.0);
    EXPECT_DOUBLE_EQ(abc_rejection(data, cfg, 2000, 0.0, rng).acceptance_rate(), 0.0);
}

TEST(Rejection, CalibratedQuantileGivesMatchingRate) {
    RunConfig cfg;
    cfg.n_calibration_networks = 20000;
    cfg.epsilon_quantile = 0.05;
    const ExpressionData data = small_data(2);
    Rng rng(10);
    const Calibration cal = calibrate_epsilon(data, cfg, rng);
    const long n = 20000;
    const double rate = abc_rejection(data, cfg, n, cal.epsilon, rng).acceptance_rate();
    EXPECT_NEAR(rate, 0.05, 4 * std::sqrt(0.05 * 0.95 / n) + 4 * std::sqrt(0.05 * 0.95 / 20000.0));
}

TEST(RunChain, SampleCountAndDeterminism) {
    RunConfig cfg;
    cfg.chain_length = 10000;
    cfg.thin = 50;
    const ExpressionData data = small_data();
    Rng a(11), b(11);
    const ChainResult ra = run_chain(data, cfg, kInfinity, 0, a);
    const ChainResult rb = run_chain(data, cfg, kInfinity, 0, b);
    ASSERT_EQ(ra.samples.size(), 200u);
    EXPECT_EQ(ra.samples, rb.samples);
    EXPECT_EQ(ra.samples.front().iteration, 50);
    EXPECT_EQ(ra.samples.back().iteration, 10000);
    EXPECT_EQ(ra.stats.main_iterations, 10000);
    EXPECT_GE(ra.stats.burnin_iterations, 2000);
}

TEST(RunChain, EveryStateIsValidAndWithinTolerance) {
    RunConfig cfg;
    cfg.chain_length = 5000;
    cfg.thin = 1;
    cfg.max_fan_in = 2;
    cfg.sigma_theta = 0.1;
    const ExpressionData data = small_data();
    Rng rng(12);
    const Calibration cal = calibrate_epsilon(data, cfg, rng);
    const CoolingSchedule s = CoolingSchedule::from_calibration(cal, cal.quantile(0.1), 10, 200);
    const ChainResult r = run_chain(data, cfg, s, 3, rng);
    std::vector<ChainSample> seen;
    for (const auto& sample : r.samples) {
        EXPECT_TRUE(validate_network(sample.network, cfg).ok());
        EXPECT_LT(sample.rho, s.target());
        EXPECT_EQ(sample.chain_id, 3);
    }
    EXPECT_GT(r.stats.main_acceptance(), 0.0);
}

TEST(RunChain, BurninCoversOnePercentOfLongChains) {
    RunConfig cfg;
    cfg.chain_length = 500000;
    EXPECT_EQ(extra_burnin_iterations(cfg), 3000);
    cfg.chain_length = 100000;
    EXPECT_EQ(extra_burnin_iterations(cfg), 0);
}

TEST(RunChain, AbortsWhenToleranceIsUnreachable) {
    RunConfig cfg;
    cfg.chain_length = 100;
    cfg.max_burnin_repeats = 2;
    const ExpressionData data = small_data();
    Rng rng(13);
    EXPECT_THROW(run_chain(data, cfg, 1e-9, 0, rng), ChainAbort);
}

TEST(RunChain, DetailedBalanceOnTwoGenes) {
    // Infinite tolerance: the chain targets the prior, which is uniform over
    // the 16 structures of a 2-gene, fan-in-2 space.
    RunConfig cfg;
    cfg.max_fan_in = 2;
    cfg.chain_length = 200000;
    cfg.thin = 10;
    const ExpressionData data = small_data(3, 2, 8);
    Rng rng(14);
    const ChainResult r = run_chain(data, cfg, kInfinity, 0, rng);
    std::map<unsigned, long> counts;
    for (const auto& s : r.samples) ++counts[bits_of(s.network.adjacency())];
    ASSERT_EQ(counts.size(), 16u);
    const double n = static_cast<double>(r.samples.size());
    double chi2 = 0.0;
    for (const auto& [bits, c] : counts) chi2 += (c - n / 16) * (c - n / 16) / (n / 16);
    EXPECT_GT(chi2_sf(chi2, 15), 0.01) << "chi2=" << chi2;
}

TEST(RunAbcNet, SingleChainMatchesRunChain) {
    RunConfig cfg;
    cfg.n_chains = 1;
    cfg.chain_length = 2000;
    cfg.thin = 10;
    cfg.n_calibration_networks = 500;
    cfg.epsilon_quantile = 0.2;
    const ExpressionData data = small_data();
    const RunResult run = run_abc_net(data, cfg, RunOptions{1});
    ASSERT_EQ(run.chains.size(), 1u);
    EXPECT_TRUE(run.rhat.empty());
    EXPECT_FALSE(run.converged);
    Rng rng = make_rng(cfg.seed, {kChainStream, 0});
    const ChainResult direct = run_chain(data, cfg, run.schedule, 0, rng);
    EXPECT_EQ(direct.samples, run.chains[0].samples);
    EXPECT_EQ(run.retained.size(), 2u);
}

TEST(RunAbcNet, ThreadCountDoesNotChangeResults) {
    RunConfig cfg;
    cfg.n_chains = 4;
    cfg.chain_length = 2000;
    cfg.thin = 20;
    cfg.n_calibration_networks = 500;
    cfg.epsilon_quantile = 0.2;
    cfg.retain_fraction = 0.1;
    const ExpressionData data = small_data();
    const RunResult one = run_abc_net(data, cfg, RunOptions{1});
    const RunResult four = run_abc_net(data, cfg, RunOptions{4});
    EXPECT_EQ(one.epsilon, four.epsilon);
    EXPECT_EQ(one.retained, four.retained);
    EXPECT_EQ(one.rhat, four.rhat);
    ASSERT_EQ(one.rhat.size(), 9u);
    EXPECT_EQ(one.pooled_samples, 400);
    EXPECT_EQ(one.retained.size(), 40u);
}

TEST(Retention, KeepsSmallestDistances) {
    std::vector<ChainSample> pooled;
    for (int k = 0; k < 200; ++k)
        pooled.push_back(ChainSample{GeneNetwork(1), static_cast<double>((k * 37) % 200), k, k % 3});
    const auto kept = retain_smallest(pooled, 0.01);
    ASSERT_EQ(kept.size(), 2u);
    double max_kept = 0.0;
    for (const auto& s : kept) max_kept = std::max(max_kept, s.rho);
    for (const auto& s : pooled)
        if (std::find(kept.begin(), kept.end(), s) == kept.end()) EXPECT_GE(s.rho, max_kept);
    EXPECT_EQ(retain_smallest(pooled, 1.0).size(), 200u);
    EXPECT_EQ(retain_smallest(pooled, 1e-6).size(), 1u);
}

TEST(Tuning, PicksCandidateNearestTargetBand) {
    RunConfig cfg;
    cfg.n_calibration_networks = 1000;
    cfg.epsilon_quantile = 0.1;
    const ExpressionData data = small_data();
    Rng rng(15);
    const Calibration cal = calibrate_epsilon(data, cfg, rng);
    const CoolingSchedule s = CoolingSchedule::from_calibration(cal, cal.epsilon, 10, 200);
    const TuningResult t = tune_sigma_theta(data, cfg, s, {0.01, 0.05, 0.2, 1.0}, 3000);
    ASSERT_EQ(t.acceptance.size(), 4u);
    // Independent scoring: inside [0.15, 0.5] prefer the rate nearest 0.325,
    // otherwise the one nearest the band.
    auto score = [](double r) {
        if (r >= 0.15 && r <= 0.5) return std::abs(r - 0.325);
        return 1.0 + std::min(std::abs(r - 0.15), std::abs(r - 0.5));
    };
    std::size_t best = 0;
    for (std::size_t k = 1; k < 4; ++k)
        if (score(t.acceptance[k]) < score(t.acceptance[best])) best = k;
    EXPECT_EQ(t.sigma_theta, t.candidates[best]);
    for (double r : t.acceptance) {
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0);
    }
}

}  // namespace
}  // namespace abcnet
