#pragma once

#include "abcnet/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace abcnet {

/// Potential scale reduction factor of m >= 2 chains with n >= 2 draws each
/// (longer chains are truncated to the shortest):
///   W = mean within-chain variance, B/n = variance of the chain means,
///   R = sqrt((n - 1)/n + B/(n W)).
/// W = B = 0 (every chain constant at the same value) gives 1; W = 0 < B
/// gives +inf.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

enum class RigidityLabel { rigid, intermediate, flexible };

std::string to_string(RigidityLabel label);

inline constexpr int kHistogramBins = 64;
inline constexpr int kCredibleLevels = 100;

/// Posterior summary of one parameter theta(target, regulator).
struct EdgeSummary {
    int target = 0;
    int regulator = 0;
    long samples = 0;
    long present = 0;
    double mean = 0.0;
    /// Equal-tailed alpha% credible bounds, index alpha - 1.
    std::array<double, kCredibleLevels> ci_lo{};
    std::array<double, kCredibleLevels> ci_hi{};
    /// Normalised counts over kHistogramBins equal bins on [prior_lo, prior_hi].
    std::vector<double> histogram;
    double rigidity = 1.0;
    RigidityLabel label = RigidityLabel::rigid;
    /// Retained draws in ascending order (absent edges contribute zeros).
    std::vector<double> sorted;

    bool never_present() const { return present == 0; }
    double presence() const { return samples == 0 ? 0.0 : static_cast<double>(present) / static_cast<double>(samples); }
    /// Equal-tailed interval at an arbitrary coverage in [0, 1].
    std::pair<double, double> interval(double coverage) const;
    bool excludes_zero(int alpha) const;
};

struct PosteriorSummary {
    int p = 0;
    double prior_lo = -2.0;
    double prior_hi = 2.0;
    std::vector<EdgeSummary> edges;  // row-major over (target, regulator)

    const EdgeSummary& edge(int target, int regulator) const {
        return edges.at(static_cast<std::size_t>(target) * static_cast<std::size_t>(p) + static_cast<std::size_t>(regulator));
    }
};

/// Per-parameter posterior summary of retained samples. Rigidity is
/// 1 - (width of the 90% interval) / (prior_hi - prior_lo), clamped to
/// [0, 1]; >= 0.8 is labelled rigid and <= 0.3 flexible.
PosteriorSummary summarize(const std::vector<ChainSample>& retained, const RunConfig& cfg);

}  // namespace abcnet
