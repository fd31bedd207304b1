#include "abcnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace abcnet {

namespace {

constexpr double kRigidAt = 0.8;
constexpr double kFlexibleAt = 0.3;

}  // namespace

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw Error("Gelman-Rubin needs at least two chains");
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 2) throw Error("Gelman-Rubin needs at least two draws per chain");

    const double m = static_cast<double>(chains.size());
    const double nd = static_cast<double>(n);
    std::vector<double> means;
    double within = 0.0;
    for (const auto& c : chains) {
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k) mean += c[k];
        mean /= nd;
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) ss += (c[k] - mean) * (c[k] - mean);
        within += ss / (nd - 1.0);
        means.push_back(mean);
    }
    within /= m;
    double grand = 0.0;
    for (double mu : means) grand += mu;
    grand /= m;
    double between_over_n = 0.0;
    for (double mu : means) between_over_n += (mu - grand) * (mu - grand);
    between_over_n /= (m - 1.0);

    if (within == 0.0) return between_over_n == 0.0 ? 1.0 : kInfinity;
    return std::sqrt((nd - 1.0) / nd + between_over_n / within);
}

std::string to_string(RigidityLabel label) {
    switch (label) {
        case RigidityLabel::rigid: return "rigid";
        case RigidityLabel::intermediate: return "intermediate";
        case RigidityLabel::flexible: return "flexible";
    }
    return "unknown";
}

std::pair<double, double> EdgeSummary::interval(double coverage) const {
    if (sorted.empty()) return {0.0, 0.0};
    coverage = std::clamp(coverage, 0.0, 1.0);
    return {sorted_quantile(sorted, 0.5 * (1.0 - coverage)), sorted_quantile(sorted, 0.5 * (1.0 + coverage))};
}

bool EdgeSummary::excludes_zero(int alpha) const {
    const auto k = static_cast<std::size_t>(alpha - 1);
    return ci_lo.at(k) > 0.0 || ci_hi.at(k) < 0.0;
}

PosteriorSummary summarize(const std::vector<ChainSample>& retained, const RunConfig& cfg) {
    if (retained.empty()) throw Error("cannot summarize an empty sample");
    const int p = retained.front().network.p();
    PosteriorSummary summary;
    summary.p = p;
    summary.prior_lo = cfg.prior_lo;
    summary.prior_hi = cfg.prior_hi;
    const double width = cfg.prior_hi - cfg.prior_lo;

    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            EdgeSummary e;
            e.target = i;
            e.regulator = j;
            e.sorted.reserve(retained.size());
            for (const auto& s : retained) {
                if (s.network.p() != p) throw DimensionError("retained samples differ in gene count");
                const double w = s.network.weight(i, j);
                e.sorted.push_back(w);
                e.present += w != 0.0;
                e.mean += w;
            }
            e.samples = static_cast<long>(retained.size());
            e.mean /= static_cast<double>(e.samples);
            std::sort(e.sorted.begin(), e.sorted.end());
            for (int a = 1; a <= kCredibleLevels; ++a) {
                const auto [lo, hi] = e.interval(a / 100.0);
                e.ci_lo[static_cast<std::size_t>(a - 1)] = lo;
                e.ci_hi[static_cast<std::size_t>(a - 1)] = hi;
            }
            e.histogram.assign(kHistogramBins, 0.0);
            for (double w : e.sorted) {
                const int bin = std::clamp(static_cast<int>(std::floor((w - cfg.prior_lo) / width * kHistogramBins)), 0,
                                           kHistogramBins - 1);
                e.histogram[static_cast<std::size_t>(bin)] += 1.0 / static_cast<double>(e.samples);
            }
            const auto [lo90, hi90] = e.interval(0.90);
            e.rigidity = std::clamp(1.0 - (hi90 - lo90) / width, 0.0, 1.0);
            e.label = e.rigidity >= kRigidAt     ? RigidityLabel::rigid
                      : e.rigidity <= kFlexibleAt ? RigidityLabel::flexible
                                                  : RigidityLabel::intermediate;
            summary.edges.push_back(std::move(e));
        }
    }
    return summary;
}

}  // namespace abcnet
