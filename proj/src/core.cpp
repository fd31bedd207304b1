#include "abcnet/core.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace abcnet {

namespace {

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

}  // namespace

GeneNetwork::GeneNetwork(int p)
    : adjacency_(Adjacency::Zero(p, p)), params_(Matrix::Zero(p, p)) {
    if (p < 1) throw DimensionError("gene network needs at least one gene");
}

GeneNetwork GeneNetwork::from_params(Matrix params) {
    if (params.rows() != params.cols()) throw DimensionError("parameter matrix must be square");
    Adjacency adj = (params.array() != 0.0).cast<std::uint8_t>();
    return GeneNetwork(std::move(adj), std::move(params));
}

GeneNetwork::GeneNetwork(Adjacency adjacency, Matrix params)
    : adjacency_(std::move(adjacency)), params_(std::move(params)) {
    if (params_.rows() != params_.cols() || !same_shape(adjacency_, params_))
        throw DimensionError("adjacency and parameter matrices must be square and of equal size");
}

void GeneNetwork::set_edge(int target, int regulator, double weight) {
    params_(target, regulator) = weight;
    adjacency_(target, regulator) = weight != 0.0 ? 1 : 0;
}

void GeneNetwork::remove_edge(int target, int regulator) { set_edge(target, regulator, 0.0); }

int GeneNetwork::fan_in(int target) const {
    int n = 0;
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) n += adjacency_(target, j);
    return n;
}

int GeneNetwork::edge_count() const {
    return static_cast<int>(adjacency_.cast<int>().sum());
}

bool operator==(const GeneNetwork& a, const GeneNetwork& b) {
    return same_shape(a.params_, b.params_) && a.adjacency_ == b.adjacency_ && a.params_ == b.params_;
}

ExpressionData::ExpressionData(std::vector<Matrix> replicates, std::vector<std::string> labels)
    : replicates_(std::move(replicates)), labels_(std::move(labels)) {
    if (replicates_.empty()) throw DimensionError("expression data needs at least one replicate");
    p_ = static_cast<int>(replicates_.front().rows());
    t_len_ = static_cast<int>(replicates_.front().cols());
    if (p_ < 1) throw DimensionError("expression data needs at least one gene");
    if (t_len_ < 2) throw DimensionError("expression data needs at least two time points");
    for (std::size_t r = 0; r < replicates_.size(); ++r) {
        if (!same_shape(replicates_[r], replicates_.front())) {
            std::ostringstream msg;
            msg << "replicate " << r + 1 << " is " << replicates_[r].rows() << "x" << replicates_[r].cols()
                << ", expected " << p_ << "x" << t_len_;
            throw DimensionError(msg.str());
        }
        if (!replicates_[r].allFinite()) {
            std::ostringstream msg;
            msg << "replicate " << r + 1 << " contains non-finite values";
            throw DimensionError(msg.str());
        }
    }
    if (!labels_.empty() && static_cast<int>(labels_.size()) != p_)
        throw DimensionError("label count does not match gene count");
}

ExpressionData::ExpressionData(Matrix replicate, std::vector<std::string> labels)
    : ExpressionData(std::vector<Matrix>{std::move(replicate)}, std::move(labels)) {}

std::string ExpressionData::label(int gene) const {
    if (!labels_.empty()) return labels_.at(static_cast<std::size_t>(gene));
    return "g" + std::to_string(gene + 1);
}

bool operator==(const ExpressionData& a, const ExpressionData& b) {
    if (a.replicates_.size() != b.replicates_.size() || a.labels_ != b.labels_) return false;
    for (std::size_t r = 0; r < a.replicates_.size(); ++r) {
        if (!same_shape(a.replicates_[r], b.replicates_[r]) || a.replicates_[r] != b.replicates_[r])
            return false;
    }
    return true;
}

std::string to_string(DistanceKind kind) {
    switch (kind) {
        case DistanceKind::canberra: return "canberra";
        case DistanceKind::euclidean: return "euclidean";
        case DistanceKind::manhattan: return "manhattan";
        case DistanceKind::mvt: return "mvt";
    }
    return "unknown";
}

DistanceKind parse_distance_kind(const std::string& name) {
    if (name == "canberra") return DistanceKind::canberra;
    if (name == "euclidean") return DistanceKind::euclidean;
    if (name == "manhattan") return DistanceKind::manhattan;
    if (name == "mvt") return DistanceKind::mvt;
    throw ConfigError("unknown distance '" + name + "' (expected canberra|euclidean|manhattan|mvt)");
}

void RunConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid configuration: " + what); };
    if (!(prior_lo < 0.0 && 0.0 < prior_hi)) fail("prior bounds must satisfy lo < 0 < hi");
    if (!std::isfinite(prior_lo) || !std::isfinite(prior_hi)) fail("prior bounds must be finite");
    if (max_fan_in < 1) fail("max_fan_in must be >= 1");
    if (!(sigma_theta > 0.0)) fail("sigma_theta must be > 0");
    if (!(mvt_ridge >= 0.0)) fail("mvt_ridge must be >= 0");
    if (!(epsilon_quantile > 0.0 && epsilon_quantile <= 1.0)) fail("epsilon_quantile must lie in (0, 1]");
    if (n_calibration_networks < 1) fail("n_calibration_networks must be >= 1");
    if (n_chains < 1) fail("n_chains must be >= 1");
    if (chain_length < 1) fail("chain_length must be >= 1");
    if (thin < 1) fail("thin must be >= 1");
    if (burnin_levels < 1) fail("burnin_levels must be >= 1");
    if (burnin_iters_per_level < 1) fail("burnin_iters_per_level must be >= 1");
    if (max_burnin_repeats < 1) fail("max_burnin_repeats must be >= 1");
    if (!(retain_fraction > 0.0 && retain_fraction <= 1.0)) fail("retain_fraction must lie in (0, 1]");
    if (!(rhat_cutoff > 0.0)) fail("rhat_cutoff must be > 0");
    if (epsilon && !(*epsilon > 0.0)) fail("epsilon must be > 0");
}

ValidationResult validate_network(const GeneNetwork& net, const RunConfig& cfg) {
    ValidationResult result;
    auto report = [&result](const char* what, int i, int j) {
        result.violations.push_back(std::string(what) + " at (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ")");
    };
    const int p = net.p();
    const auto& adj = net.adjacency();
    const auto& theta = net.params();
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            const double w = theta(i, j);
            if (adj(i, j) > 1) report("adjacency not binary", i, j);
            if ((adj(i, j) != 0) != (w != 0.0)) report("zero-mismatch", i, j);
            if (w != 0.0 && !(w > cfg.prior_lo && w < cfg.prior_hi)) report("bounds", i, j);
        }
        if (net.fan_in(i) > cfg.max_fan_in) result.violations.push_back("fan-in row " + std::to_string(i + 1));
    }
    return result;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw Error("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[lo + 1]) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace abcnet
