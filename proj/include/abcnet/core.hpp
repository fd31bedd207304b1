#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace abcnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A directed, weighted gene network.
///
/// Orientation is fixed throughout the library: row i is the target gene and
/// column j the regulator, so params(i, j) is the effect of gene j at t-1 on
/// gene i at t. Self-edges (i == j) are allowed.
class GeneNetwork {
public:
    GeneNetwork() = default;

    /// Empty network on p genes.
    explicit GeneNetwork(int p);

    /// Builds a network from a parameter matrix; the adjacency is read off
    /// as params != 0.
    static GeneNetwork from_params(Matrix params);

    GeneNetwork(Adjacency adjacency, Matrix params);

    int p() const { return static_cast<int>(params_.rows()); }
    const Adjacency& adjacency() const { return adjacency_; }
    const Matrix& params() const { return params_; }

    bool has_edge(int target, int regulator) const { return adjacency_(target, regulator) != 0; }
    double weight(int target, int regulator) const { return params_(target, regulator); }

    /// Sets an edge weight; a weight of exactly zero removes the edge.
    void set_edge(int target, int regulator, double weight);
    void remove_edge(int target, int regulator);

    int fan_in(int target) const;
    int edge_count() const;

    friend bool operator==(const GeneNetwork& a, const GeneNetwork& b);

private:
    Adjacency adjacency_;
    Matrix params_;
};

/// Expression measurements for p genes over t_len equally spaced time points.
/// Each replicate is a p x t_len matrix whose columns are the y_t vectors.
class ExpressionData {
public:
    ExpressionData() = default;
    ExpressionData(std::vector<Matrix> replicates, std::vector<std::string> labels = {});

    /// Single-replicate convenience constructor.
    explicit ExpressionData(Matrix replicate, std::vector<std::string> labels = {});

    int p() const { return p_; }
    int t_len() const { return t_len_; }
    int replicate_count() const { return static_cast<int>(replicates_.size()); }
    const Matrix& replicate(int r) const { return replicates_.at(static_cast<std::size_t>(r)); }
    const std::vector<Matrix>& replicates() const { return replicates_; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Gene label, falling back to "g<i+1>" when no labels were given.
    std::string label(int gene) const;

    friend bool operator==(const ExpressionData& a, const ExpressionData& b);

private:
    int p_ = 0;
    int t_len_ = 0;
    std::vector<Matrix> replicates_;
    std::vector<std::string> labels_;
};

enum class DistanceKind { canberra, euclidean, manhattan, mvt };

std::string to_string(DistanceKind kind);
DistanceKind parse_distance_kind(const std::string& name);

/// All tunables of an inference run. Defaults reproduce the reference
/// configuration: bounds (-2, 2), fan-in 5, proposal sd 0.5, Euclidean
/// distance at the 1% calibration quantile, 10 chains of 1e6 iterations
/// thinned every 50th, 10 cooling levels of 200 iterations.
struct RunConfig {
    double prior_lo = -2.0;
    double prior_hi = 2.0;
    int max_fan_in = 5;
    double sigma_theta = 0.5;
    DistanceKind distance = DistanceKind::euclidean;
    double mvt_ridge = 1e-8;
    double epsilon_quantile = 0.01;
    int n_calibration_networks = 5000;
    int n_chains = 10;
    long chain_length = 1'000'000;
    int thin = 50;
    int burnin_levels = 10;
    int burnin_iters_per_level = 200;
    double min_burnin_acceptance = 0.01;
    int max_burnin_repeats = 10;
    double retain_fraction = 0.01;
    double rhat_cutoff = 1.2;
    /// Include the prior-density and birth/death proposal-density terms for
    /// moves that change the number of edges. When false, only the
    /// neighborhood ratio is used.
    bool dimension_correction = true;
    /// Fixed tolerance; when unset it is calibrated from prior draws.
    std::optional<double> epsilon;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

/// One retained state of a chain.
struct ChainSample {
    GeneNetwork network;
    double rho = 0.0;
    long iteration = 0;
    int chain_id = 0;

    friend bool operator==(const ChainSample&, const ChainSample&) = default;
};

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks the structural invariants of a network against a configuration:
/// adjacency/parameter zero pattern agreement, fan-in, and prior bounds.
/// Never throws; problems are reported as messages with 1-based indices.
ValidationResult validate_network(const GeneNetwork& net, const RunConfig& cfg);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an ascending
/// sample: h = q (n - 1), interpolating between order statistics floor(h)
/// and floor(h) + 1.
double sorted_quantile(const std::vector<double>& sorted, double q);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace abcnet
