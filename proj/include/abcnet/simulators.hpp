#pragma once

#include "abcnet/core.hpp"
#include "abcnet/random.hpp"

#include <array>
#include <optional>
#include <string>

namespace abcnet {

class GenerationError : public Error {
public:
    using Error::Error;
};

enum class GeneratorKind { var1, var2, var_nl1, var_nl2, ode };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

/// Description of a synthetic dataset.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::var1;
    Matrix theta1;                 // first-lag coefficients
    std::optional<Matrix> theta2;  // second-lag coefficients, second-order kinds only
    double noise_sd = 1.0;
    int t_len = 20;
    std::uint64_t seed = 1;
    /// Optional fixed leading columns (y_1, y_2, ...) replacing the random
    /// start; used to pin down recurrences exactly.
    std::optional<Matrix> initial;

    void validate() const;
};

/// The 11-node Raf signalling pathway used as ground truth.
struct RafTruth {
    static constexpr int kGenes = 11;
    static const std::array<const char*, kGenes>& labels();
    /// Row = target, column = regulator; 20 directed edges, zero diagonal.
    static Adjacency adjacency();
    /// Coefficient matrix of the linear ODE system y' = A y.
    static Matrix ode_matrix();
};

/// Draws a coefficient matrix on a given structure: each present edge gets a
/// magnitude uniform on (0.25, 2) and a random sign.
Matrix sample_structured_theta(const Adjacency& structure, Rng& rng);

/// Deterministic one-step-ahead pseudo-data: y*_1 = y_1 and
/// y*_t = Theta * y_{t-1} using the observed previous column.
ExpressionData one_step_predict(const GeneNetwork& net, const ExpressionData& observed);

/// Allocation-free variant for a single replicate; `out` is resized as needed.
void one_step_predict_into(const Matrix& theta, const Matrix& observed, Matrix& out);

/// y_1 ~ N(0, I); y_t = Theta1 y_{t-1} + z_t with z_t ~ N(0, noise_sd^2 I).
ExpressionData generate_var1(const GeneratorSpec& spec);

/// Second-order and nonlinear VAR generators (y^{-1} is the elementwise
/// reciprocal). A near-zero component under the reciprocal re-draws the
/// series from the next sub-seed.
ExpressionData generate_alternative(const GeneratorSpec& spec);

/// Integrates the linear Raf ODE from all-ones initial values with
/// fixed-step RK4, samples at t = 1..t_len and adds N(0, noise_sd^2) noise.
ExpressionData generate_ode(int t_len, double noise_sd, std::uint64_t seed, double step = 0.01);

/// Dispatches on spec.kind.
ExpressionData generate(const GeneratorSpec& spec);

}  // namespace abcnet
