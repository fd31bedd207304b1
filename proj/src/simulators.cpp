#include "abcnet/simulators.hpp"

#include <cmath>
#include <sstream>

namespace abcnet {

namespace {

enum Raf { Pkc, RafK, Mek, Erk, Pka, Akt, P38, Jnk, Plcg, Pip3, Pip2 };

constexpr double kReciprocalFloor = 1e-8;
constexpr int kMaxRedraws = 100;

void fill_normal(Eigen::Ref<Vector> v, double sd, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sd * normal(rng);
}

Vector reciprocal(const Eigen::Ref<const Vector>& y) {
    if ((y.array().abs() < kReciprocalFloor).any())
        throw GenerationError("reciprocal of a near-zero expression value");
    return y.cwiseInverse();
}

std::vector<std::string> raf_labels_if(int p) {
    if (p != RafTruth::kGenes) return {};
    const auto& names = RafTruth::labels();
    return {names.begin(), names.end()};
}

}  // namespace

std::string to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::var1: return "var1";
        case GeneratorKind::var2: return "var2";
        case GeneratorKind::var_nl1: return "var_nl1";
        case GeneratorKind::var_nl2: return "var_nl2";
        case GeneratorKind::ode: return "ode";
    }
    return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& name) {
    if (name == "var1") return GeneratorKind::var1;
    if (name == "var2") return GeneratorKind::var2;
    if (name == "var_nl1") return GeneratorKind::var_nl1;
    if (name == "var_nl2") return GeneratorKind::var_nl2;
    if (name == "ode") return GeneratorKind::ode;
    throw ConfigError("unknown generator '" + name + "' (expected var1|var2|var_nl1|var_nl2|ode)");
}

void GeneratorSpec::validate() const {
    const bool second_order = kind == GeneratorKind::var2 || kind == GeneratorKind::var_nl2;
    if (second_order != theta2.has_value())
        throw ConfigError("theta2 must be given exactly for second-order generators");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
    if (t_len < 2) throw ConfigError("t_len must be >= 2");
    if (kind == GeneratorKind::ode) return;
    if (theta1.rows() < 1 || theta1.rows() != theta1.cols()) throw DimensionError("theta1 must be square");
    if (theta2 && (theta2->rows() != theta1.rows() || theta2->cols() != theta1.cols()))
        throw DimensionError("theta2 must match theta1");
}

const std::array<const char*, RafTruth::kGenes>& RafTruth::labels() {
    static const std::array<const char*, kGenes> names = {"Pkc", "Raf", "Mek",  "Erk",  "Pka", "Akt",
                                                          "P38", "Jnk", "Plcg", "Pip3", "Pip2"};
    return names;
}

Matrix RafTruth::ode_matrix() {
    Matrix a = Matrix::Zero(kGenes, kGenes);
    a(Pkc, Plcg) = 0.18;
    a(Pkc, Pip2) = -0.75;
    a(RafK, Pkc) = -0.28;
    a(RafK, Pka) = 0.62;
    a(Mek, Pkc) = 0.63;
    a(Mek, RafK) = -0.97;
    a(Mek, Pka) = -0.52;
    a(Erk, Mek) = 0.70;
    a(Erk, Pka) = -0.94;
    a(Pka, Pkc) = 0.31;
    a(Akt, Erk) = 0.28;
    a(Akt, Pka) = 0.60;
    a(Akt, Pip3) = 0.92;
    a(P38, Pkc) = -0.19;
    a(P38, Pka) = -0.32;
    a(Jnk, Pkc) = 0.24;
    a(Jnk, Pka) = 0.98;
    a(Pip3, Plcg) = -0.28;
    a(Pip2, Plcg) = 0.83;
    a(Pip2, Pip3) = -0.98;
    return a;
}

Adjacency RafTruth::adjacency() { return (ode_matrix().array() != 0.0).cast<std::uint8_t>(); }

Matrix sample_structured_theta(const Adjacency& structure, Rng& rng) {
    std::uniform_real_distribution<double> magnitude(0.25, 2.0);
    std::bernoulli_distribution negative(0.5);
    Matrix theta = Matrix::Zero(structure.rows(), structure.cols());
    for (Eigen::Index j = 0; j < structure.cols(); ++j) {
        for (Eigen::Index i = 0; i < structure.rows(); ++i) {
            if (!structure(i, j)) continue;
            double m = magnitude(rng);
            while (m <= 0.25) m = magnitude(rng);
            theta(i, j) = negative(rng) ? -m : m;
        }
    }
    return theta;
}

void one_step_predict_into(const Matrix& theta, const Matrix& observed, Matrix& out) {
    if (theta.rows() != observed.rows() || theta.cols() != observed.rows())
        throw DimensionError("network and data gene counts differ");
    const Eigen::Index t_len = observed.cols();
    out.resize(observed.rows(), t_len);
    out.col(0) = observed.col(0);
    out.rightCols(t_len - 1).noalias() = theta * observed.leftCols(t_len - 1);
}

ExpressionData one_step_predict(const GeneNetwork& net, const ExpressionData& observed) {
    if (net.p() != observed.p()) throw DimensionError("network and data gene counts differ");
    std::vector<Matrix> out(observed.replicates().size());
    for (std::size_t r = 0; r < out.size(); ++r)
        one_step_predict_into(net.params(), observed.replicates()[r], out[r]);
    return ExpressionData(std::move(out), observed.labels());
}

ExpressionData generate_var1(const GeneratorSpec& spec) {
    if (spec.kind != GeneratorKind::var1) throw ConfigError("generate_var1 needs a var1 spec");
    spec.validate();
    const Eigen::Index p = spec.theta1.rows();
    const Eigen::Index fixed = spec.initial ? spec.initial->cols() : 0;
    Rng rng = make_rng(spec.seed);
    if (fixed > spec.t_len || (spec.initial && spec.initial->rows() != p))
        throw DimensionError("initial columns do not fit the generated series");
    Matrix y(p, spec.t_len);
    fill_normal(y.col(0), 1.0, rng);
    if (fixed > 0) y.col(0) = spec.initial->col(0);
    Vector z(p);
    for (int t = 1; t < spec.t_len; ++t) {
        fill_normal(z, spec.noise_sd, rng);
        y.col(t) = spec.theta1 * y.col(t - 1) + z;
        if (t < fixed) y.col(t) = spec.initial->col(t);
    }
    return ExpressionData(std::move(y), raf_labels_if(static_cast<int>(p)));
}

ExpressionData generate_alternative(const GeneratorSpec& spec) {
    if (spec.kind != GeneratorKind::var2 && spec.kind != GeneratorKind::var_nl1 &&
        spec.kind != GeneratorKind::var_nl2)
        throw ConfigError("generate_alternative needs a var2, var_nl1 or var_nl2 spec");
    spec.validate();
    const Eigen::Index p = spec.theta1.rows();
    const bool nonlinear = spec.kind != GeneratorKind::var2;
    const bool second_order = spec.kind != GeneratorKind::var_nl1;
    const Eigen::Index fixed = spec.initial ? spec.initial->cols() : 0;
    if (fixed > spec.t_len || (spec.initial && spec.initial->rows() != p))
        throw DimensionError("initial columns do not fit the generated series");

    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(attempt)});
        Matrix y = Matrix::Zero(p, spec.t_len);
        Vector z(p);
        try {
            for (int t = 0; t < spec.t_len; ++t) {
                fill_normal(z, spec.noise_sd, rng);
                if (t < fixed) {
                    y.col(t) = spec.initial->col(t);
                    continue;
                }
                if (t == 0) {
                    y.col(0) = z;
                    continue;
                }
                Vector next = nonlinear ? Vector(spec.theta1 * reciprocal(y.col(t - 1)))
                                        : Vector(spec.theta1 * y.col(t - 1));
                if (second_order && t >= 2) next += *spec.theta2 * y.col(t - 2);
                y.col(t) = next + z;
            }
            if (!y.allFinite()) throw GenerationError("non-finite expression value");
            return ExpressionData(std::move(y), raf_labels_if(static_cast<int>(p)));
        } catch (const GenerationError&) {
            continue;
        }
    }
    std::ostringstream msg;
    msg << to_string(spec.kind) << " generation failed after " << kMaxRedraws << " sub-seeds";
    throw GenerationError(msg.str());
}

ExpressionData generate_ode(int t_len, double noise_sd, std::uint64_t seed, double step) {
    if (t_len < 2) throw ConfigError("t_len must be >= 2");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
    if (!(step > 0.0 && step <= 1.0)) throw ConfigError("ODE step must lie in (0, 1]");
    const Matrix a = RafTruth::ode_matrix();
    const int p = RafTruth::kGenes;
    const long steps_per_unit = std::lround(1.0 / step);
    const double h = 1.0 / static_cast<double>(steps_per_unit);

    Matrix y(p, t_len);
    Vector state = Vector::Ones(p);
    y.col(0) = state;
    for (int t = 1; t < t_len; ++t) {
        for (long s = 0; s < steps_per_unit; ++s) {
            const Vector k1 = a * state;
            const Vector k2 = a * (state + 0.5 * h * k1);
            const Vector k3 = a * (state + 0.5 * h * k2);
            const Vector k4 = a * (state + h * k3);
            state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y.col(t) = state;
    }
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < t_len; ++t)
        for (int i = 0; i < p; ++i) y(i, t) += noise_sd * normal(rng);
    return ExpressionData(std::move(y), raf_labels_if(p));
}

ExpressionData generate(const GeneratorSpec& spec) {
    switch (spec.kind) {
        case GeneratorKind::var1: return generate_var1(spec);
        case GeneratorKind::ode: return generate_ode(spec.t_len, spec.noise_sd, spec.seed);
        default: return generate_alternative(spec);
    }
}

}  // namespace abcnet
