#include "abcnet/distances.hpp"

#include "abcnet/simulators.hpp"

#include <cmath>

namespace abcnet {

namespace {

constexpr double kMinRcond = 1e-13;

double canberra(const Matrix& sim, const Matrix& obs) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < obs.cols(); ++t) {
        for (Eigen::Index i = 0; i < obs.rows(); ++i) {
            const double num = std::abs(sim(i, t) - obs(i, t));
            if (num == 0.0) continue;
            total += num / std::abs(sim(i, t) + obs(i, t));
        }
    }
    return total;
}

Matrix lag_cross_moment(const Matrix& y) {
    const Eigen::Index t_len = y.cols();
    return (y.rightCols(t_len - 1) * y.leftCols(t_len - 1).transpose()) / static_cast<double>(t_len);
}

// Residuals y_t - theta * y_{t-1}, with y_0 = 0 so the first residual is y_1.
Matrix residuals(const Matrix& theta, const Matrix& y) {
    const Eigen::Index t_len = y.cols();
    Matrix r = y;
    r.rightCols(t_len - 1).noalias() -= theta * y.leftCols(t_len - 1);
    return r;
}

double mvt(const Matrix& sim, const Matrix& obs, double ridge) {
    const Eigen::Index p = obs.rows();
    const double t_len = static_cast<double>(obs.cols());
    const Matrix pooled = 0.5 * (lag_cross_moment(obs) + lag_cross_moment(sim));
    const Matrix r_obs = residuals(pooled, obs);
    const Matrix r_sim = residuals(pooled, sim);
    const Matrix d = r_obs - r_sim;
    if (d.isZero(0.0)) return 0.0;

    Matrix sigma = (r_sim * r_sim.transpose() + r_obs * r_obs.transpose()) / (2.0 * t_len);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond)) {
        sigma.diagonal().array() += ridge;
        llt.compute(sigma);
        if (llt.info() != Eigen::Success || ridge == 0.0)
            throw SingularCovarianceError("MVT residual covariance is singular (p = " + std::to_string(p) +
                                          ", T = " + std::to_string(obs.cols()) + ")");
    }
    const double rho = (d.array() * llt.solve(d).array()).sum() / t_len;
    if (!std::isfinite(rho)) throw SingularCovarianceError("MVT distance is not finite");
    return rho;
}

}  // namespace

double replicate_distance(const DistanceSpec& spec, const Matrix& sim, const Matrix& obs) {
    if (sim.rows() != obs.rows() || sim.cols() != obs.cols())
        throw DimensionError("simulated and observed series differ in shape");
    switch (spec.kind) {
        case DistanceKind::canberra: return canberra(sim, obs);
        case DistanceKind::euclidean: return std::sqrt((sim - obs).squaredNorm());
        case DistanceKind::manhattan: return (sim - obs).cwiseAbs().sum();
        case DistanceKind::mvt: return mvt(sim, obs, spec.ridge);
    }
    throw ConfigError("unknown distance kind");
}

double distance(const DistanceSpec& spec, const ExpressionData& sim, const ExpressionData& obs) {
    if (sim.replicate_count() != obs.replicate_count())
        throw DimensionError("simulated and observed data differ in replicate count");
    double total = 0.0;
    for (int r = 0; r < obs.replicate_count(); ++r)
        total += replicate_distance(spec, sim.replicate(r), obs.replicate(r));
    return total;
}

PredictionDistance::PredictionDistance(DistanceSpec spec, const ExpressionData& observed)
    : spec_(spec), observed_(&observed) {}

double PredictionDistance::operator()(const Matrix& theta) {
    double total = 0.0;
    for (const Matrix& obs : observed_->replicates()) {
        one_step_predict_into(theta, obs, scratch_);
        total += replicate_distance(spec_, scratch_, obs);
    }
    return total;
}

}  // namespace abcnet
