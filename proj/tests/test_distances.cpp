#include "abcnet/distances.hpp"
#include "abcnet/simulators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace abcnet {
namespace {

// Reference implementations on plain nested vectors, indexed [gene][time].
using Grid = std::vector<std::vector<double>>;

Grid to_grid(const Matrix& m) {
    Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index t = 0; t < m.cols(); ++t) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = m(i, t);
    return g;
}

double ref_canberra(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t t = 0; t < a[i].size(); ++t) {
            const double num = std::fabs(a[i][t] - b[i][t]);
            const double den = std::fabs(a[i][t] + b[i][t]);
            if (num != 0.0) s += num / den;
        }
    return s;
}

double ref_euclidean(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t t = 0; t < a[i].size(); ++t) s += (a[i][t] - b[i][t]) * (a[i][t] - b[i][t]);
    return std::sqrt(s);
}

double ref_manhattan(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t t = 0; t < a[i].size(); ++t) s += std::fabs(a[i][t] - b[i][t]);
    return s;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(Grid a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::fabs(a[r][k]) > std::fabs(a[piv][k])) piv = r;
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a[r][k] / a[k][k];
            for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t c = k + 1; c < n; ++c) s -= a[k][c] * x[c];
        x[k] = s / a[k][k];
    }
    return x;
}

double ref_mvt(const Grid& sim, const Grid& obs) {
    const std::size_t p = obs.size();
    const std::size_t T = obs[0].size();
    auto moment = [&](const Grid& y) {
        Grid m(p, std::vector<double>(p, 0.0));
        for (std::size_t t = 0; t + 1 < T; ++t)
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) m[i][j] += y[i][t + 1] * y[j][t] / static_cast<double>(T);
        return m;
    };
    const Grid my = moment(obs), ms = moment(sim);
    Grid theta(p, std::vector<double>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) theta[i][j] = 0.5 * (my[i][j] + ms[i][j]);
    auto resid = [&](const Grid& y) {
        Grid r = y;
        for (std::size_t t = 1; t < T; ++t)
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) r[i][t] -= theta[i][j] * y[j][t - 1];
        return r;
    };
    const Grid ro = resid(obs), rs = resid(sim);
    Grid sigma(p, std::vector<double>(p, 0.0));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                sigma[i][j] += (ro[i][t] * ro[j][t] + rs[i][t] * rs[j][t]) / (2.0 * static_cast<double>(T));
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> d(p);
        for (std::size_t i = 0; i < p; ++i) d[i] = ro[i][t] - rs[i][t];
        const std::vector<double> x = solve(sigma, d);
        for (std::size_t i = 0; i < p; ++i) total += d[i] * x[i];
    }
    return total / static_cast<double>(T);
}

double ref(DistanceKind kind, const Matrix& sim, const Matrix& obs) {
    const Grid a = to_grid(sim), b = to_grid(obs);
    switch (kind) {
        case DistanceKind::canberra: return ref_canberra(a, b);
        case DistanceKind::euclidean: return ref_euclidean(a, b);
        case DistanceKind::manhattan: return ref_manhattan(a, b);
        case DistanceKind::mvt: return ref_mvt(a, b);
    }
    return NAN;
}

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int t = 0; t < cols; ++t) m(i, t) = n(rng);
    return m;
}

const DistanceKind kAllKinds[] = {DistanceKind::canberra, DistanceKind::euclidean, DistanceKind::manhattan,
                                  DistanceKind::mvt};

TEST(Distance, ManhattanAndEuclideanOnUnitShift) {
    const Matrix obs = Matrix::Zero(2, 2);
    const Matrix sim = Matrix::Ones(2, 2);
    EXPECT_DOUBLE_EQ(replicate_distance({DistanceKind::manhattan}, sim, obs), 4.0);
    EXPECT_DOUBLE_EQ(replicate_distance({DistanceKind::euclidean}, sim, obs), 2.0);
}

TEST(Distance, CanberraHandValues) {
    Matrix obs(1, 3), sim(1, 3);
    obs << 1, 0, 2;
    sim << 3, 0, -1;
    // |3-1|/|3+1| + 0 (0/0) + |-1-2|/|-1+2|
    EXPECT_DOUBLE_EQ(replicate_distance({DistanceKind::canberra}, sim, obs), 0.5 + 3.0);
}

TEST(Distance, CanberraOppositeSignsIsInfinite) {
    Matrix obs(1, 2), sim(1, 2);
    obs << 1, 2;
    sim << -1, 2;
    EXPECT_EQ(replicate_distance({DistanceKind::canberra}, sim, obs), kInfinity);
}

TEST(Distance, IdenticalSeriesHaveZeroDistance) {
    std::mt19937_64 rng(4);
    const Matrix y = random_matrix(rng, 3, 8);
    for (auto kind : kAllKinds) EXPECT_EQ(replicate_distance({kind}, y, y), 0.0) << to_string(kind);
}

TEST(Distance, MatchesReferenceOnRandomInstances) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> genes(1, 4);
    std::uniform_int_distribution<int> extra(2, 8);
    for (int instance = 0; instance < 100; ++instance) {
        const int p = genes(rng);
        const int t_len = p + extra(rng);
        const Matrix obs = random_matrix(rng, p, t_len);
        const Matrix sim = random_matrix(rng, p, t_len);
        for (auto kind : kAllKinds) {
            const double got = replicate_distance({kind, 0.0}, sim, obs);
            const double want = ref(kind, sim, obs);
            EXPECT_NEAR(got, want, 1e-10 * std::max(1.0, std::fabs(want)))
                << to_string(kind) << " instance " << instance << " p=" << p << " T=" << t_len;
        }
    }
}

TEST(Distance, SymmetricInArguments) {
    std::mt19937_64 rng(7);
    for (int instance = 0; instance < 20; ++instance) {
        const Matrix a = random_matrix(rng, 3, 9);
        const Matrix b = random_matrix(rng, 3, 9);
        for (auto kind : kAllKinds) {
            const double ab = replicate_distance({kind}, a, b);
            const double ba = replicate_distance({kind}, b, a);
            EXPECT_NEAR(ab, ba, 1e-12 * std::max(1.0, ab)) << to_string(kind);
        }
    }
}

TEST(Distance, ManhattanDominatesEuclidean) {
    std::mt19937_64 rng(8);
    for (int instance = 0; instance < 50; ++instance) {
        const Matrix a = random_matrix(rng, 4, 6);
        const Matrix b = random_matrix(rng, 4, 6);
        EXPECT_GE(replicate_distance({DistanceKind::manhattan}, a, b),
                  replicate_distance({DistanceKind::euclidean}, a, b));
    }
}

TEST(Distance, ReplicatesAreSummed) {
    std::mt19937_64 rng(9);
    const Matrix a1 = random_matrix(rng, 2, 5), a2 = random_matrix(rng, 2, 5);
    const Matrix b1 = random_matrix(rng, 2, 5), b2 = random_matrix(rng, 2, 5);
    const ExpressionData a(std::vector<Matrix>{a1, a2});
    const ExpressionData b(std::vector<Matrix>{b1, b2});
    for (auto kind : kAllKinds) {
        const double sum = replicate_distance({kind}, a1, b1) + replicate_distance({kind}, a2, b2);
        EXPECT_NEAR(distance({kind}, a, b), sum, 1e-12 * std::max(1.0, sum));
    }
}

TEST(Distance, MvtSingularCovarianceUsesRidgeOrThrows) {
    // Two genes that are exact copies make the residual covariance singular.
    std::mt19937_64 rng(10);
    Matrix obs = random_matrix(rng, 2, 6);
    Matrix sim = random_matrix(rng, 2, 6);
    obs.row(1) = obs.row(0);
    sim.row(1) = sim.row(0);
    EXPECT_THROW(replicate_distance({DistanceKind::mvt, 0.0}, sim, obs), SingularCovarianceError);
    const double rho = replicate_distance({DistanceKind::mvt, 1e-6}, sim, obs);
    EXPECT_TRUE(std::isfinite(rho));
    EXPECT_GE(rho, 0.0);
}

TEST(Distance, ShapeMismatchThrows) {
    EXPECT_THROW(replicate_distance({}, Matrix::Zero(2, 3), Matrix::Zero(2, 4)), DimensionError);
}

TEST(PredictionDistance, MatchesExplicitPrediction) {
    std::mt19937_64 rng(12);
    const ExpressionData obs(std::vector<Matrix>{random_matrix(rng, 3, 7), random_matrix(rng, 3, 7)});
    const Matrix theta = 0.4 * random_matrix(rng, 3, 3);
    for (auto kind : kAllKinds) {
        PredictionDistance rho({kind}, obs);
        const ExpressionData pred = one_step_predict(GeneNetwork::from_params(theta), obs);
        EXPECT_DOUBLE_EQ(rho(theta), distance({kind}, pred, obs)) << to_string(kind);
    }
}

}  // namespace
}  // namespace abcnet
