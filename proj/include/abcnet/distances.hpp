#pragma once

#include "abcnet/core.hpp"

#include <vector>

namespace abcnet {

/// Raised when the pooled MVT residual covariance cannot be inverted even
/// after ridge regularisation.
class SingularCovarianceError : public Error {
public:
    using Error::Error;
};

struct DistanceSpec {
    DistanceKind kind = DistanceKind::euclidean;
    double ridge = 1e-8;  // MVT only
};

/// Discrepancy between one simulated and one observed replicate (p x T).
///
/// canberra:  sum |s - o| / |s + o|, with 0/0 terms counted as 0
/// euclidean: sqrt(sum (s - o)^2)
/// manhattan: sum |s - o|
/// mvt:       residual comparison after removing the pooled lag-one
///            cross-moment predictor, weighted by the pooled residual
///            covariance.
double replicate_distance(const DistanceSpec& spec, const Matrix& sim, const Matrix& obs);

/// Sum of replicate_distance over replicates.
double distance(const DistanceSpec& spec, const ExpressionData& sim, const ExpressionData& obs);

/// Distance between observed data and the one-step-ahead predictions of a
/// candidate parameter matrix, with scratch buffers reused across calls.
/// One evaluator per thread.
class PredictionDistance {
public:
    PredictionDistance(DistanceSpec spec, const ExpressionData& observed);

    double operator()(const Matrix& theta);

    const DistanceSpec& spec() const { return spec_; }

private:
    DistanceSpec spec_;
    const ExpressionData* observed_;
    Matrix scratch_;
};

}  // namespace abcnet
