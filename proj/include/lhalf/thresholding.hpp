#pragma once

#include <string_view>

#include "lhalf/numerics.hpp"

namespace lhalf {

enum class ThresholdKind { half, soft, hard };

std::string_view to_string(ThresholdKind kind) noexcept;

/// Regularization weight and step size for one thresholding map, plus the
/// quantities every component evaluation needs.
class ThresholdParams {
public:
    /// Throws std::invalid_argument unless lambda > 0 and mu > 0 (both finite).
    ThresholdParams(double lambda, double mu);

    double lambda() const noexcept { return lambda_; }
    double mu() const noexcept { return mu_; }
    double lambda_mu() const noexcept { return lambda_mu_; }

    /// (54^(1/3) / 4) * (lambda mu)^(2/3). Inputs at or below it map to zero.
    double half_threshold() const noexcept { return half_threshold_; }

    /// (lambda mu / 2)^(2/3), the smallest magnitude a nonzero half output can take.
    double half_floor() const noexcept { return half_floor_; }

    static double half_threshold_for(double lambda_mu) noexcept;

private:
    double lambda_;
    double mu_;
    double lambda_mu_;
    double half_threshold_;
    double half_floor_;
};

/// Closed-form proximal map of z -> (u - z)^2 + lambda mu |u|^(1/2).
double half_scalar(double z, const ThresholdParams& p) noexcept;

/// sign(z) (|z| - lambda mu / 2) above lambda mu / 2, zero otherwise.
double soft_scalar(double z, const ThresholdParams& p) noexcept;

/// z above sqrt(lambda mu) in magnitude, zero otherwise.
double hard_scalar(double z, const ThresholdParams& p) noexcept;

double threshold_scalar(double z, const ThresholdParams& p, ThresholdKind kind) noexcept;

DenseVector threshold_vector(const DenseVector& z, const ThresholdParams& p, ThresholdKind kind);

/// x - mu A^T (A x - y).
DenseVector gradient_step(const DenseMatrix& a, const DenseVector& y, const DenseVector& x,
                          double mu);

/// Same step when A x is already known; one transpose product only.
DenseVector gradient_step_from_product(const DenseMatrix& a, const DenseVector& y,
                                       const DenseVector& x, const DenseVector& ax, double mu);

}  // namespace lhalf
