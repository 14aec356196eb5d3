#include "lhalf/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lhalf {

std::string_view to_string(ThresholdKind kind) noexcept {
    switch (kind) {
        case ThresholdKind::half: return "half";
        case ThresholdKind::soft: return "soft";
        case ThresholdKind::hard: return "hard";
    }
    return "?";
}

ThresholdParams::ThresholdParams(double lambda, double mu) : lambda_(lambda), mu_(mu) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("ThresholdParams: lambda must be positive, got " +
                                    std::to_string(lambda));
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("ThresholdParams: mu must be positive, got " +
                                    std::to_string(mu));
    lambda_mu_ = lambda * mu;
    half_threshold_ = half_threshold_for(lambda_mu_);
    half_floor_ = std::cbrt(0.25 * lambda_mu_ * lambda_mu_);
}

double ThresholdParams::half_threshold_for(double lambda_mu) noexcept {
    return std::cbrt(54.0) / 4.0 * std::cbrt(lambda_mu * lambda_mu);
}

double half_scalar(double z, const ThresholdParams& p) noexcept {
    const double az = std::abs(z);
    if (!(az > p.half_threshold())) return 0.0;
    // phi = arccos((lambda mu / 8) (|z| / 3)^(-3/2)); the argument can round
    // slightly past 1 right above the threshold.
    const double arg = std::clamp(p.lambda_mu() / 8.0 * std::pow(az / 3.0, -1.5), -1.0, 1.0);
    const double phi = std::acos(arg);
    const double mag =
        2.0 / 3.0 * az * (1.0 + std::cos(2.0 * std::numbers::pi / 3.0 - 2.0 / 3.0 * phi));
    // Evaluating on |z| and reapplying the sign keeps the map exactly odd.
    return z < 0.0 ? -mag : mag;
}

double soft_scalar(double z, const ThresholdParams& p) noexcept {
    const double t = 0.5 * p.lambda_mu();
    const double az = std::abs(z);
    if (!(az > t)) return 0.0;
    return std::copysign(az - t, z);
}

double hard_scalar(double z, const ThresholdParams& p) noexcept {
    return std::abs(z) > std::sqrt(p.lambda_mu()) ? z : 0.0;
}

double threshold_scalar(double z, const ThresholdParams& p, ThresholdKind kind) noexcept {
    switch (kind) {
        case ThresholdKind::half: return half_scalar(z, p);
        case ThresholdKind::soft: return soft_scalar(z, p);
        case ThresholdKind::hard: return hard_scalar(z, p);
    }
    return 0.0;
}

DenseVector threshold_vector(const DenseVector& z, const ThresholdParams& p, ThresholdKind kind) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = threshold_scalar(z[i], p, kind);
    return DenseVector(std::move(out));
}

DenseVector gradient_step_from_product(const DenseMatrix& a, const DenseVector& y,
                                       const DenseVector& x, const DenseVector& ax, double mu) {
    if (ax.size() != y.size())
        throw DimensionError("gradient_step: A x has length " + std::to_string(ax.size()) +
                             " but y has length " + std::to_string(y.size()));
    if (x.size() != a.cols())
        throw DimensionError("gradient_step: matrix " + a.shape() + " with iterate of length " +
                             std::to_string(x.size()));
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ax[i] - y[i];
    DenseVector g = transpose_mat_vec(a, DenseVector(std::move(r)));
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = x[j] - mu * g[j];
    return g;
}

DenseVector gradient_step(const DenseMatrix& a, const DenseVector& y, const DenseVector& x,
                          double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("gradient_step: mu must be positive");
    if (a.rows() != y.size())
        throw DimensionError("gradient_step: matrix " + a.shape() + " with observation of length " +
                             std::to_string(y.size()));
    return gradient_step_from_product(a, y, x, mat_vec(a, x), mu);
}

}  // namespace lhalf
