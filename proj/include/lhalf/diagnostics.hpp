#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lhalf/numerics.hpp"
#include "lhalf/solvers.hpp"

namespace lhalf {

struct SupportSummary {
    std::vector<std::size_t> support;    // indices with x_i != 0, ascending
    std::optional<double> min_magnitude;  // absent for the zero vector
    std::size_t complement_size = 0;
};

/// Exact zero test; thresholding produces exact zeros.
SupportSummary support_summary(const DenseVector& x);

struct StationarityReport {
    double max_offsupport_violation = 0.0;
    double max_onsupport_residual = 0.0;
    double tolerance = 0.0;
    bool is_stationary = true;
};

/// 1e-6 * (1 + ||A^T y||_inf).
double default_stationarity_tol(const ProblemInstance& inst);

/// Fixed-point conditions of the half iteration. Off the support the
/// correlation |A_i^T (A x - y)| may not exceed (54^(1/3)/4) lambda^(2/3) mu^(-1/3);
/// on it A_i^T (A x - y) + lambda sign(x_i) / (4 sqrt|x_i|) must vanish.
StationarityReport check_stationarity(const ProblemInstance& inst, const DenseVector& x,
                                      double lambda, double mu, double tol);

/// Contraction constants of the local linear rate. Out of regime (rho >= 1 or
/// a degenerate denominator) leaves in_regime false and the rest NaN.
struct RateEstimate {
    bool in_regime = false;
    double rho = 0.0;
    double bound_c = 0.0;    // C*
    double c_star = 0.0;     // largest c in (0,1) with c eps_c <= (1 - 1e-6) C*
    double eps_c_star = 0.0;
    double rho_star = 0.0;
};

/// 8 e^(3/2) (1 - mu sigma_min) / (8 e^(3/2) - lambda mu), e the smallest
/// support magnitude and sigma_min the smallest eigenvalue of A_I^T A_I.
double contraction_rho(double lambda, double mu, double e, double sigma_min);

/// eps_c = max_i 3 lambda mu |x_i|^(3/2) /
///   (4 (8 |x_i|^(3/2) - lambda mu) (|x_i| - c (lambda mu / 2)^(2/3))^(5/2)).
/// Returns +inf where a factor of the denominator is not positive.
double rate_eps(std::span<const double> support_magnitudes, double lambda, double mu, double c);

/// The full chain rho -> C* -> c* -> rho* from scalar inputs.
RateEstimate rate_constants(double lambda, double mu, double sigma_min,
                            std::span<const double> support_magnitudes);

/// rate_constants evaluated at x with sigma_min taken from A_I^T A_I.
RateEstimate rate_estimate(const ProblemInstance& inst, const DenseVector& x, double lambda,
                           double mu);

struct CertificateReport {
    StationarityReport stationarity;
    SupportSummary support;
    std::optional<double> sigma_min;
    std::optional<double> sigma_max;
    double op_norm_sq = 0.0;
    std::optional<double> lambda_bound;  // 8 e^(3/2) sigma_min
    bool thm1_holds = false;
    bool thm2_spectral_holds = false;
    bool thm2_step_holds = false;
    std::optional<double> gram_condition_number;
    RateEstimate rate;
    std::optional<double> basin_estimate;  // beta* e
    std::optional<double> strict_basin;    // beta_0 e, beta_0 = min(beta*, fixed point of c_beta)
    std::optional<double> second_order_margin;  // lambda_min(2 A_I^T A_I - lambda/4 diag|x_I|^(-3/2))
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<std::string> warnings;
};

/// Local-minimizer certificate at x. Never throws on a non-stationary x; the
/// report carries a warning instead.
CertificateReport certify_local_min(const ProblemInstance& inst, const DenseVector& x,
                                    double lambda, double mu);

/// min over trials of T(x + h) - T(x), h uniform in the open ball of the given
/// radius.
double perturbation_probe(const ProblemInstance& inst, const DenseVector& x, double lambda,
                          double radius, std::size_t trials, std::uint64_t seed);

struct RipAdvisory {
    bool applicable = false;  // needs 2k < N
    double delta_k_threshold = 0.0;   // 3 / (4 + 2N/k)
    double delta_2k_threshold = 0.0;  // 3 / (4 + N/k)
    double measurement_ratio = 0.0;   // m / (k ln(N/k))
    bool advisory_positive = false;   // ratio >= kRipRatioAdvisory
};

inline constexpr double kRipRatioAdvisory = 2.0;

/// Heuristic only: certifying RIP constants is intractable. Throws
/// std::invalid_argument unless 1 <= k <= m <= N.
RipAdvisory rip_heuristic(std::size_t m, std::size_t n, std::size_t k);

std::string render_text(const CertificateReport& report);

}  // namespace lhalf
