#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lhalf/numerics.hpp"
#include "lhalf/thresholding.hpp"

namespace lhalf {

/// Measurement matrix A (m x N), observation y (m) and optionally the planted
/// signal the observation was generated from.
struct ProblemInstance {
    DenseMatrix a;
    DenseVector y;
    std::optional<DenseVector> truth;

    /// Throws DimensionError when the shapes disagree.
    ProblemInstance(DenseMatrix a, DenseVector y, std::optional<DenseVector> truth = std::nullopt);

    std::size_t measurements() const noexcept { return a.rows(); }
    std::size_t dimension() const noexcept { return a.cols(); }
};

enum class Algorithm { half, soft, hard, irls, irl1 };

std::string_view to_string(Algorithm algo) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;

/// Step size outside (0, ||A||_2^-2).
class InvalidStepSize : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterate or weight went non-finite.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Smoothing schedule for the reweighted least squares baseline.
struct IrlsSettings {
    double eps_initial = 1.0;
    double eps_decay = 0.9;
    double eps_floor = 1e-12;
};

/// Reweighted l1 baseline: weights from (|x| + eps)^(-1/2), inner weighted ISTA.
struct Irl1Settings {
    double eps_initial = 0.1;
    double eps_decay = 0.5;
    double eps_floor = 1e-6;
    double inner_rel_tol = 1e-6;
    std::size_t inner_max_iters = 5000;
};

/// Called with (iteration, iterate) after every accepted step, starting with
/// iteration 0 for the initial point.
using IterateObserver = std::function<void(std::size_t, const DenseVector&)>;

struct SolverConfig {
    double lambda = 1e-3;
    std::optional<double> mu;  // nullopt: 0.99 / ||A||_2^2
    Algorithm algorithm = Algorithm::half;
    std::size_t max_iters = 50000;
    double rel_tol = 1e-8;
    std::optional<DenseVector> initial_point;  // nullopt: zero vector
    bool record_trace = true;
    std::size_t stall_window = 200;
    IrlsSettings irls;
    Irl1Settings irl1;
    IterateObserver observer;
};

/// Resolves the step size and checks 0 < mu < ||A||_2^-2 against the inflated
/// norm estimate. Throws InvalidStepSize otherwise.
double resolve_step_size(const DenseMatrix& a, std::optional<double> mu);

struct IterationRecord {
    std::size_t iter = 0;
    double objective = 0.0;  // ||Ax - y||^2 + lambda * penalty; see algorithm_objective
    double step_delta = 0.0;
    std::vector<std::uint32_t> support;
    std::vector<std::int8_t> signs;  // parallel to support
    std::optional<double> error_to_truth;  // recovery_error against the truth
    std::int64_t wall_nanos = 0;  // since the solve started
};

struct IterationTrace {
    std::vector<IterationRecord> records;

    bool empty() const noexcept { return records.empty(); }
    std::size_t size() const noexcept { return records.size(); }
};

enum class Termination { converged, max_iters, stalled };

std::string_view to_string(Termination t) noexcept;

struct SolveResult {
    DenseVector x_final;
    IterationTrace trace;
    Termination termination = Termination::max_iters;
    std::size_t iters_used = 0;
    double mu = 0.0;
    double lambda = 0.0;
    Algorithm algorithm = Algorithm::half;
    double final_objective = 0.0;  // algorithm_objective at x_final
    double final_step_delta = 0.0;
    std::optional<double> error_to_truth;
    double wall_seconds = 0.0;
};

/// ||A x - y||^2 + lambda sum |x_i|^(1/2).
double objective(const ProblemInstance& inst, const DenseVector& x, double lambda);

/// The objective an algorithm descends: the square-root penalty for half,
/// irls and irl1, sum |x_i| for soft and the nonzero count for hard.
double algorithm_objective(const ProblemInstance& inst, const DenseVector& x, double lambda,
                           Algorithm algo);

/// Squared recovery error ||x - truth||_2^2, reported as the recovery MSE.
double recovery_error(const DenseVector& x, const DenseVector& truth);

/// Iterative thresholding x <- H(x - mu A^T (A x - y)) with the half, soft or
/// hard operator.
SolveResult ist_solve(const ProblemInstance& inst, const SolverConfig& config);

/// Reweighted least squares on the smoothed penalty sum (x_i^2 + eps)^(1/4).
SolveResult irls_solve(const ProblemInstance& inst, const SolverConfig& config);

/// Reweighted l1 minimization.
SolveResult irl1_solve(const ProblemInstance& inst, const SolverConfig& config);

/// Dispatches on config.algorithm.
SolveResult solve(const ProblemInstance& inst, const SolverConfig& config);

struct WeightedSoftResult {
    DenseVector x;
    std::size_t iters = 0;
    bool converged = false;
};

/// min ||A x - y||^2 + lambda sum w_i |x_i| by iterative soft thresholding with
/// per-coordinate thresholds mu lambda w_i / 2. The inner solver of irl1_solve.
WeightedSoftResult weighted_soft_solve(const ProblemInstance& inst, std::span<const double> weights,
                                       double lambda, double mu, const DenseVector& x0,
                                       double rel_tol, std::size_t max_iters);

}  // namespace lhalf
