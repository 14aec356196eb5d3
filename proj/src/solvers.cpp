#include "lhalf/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace lhalf {
namespace {

using Clock = std::chrono::steady_clock;

double residual_sq(const DenseVector& ax, const DenseVector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = ax[i] - y[i];
        s += r * r;
    }
    return s;
}

double half_penalty(const DenseVector& x) {
    double s = 0.0;
    for (double v : x) s += std::sqrt(std::abs(v));
    return s;
}

double penalty(const DenseVector& x, Algorithm algo) {
    double s = 0.0;
    switch (algo) {
        case Algorithm::soft:
            for (double v : x) s += std::abs(v);
            return s;
        case Algorithm::hard:
            for (double v : x) s += v != 0.0 ? 1.0 : 0.0;
            return s;
        default: return half_penalty(x);
    }
}

DenseVector starting_point(const ProblemInstance& inst, const SolverConfig& config) {
    if (!config.initial_point) return DenseVector::zeros(inst.dimension());
    if (config.initial_point->size() != inst.dimension())
        throw DimensionError("initial point has length " +
                             std::to_string(config.initial_point->size()) + ", expected " +
                             std::to_string(inst.dimension()));
    return *config.initial_point;
}

void check_common(const SolverConfig& config) {
    if (!(config.lambda > 0.0) || !std::isfinite(config.lambda))
        throw std::invalid_argument("lambda must be positive and finite");
    if (!(config.rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be non-negative");
}

// Shared bookkeeping: trace records, the convergence rule on step_delta and
// the stall detector.
class RunMonitor {
public:
    RunMonitor(const ProblemInstance& inst, const SolverConfig& config)
        : inst_(inst), config_(config), start_(Clock::now()) {}

    void record(std::size_t iter, const DenseVector& x, const DenseVector& ax, double step) {
        if (config_.observer) config_.observer(iter, x);
        if (!config_.record_trace) return;
        IterationRecord rec;
        rec.iter = iter;
        rec.objective = residual_sq(ax, inst_.y) + config_.lambda * penalty(x, config_.algorithm);
        rec.step_delta = step;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] != 0.0) {
                rec.support.push_back(static_cast<std::uint32_t>(i));
                rec.signs.push_back(x[i] > 0.0 ? 1 : -1);
            }
        }
        if (inst_.truth) rec.error_to_truth = recovery_error(x, *inst_.truth);
        rec.wall_nanos =
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
        trace_.records.push_back(std::move(rec));
    }

    /// Returns a termination reason once the run should stop.
    std::optional<Termination> assess(double step, const DenseVector& x, const DenseVector& ax) {
        if (step <= config_.rel_tol * std::max(1.0, norm2(x.span()))) return Termination::converged;
        // Stalled: for stall_window iterations in a row neither the step
        // shortened nor the objective went down.
        const double obj = residual_sq(ax, inst_.y) + config_.lambda * penalty(x, config_.algorithm);
        const bool progress = step < previous_step_ || obj < previous_objective_;
        previous_step_ = step;
        previous_objective_ = obj;
        if (progress) {
            flat_run_ = 0;
        } else if (++flat_run_ >= config_.stall_window) {
            return Termination::stalled;
        }
        return std::nullopt;
    }

    SolveResult finish(DenseVector x, const DenseVector& ax, Termination why, std::size_t iters,
                       double mu, double last_step) {
        SolveResult out;
        out.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
        out.final_objective = residual_sq(ax, inst_.y) + config_.lambda * penalty(x, config_.algorithm);
        if (inst_.truth) out.error_to_truth = recovery_error(x, *inst_.truth);
        out.x_final = std::move(x);
        out.trace = std::move(trace_);
        out.termination = why;
        out.iters_used = iters;
        out.mu = mu;
        out.lambda = config_.lambda;
        out.algorithm = config_.algorithm;
        out.final_step_delta = last_step;
        return out;
    }

private:
    const ProblemInstance& inst_;
    const SolverConfig& config_;
    Clock::time_point start_;
    IterationTrace trace_;
    double previous_step_ = std::numeric_limits<double>::infinity();
    double previous_objective_ = std::numeric_limits<double>::infinity();
    std::size_t flat_run_ = 0;
};

void require_finite_iterate(const DenseVector& x, std::size_t iter, std::string_view algo) {
    if (!all_finite(x.span())) {
        std::ostringstream os;
        os << algo << ": non-finite iterate at iteration " << iter
           << " (step size or weights out of range)";
        throw SolverError(os.str(), iter);
    }
}

ThresholdKind kind_of(Algorithm algo) {
    switch (algo) {
        case Algorithm::half: return ThresholdKind::half;
        case Algorithm::soft: return ThresholdKind::soft;
        case Algorithm::hard: return ThresholdKind::hard;
        default: break;
    }
    throw std::invalid_argument("ist_solve: algorithm must be half, soft or hard, got " +
                                std::string(to_string(algo)));
}

// Dense 2 A^T A, accumulated as a sum of row outer products.
DenseMatrix doubled_gram(const DenseMatrix& a) {
    const std::size_t n = a.cols();
    DenseMatrix g = DenseMatrix::zeros(n, n);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.row(r).data();
        for (std::size_t p = 0; p < n; ++p) {
            const double vp = 2.0 * row[p];
            if (vp == 0.0) continue;
            double* gp = g.row(p).data();
#pragma omp simd
            for (std::size_t q = p; q < n; ++q) gp[q] += vp * row[q];
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < p; ++q) g(p, q) = g(q, p);
    return g;
}

}  // namespace

ProblemInstance::ProblemInstance(DenseMatrix a_in, DenseVector y_in,
                                 std::optional<DenseVector> truth_in)
    : a(std::move(a_in)), y(std::move(y_in)), truth(std::move(truth_in)) {
    if (a.rows() != y.size())
        throw DimensionError("ProblemInstance: matrix " + a.shape() + " with observation of length " +
                             std::to_string(y.size()));
    if (truth && truth->size() != a.cols())
        throw DimensionError("ProblemInstance: matrix " + a.shape() + " with truth of length " +
                             std::to_string(truth->size()));
}

std::string_view to_string(Algorithm algo) noexcept {
    switch (algo) {
        case Algorithm::half: return "half";
        case Algorithm::soft: return "soft";
        case Algorithm::hard: return "hard";
        case Algorithm::irls: return "irls";
        case Algorithm::irl1: return "irl1";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
    for (Algorithm a : {Algorithm::half, Algorithm::soft, Algorithm::hard, Algorithm::irls,
                        Algorithm::irl1}) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iters: return "max_iters";
        case Termination::stalled: return "stalled";
    }
    return "?";
}

double resolve_step_size(const DenseMatrix& a, std::optional<double> mu) {
    const double norm_upper = spectral_norm_upper(a);
    const double limit = 1.0 / (norm_upper * norm_upper);
    if (!mu) return 0.99 * limit;
    if (!(*mu > 0.0) || !std::isfinite(*mu)) {
        throw InvalidStepSize("step size mu must be positive, got " + std::to_string(*mu));
    }
    if (!(*mu < limit)) {
        std::ostringstream os;
        os.precision(17);
        os << "step size mu = " << *mu << " violates the convergence requirement "
           << "0 < mu < ||A||_2^-2 (||A||_2^-2 >= " << limit << ")";
        throw InvalidStepSize(os.str());
    }
    return *mu;
}

double objective(const ProblemInstance& inst, const DenseVector& x, double lambda) {
    return residual_sq(mat_vec(inst.a, x), inst.y) + lambda * half_penalty(x);
}

double algorithm_objective(const ProblemInstance& inst, const DenseVector& x, double lambda,
                           Algorithm algo) {
    return residual_sq(mat_vec(inst.a, x), inst.y) + lambda * penalty(x, algo);
}

double recovery_error(const DenseVector& x, const DenseVector& truth) {
    if (x.size() != truth.size())
        throw DimensionError("recovery_error: lengths " + std::to_string(x.size()) + " and " +
                             std::to_string(truth.size()));
    const double d = distance2(x.span(), truth.span());
    return d * d;
}

SolveResult ist_solve(const ProblemInstance& inst, const SolverConfig& config) {
    check_common(config);
    const ThresholdKind kind = kind_of(config.algorithm);
    const double mu = resolve_step_size(inst.a, config.mu);
    const ThresholdParams params(config.lambda, mu);

    RunMonitor monitor(inst, config);
    DenseVector x = starting_point(inst, config);
    DenseVector ax = mat_vec(inst.a, x);
    monitor.record(0, x, ax, 0.0);

    double step = 0.0;
    for (std::size_t n = 1; n <= config.max_iters; ++n) {
        DenseVector next =
            threshold_vector(gradient_step_from_product(inst.a, inst.y, x, ax, mu), params, kind);
        require_finite_iterate(next, n, to_string(config.algorithm));
        step = distance2(next.span(), x.span());
        x = std::move(next);
        ax = mat_vec(inst.a, x);
        monitor.record(n, x, ax, step);
        if (auto why = monitor.assess(step, x, ax)) return monitor.finish(std::move(x), ax, *why, n, mu, step);
    }
    return monitor.finish(std::move(x), ax, Termination::max_iters, config.max_iters, mu, step);
}

SolveResult irls_solve(const ProblemInstance& inst, const SolverConfig& config) {
    check_common(config);
    const double mu = resolve_step_size(inst.a, config.mu);
    const auto& s = config.irls;
    const std::size_t n_dim = inst.dimension();

    RunMonitor monitor(inst, config);
    const DenseMatrix gram2 = doubled_gram(inst.a);
    DenseVector rhs = transpose_mat_vec(inst.a, inst.y);
    for (double& v : rhs) v *= 2.0;

    DenseVector x = starting_point(inst, config);
    DenseVector ax = mat_vec(inst.a, x);
    monitor.record(0, x, ax, 0.0);

    double eps = s.eps_initial;
    double step = 0.0;
    for (std::size_t n = 1; n <= config.max_iters; ++n) {
        DenseMatrix system = gram2;
        for (std::size_t i = 0; i < n_dim; ++i) {
            const double w = 0.5 * std::pow(x[i] * x[i] + eps, -0.75);
            if (!std::isfinite(w))
                throw SolverError("irls: non-finite weight at iteration " + std::to_string(n), n);
            system(i, i) += config.lambda * w;
        }
        DenseVector next = solve_spd(std::move(system), rhs);
        require_finite_iterate(next, n, "irls");
        step = distance2(next.span(), x.span());
        x = std::move(next);
        ax = mat_vec(inst.a, x);
        monitor.record(n, x, ax, step);
        if (auto why = monitor.assess(step, x, ax)) return monitor.finish(std::move(x), ax, *why, n, mu, step);
        // Tighten the smoothing only once the iterate has settled at the
        // current level; otherwise hold it.
        if (step < std::sqrt(eps)) eps = std::max(s.eps_decay * eps, s.eps_floor);
    }
    return monitor.finish(std::move(x), ax, Termination::max_iters, config.max_iters, mu, step);
}

WeightedSoftResult weighted_soft_solve(const ProblemInstance& inst, std::span<const double> weights,
                                       double lambda, double mu, const DenseVector& x0,
                                       double rel_tol, std::size_t max_iters) {
    const std::size_t n_dim = inst.dimension();
    if (weights.size() != n_dim || x0.size() != n_dim)
        throw DimensionError("weighted_soft_solve: weights/start must have length " +
                             std::to_string(n_dim));
    std::vector<double> thresholds(n_dim);
    for (std::size_t i = 0; i < n_dim; ++i) thresholds[i] = 0.5 * mu * lambda * weights[i];

    WeightedSoftResult out{x0, 0, false};
    DenseVector& x = out.x;
    DenseVector ax = mat_vec(inst.a, x);
    for (std::size_t n = 1; n <= max_iters; ++n) {
        DenseVector z = gradient_step_from_product(inst.a, inst.y, x, ax, mu);
        for (std::size_t i = 0; i < n_dim; ++i) {
            const double az = std::abs(z[i]);
            z[i] = az > thresholds[i] ? std::copysign(az - thresholds[i], z[i]) : 0.0;
        }
        const double step = distance2(z.span(), x.span());
        x = std::move(z);
        out.iters = n;
        if (step <= rel_tol * std::max(1.0, norm2(x.span()))) {
            out.converged = true;
            break;
        }
        ax = mat_vec(inst.a, x);
    }
    return out;
}

SolveResult irl1_solve(const ProblemInstance& inst, const SolverConfig& config) {
    check_common(config);
    const double mu = resolve_step_size(inst.a, config.mu);
    const auto& s = config.irl1;
    const std::size_t n_dim = inst.dimension();

    RunMonitor monitor(inst, config);
    DenseVector x = starting_point(inst, config);
    DenseVector ax = mat_vec(inst.a, x);
    monitor.record(0, x, ax, 0.0);

    double eps = s.eps_initial;
    std::vector<double> weights(n_dim);
    double step = 0.0;
    for (std::size_t n = 1; n <= config.max_iters; ++n) {
        for (std::size_t i = 0; i < n_dim; ++i) weights[i] = 0.5 / std::sqrt(std::abs(x[i]) + eps);
        WeightedSoftResult inner =
            weighted_soft_solve(inst, weights, config.lambda, mu, x, s.inner_rel_tol, s.inner_max_iters);
        require_finite_iterate(inner.x, n, "irl1");
        step = distance2(inner.x.span(), x.span());
        x = std::move(inner.x);
        ax = mat_vec(inst.a, x);
        monitor.record(n, x, ax, step);
        if (auto why = monitor.assess(step, x, ax)) return monitor.finish(std::move(x), ax, *why, n, mu, step);
        eps = std::max(s.eps_decay * eps, s.eps_floor);
    }
    return monitor.finish(std::move(x), ax, Termination::max_iters, config.max_iters, mu, step);
}

SolveResult solve(const ProblemInstance& inst, const SolverConfig& config) {
    switch (config.algorithm) {
        case Algorithm::half:
        case Algorithm::soft:
        case Algorithm::hard: return ist_solve(inst, config);
        case Algorithm::irls: return irls_solve(inst, config);
        case Algorithm::irl1: return irl1_solve(inst, config);
    }
    throw std::invalid_argument("unknown algorithm");
}

}  // namespace lhalf
