#include <doctest.h>

#include <cmath>

#include "lhalf/experiments.hpp"
#include "lhalf/solvers.hpp"
#include "oracles.hpp"

using namespace lhalf;

namespace {

ProblemInstance planted(std::size_t n, std::size_t m, std::size_t k, std::uint64_t seed) {
    GenSpec spec;
    spec.n = n;
    spec.m = m;
    spec.k = k;
    spec.seed = seed;
    return generate_instance(spec);
}

SolverConfig config_for(Algorithm algo, double lambda = 1e-3) {
    SolverConfig c;
    c.algorithm = algo;
    c.lambda = lambda;
    return c;
}

}  // namespace

TEST_CASE("ProblemInstance validates shapes") {
    CHECK_THROWS_AS(ProblemInstance(DenseMatrix::identity(3), DenseVector::zeros(2)), DimensionError);
    CHECK_THROWS_AS(ProblemInstance(DenseMatrix::identity(3), DenseVector::zeros(3),
                                    DenseVector::zeros(4)),
                    DimensionError);
}

TEST_CASE("algorithm names round trip") {
    for (auto a : {Algorithm::half, Algorithm::soft, Algorithm::hard, Algorithm::irls, Algorithm::irl1})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_FALSE(parse_algorithm("lasso").has_value());
}

TEST_CASE("objective") {
    const ProblemInstance inst(oracle::random_matrix(6, 9, 1), oracle::random_vector(6, 2));
    const double y2 = dot(inst.y.span(), inst.y.span());
    CHECK(objective(inst, DenseVector::zeros(9), 0.7) == doctest::Approx(y2).epsilon(1e-15));

    const DenseVector x = oracle::random_vector(9, 3);
    const double want =
        oracle::objective(oracle::to_mat(inst.a), oracle::to_vec(inst.y), oracle::to_vec(x), 0.7);
    CHECK(std::abs(objective(inst, x, 0.7) - want) <= 1e-13 * want);

    const ProblemInstance exact(inst.a, mat_vec(inst.a, x));
    double pen = 0.0;
    for (double v : x) pen += std::sqrt(std::abs(v));
    CHECK(objective(exact, x, 0.25) == doctest::Approx(0.25 * pen).epsilon(1e-12));
    CHECK_THROWS_AS(objective(inst, DenseVector::zeros(3), 1.0), DimensionError);
}

TEST_CASE("step size resolution") {
    const DenseMatrix a = oracle::random_matrix(10, 20, 4);
    const double s = spectral_norm(a);
    const double mu = resolve_step_size(a, std::nullopt);
    CHECK(mu < 1.0 / (s * s));
    CHECK(mu == doctest::Approx(0.99 / (s * s)).epsilon(1e-8));
    CHECK(resolve_step_size(a, 0.5 / (s * s)) == 0.5 / (s * s));
    CHECK_THROWS_AS(resolve_step_size(a, 1.0 / (s * s)), InvalidStepSize);
    CHECK_THROWS_AS(resolve_step_size(a, -1.0), InvalidStepSize);
}

TEST_CASE("zero observation stays at the origin") {
    const ProblemInstance inst(oracle::random_matrix(5, 8, 6), DenseVector::zeros(5));
    for (auto algo : {Algorithm::half, Algorithm::soft, Algorithm::hard}) {
        const SolveResult r = solve(inst, config_for(algo));
        CHECK(r.termination == Termination::converged);
        CHECK(r.iters_used == 1);
        for (double v : r.x_final) CHECK(v == 0.0);
    }
    for (auto algo : {Algorithm::irls, Algorithm::irl1}) {
        const SolveResult r = solve(inst, config_for(algo));
        CHECK(r.termination == Termination::converged);
        CHECK(norm2(r.x_final.span()) <= 1e-12);
    }
}

TEST_CASE("scalar problem: fixed point is the grid minimizer") {
    // A = [1], y = [2], mu = 0.5, lambda mu = 1.
    const ProblemInstance inst(DenseMatrix::from_rows({{1.0}}), DenseVector{2.0});
    SolverConfig c = config_for(Algorithm::half, 2.0);
    c.mu = 0.5;
    c.rel_tol = 1e-14;
    const SolveResult r = ist_solve(inst, c);
    CHECK(r.termination == Termination::converged);

    double best_x = 0.0;
    double best = INFINITY;
    for (long i = -4000000; i <= 4000000; ++i) {
        const double x = 1e-6 * static_cast<double>(i);
        const double t = (x - 2.0) * (x - 2.0) + 2.0 * std::sqrt(std::abs(x));
        if (t < best) {
            best = t;
            best_x = x;
        }
    }
    CHECK(std::abs(r.x_final[0] - best_x) <= 2e-6);
    // The fixed point solves x = h(x - mu (x - y)).
    const ThresholdParams p(2.0, 0.5);
    CHECK(std::abs(half_scalar(r.x_final[0] + 0.5 * (2.0 - r.x_final[0]), p) - r.x_final[0]) <= 1e-12);
}

TEST_CASE("thresholding runs: descent, floor, stabilization") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const ProblemInstance inst = planted(120, 60, 6, seed);
        for (auto algo : {Algorithm::half, Algorithm::soft, Algorithm::hard}) {
            SolverConfig c = config_for(algo);
            c.rel_tol = 1e-10;
            double floor_violation = 0.0;
            double floor = 0.0;
            if (algo == Algorithm::half) {
                const double mu = resolve_step_size(inst.a, std::nullopt);
                floor = ThresholdParams(c.lambda, mu).half_floor();
                c.observer = [&](std::size_t, const DenseVector& x) {
                    for (double v : x)
                        if (v != 0.0 && !(std::abs(v) > floor)) floor_violation = std::abs(v);
                };
            }
            const SolveResult r = ist_solve(inst, c);
            INFO("seed " << seed << " algo " << to_string(algo));
            CHECK(r.termination == Termination::converged);
            CHECK(r.final_step_delta <= c.rel_tol * std::max(1.0, norm2(r.x_final.span())));
            const auto& recs = r.trace.records;
            REQUIRE(recs.size() == r.iters_used + 1);
            for (std::size_t i = 1; i < recs.size(); ++i)
                CHECK(recs[i].objective <= recs[i - 1].objective + 1e-12);
            if (algo == Algorithm::half) {
                CHECK(floor_violation == 0.0);
                // Support and signs are constant over a final stretch of the run.
                std::size_t stable = recs.size() - 1;
                while (stable > 0 && recs[stable - 1].support == recs.back().support &&
                       recs[stable - 1].signs == recs.back().signs)
                    --stable;
                CHECK(stable < recs.size() - 1);
                CHECK(r.error_to_truth.value() <= 1e-4);
            }
        }
    }
}

TEST_CASE("one half iteration costs exactly two products") {
    const ProblemInstance inst = planted(80, 40, 4, 3);
    auto kernels_for = [&](std::size_t iters) {
        SolverConfig c = config_for(Algorithm::half);
        c.max_iters = iters;
        c.rel_tol = 0.0;
        reset_kernel_counters();
        ist_solve(inst, c);
        return kernel_counters().mat_vec + kernel_counters().transpose_mat_vec;
    };
    CHECK(kernels_for(11) - kernels_for(10) == 2);
    CHECK(kernels_for(60) - kernels_for(10) == 100);
}

TEST_CASE("iteration cap and stall detection") {
    const ProblemInstance inst = planted(120, 60, 6, 9);
    SolverConfig c = config_for(Algorithm::half);
    c.max_iters = 5;
    const SolveResult capped = ist_solve(inst, c);
    CHECK(capped.termination == Termination::max_iters);
    CHECK(capped.iters_used == 5);

    // With a zero tolerance the run ends at the rounding floor, where neither
    // the step nor the objective improves any more.
    SolverConfig z = config_for(Algorithm::soft);
    z.rel_tol = 0.0;
    z.stall_window = 20;
    z.max_iters = 200000;
    const SolveResult r = ist_solve(inst, z);
    CHECK(r.termination != Termination::max_iters);
    CHECK(r.iters_used < z.max_iters);
}

TEST_CASE("invalid configuration") {
    const ProblemInstance inst = planted(40, 20, 2, 1);
    SolverConfig c = config_for(Algorithm::half);
    c.mu = 10.0;
    CHECK_THROWS_AS(ist_solve(inst, c), InvalidStepSize);
    c.mu.reset();
    c.lambda = 0.0;
    CHECK_THROWS_AS(ist_solve(inst, c), std::invalid_argument);
    c.lambda = 1e-3;
    c.initial_point = DenseVector::zeros(3);
    CHECK_THROWS_AS(ist_solve(inst, c), DimensionError);
    c.initial_point.reset();
    c.algorithm = Algorithm::irls;
    CHECK_THROWS_AS(ist_solve(inst, c), std::invalid_argument);
}

TEST_CASE("baselines recover the k = 5, N = 250, m = 50 signal") {
    const ProblemInstance inst = planted(250, 50, 5, 2);
    SolverConfig half = config_for(Algorithm::half);
    const SolveResult h = solve(inst, half);
    for (auto algo : {Algorithm::irls, Algorithm::irl1}) {
        const SolveResult r = solve(inst, config_for(algo));
        INFO(to_string(algo));
        CHECK(r.termination == Termination::converged);
        CHECK(r.error_to_truth.value() <= 1e-3);
        CHECK(distance2(r.x_final.span(), h.x_final.span()) <= 1e-2);
    }
}

TEST_CASE("unit weights reduce the irl1 inner solve to soft thresholding") {
    const ProblemInstance inst = planted(60, 30, 3, 5);
    const double mu = resolve_step_size(inst.a, std::nullopt);
    SolverConfig c = config_for(Algorithm::soft, 0.05);
    c.mu = mu;
    c.rel_tol = 1e-9;
    const SolveResult soft = ist_solve(inst, c);
    const std::vector<double> ones(60, 1.0);
    const WeightedSoftResult w =
        weighted_soft_solve(inst, ones, 0.05, mu, DenseVector::zeros(60), 1e-9, 100000);
    CHECK(w.converged);
    CHECK(distance2(w.x.span(), soft.x_final.span()) <= 1e-6);
}

TEST_CASE("tiny lambda drives every solver to the least-squares residual") {
    // Overdetermined: m = 20 > N = 8, noisy observation.
    const DenseMatrix a = oracle::random_matrix(20, 8, 31, 1.0 / std::sqrt(20.0));
    DenseVector y = mat_vec(a, oracle::random_vector(8, 32));
    const DenseVector noise = oracle::random_vector(20, 33, 0.05);
    for (std::size_t i = 0; i < 20; ++i) y[i] += noise[i];
    const ProblemInstance inst(a, y);

    std::vector<std::size_t> all(8);
    for (std::size_t i = 0; i < 8; ++i) all[i] = i;
    const auto ls = oracle::restricted_least_squares(oracle::to_mat(a), oracle::to_vec(y), all);
    const auto fit = oracle::multiply(oracle::to_mat(a), ls);
    double ls_res = 0.0;
    for (std::size_t i = 0; i < 20; ++i) ls_res += (fit[i] - y[i]) * (fit[i] - y[i]);
    ls_res = std::sqrt(ls_res);

    for (auto algo : {Algorithm::half, Algorithm::soft, Algorithm::hard, Algorithm::irls, Algorithm::irl1}) {
        SolverConfig c = config_for(algo, 1e-8);
        c.rel_tol = 1e-12;
        const SolveResult r = solve(inst, c);
        DenseVector res = mat_vec(a, r.x_final);
        for (std::size_t i = 0; i < 20; ++i) res[i] -= y[i];
        INFO(to_string(algo));
        CHECK(norm2(res.span()) <= ls_res * (1.0 + 1e-4) + 1e-8);
    }
}

TEST_CASE("small instances against support enumeration") {
    // IRLS and half on N = 8, m = 6, k = 2 instances.
    int half_hits = 0;
    int irls_hits = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst = oracle::small_instance(8, 6, 2, seed);
        const double lambda = 1e-3;
        const double best = oracle::support_enumeration_minimum(
            oracle::to_mat(inst.a), oracle::to_vec(inst.y), lambda, 3);
        SolverConfig c = config_for(Algorithm::half, lambda);
        c.rel_tol = 1e-12;
        const SolveResult h = ist_solve(inst, c);
        c.algorithm = Algorithm::irls;
        const SolveResult r = irls_solve(inst, c);
        half_hits += h.final_objective <= best + 1e-6;
        irls_hits += r.final_objective <= best + 1e-6;
    }
    CHECK(half_hits >= 4);
    CHECK(irls_hits >= 4);
}
