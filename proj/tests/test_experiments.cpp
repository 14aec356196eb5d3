#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lhalf/experiments.hpp"
#include "oracles.hpp"

using namespace lhalf;
namespace fs = std::filesystem;

TEST_CASE("generate_instance is deterministic") {
    GenSpec spec;
    spec.seed = 7;
    const ProblemInstance a = generate_instance(spec);
    const ProblemInstance b = generate_instance(spec);
    CHECK(std::equal(a.a.entries().begin(), a.a.entries().end(), b.a.entries().begin()));
    CHECK(a.y.values() == b.y.values());
    CHECK(a.truth->values() == b.truth->values());

    spec.seed = 8;
    CHECK(generate_instance(spec).y.values() != a.y.values());
}

TEST_CASE("generated instance shape and laws") {
    GenSpec spec;
    spec.seed = 3;
    const ProblemInstance inst = generate_instance(spec);
    CHECK(inst.measurements() == 250);
    CHECK(inst.dimension() == 500);

    double mean_sq_norm = 0.0;
    for (std::size_t j = 0; j < 500; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 250; ++i) s += inst.a(i, j) * inst.a(i, j);
        mean_sq_norm += s / 500.0;
    }
    CHECK(std::abs(mean_sq_norm - 1.0) <= 0.1);

    std::size_t nonzeros = 0;
    for (double v : *inst.truth) {
        if (v == 0.0) continue;
        ++nonzeros;
        CHECK(std::abs(v) >= 0.5);
        CHECK(std::abs(v) <= 2.0);
    }
    CHECK(nonzeros == 15);

    const auto ax = oracle::multiply(oracle::to_mat(inst.a), oracle::to_vec(*inst.truth));
    for (std::size_t i = 0; i < 250; ++i) CHECK(std::abs(ax[i] - inst.y[i]) <= 1e-12);

    spec.amplitude = UnitNormalFloored{0.8};
    spec.noise_sigma = 0.01;
    const ProblemInstance g = generate_instance(spec);
    for (double v : *g.truth)
        if (v != 0.0) CHECK(std::abs(v) >= 0.8);
}

TEST_CASE("GenSpec validation") {
    GenSpec spec;
    spec.k = 0;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("k"), std::invalid_argument);
    spec = GenSpec{};
    spec.m = 600;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = GenSpec{};
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = GenSpec{};
    spec.amplitude = SignedUniform{2.0, 1.0};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("amplitude law text") {
    CHECK(to_string(parse_amplitude_law("signed_uniform:0.5,2")) == to_string(SignedUniform{0.5, 2.0}));
    const AmplitudeLaw g = parse_amplitude_law("unit_normal_floored:0.25");
    REQUIRE(std::holds_alternative<UnitNormalFloored>(g));
    CHECK(std::get<UnitNormalFloored>(g).floor == 0.25);
    CHECK_THROWS_AS(parse_amplitude_law("laplace:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_amplitude_law("signed_uniform:1"), std::invalid_argument);
}

TEST_CASE("fit_line") {
    const std::vector<double> xs{0, 1, 2, 3, 4};
    const std::vector<double> ys{1, 3, 5, 7, 9};
    const LineFit f = fit_line(xs, ys);
    CHECK(std::abs(f.slope - 2.0) <= 1e-14);
    CHECK(std::abs(f.intercept - 1.0) <= 1e-14);
    CHECK(std::abs(f.r_squared - 1.0) <= 1e-14);
    CHECK(f.points == 5);
}

TEST_CASE("fig2 on one small size") {
    Fig2Options opt;
    opt.sizes = {250};
    opt.trials = 1;
    const fs::path dir = fs::temp_directory_path() / "lhalf_fig2_unit";
    fs::remove_all(dir);
    const Fig2Result r = run_fig2(opt, dir);
    CHECK(r.timings.size() == 3);
    REQUIRE(r.ratios.size() == 1);
    CHECK(r.ratios[0].n == 250);
    CHECK(r.ratios[0].half_seconds > 0.0);
    CHECK(std::abs(r.ratios[0].irls_over_half - r.ratios[0].irls_seconds / r.ratios[0].half_seconds) <=
          1e-12 * r.ratios[0].irls_over_half);
    CHECK(fs::exists(dir / "fig2_timings.csv"));
    CHECK(fs::exists(dir / "fig2_ratios.csv"));
    CHECK_FALSE(r.half_exponent.has_value());
    fs::remove_all(dir);

    opt.repeats = 0;
    CHECK_THROWS_AS(run_fig2(opt), std::invalid_argument);
    opt = Fig2Options{};
    opt.sizes.clear();
    CHECK_THROWS_AS(run_fig2(opt), std::invalid_argument);
}

TEST_CASE("half per-iteration cost grows between linear and cubic when N doubles") {
    // Per-iteration work is O(mN) with m = N/5, so doubling N should
    // roughly quadruple it.
    auto per_iter = [](std::size_t n) {
        GenSpec spec;
        spec.n = n;
        spec.m = n / 5;
        spec.k = 5;
        spec.seed = 11;
        const ProblemInstance inst = generate_instance(spec);
        SolverConfig cfg;
        cfg.mu = resolve_step_size(inst.a, std::nullopt);
        cfg.max_iters = 3000;
        cfg.rel_tol = 0.0;
        cfg.stall_window = cfg.max_iters;
        cfg.record_trace = false;
        const SolveResult r = solve(inst, cfg);
        return r.wall_seconds / static_cast<double>(r.iters_used);
    };
    per_iter(400);
    const double small = std::min(per_iter(400), per_iter(400));
    const double large = std::min(per_iter(800), per_iter(800));
    CHECK(large / small >= 2.0);
    CHECK(large / small <= 6.0);
}

TEST_CASE("ratios_nondecreasing") {
    std::vector<Fig2Ratio> rs(3);
    rs[0].n = 250;
    rs[0].irls_over_half = 5.0;
    rs[1].n = 500;
    rs[1].irls_over_half = 1.0;
    rs[2].n = 750;
    rs[2].irls_over_half = 2.0;
    CHECK(ratios_nondecreasing(rs, 500, &Fig2Ratio::irls_over_half));
    CHECK_FALSE(ratios_nondecreasing(rs, 250, &Fig2Ratio::irls_over_half));
}
