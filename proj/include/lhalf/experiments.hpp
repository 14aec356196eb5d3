#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lhalf/diagnostics.hpp"
#include "lhalf/solvers.hpp"

namespace lhalf {

/// Magnitudes uniform on [lo, hi], random sign.
struct SignedUniform {
    double lo = 0.5;
    double hi = 2.0;
};

/// Standard normal draws redrawn until |value| >= floor.
struct UnitNormalFloored {
    double floor = 0.5;
};

using AmplitudeLaw = std::variant<SignedUniform, UnitNormalFloored>;

/// "signed_uniform:LO,HI" or "unit_normal_floored:FLOOR".
std::string to_string(const AmplitudeLaw& law);
AmplitudeLaw parse_amplitude_law(std::string_view text);

struct GenSpec {
    std::size_t n = 500;
    std::size_t m = 250;
    std::size_t k = 15;
    std::uint64_t seed = 1;
    AmplitudeLaw amplitude = SignedUniform{};
    double noise_sigma = 0.0;

    /// Throws std::invalid_argument naming the violated condition.
    void validate() const;
};

/// A has i.i.d. N(0, 1/m) entries; the truth has k nonzeros at distinct
/// uniform positions; y = A truth + noise_sigma * N(0, 1) per entry.
/// Bit-identical for identical specs.
ProblemInstance generate_instance(const GenSpec& spec);

struct AlgorithmRun {
    Algorithm algorithm = Algorithm::half;
    double wall_seconds = 0.0;
    std::size_t iterations = 0;
    double final_objective = 0.0;
    std::optional<double> error_to_truth;
    Termination termination = Termination::max_iters;
};

struct CertificateSummary {
    bool is_stationary = false;
    bool thm1_holds = false;
    bool thm2_spectral_holds = false;
    bool rate_in_regime = false;
    double rho = 0.0;
    double rho_star = 0.0;
    std::optional<double> basin_estimate;
};

CertificateSummary summarize(const CertificateReport& report);

struct ExperimentRecord {
    GenSpec spec;
    std::vector<AlgorithmRun> runs;
    std::optional<CertificateSummary> certificate;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Least-squares line through (xs[i], ys[i]).
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

struct Fig1Result {
    ExperimentRecord record;
    SolveResult solve;
    CertificateReport certificate;
    std::vector<double> error_to_final;  // ||x^(n) - x_final||_2 for n = 0..iters
    std::size_t support_stable_from = 0;  // first iteration with the final support and signs
    std::size_t tail_begin = 0;
    std::size_t tail_end = 0;  // exclusive; error_to_final above the noise floor before it
    LineFit tail_fit;          // log(error_to_final) against iteration over the tail
    double max_tail_contraction = 0.0;  // over the last 200 tail iterations
    bool support_matches_truth = false;
};

inline constexpr double kFig1Lambda = 1e-3;
inline constexpr double kFig1RelTol = 1e-12;

/// N = 500, m = 250, k = 15, lambda = 1e-3, mu auto, half from zero. With an
/// output directory, writes fig1_trace.csv and fig1_summary.json there.
Fig1Result run_fig1(std::uint64_t seed,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct Fig2Options {
    std::vector<std::size_t> sizes{250, 500, 750, 1000, 1250, 1500};
    std::size_t trials = 5;
    std::uint64_t seed = 1;
    bool sequential = true;
    double lambda = 1e-3;
    std::size_t repeats = 1;  // timed solves per run; the fastest is kept
};

struct Fig2Timing {
    std::size_t n = 0;
    Algorithm algorithm = Algorithm::half;
    std::size_t trial = 0;
    double seconds = 0.0;
    std::size_t iterations = 0;
    std::optional<double> error_to_truth;
    Termination termination = Termination::max_iters;
};

struct Fig2Ratio {
    std::size_t n = 0;
    double half_seconds = 0.0;  // medians over trials
    double irls_seconds = 0.0;
    double irl1_seconds = 0.0;
    double irls_over_half = 0.0;  // median of per-trial ratios
    double irl1_over_half = 0.0;
    double half_per_iter = 0.0;  // median seconds per iteration
    double irls_per_iter = 0.0;
    double irl1_per_iter = 0.0;
};

struct Fig2Result {
    std::vector<ExperimentRecord> records;  // one per (size, trial)
    std::vector<Fig2Timing> timings;
    std::vector<Fig2Ratio> ratios;           // ascending N
    std::optional<double> half_exponent;     // log-log slope of per-iteration time
    std::optional<double> irls_exponent;
    std::optional<double> irl1_exponent;
};

/// k = 5, m = N/5. Trial seeds are mix_seed(seed, trial); every algorithm of
/// one trial sees the same instance. Only the solve call is timed. Throws
/// std::invalid_argument when sizes is empty or trials or repeats is zero.
Fig2Result run_fig2(const Fig2Options& options,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

bool ratios_nondecreasing(const std::vector<Fig2Ratio>& ratios, std::size_t from_n,
                          double Fig2Ratio::*field);

}  // namespace lhalf
