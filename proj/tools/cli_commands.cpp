#include "cli_commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

#include "lhalf/csv_io.hpp"
#include "lhalf/diagnostics.hpp"
#include "lhalf/experiments.hpp"
#include "lhalf/serialize.hpp"
#include "lhalf/solvers.hpp"

namespace lhalf::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GenFlags {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    std::string amp_law = "signed_uniform:0.5,2";
    std::string out = ".";
};

struct SolveFlags {
    std::string matrix;
    std::string obs;
    std::string algo = "half";
    double lambda = kFig1Lambda;
    std::string mu = "auto";
    std::string truth;
    std::string trace;
    double tol = 1e-8;
    std::size_t max_iters = 50000;
    std::string out = "result.json";
};

struct DiagnoseFlags {
    std::string matrix;
    std::string obs;
    std::string solution;
    double lambda = kFig1Lambda;
    std::string mu = "auto";
    std::size_t probe_trials = 1000;
    double probe_radius_frac = 0.5;
    std::uint64_t probe_seed = 1;
    std::string out = "certificate.json";
};

struct Fig1Flags {
    std::uint64_t seed = 1;
    std::string out = ".";
};

struct Fig2Flags {
    std::vector<std::size_t> sizes{250, 500, 750, 1000, 1250, 1500};
    std::size_t trials = 5;
    std::uint64_t seed = 1;
    std::string out = ".";
    bool sequential = false;
};

std::optional<double> parse_mu(const std::string& text) {
    if (text == "auto") return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw UsageError("--mu must be a number or 'auto', got '" + text + "'");
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("--mu must be positive, got " + text);
    return v;
}

void require_positive(double v, const char* flag) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw UsageError(std::string(flag) + " must be positive and finite");
}

ProblemInstance load_instance(const std::string& matrix, const std::string& obs,
                              const std::string& truth) {
    DenseMatrix a = read_matrix_csv(matrix);
    DenseVector y = read_vector_csv(obs);
    std::optional<DenseVector> t;
    if (!truth.empty()) t = read_vector_csv(truth);
    return ProblemInstance(std::move(a), std::move(y), std::move(t));
}

DenseVector load_solution(const std::string& path) {
    if (fs::path(path).extension() == ".json") {
        Json j;
        try {
            j = Json::parse(read_text_file(path));
        } catch (const Json::parse_error& e) {
            throw ParseError(path + ": " + e.what());
        }
        return solution_from_json(j);
    }
    return read_vector_csv(path);
}

int cmd_gen(const GenFlags& f, std::ostream& out) {
    GenSpec spec;
    spec.n = f.n;
    spec.m = f.m;
    spec.k = f.k;
    spec.seed = f.seed;
    spec.noise_sigma = f.noise_sigma;
    spec.amplitude = parse_amplitude_law(f.amp_law);
    spec.validate();

    const ProblemInstance inst = generate_instance(spec);
    const fs::path dir(f.out);
    fs::create_directories(dir);
    write_matrix_csv(dir / "A.csv", inst.a);
    write_vector_csv(dir / "y.csv", inst.y);
    write_vector_csv(dir / "truth.csv", *inst.truth);
    write_text_file(dir / "spec.json", dump_json(to_json(spec)));
    out << "wrote A.csv (" << spec.m << "x" << spec.n << "), y.csv, truth.csv, spec.json to "
        << dir.string() << "\n";
    return kOk;
}

int cmd_solve(const SolveFlags& f, std::ostream& out) {
    const auto algo = parse_algorithm(f.algo);
    if (!algo) throw UsageError("--algo must be one of half, soft, hard, irls, irl1");
    require_positive(f.lambda, "--lambda");
    if (!(f.tol >= 0.0)) throw UsageError("--tol must be non-negative");
    if (f.max_iters == 0) throw UsageError("--max-iters must be at least 1");
    const std::optional<double> mu = parse_mu(f.mu);

    const ProblemInstance inst = load_instance(f.matrix, f.obs, f.truth);
    SolverConfig config;
    config.algorithm = *algo;
    config.lambda = f.lambda;
    config.mu = mu;
    config.rel_tol = f.tol;
    config.max_iters = f.max_iters;
    config.record_trace = !f.trace.empty();
    const SolveResult r = solve(inst, config);

    Json j = to_json(r);
    j["flags"] = {{"matrix", f.matrix}, {"obs", f.obs},       {"algo", f.algo},
                  {"lambda", f.lambda}, {"mu", f.mu},         {"truth", f.truth},
                  {"tol", f.tol},       {"max_iters", f.max_iters}};
    write_text_file(f.out, dump_json(j));
    if (!f.trace.empty()) write_text_file(f.trace, trace_csv(r.trace));

    out << to_string(r.algorithm) << ": " << to_string(r.termination) << " after " << r.iters_used
        << " iterations, objective " << std::setprecision(10) << r.final_objective << ", mu "
        << r.mu;
    if (r.error_to_truth) out << ", recovery MSE " << *r.error_to_truth;
    out << "\n";
    switch (r.termination) {
        case Termination::converged: return kOk;
        case Termination::max_iters: return kIterationCap;
        case Termination::stalled: return kStalled;
    }
    return kOk;
}

int cmd_diagnose(const DiagnoseFlags& f, std::ostream& out) {
    require_positive(f.lambda, "--lambda");
    require_positive(f.probe_radius_frac, "--probe-radius-frac");
    const std::optional<double> mu_flag = parse_mu(f.mu);

    const ProblemInstance inst = load_instance(f.matrix, f.obs, "");
    const DenseVector x = load_solution(f.solution);
    if (x.size() != inst.dimension())
        throw DimensionError(f.solution + ": solution has length " + std::to_string(x.size()) +
                             " but A has " + std::to_string(inst.dimension()) + " columns");
    const double mu = resolve_step_size(inst.a, mu_flag);
    const CertificateReport rep = certify_local_min(inst, x, f.lambda, mu);

    Json j = to_json(rep);
    std::optional<double> worst;
    if (f.probe_trials > 0 && rep.basin_estimate) {
        const double radius = f.probe_radius_frac * *rep.basin_estimate;
        worst = perturbation_probe(inst, x, f.lambda, radius, f.probe_trials, f.probe_seed);
        j["probe"] = {{"radius", radius}, {"trials", f.probe_trials}, {"worst_delta", *worst}};
    } else {
        j["probe"] = nullptr;
    }
    const std::size_t k = rep.support.support.size();
    if (k >= 1 && k <= inst.measurements())
        j["rip_advisory"] = to_json(rip_heuristic(inst.measurements(), inst.dimension(), k));
    j["flags"] = {{"matrix", f.matrix},
                  {"obs", f.obs},
                  {"solution", f.solution},
                  {"lambda", f.lambda},
                  {"mu", f.mu},
                  {"probe_trials", f.probe_trials},
                  {"probe_radius_frac", f.probe_radius_frac},
                  {"probe_seed", f.probe_seed}};
    write_text_file(f.out, dump_json(j));

    out << render_text(rep);
    if (worst) out << "probe worst delta:     " << *worst << "\n";
    return kOk;
}

int cmd_fig1(const Fig1Flags& f, std::ostream& out) {
    const Fig1Result r = run_fig1(f.seed, fs::path(f.out));
    out << std::setprecision(6);
    out << "seed " << f.seed << ": " << to_string(r.solve.termination) << " after "
        << r.solve.iters_used << " iterations\n";
    out << "recovery MSE " << r.solve.error_to_truth.value_or(std::nan("")) << ", support "
        << (r.support_matches_truth ? "matches" : "differs from") << " the planted support\n";
    out << "tail fit over [" << r.tail_begin << ", " << r.tail_end << "): slope "
        << r.tail_fit.slope << ", R^2 " << r.tail_fit.r_squared << ", max contraction "
        << r.max_tail_contraction << "\n";
    if (r.certificate.rate.in_regime)
        out << "rho " << r.certificate.rate.rho << ", rho* " << r.certificate.rate.rho_star << "\n";
    return kOk;
}

int cmd_fig2(const Fig2Flags& f, std::ostream& out) {
    if (f.sizes.empty()) throw UsageError("--sizes must list at least one N");
    for (std::size_t n : f.sizes)
        if (n < 25) throw UsageError("--sizes entries must be at least 25");
    if (f.trials == 0) throw UsageError("--trials must be at least 1");
    Fig2Options opt;
    opt.sizes = f.sizes;
    opt.trials = f.trials;
    opt.seed = f.seed;
    opt.sequential = f.sequential;
    const Fig2Result r = run_fig2(opt, fs::path(f.out));

    out << std::setprecision(4);
    out << std::setw(6) << "N" << std::setw(12) << "half[s]" << std::setw(12) << "irls/half"
        << std::setw(12) << "irl1/half" << "\n";
    for (const auto& row : r.ratios)
        out << std::setw(6) << row.n << std::setw(12) << row.half_seconds << std::setw(12)
            << row.irls_over_half << std::setw(12) << row.irl1_over_half << "\n";
    auto show = [&](const char* name, const std::optional<double>& e) {
        out << name << " per-iteration exponent: ";
        if (e) {
            out << *e << "\n";
        } else {
            out << "n/a\n";
        }
    };
    show("half", r.half_exponent);
    show("irls", r.irls_exponent);
    show("irl1", r.irl1_exponent);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"L1/2 regularized sparse recovery by half thresholding", "lhalf"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "Generate a random sparse recovery instance");
    g->add_option("--n", gen.n, "Signal dimension N")->required();
    g->add_option("--m", gen.m, "Number of measurements")->required();
    g->add_option("--k", gen.k, "Sparsity")->required();
    g->add_option("--seed", gen.seed, "Generator seed")->required();
    g->add_option("--noise-sigma", gen.noise_sigma, "Observation noise level")->capture_default_str();
    g->add_option("--amp-law", gen.amp_law,
                  "signed_uniform:LO,HI or unit_normal_floored:FLOOR")
        ->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->capture_default_str();

    SolveFlags sol;
    auto* s = app.add_subcommand("solve", "Run one solver on an instance");
    s->add_option("--matrix", sol.matrix, "Measurement matrix CSV")->required();
    s->add_option("--obs", sol.obs, "Observation vector CSV")->required();
    s->add_option("--algo", sol.algo, "half, soft, hard, irls or irl1")->capture_default_str();
    s->add_option("--lambda", sol.lambda, "Regularization weight")->capture_default_str();
    s->add_option("--mu", sol.mu, "Step size or 'auto'")->capture_default_str();
    s->add_option("--truth", sol.truth, "Planted signal CSV for error tracking");
    s->add_option("--trace", sol.trace, "Write the iteration trace CSV here");
    s->add_option("--tol", sol.tol, "Relative step tolerance")->capture_default_str();
    s->add_option("--max-iters", sol.max_iters, "Iteration cap")->capture_default_str();
    s->add_option("--out", sol.out, "Result JSON path")->capture_default_str();

    DiagnoseFlags dia;
    auto* d = app.add_subcommand("diagnose", "Certify a candidate solution");
    d->add_option("--matrix", dia.matrix, "Measurement matrix CSV")->required();
    d->add_option("--obs", dia.obs, "Observation vector CSV")->required();
    d->add_option("--solution", dia.solution, "Solution CSV or result JSON")->required();
    d->add_option("--lambda", dia.lambda, "Regularization weight")->capture_default_str();
    d->add_option("--mu", dia.mu, "Step size or 'auto'")->capture_default_str();
    d->add_option("--probe-trials", dia.probe_trials, "Random perturbations (0 disables)")
        ->capture_default_str();
    d->add_option("--probe-radius-frac", dia.probe_radius_frac,
                  "Probe radius as a fraction of the basin estimate")
        ->capture_default_str();
    d->add_option("--probe-seed", dia.probe_seed, "Probe seed")->capture_default_str();
    d->add_option("--out", dia.out, "Certificate JSON path")->capture_default_str();

    Fig1Flags f1;
    auto* e1 = app.add_subcommand("exp-fig1", "Recovery and linear-rate experiment");
    e1->add_option("--seed", f1.seed, "Instance seed")->capture_default_str();
    e1->add_option("--out", f1.out, "Output directory")->capture_default_str();

    Fig2Flags f2;
    auto* e2 = app.add_subcommand("exp-fig2", "Timing comparison of half, irls and irl1");
    e2->add_option("--sizes", f2.sizes, "Signal dimensions N")->delimiter(',')->capture_default_str();
    e2->add_option("--trials", f2.trials, "Trials per size")->capture_default_str();
    e2->add_option("--seed", f2.seed, "Parent seed for trial instances")->capture_default_str();
    e2->add_option("--out", f2.out, "Output directory")->capture_default_str();
    e2->add_flag("--sequential", f2.sequential, "Run trials one at a time");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (s->parsed()) return cmd_solve(sol, out);
        if (d->parsed()) return cmd_diagnose(dia, out);
        if (e1->parsed()) return cmd_fig1(f1, out);
        if (e2->parsed()) return cmd_fig2(f2, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace lhalf::cli
