#include "lhalf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lhalf/csv_io.hpp"
#include "lhalf/random.hpp"
#include "lhalf/serialize.hpp"

namespace lhalf {
namespace {

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("amplitude law: bad " + std::string(what) + " '" +
                                    std::string(s) + "'");
    return v;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

AlgorithmRun run_of(const SolveResult& r, double seconds) {
    return AlgorithmRun{r.algorithm, seconds, r.iters_used, r.final_objective, r.error_to_truth,
                        r.termination};
}

std::optional<double> loglog_exponent(const std::vector<Fig2Ratio>& ratios,
                                      double Fig2Ratio::*field) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& r : ratios) {
        if (!(r.*field > 0.0)) continue;
        xs.push_back(std::log(static_cast<double>(r.n)));
        ys.push_back(std::log(r.*field));
    }
    if (xs.size() < 2) return std::nullopt;
    return fit_line(xs, ys).slope;
}

}  // namespace

std::string to_string(const AmplitudeLaw& law) {
    std::ostringstream os;
    os.precision(17);
    if (const auto* u = std::get_if<SignedUniform>(&law)) {
        os << "signed_uniform:" << u->lo << "," << u->hi;
    } else {
        os << "unit_normal_floored:" << std::get<UnitNormalFloored>(law).floor;
    }
    return os.str();
}

AmplitudeLaw parse_amplitude_law(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? "" : text.substr(colon + 1);
    if (name == "signed_uniform") {
        if (args.empty()) return SignedUniform{};
        const auto comma = args.find(',');
        if (comma == std::string_view::npos)
            throw std::invalid_argument("amplitude law: signed_uniform needs LO,HI");
        return SignedUniform{parse_double(args.substr(0, comma), "lower bound"),
                             parse_double(args.substr(comma + 1), "upper bound")};
    }
    if (name == "unit_normal_floored") {
        if (args.empty()) return UnitNormalFloored{};
        return UnitNormalFloored{parse_double(args, "floor")};
    }
    throw std::invalid_argument("amplitude law: unknown law '" + std::string(name) +
                                "' (expected signed_uniform or unit_normal_floored)");
}

void GenSpec::validate() const {
    if (k < 1) throw std::invalid_argument("invalid spec: need 1 <= k (got k = 0)");
    if (k > m)
        throw std::invalid_argument("invalid spec: need k <= m (got k = " + std::to_string(k) +
                                    ", m = " + std::to_string(m) + ")");
    if (m > n)
        throw std::invalid_argument("invalid spec: need m <= N (got m = " + std::to_string(m) +
                                    ", N = " + std::to_string(n) + ")");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw std::invalid_argument("invalid spec: noise_sigma must be finite and >= 0");
    if (const auto* u = std::get_if<SignedUniform>(&amplitude)) {
        if (!(u->lo > 0.0) || !(u->hi >= u->lo) || !std::isfinite(u->hi))
            throw std::invalid_argument("invalid spec: signed_uniform needs 0 < lo <= hi");
    } else {
        const double f = std::get<UnitNormalFloored>(amplitude).floor;
        // Above 5 the redraw loop would need millions of draws per entry.
        if (!(f > 0.0) || !(f <= 5.0))
            throw std::invalid_argument("invalid spec: unit_normal_floored needs 0 < floor <= 5");
    }
}

ProblemInstance generate_instance(const GenSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const double sd = 1.0 / std::sqrt(static_cast<double>(spec.m));
    std::vector<double> entries(spec.m * spec.n);
    for (auto& v : entries) v = sd * rng.gaussian();
    DenseMatrix a(spec.m, spec.n, std::move(entries));

    std::vector<std::size_t> positions(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) positions[i] = i;
    for (std::size_t i = 0; i < spec.k; ++i)
        std::swap(positions[i], positions[i + rng.below(spec.n - i)]);

    std::vector<double> truth(spec.n, 0.0);
    for (std::size_t i = 0; i < spec.k; ++i) {
        double magnitude = 0.0;
        if (const auto* u = std::get_if<SignedUniform>(&spec.amplitude)) {
            magnitude = rng.uniform(u->lo, u->hi);
        } else {
            const double floor = std::get<UnitNormalFloored>(spec.amplitude).floor;
            do {
                magnitude = std::abs(rng.gaussian());
            } while (magnitude < floor);
        }
        truth[positions[i]] = rng.coin() ? magnitude : -magnitude;
    }
    DenseVector x(std::move(truth));
    DenseVector y = mat_vec(a, x);
    if (spec.noise_sigma > 0.0)
        for (auto& v : y) v += spec.noise_sigma * rng.gaussian();
    return ProblemInstance(std::move(a), std::move(y), std::move(x));
}

CertificateSummary summarize(const CertificateReport& r) {
    return CertificateSummary{r.stationarity.is_stationary, r.thm1_holds, r.thm2_spectral_holds,
                              r.rate.in_regime, r.rate.rho, r.rate.rho_star, r.basin_estimate};
}

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DimensionError("fit_line: length mismatch");
    LineFit f;
    f.points = xs.size();
    if (xs.size() < 2) return f;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return f;
}

Fig1Result run_fig1(std::uint64_t seed, const std::optional<std::filesystem::path>& out_dir) {
    GenSpec spec;
    spec.seed = seed;
    const ProblemInstance inst = generate_instance(spec);

    std::vector<DenseVector> iterates;
    SolverConfig config;
    config.lambda = kFig1Lambda;
    config.rel_tol = kFig1RelTol;
    config.observer = [&](std::size_t, const DenseVector& x) { iterates.push_back(x); };
    SolveResult solve = ist_solve(inst, config);

    Fig1Result out{ExperimentRecord{spec, {run_of(solve, solve.wall_seconds)}, std::nullopt},
                   std::move(solve),
                   {},
                   {},
                   0,
                   0,
                   0,
                   {},
                   0.0,
                   false};
    const SolveResult& s = out.solve;

    out.error_to_final.reserve(iterates.size());
    for (const auto& x : iterates) out.error_to_final.push_back(distance2(x.span(), s.x_final.span()));
    iterates.clear();

    const auto& recs = s.trace.records;
    out.support_stable_from = 0;
    for (std::size_t i = recs.size(); i-- > 0;) {
        if (recs[i].support != recs.back().support || recs[i].signs != recs.back().signs) {
            out.support_stable_from = i + 1;
            break;
        }
    }

    // Errors at the level of the stopping step are rounding, not contraction.
    const double floor =
        std::max(100.0 * s.final_step_delta, 1e-13 * std::max(1.0, norm2(s.x_final.span())));
    std::size_t end = out.error_to_final.size();
    while (end > 0 && out.error_to_final[end - 1] <= floor) --end;
    out.tail_end = end;
    const auto last_30 = static_cast<std::size_t>(0.7 * static_cast<double>(end > 0 ? end - 1 : 0));
    out.tail_begin = std::min(end, std::max(last_30, out.support_stable_from));

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t n = out.tail_begin; n < out.tail_end; ++n) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(std::log(out.error_to_final[n]));
    }
    out.tail_fit = fit_line(xs, ys);
    if (out.tail_end >= 2) {
        const std::size_t from = std::max(out.tail_begin, out.tail_end > 201 ? out.tail_end - 201 : 0);
        for (std::size_t n = from; n + 1 < out.tail_end; ++n)
            out.max_tail_contraction = std::max(
                out.max_tail_contraction, out.error_to_final[n + 1] / out.error_to_final[n]);
    }

    out.certificate = certify_local_min(inst, s.x_final, kFig1Lambda, s.mu);
    out.record.certificate = summarize(out.certificate);
    out.support_matches_truth = support_summary(s.x_final).support ==
                                support_summary(*inst.truth).support;

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        std::ostringstream csv;
        csv << "iter,objective,step_delta,support_size,error_to_truth,error_to_final\n";
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const auto& r = recs[i];
            csv << r.iter << ',' << format_number(r.objective) << ',' << format_number(r.step_delta)
                << ',' << r.support.size() << ',' << format_number(r.error_to_truth.value_or(0.0))
                << ',' << format_number(out.error_to_final[i]) << '\n';
        }
        write_text_file(*out_dir / "fig1_trace.csv", csv.str());

        Json j;
        j["seed"] = seed;
        j["spec"] = to_json(spec);
        j["lambda"] = kFig1Lambda;
        j["mu"] = s.mu;
        j["rel_tol"] = kFig1RelTol;
        j["termination"] = std::string(to_string(s.termination));
        j["iters_used"] = s.iters_used;
        j["final_objective"] = s.final_objective;
        j["recovery_mse"] = number_json(s.error_to_truth.value_or(std::nan("")));
        j["support_size"] = out.certificate.support.support.size();
        j["support_matches_truth"] = out.support_matches_truth;
        j["support_stable_from"] = out.support_stable_from;
        Json tail;
        tail["begin"] = out.tail_begin;
        tail["end"] = out.tail_end;
        tail["points"] = out.tail_fit.points;
        tail["slope"] = out.tail_fit.slope;
        tail["intercept"] = out.tail_fit.intercept;
        tail["r_squared"] = out.tail_fit.r_squared;
        tail["rate"] = std::exp(out.tail_fit.slope);
        tail["max_contraction"] = out.max_tail_contraction;
        j["tail_fit"] = std::move(tail);
        j["wall_seconds"] = s.wall_seconds;
        j["certificate"] = to_json(out.certificate);
        write_text_file(*out_dir / "fig1_summary.json", dump_json(j));
    }
    return out;
}

bool ratios_nondecreasing(const std::vector<Fig2Ratio>& ratios, std::size_t from_n,
                          double Fig2Ratio::*field) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& r : ratios) {
        if (r.n < from_n) continue;
        if (r.*field < prev) return false;
        prev = r.*field;
    }
    return true;
}

Fig2Result run_fig2(const Fig2Options& options, const std::optional<std::filesystem::path>& out_dir) {
    if (options.sizes.empty()) throw std::invalid_argument("run_fig2: sizes must be non-empty");
    if (options.trials == 0) throw std::invalid_argument("run_fig2: trials must be at least 1");
    if (options.repeats == 0) throw std::invalid_argument("run_fig2: repeats must be at least 1");
    for (std::size_t n : options.sizes)
        if (n < 5 * 5) throw std::invalid_argument("run_fig2: N must be at least 25 (k = 5, m = N/5)");

    constexpr Algorithm kAlgos[] = {Algorithm::half, Algorithm::irls, Algorithm::irl1};
    struct Task {
        std::size_t size_index;
        std::size_t trial;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < options.sizes.size(); ++si)
        for (std::size_t t = 0; t < options.trials; ++t) tasks.push_back({si, t});
    std::vector<ExperimentRecord> records(tasks.size());

    auto run_task = [&](std::size_t index) {
        const Task& task = tasks[index];
        GenSpec spec;
        spec.n = options.sizes[task.size_index];
        spec.m = spec.n / 5;
        spec.k = 5;
        spec.seed = mix_seed(options.seed, task.trial);
        const ProblemInstance inst = generate_instance(spec);
        SolverConfig config;
        config.lambda = options.lambda;
        config.record_trace = false;
        config.mu = resolve_step_size(inst.a, std::nullopt);
        ExperimentRecord rec{spec, {}, std::nullopt};
        for (Algorithm algo : kAlgos) {
            config.algorithm = algo;
            // Solves are deterministic; the fastest repeat filters scheduler noise.
            std::optional<SolveResult> r;
            double seconds = std::numeric_limits<double>::infinity();
            for (std::size_t rep = 0; rep < options.repeats; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                r = solve(inst, config);
                seconds = std::min(
                    seconds,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
            rec.runs.push_back(run_of(*r, seconds));
        }
        records[index] = std::move(rec);
    };

    const std::size_t workers =
        options.sequential ? 1
                           : std::max<std::size_t>(1, std::min<std::size_t>(
                                                          std::thread::hardware_concurrency(),
                                                          tasks.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size() && !failed; i = next++) {
                    try {
                        run_task(i);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
        if (failure) std::rethrow_exception(failure);
    }

    Fig2Result out;
    out.records = records;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        for (const auto& run : records[i].runs)
            out.timings.push_back(Fig2Timing{options.sizes[tasks[i].size_index], run.algorithm,
                                             tasks[i].trial, run.wall_seconds, run.iterations,
                                             run.error_to_truth, run.termination});

    std::vector<std::size_t> sizes = options.sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    for (std::size_t n : sizes) {
        std::vector<double> secs[3], per_iter[3], irls_ratio, irl1_ratio;
        for (const auto& rec : records) {
            if (rec.spec.n != n) continue;
            for (std::size_t a = 0; a < 3; ++a) {
                secs[a].push_back(rec.runs[a].wall_seconds);
                per_iter[a].push_back(rec.runs[a].wall_seconds /
                                      static_cast<double>(std::max<std::size_t>(1, rec.runs[a].iterations)));
            }
            irls_ratio.push_back(rec.runs[1].wall_seconds / rec.runs[0].wall_seconds);
            irl1_ratio.push_back(rec.runs[2].wall_seconds / rec.runs[0].wall_seconds);
        }
        out.ratios.push_back(Fig2Ratio{n, median(secs[0]), median(secs[1]), median(secs[2]),
                                       median(irls_ratio), median(irl1_ratio),
                                       median(per_iter[0]), median(per_iter[1]),
                                       median(per_iter[2])});
    }
    out.half_exponent = loglog_exponent(out.ratios, &Fig2Ratio::half_per_iter);
    out.irls_exponent = loglog_exponent(out.ratios, &Fig2Ratio::irls_per_iter);
    out.irl1_exponent = loglog_exponent(out.ratios, &Fig2Ratio::irl1_per_iter);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        std::ostringstream t;
        t << "N,algo,trial,seconds,iters,error_to_truth,termination\n";
        for (const auto& row : out.timings)
            t << row.n << ',' << to_string(row.algorithm) << ',' << row.trial << ','
              << format_number(row.seconds) << ',' << row.iterations << ','
              << (row.error_to_truth ? format_number(*row.error_to_truth) : "") << ','
              << to_string(row.termination) << '\n';
        write_text_file(*out_dir / "fig2_timings.csv", t.str());

        std::ostringstream r;
        r << "N,half_seconds,irls_seconds,irl1_seconds,half_over_half,irls_over_half,"
             "irl1_over_half,half_per_iter,irls_per_iter,irl1_per_iter\n";
        for (const auto& row : out.ratios)
            r << row.n << ',' << format_number(row.half_seconds) << ','
              << format_number(row.irls_seconds) << ',' << format_number(row.irl1_seconds)
              << ",1," << format_number(row.irls_over_half) << ','
              << format_number(row.irl1_over_half) << ',' << format_number(row.half_per_iter)
              << ',' << format_number(row.irls_per_iter) << ','
              << format_number(row.irl1_per_iter) << '\n';
        write_text_file(*out_dir / "fig2_ratios.csv", r.str());

        Json j;
        j["sizes"] = options.sizes;
        j["trials"] = options.trials;
        j["repeats"] = options.repeats;
        j["seed"] = options.seed;
        j["sequential"] = options.sequential;
        j["lambda"] = options.lambda;
        auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
        j["per_iter_exponent"] = {{"half", opt(out.half_exponent)},
                                  {"irls", opt(out.irls_exponent)},
                                  {"irl1", opt(out.irl1_exponent)}};
        j["irls_ratio_nondecreasing_from_500"] =
            ratios_nondecreasing(out.ratios, 500, &Fig2Ratio::irls_over_half);
        j["irl1_ratio_nondecreasing_from_500"] =
            ratios_nondecreasing(out.ratios, 500, &Fig2Ratio::irl1_over_half);
        write_text_file(*out_dir / "fig2_summary.json", dump_json(j));
    }
    return out;
}

}  // namespace lhalf
