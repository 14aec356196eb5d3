#include "lhalf/serialize.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lhalf/csv_io.hpp"

namespace lhalf {
namespace {

Json optional_json(const std::optional<double>& v) { return v ? number_json(*v) : Json(nullptr); }

}  // namespace

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const DenseVector& v) {
    Json out = Json::array();
    for (double e : v) out.push_back(e);
    return out;
}

Json to_json(const SolveResult& r) {
    Json j;
    j["algorithm"] = std::string(to_string(r.algorithm));
    j["termination"] = std::string(to_string(r.termination));
    j["iters_used"] = r.iters_used;
    j["lambda"] = r.lambda;
    j["mu"] = r.mu;
    j["final_objective"] = number_json(r.final_objective);
    j["final_step_delta"] = number_json(r.final_step_delta);
    j["error_to_truth"] = optional_json(r.error_to_truth);
    j["wall_seconds"] = r.wall_seconds;
    std::size_t support = 0;
    for (double v : r.x_final) support += v != 0.0;
    j["support_size"] = support;
    j["x_final"] = to_json(r.x_final);
    return j;
}

Json to_json(const StationarityReport& r) {
    Json j;
    j["is_stationary"] = r.is_stationary;
    j["max_offsupport_violation"] = number_json(r.max_offsupport_violation);
    j["max_onsupport_residual"] = number_json(r.max_onsupport_residual);
    j["tolerance"] = r.tolerance;
    return j;
}

Json to_json(const RateEstimate& r) {
    Json j;
    j["in_regime"] = r.in_regime;
    j["rho"] = number_json(r.rho);
    j["bound_c"] = number_json(r.bound_c);
    j["c_star"] = number_json(r.c_star);
    j["eps_c_star"] = number_json(r.eps_c_star);
    j["rho_star"] = number_json(r.rho_star);
    return j;
}

Json to_json(const CertificateReport& r) {
    Json j;
    j["lambda"] = r.lambda;
    j["mu"] = r.mu;
    j["stationarity"] = to_json(r.stationarity);
    j["support"] = r.support.support;
    j["support_size"] = r.support.support.size();
    j["complement_size"] = r.support.complement_size;
    j["min_magnitude"] = optional_json(r.support.min_magnitude);
    j["sigma_min"] = optional_json(r.sigma_min);
    j["sigma_max"] = optional_json(r.sigma_max);
    j["op_norm_sq"] = number_json(r.op_norm_sq);
    j["lambda_bound"] = optional_json(r.lambda_bound);
    j["thm1_holds"] = r.thm1_holds;
    j["thm2_spectral_holds"] = r.thm2_spectral_holds;
    j["thm2_step_holds"] = r.thm2_step_holds;
    j["gram_condition_number"] = optional_json(r.gram_condition_number);
    j["rate"] = to_json(r.rate);
    j["rho"] = number_json(r.rate.rho);
    j["rho_star"] = number_json(r.rate.rho_star);
    j["basin_estimate"] = optional_json(r.basin_estimate);
    j["strict_basin"] = optional_json(r.strict_basin);
    j["second_order_margin"] = optional_json(r.second_order_margin);
    j["warnings"] = r.warnings;
    return j;
}

Json to_json(const GenSpec& spec) {
    Json j;
    j["n"] = spec.n;
    j["m"] = spec.m;
    j["k"] = spec.k;
    j["seed"] = spec.seed;
    j["amplitude_law"] = to_string(spec.amplitude);
    j["noise_sigma"] = spec.noise_sigma;
    return j;
}

Json to_json(const CertificateSummary& s) {
    Json j;
    j["is_stationary"] = s.is_stationary;
    j["thm1_holds"] = s.thm1_holds;
    j["thm2_spectral_holds"] = s.thm2_spectral_holds;
    j["rate_in_regime"] = s.rate_in_regime;
    j["rho"] = number_json(s.rho);
    j["rho_star"] = number_json(s.rho_star);
    j["basin_estimate"] = optional_json(s.basin_estimate);
    return j;
}

Json to_json(const ExperimentRecord& r) {
    Json j;
    j["spec"] = to_json(r.spec);
    Json runs = Json::array();
    for (const auto& run : r.runs) {
        Json e;
        e["algorithm"] = std::string(to_string(run.algorithm));
        e["wall_seconds"] = run.wall_seconds;
        e["iterations"] = run.iterations;
        e["final_objective"] = number_json(run.final_objective);
        e["error_to_truth"] = optional_json(run.error_to_truth);
        e["termination"] = std::string(to_string(run.termination));
        runs.push_back(std::move(e));
    }
    j["runs"] = std::move(runs);
    j["certificate"] = r.certificate ? to_json(*r.certificate) : Json(nullptr);
    return j;
}

Json to_json(const RipAdvisory& r) {
    Json j;
    j["applicable"] = r.applicable;
    j["delta_k_threshold"] = r.delta_k_threshold;
    j["delta_2k_threshold"] = r.delta_2k_threshold;
    j["measurement_ratio"] = number_json(r.measurement_ratio);
    j["advisory_positive"] = r.advisory_positive;
    return j;
}

GenSpec gen_spec_from_json(const Json& j) {
    GenSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    spec.m = j.at("m").get<std::size_t>();
    spec.k = j.at("k").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.amplitude = parse_amplitude_law(j.at("amplitude_law").get<std::string>());
    spec.noise_sigma = j.at("noise_sigma").get<double>();
    spec.validate();
    return spec;
}

DenseVector solution_from_json(const Json& j) {
    if (!j.contains("x_final") || !j["x_final"].is_array())
        throw std::invalid_argument("result document has no x_final array");
    std::vector<double> x;
    for (const auto& e : j["x_final"]) {
        if (!e.is_number()) throw std::invalid_argument("x_final holds a non-numeric entry");
        x.push_back(e.get<double>());
    }
    return DenseVector(std::move(x));
}

std::string trace_csv(const IterationTrace& trace) {
    std::ostringstream os;
    os << "iter,objective,step_delta,support_size,error_to_truth,wall_nanos\n";
    for (const auto& r : trace.records) {
        os << r.iter << ',' << format_number(r.objective) << ',' << format_number(r.step_delta)
           << ',' << r.support.size() << ',';
        if (r.error_to_truth) os << format_number(*r.error_to_truth);
        os << ',' << r.wall_nanos << '\n';
    }
    return os.str();
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace lhalf
