#pragma once

#include <string>

#include <json.hpp>

#include "lhalf/diagnostics.hpp"
#include "lhalf/experiments.hpp"
#include "lhalf/solvers.hpp"

namespace lhalf {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become null.
Json number_json(double v);

Json to_json(const DenseVector& v);
Json to_json(const SolveResult& r);  // everything except the trace
Json to_json(const StationarityReport& r);
Json to_json(const RateEstimate& r);
Json to_json(const CertificateReport& r);
Json to_json(const GenSpec& spec);
Json to_json(const CertificateSummary& s);
Json to_json(const ExperimentRecord& r);
Json to_json(const RipAdvisory& r);

GenSpec gen_spec_from_json(const Json& j);

/// Reads x_final from a result document.
DenseVector solution_from_json(const Json& j);

/// Header iter,objective,step_delta,support_size,error_to_truth,wall_nanos;
/// error_to_truth is empty when no truth was given.
std::string trace_csv(const IterationTrace& trace);

/// Indented dump; doubles print in their shortest exact round-trip form.
std::string dump_json(const Json& j);

}  // namespace lhalf
