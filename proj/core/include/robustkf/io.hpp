#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "robustkf/certify.hpp"
#include "robustkf/model.hpp"
#include "robustkf/riccati.hpp"

namespace robustkf {

/// 17 significant digits ("%.16e"): round-trips any double, stable bytes.
std::string format_double(double value);

/// Model file: JSON object with "A", "B", "C", "D" (row-major 2-D arrays of
/// finite doubles) and optional "P0" (defaults to the identity). Dimensions
/// are inferred. Throws StructuralError on malformed input.
StateSpaceModel parse_model_json(const std::string& text);
StateSpaceModel load_model(const std::filesystem::path& path);

/// Certificate JSON: scalar fields, the ramp bound as a 2-D array, and a
/// provenance block (model hash, N, q, tolerances). Field order is fixed, so
/// identical inputs serialize to identical bytes.
std::string certificate_to_json(const ConvergenceCertificate& certificate,
                                const StateSpaceModel& model);

/// FNV-1a over the canonically formatted model matrices, as "fnv1a:<hex>".
std::string model_hash(const StateSpaceModel& model);

/// Trace CSV: step,theta,dT_step,eig1..eign[,xhat1..xhatn]. theta is 0 on
/// the risk-neutral path; estimate columns appear when the trace carries
/// them.
void write_trace_csv(std::ostream& out, const FilterTrace& trace);

/// Trajectory CSV: t,x1..xn,y1..yp.
void write_simulation_csv(std::ostream& out, const Simulation& simulation);

/// Estimates CSV: step,xhat1..xhatn. Requires a trace with estimates.
void write_estimates_csv(std::ostream& out, const FilterTrace& trace);

/// Observation CSV: one row per step, p comma-separated values; an optional
/// header row is skipped. Throws StructuralError on ragged or non-numeric
/// rows.
Eigen::MatrixXd read_observations_csv(std::istream& in, Eigen::Index p);

}  // namespace robustkf
