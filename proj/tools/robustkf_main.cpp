// Command-line front end: model validation, simulation, filtering,
// covariance iteration, convergence certification, and the CSV sweeps.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <robustkf/certify.hpp>
#include <robustkf/io.hpp>
#include <robustkf/nblock.hpp>
#include <robustkf/psd.hpp>
#include <robustkf/riccati.hpp>

namespace {

using namespace robustkf;

constexpr int kExitOk = 0;
constexpr int kExitBadArguments = 1;
constexpr int kExitValidationFailed = 2;
constexpr int kExitDomainError = 3;
constexpr int kExitCertificationFailed = 4;
constexpr int kExitNotConverged = 5;

// Separates "the model file is bad" from usage errors for exit codes.
struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec grid;
  std::stringstream ss(text);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  if (fields.size() != 3) {
    throw CLI::ValidationError("--grid", "expected <lo,hi,points>");
  }
  try {
    grid.lo = std::stod(fields[0]);
    grid.hi = std::stod(fields[1]);
    grid.points = std::stoi(fields[2]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--grid", "expected <lo,hi,points>");
  }
  if (!(grid.hi > grid.lo) || grid.points < 2) {
    throw CLI::ValidationError("--grid", "need hi > lo and points >= 2");
  }
  return grid;
}

SpdMatrix parse_p0(const std::string& spec, Eigen::Index n) {
  if (spec == "identity") {
    return SpdMatrix::Identity(n);
  }
  if (spec.rfind("scaled:", 0) == 0) {
    const double a = std::stod(spec.substr(7));
    if (!(a > 0.0)) {
      throw StructuralError("--p0 scaled:<a> needs a > 0");
    }
    return SpdMatrix(a * Eigen::MatrixXd::Identity(n, n));
  }
  if (spec.rfind("file:", 0) == 0) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) {
      throw StructuralError("--p0 file: cannot open " + path);
    }
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const std::exception& e) {
      throw StructuralError(std::string("--p0 file: invalid JSON: ") +
                            e.what());
    }
    if (!doc.is_array()) {
      throw StructuralError("--p0 file: expected a 2-D array");
    }
    Eigen::MatrixXd mat(doc.size(), doc.empty() ? 0 : doc[0].size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!doc[i].is_array() || doc[i].size() != static_cast<std::size_t>(mat.cols())) {
        throw StructuralError("--p0 file: ragged array");
      }
      for (std::size_t j = 0; j < doc[i].size(); ++j) {
        mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            doc[i][j].get<double>();
      }
    }
    if (mat.rows() != n) {
      throw StructuralError("--p0 file: matrix must be n x n");
    }
    return SpdMatrix(mat);
  }
  throw StructuralError("--p0 must be identity, scaled:<a> or file:<path>");
}

// Writes to the path, or stdout for "-".
void write_output(const std::string& path,
                  const std::function<void(std::ostream&)>& writer) {
  if (path == "-") {
    writer(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StructuralError("cannot open output file " + path);
  }
  writer(out);
}

StateSpaceModel load_model_or_fail(const std::string& path) {
  try {
    return load_model(path);
  } catch (const StructuralError& e) {
    throw ValidationFailure(e.what());
  }
}

StateSpaceModel load_and_validate(const std::string& path) {
  StateSpaceModel model = load_model_or_fail(path);
  const ValidationReport report = validate_model(model);
  if (!report.passed()) {
    std::ostringstream os;
    os << "model failed validation:";
    for (const auto& check : report.checks) {
      if (!check.passed) {
        os << " " << check.name << " (" << check.detail << ")";
      }
    }
    throw ValidationFailure(os.str());
  }
  return model;
}

int run_validate(const std::string& model_path) {
  const StateSpaceModel model = load_model_or_fail(model_path);
  const ValidationReport report = validate_model(model);
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "[pass] " : "[FAIL] ") << check.name << ": "
              << check.detail << "\n";
  }
  std::cout << (report.passed() ? "model valid" : "model invalid") << "\n";
  return report.passed() ? kExitOk : kExitValidationFailed;
}

int run_simulate(const std::string& model_path, int steps,
                 std::uint64_t seed, const std::string& out) {
  const StateSpaceModel model = load_and_validate(model_path);
  if (steps < 0) {
    throw StructuralError("--steps must be >= 0");
  }
  const Simulation sim =
      simulate(model, static_cast<std::size_t>(steps), seed);
  write_output(out, [&](std::ostream& os) { write_simulation_csv(os, sim); });
  return kExitOk;
}

int run_filter_cmd(const std::string& model_path, const std::string& obs_path,
                   double c, const std::string& p0_spec,
                   const std::string& out, const std::string& trace_out) {
  const StateSpaceModel model = load_and_validate(model_path);
  std::ifstream obs_in(obs_path);
  if (!obs_in) {
    throw StructuralError("cannot open observations file " + obs_path);
  }
  const Eigen::MatrixXd observations =
      read_observations_csv(obs_in, model.p());
  const SpdMatrix p0 =
      p0_spec.empty() ? model.P0() : parse_p0(p0_spec, model.n());
  const FilterTrace trace = run_filter(model, p0, c, observations);
  write_output(out, [&](std::ostream& os) { write_estimates_csv(os, trace); });
  if (!trace_out.empty()) {
    write_output(trace_out,
                 [&](std::ostream& os) { write_trace_csv(os, trace); });
  }
  return kExitOk;
}

int run_iterate(const std::string& model_path, double c,
                const std::string& p0_spec, int max_steps, double dist_tol,
                const std::string& out) {
  const StateSpaceModel model = load_and_validate(model_path);
  if (max_steps < 0) {
    throw StructuralError("--steps must be >= 0");
  }
  const SpdMatrix p0 =
      p0_spec.empty() ? model.P0() : parse_p0(p0_spec, model.n());
  const FilterTrace trace =
      iterate_riccati(model, p0, c,
                      {static_cast<std::size_t>(max_steps), dist_tol});
  write_output(out, [&](std::ostream& os) { write_trace_csv(os, trace); });
  const bool converged = trace.verdict == IterationVerdict::kConverged;
  if (converged) {
    std::cout << "converged at step " << *trace.converged_at
              << " (dT < " << format_double(dist_tol) << ")\n";
  } else {
    std::cout << "max steps reached without convergence\n";
  }
  return converged ? kExitOk : kExitNotConverged;
}

int run_certify(const std::string& model_path, Eigen::Index N,
                std::optional<int> q, std::optional<double> c,
                const std::string& out) {
  const StateSpaceModel model = load_and_validate(model_path);
  const int ramp_q = q.value_or(default_ramp_length(model));
  const ConvergenceCertificate cert =
      compute_certificate(model, N, ramp_q, c);
  write_output(out, [&](std::ostream& os) {
    os << certificate_to_json(cert, model);
  });
  std::cout << "c_max = " << format_double(cert.c_max) << " (N = " << cert.N
            << ", q = " << cert.q << ", phi_N = " << format_double(cert.phi)
            << ")\n";
  if (cert.user_c.has_value()) {
    std::cout << "verdict for c = " << format_double(*cert.user_c) << ": "
              << to_string(cert.verdict) << "\n";
    if (cert.verdict == CertificateVerdict::kToleranceExceedsBound) {
      return kExitCertificationFailed;
    }
  }
  return kExitOk;
}

int run_verify(const std::string& model_path, Eigen::Index N,
               std::optional<int> q, double c, int trials,
               std::uint64_t seed, int max_steps, double dist_tol) {
  const StateSpaceModel model = load_and_validate(model_path);
  const int ramp_q = q.value_or(default_ramp_length(model));
  const ConvergenceCertificate cert = compute_certificate(model, N, ramp_q);
  const EmpiricalReport report = verify_certificate_empirically(
      model, cert, c, trials, seed,
      {static_cast<std::size_t>(max_steps), dist_tol});
  std::cout << "c = " << format_double(c) << ", c_max = "
            << format_double(cert.c_max)
            << (report.within_certified_range ? " (within certified range)"
                                              : " (outside certified range)")
            << "\n";
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    const TrialResult& trial = report.trials[i];
    std::cout << "trial " << i << ": "
              << (trial.converged ? "converged" : "did not converge")
              << " in " << trial.steps << " steps, decay ~ "
              << format_double(trial.decay_estimate) << "\n";
  }
  std::cout << "max pairwise limit distance = "
            << format_double(report.max_pairwise_distance) << "\n";
  std::cout << (report.passed ? "all trials converged to a common limit"
                              : "verification FAILED")
            << "\n";
  return report.passed ? kExitOk : kExitNotConverged;
}

int run_sweep_omega(const std::string& model_path, Eigen::Index N,
                    const GridSpec& grid, const std::string& out) {
  const StateSpaceModel model = load_and_validate(model_path);
  const NBlockSystem sys = build_nblock(model, N);
  write_output(out, [&](std::ostream& os) {
    os << "phi,min_eig_omega\n";
    for (int i = 0; i < grid.points; ++i) {
      const double phi =
          grid.lo + (grid.hi - grid.lo) * i / (grid.points - 1);
      os << format_double(phi) << ','
         << format_double(omega_min_eigenvalue(sys, phi)) << "\n";
    }
  });
  return kExitOk;
}

int run_sweep_gamma(const std::string& model_path, std::vector<int> qs,
                    const GridSpec& grid, const std::string& out) {
  const StateSpaceModel model = load_and_validate(model_path);
  if (qs.empty()) {
    qs = {10, 20, 35};
  }
  int max_q = 0;
  for (const int q : qs) {
    if (q < 0) {
      throw StructuralError("--q must be >= 0");
    }
    max_q = std::max(max_q, q);
  }
  const std::vector<SpdMatrix> ramp = lower_bound_ramp(model, max_q);
  write_output(out, [&](std::ostream& os) {
    os << "theta";
    for (const int q : qs) {
      os << ",gamma_q" << q;
    }
    os << "\n";
    for (int i = 0; i < grid.points; ++i) {
      const double theta =
          grid.lo + (grid.hi - grid.lo) * i / (grid.points - 1);
      os << format_double(theta);
      for (const int q : qs) {
        os << ',' << format_double(gamma(theta, ramp[q]));
      }
      os << "\n";
    }
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Kalman filter with time-varying risk sensitivity: "
               "filtering, distorted Riccati iteration, and contraction-"
               "based convergence certification"};
  app.require_subcommand(1);

  std::string model_path;
  std::string out = "-";
  std::string p0_spec;
  std::string obs_path;
  std::string trace_out;
  std::string grid_text;
  double c = 0.0;
  Eigen::Index N = 0;
  int q = -1;
  std::vector<int> q_list;
  int steps = 100;
  int max_steps = 10000;
  double dist_tol = 1e-10;
  std::uint64_t seed = 0;
  int trials = 5;

  const auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model JSON file")
        ->required()
        ->check(CLI::ExistingFile);
  };

  CLI::App* validate = app.add_subcommand(
      "validate", "check the modelling assumptions and print a report");
  add_model(validate);

  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "sample a trajectory of the nominal model (CSV)");
  add_model(simulate_cmd);
  simulate_cmd->add_option("--steps", steps, "trajectory length")
      ->default_val(100);
  simulate_cmd->add_option("--seed", seed, "RNG seed")->default_val(0);
  simulate_cmd->add_option("--out", out, "output CSV ('-' for stdout)");

  CLI::App* filter_cmd = app.add_subcommand(
      "filter", "run the robust filter over an observation CSV");
  add_model(filter_cmd);
  filter_cmd->add_option("--obs", obs_path, "observation CSV (p columns)")
      ->required()
      ->check(CLI::ExistingFile);
  filter_cmd->add_option("--c", c, "tolerance budget per step (0 = "
                                   "risk-neutral)")
      ->default_val(0.0);
  filter_cmd->add_option("--p0", p0_spec,
                         "initial covariance: identity | scaled:<a> | "
                         "file:<path> (default: model P0)");
  filter_cmd->add_option("--out", out, "estimates CSV ('-' for stdout)");
  filter_cmd->add_option("--trace", trace_out, "also write the trace CSV");

  CLI::App* iterate_cmd = app.add_subcommand(
      "iterate", "drive the covariance iteration to a fixed point");
  add_model(iterate_cmd);
  iterate_cmd->add_option("--c", c, "tolerance budget per step (0 = "
                                    "risk-neutral)")
      ->default_val(0.0);
  iterate_cmd->add_option("--p0", p0_spec,
                          "initial covariance: identity | scaled:<a> | "
                          "file:<path> (default: model P0)");
  iterate_cmd->add_option("--steps", max_steps, "maximum steps")
      ->default_val(10000);
  iterate_cmd->add_option("--dist-tol", dist_tol,
                          "Thompson-distance stop tolerance")
      ->default_val(1e-10);
  iterate_cmd->add_option("--out", out, "trace CSV ('-' for stdout)");

  CLI::App* certify_cmd = app.add_subcommand(
      "certify", "compute the convergence certificate and c_max");
  add_model(certify_cmd);
  certify_cmd->add_option("--N", N, "block length (>= n)")->required();
  certify_cmd->add_option("--q", q, "ramp length (default: auto)")
      ->check(CLI::NonNegativeNumber);
  std::optional<double> certify_c;
  certify_cmd->add_option("--c", certify_c,
                          "tolerance to check against c_max");
  certify_cmd->add_option("--out", out, "certificate JSON ('-' for stdout)");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "multi-start convergence check against a certificate");
  add_model(verify_cmd);
  verify_cmd->add_option("--N", N, "block length (>= n)")->required();
  verify_cmd->add_option("--q", q, "ramp length (default: auto)")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--c", c, "tolerance budget")->required();
  verify_cmd->add_option("--trials", trials, "number of initial conditions")
      ->default_val(5);
  verify_cmd->add_option("--seed", seed, "seed for the random initial "
                                         "covariances")
      ->default_val(20240901);
  verify_cmd->add_option("--steps", max_steps, "maximum steps per trial")
      ->default_val(10000);
  verify_cmd->add_option("--dist-tol", dist_tol,
                         "Thompson-distance stop tolerance")
      ->default_val(1e-10);

  CLI::App* sweep_omega = app.add_subcommand(
      "sweep-omega",
      "CSV of min eigenvalue of the distorted Gramian over a phi grid");
  add_model(sweep_omega);
  sweep_omega->add_option("--N", N, "block length (>= n)")->required();
  sweep_omega->add_option("--grid", grid_text, "grid <lo,hi,points>")
      ->default_val("0,8e-3,200");
  sweep_omega->add_option("--out", out, "output CSV ('-' for stdout)");

  CLI::App* sweep_gamma = app.add_subcommand(
      "sweep-gamma",
      "CSV of the tolerance budget over a theta grid, one column per ramp "
      "length");
  add_model(sweep_gamma);
  sweep_gamma->add_option("--q", q_list,
                          "ramp lengths (repeatable; default 10 20 35)");
  sweep_gamma->add_option("--grid", grid_text, "grid <lo,hi,points>")
      ->default_val("0,2e-3,200");
  sweep_gamma->add_option("--out", out, "output CSV ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitBadArguments;
  }

  try {
    if (validate->parsed()) {
      return run_validate(model_path);
    }
    if (simulate_cmd->parsed()) {
      return run_simulate(model_path, steps, seed, out);
    }
    if (filter_cmd->parsed()) {
      return run_filter_cmd(model_path, obs_path, c, p0_spec, out, trace_out);
    }
    if (iterate_cmd->parsed()) {
      return run_iterate(model_path, c, p0_spec, max_steps, dist_tol, out);
    }
    if (certify_cmd->parsed()) {
      return run_certify(model_path, N,
                         q >= 0 ? std::optional<int>(q) : std::nullopt,
                         certify_c, out);
    }
    if (verify_cmd->parsed()) {
      return run_verify(model_path, N,
                        q >= 0 ? std::optional<int>(q) : std::nullopt, c,
                        trials, seed, max_steps, dist_tol);
    }
    if (sweep_omega->parsed()) {
      return run_sweep_omega(model_path, N, parse_grid(grid_text), out);
    }
    if (sweep_gamma->parsed()) {
      return run_sweep_gamma(model_path, q_list, parse_grid(grid_text), out);
    }
  } catch (const ValidationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailed;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArguments;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const CertificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCertificationFailed;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArguments;
  }
  return kExitBadArguments;
}
