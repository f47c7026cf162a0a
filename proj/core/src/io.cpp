#include "robustkf/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace robustkf {

namespace {

using ordered_json = nlohmann::ordered_json;

Eigen::MatrixXd matrix_from_json(const ordered_json& node,
                                 const std::string& name) {
  if (!node.is_array() || node.empty()) {
    throw StructuralError("model file: \"" + name +
                          "\" must be a non-empty 2-D array");
  }
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  Eigen::MatrixXd mat;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = node[i];
    if (!row.is_array() || row.empty()) {
      throw StructuralError("model file: \"" + name +
                            "\" rows must be non-empty arrays");
    }
    if (i == 0) {
      cols = row.size();
      mat.resize(static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw StructuralError("model file: \"" + name + "\" is ragged");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) {
        throw StructuralError("model file: \"" + name +
                              "\" entries must be numbers");
      }
      const double value = row[j].get<double>();
      if (!std::isfinite(value)) {
        throw StructuralError("model file: \"" + name +
                              "\" entries must be finite");
      }
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
    }
  }
  return mat;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& mat) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      row.push_back(mat(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char ch : text) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void append_matrix(std::string& buffer, const Eigen::MatrixXd& mat) {
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      buffer += format_double(mat(i, j));
      buffer += ',';
    }
    buffer += ';';
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.16e", value);
  return buffer;
}

StateSpaceModel parse_model_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw StructuralError(std::string("model file: invalid JSON: ") +
                          e.what());
  }
  if (!doc.is_object()) {
    throw StructuralError("model file: top level must be an object");
  }
  for (const char* field : {"A", "B", "C", "D"}) {
    if (!doc.contains(field)) {
      throw StructuralError(std::string("model file: missing \"") + field +
                            "\"");
    }
  }
  Eigen::MatrixXd a = matrix_from_json(doc["A"], "A");
  Eigen::MatrixXd b = matrix_from_json(doc["B"], "B");
  Eigen::MatrixXd c = matrix_from_json(doc["C"], "C");
  Eigen::MatrixXd d = matrix_from_json(doc["D"], "D");
  std::optional<SpdMatrix> p0;
  if (doc.contains("P0")) {
    p0 = SpdMatrix(matrix_from_json(doc["P0"], "P0"));
  }
  return StateSpaceModel(std::move(a), std::move(b), std::move(c),
                         std::move(d), std::move(p0));
}

StateSpaceModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw StructuralError("model file: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model_json(buffer.str());
}

std::string model_hash(const StateSpaceModel& model) {
  std::string canonical;
  append_matrix(canonical, model.A());
  append_matrix(canonical, model.B());
  append_matrix(canonical, model.C());
  append_matrix(canonical, model.D());
  append_matrix(canonical, model.P0().matrix());
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a(canonical)));
  return buffer;
}

std::string certificate_to_json(const ConvergenceCertificate& certificate,
                                const StateSpaceModel& model) {
  ordered_json doc;
  doc["N"] = certificate.N;
  doc["q"] = certificate.q;
  doc["q_tilde"] = certificate.q_tilde;
  doc["phi_tilde"] = certificate.phi_tilde;
  doc["phi_N"] = certificate.phi;
  if (std::isfinite(certificate.c_max)) {
    doc["c_max"] = certificate.c_max;
  } else {
    doc["c_max"] = "infinity";
  }
  doc["contraction_coefficient_at_phi"] =
      certificate.contraction_coefficient_at_phi;
  if (certificate.user_c.has_value()) {
    doc["user_c"] = *certificate.user_c;
  }
  doc["verdict"] = to_string(certificate.verdict);
  doc["P_bar_q"] = matrix_to_json(certificate.ramp_bound.matrix());
  ordered_json tolerances;
  tolerances["definiteness_tol"] = kDefinitenessTol;
  tolerances["rank_tol"] = kRankTol;
  tolerances["theta_solve_tol"] = kThetaSolveTol;
  tolerances["phi_bisection_rel_width"] = 1e-9;
  ordered_json provenance;
  provenance["model_hash"] = model_hash(model);
  provenance["N"] = certificate.N;
  provenance["q"] = certificate.q;
  provenance["tolerances"] = std::move(tolerances);
  doc["provenance"] = std::move(provenance);
  return doc.dump(2) + "\n";
}

void write_trace_csv(std::ostream& out, const FilterTrace& trace) {
  const bool with_estimates =
      !trace.steps.empty() && trace.steps.front().xhat.has_value();
  const Eigen::Index n =
      trace.steps.empty() ? 0 : trace.steps.front().covariance.order();
  out << "step,theta,dT_step";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << ",eig" << (i + 1);
  }
  if (with_estimates) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ",xhat" << (i + 1);
    }
  }
  out << "\n";
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const TraceStep& step = trace.steps[t];
    const double theta = step.theta ? step.theta->theta() : 0.0;
    out << t << ',' << format_double(theta) << ','
        << format_double(step.step_distance);
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ',' << format_double(step.covariance.eigenvalues()(i));
    }
    if (with_estimates) {
      for (Eigen::Index i = 0; i < n; ++i) {
        out << ',' << format_double(step.xhat.value()(i));
      }
    }
    out << "\n";
  }
}

void write_simulation_csv(std::ostream& out, const Simulation& simulation) {
  const Eigen::Index n = simulation.states.cols();
  const Eigen::Index p = simulation.observations.cols();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << ",x" << (i + 1);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    out << ",y" << (i + 1);
  }
  out << "\n";
  for (Eigen::Index t = 0; t < simulation.states.rows(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ',' << format_double(simulation.states(t, i));
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      out << ',' << format_double(simulation.observations(t, i));
    }
    out << "\n";
  }
}

void write_estimates_csv(std::ostream& out, const FilterTrace& trace) {
  if (trace.steps.empty() || !trace.steps.front().xhat.has_value()) {
    throw StructuralError("write_estimates_csv: trace carries no estimates");
  }
  const Eigen::Index n = trace.steps.front().xhat->size();
  out << "step";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << ",xhat" << (i + 1);
  }
  out << "\n";
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    out << t;
    const Eigen::VectorXd& xhat = trace.steps[t].xhat.value();
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ',' << format_double(xhat(i));
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_observations_csv(std::istream& in, Eigen::Index p) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    bool numeric = true;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t consumed = 0;
        const double value = std::stod(field, &consumed);
        while (consumed < field.size() &&
               (field[consumed] == ' ' || field[consumed] == '\r')) {
          ++consumed;
        }
        if (consumed != field.size()) {
          numeric = false;
          break;
        }
        row.push_back(value);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_line) {
        first_line = false;  // header row
        continue;
      }
      throw StructuralError("observations: non-numeric row: " + line);
    }
    first_line = false;
    if (static_cast<Eigen::Index>(row.size()) != p) {
      throw StructuralError("observations: expected " + std::to_string(p) +
                            " columns");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd observations(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      observations(static_cast<Eigen::Index>(i), j) =
          rows[i][static_cast<std::size_t>(j)];
    }
  }
  return observations;
}

}  // namespace robustkf
