#pragma once

#include <charconv>
#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vicert/engine.hpp"
#include "vicert/lyapunov.hpp"

namespace vicert {

using Json = nlohmann::ordered_json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
  std::array<char, 32> buffer;
  const auto result =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

inline std::string policy_hash_hex(std::uint64_t hash) {
  std::array<char, 17> buffer{};
  for (int i = 15; i >= 0; --i) {
    buffer[i] = "0123456789abcdef"[hash & 0xf];
    hash >>= 4;
  }
  return std::string(buffer.data(), 16);
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse " + path + ": " + e.what());
  }
  return doc;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

// --- model ----------------------------------------------------------------

inline Json mdp_to_json(const Mdp& mdp) {
  Json doc;
  doc["num_states"] = mdp.num_states;
  doc["num_actions"] = mdp.num_actions;
  doc["gamma"] = mdp.gamma;
  Json transitions = Json::array();
  for (int a = 0; a < mdp.num_actions; ++a) {
    Json per_action = Json::array();
    for (int s = 0; s < mdp.num_states; ++s) {
      Json row = Json::array();
      for (int t = 0; t < mdp.num_states; ++t) {
        row.push_back(mdp.transitions(a * mdp.num_states + s, t));
      }
      per_action.push_back(std::move(row));
    }
    transitions.push_back(std::move(per_action));
  }
  doc["transitions"] = std::move(transitions);
  Json rewards = Json::array();
  for (int i = 0; i < mdp.dim(); ++i) rewards.push_back(mdp.rewards[i]);
  doc["rewards"] = std::move(rewards);
  return doc;
}

/**
 * Parses a model document. `transitions` is [action][from][to]. `rewards`
 * is either a flat |S||A| array of expected rewards (action-major) or a
 * full [action][from][to] tensor, which is contracted against the
 * transition rows at load time; tensor entries must individually respect
 * the unit bound.
 */
inline Mdp mdp_from_json(const Json& doc) {
  Mdp mdp;
  try {
    mdp.num_states = doc.at("num_states").get<int>();
    mdp.num_actions = doc.at("num_actions").get<int>();
    mdp.gamma = doc.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model document: ") + e.what());
  }
  if (mdp.num_states <= 0 || mdp.num_actions <= 0) {
    throw Error("model document: state and action counts must be positive");
  }
  const auto& transitions = doc.at("transitions");
  if (!transitions.is_array() ||
      static_cast<int>(transitions.size()) != mdp.num_actions) {
    throw Error("model document: transitions must list one block per action");
  }
  mdp.transitions.resize(mdp.dim(), mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a) {
    const auto& block = transitions.at(a);
    if (static_cast<int>(block.size()) != mdp.num_states) {
      throw Error("model document: transition block has wrong row count");
    }
    for (int s = 0; s < mdp.num_states; ++s) {
      const auto& row = block.at(s);
      if (static_cast<int>(row.size()) != mdp.num_states) {
        throw Error("model document: transition row has wrong length");
      }
      for (int t = 0; t < mdp.num_states; ++t) {
        mdp.transitions(a * mdp.num_states + s, t) = row.at(t).get<double>();
      }
    }
  }
  const auto& rewards = doc.at("rewards");
  if (!rewards.is_array() || rewards.empty()) {
    throw Error("model document: rewards missing");
  }
  mdp.rewards.resize(mdp.dim());
  if (rewards.at(0).is_array()) {
    // Per-(s,a,s') tensor: validate the raw entries, then contract.
    if (static_cast<int>(rewards.size()) != mdp.num_actions) {
      throw Error("model document: reward tensor must list one block per action");
    }
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto& block = rewards.at(a);
      if (static_cast<int>(block.size()) != mdp.num_states) {
        throw Error("model document: reward tensor block has wrong row count");
      }
      for (int s = 0; s < mdp.num_states; ++s) {
        const auto& row = block.at(s);
        if (static_cast<int>(row.size()) != mdp.num_states) {
          throw Error("model document: reward tensor row has wrong length");
        }
        double expected = 0.0;
        for (int t = 0; t < mdp.num_states; ++t) {
          const double raw = row.at(t).get<double>();
          if (!(std::abs(raw) <= 1.0)) {
            throw RewardOutOfBounds(
                "model document: raw reward " + format_double(raw) + " at " +
                describe_pair(a * mdp.num_states + s, mdp.num_states) +
                " exceeds unit bound");
          }
          expected += mdp.transitions(a * mdp.num_states + s, t) * raw;
        }
        mdp.rewards[a * mdp.num_states + s] = expected;
      }
    }
  } else {
    if (static_cast<int>(rewards.size()) != mdp.dim()) {
      throw Error("model document: rewards must have length |S||A|");
    }
    for (int i = 0; i < mdp.dim(); ++i) {
      mdp.rewards[i] = rewards.at(i).get<double>();
    }
  }
  return validate(std::move(mdp));
}

inline void write_mdp_json(const Mdp& mdp, const std::string& path) {
  write_json_file(path, mdp_to_json(mdp));
}

inline Mdp read_mdp_json(const std::string& path) {
  return mdp_from_json(read_json_file(path));
}

// --- Q vectors --------------------------------------------------------------

inline Json qstar_to_json(const QVector& qstar, const Mdp& mdp,
                          double residual) {
  Json doc;
  doc["num_states"] = mdp.num_states;
  doc["num_actions"] = mdp.num_actions;
  doc["gamma"] = mdp.gamma;
  doc["method"] = "policy-iteration";
  doc["bellman_residual"] = residual;
  Json values = Json::array();
  for (int i = 0; i < mdp.dim(); ++i) values.push_back(qstar.values[i]);
  doc["values"] = std::move(values);
  return doc;
}

inline void write_qstar_json(const QVector& qstar, const Mdp& mdp,
                             double residual, const std::string& path) {
  write_json_file(path, qstar_to_json(qstar, mdp, residual));
}

/// Accepts either {"values": [...]} or a bare array.
inline QVector read_qvector_json(const std::string& path, const Mdp& mdp) {
  const Json doc = read_json_file(path);
  const Json& values = doc.is_array() ? doc : doc.at("values");
  if (static_cast<int>(values.size()) != mdp.dim()) {
    throw Error(path + ": expected " + std::to_string(mdp.dim()) + " values");
  }
  QVector q = QVector::zero(mdp);
  for (int i = 0; i < mdp.dim(); ++i) q.values[i] = values.at(i).get<double>();
  return q;
}

// --- certificates -----------------------------------------------------------

inline Json certificate_to_json(const LyapunovCertificate& cert) {
  Json doc;
  doc["gamma"] = cert.gamma;
  doc["epsilon"] = cert.epsilon;
  Json w = Json::array();
  for (int i = 0; i < cert.w_vector.size(); ++i) w.push_back(cert.w_vector[i]);
  doc["w"] = std::move(w);
  Json v = Json::array();
  for (int i = 0; i < cert.v_vector.size(); ++i) v.push_back(cert.v_vector[i]);
  doc["v"] = std::move(v);
  doc["m_size"] = static_cast<int>(cert.m_matrix.rows());
  Json m = Json::array();  // row-major
  for (int r = 0; r < cert.m_matrix.rows(); ++r) {
    for (int c = 0; c < cert.m_matrix.cols(); ++c) {
      m.push_back(cert.m_matrix(r, c));
    }
  }
  doc["m"] = std::move(m);
  const CertificateDiagnostics& diag = cert.diagnostics;
  doc["diagnostics"] = Json{{"lyapunov_residual", diag.lyapunov_residual},
                            {"series_depth", diag.series_depth},
                            {"lambda_min", diag.lambda_min},
                            {"lambda_max", diag.lambda_max},
                            {"lambda_max_bound", diag.lambda_max_bound},
                            {"min_m_entry", diag.min_m_entry},
                            {"v_identity_residual", diag.v_identity_residual},
                            {"loose_v_bound", diag.loose_v_bound},
                            {"tight_v_bound", diag.tight_v_bound},
                            {"loose_v_bound_holds", diag.loose_v_bound_holds},
                            {"tight_v_bound_holds", diag.tight_v_bound_holds}};
  return doc;
}

inline void write_certificate_json(const LyapunovCertificate& cert,
                                   const std::string& path) {
  write_json_file(path, certificate_to_json(cert));
}

inline LyapunovCertificate read_certificate_json(const std::string& path) {
  const Json doc = read_json_file(path);
  LyapunovCertificate cert;
  try {
    cert.gamma = doc.at("gamma").get<double>();
    cert.epsilon = doc.at("epsilon").get<double>();
    const int n = doc.at("m_size").get<int>();
    if (n <= 0) throw Error(path + ": bad certificate size");
    const auto& w = doc.at("w");
    const auto& v = doc.at("v");
    const auto& m = doc.at("m");
    if (static_cast<int>(w.size()) != n || static_cast<int>(v.size()) != n ||
        static_cast<int>(m.size()) != n * n) {
      throw Error(path + ": certificate field sizes disagree");
    }
    cert.w_vector.resize(n);
    cert.v_vector.resize(n);
    cert.m_matrix.resize(n, n);
    for (int i = 0; i < n; ++i) cert.w_vector[i] = w.at(i).get<double>();
    for (int i = 0; i < n; ++i) cert.v_vector[i] = v.at(i).get<double>();
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        cert.m_matrix(r, c) = m.at(r * n + c).get<double>();
      }
    }
    const auto& diag = doc.at("diagnostics");
    cert.diagnostics.lyapunov_residual = diag.at("lyapunov_residual").get<double>();
    cert.diagnostics.series_depth = diag.at("series_depth").get<int>();
    cert.diagnostics.lambda_min = diag.at("lambda_min").get<double>();
    cert.diagnostics.lambda_max = diag.at("lambda_max").get<double>();
    cert.diagnostics.lambda_max_bound = diag.at("lambda_max_bound").get<double>();
    cert.diagnostics.min_m_entry = diag.at("min_m_entry").get<double>();
    cert.diagnostics.v_identity_residual =
        diag.at("v_identity_residual").get<double>();
    cert.diagnostics.loose_v_bound = diag.at("loose_v_bound").get<double>();
    cert.diagnostics.tight_v_bound = diag.at("tight_v_bound").get<double>();
    cert.diagnostics.loose_v_bound_holds =
        diag.at("loose_v_bound_holds").get<bool>();
    cert.diagnostics.tight_v_bound_holds =
        diag.at("tight_v_bound_holds").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return cert;
}

// --- traces -----------------------------------------------------------------

/// Fixed column set; certificate-dependent fields stay empty when absent,
/// never zero-filled.
inline std::string trace_to_csv(const QviTrace& trace) {
  std::ostringstream out;
  out << "k,inf_norm,inf_ratio,m_norm,m_ratio,v_functional,v_bound,"
         "min_orthant_slack,policy_hash\n";
  auto optional_field = [](const std::optional<double>& value) {
    return value ? format_double(*value) : std::string();
  };
  for (std::size_t k = 0; k < trace.per_step.size(); ++k) {
    const StepRecord& rec = trace.per_step[k];
    out << rec.k << ',' << format_double(rec.inf_norm) << ',';
    if (k > 0 && trace.per_step[k - 1].inf_norm != 0.0) {
      out << format_double(rec.inf_norm / trace.per_step[k - 1].inf_norm);
    }
    out << ',' << optional_field(rec.m_norm) << ',';
    if (k > 0 && rec.m_norm && trace.per_step[k - 1].m_norm &&
        *trace.per_step[k - 1].m_norm != 0.0) {
      out << format_double(*rec.m_norm / *trace.per_step[k - 1].m_norm);
    }
    out << ',' << optional_field(rec.v_functional) << ','
        << optional_field(rec.v_bound) << ','
        << format_double(rec.orthant_slack) << ','
        << policy_hash_hex(rec.greedy_hash) << '\n';
  }
  return out.str();
}

inline void write_trace_csv(const QviTrace& trace, const std::string& path) {
  write_text_file(path, trace_to_csv(trace));
}

inline Json trace_to_json(const QviTrace& trace, bool include_vectors) {
  Json doc;
  doc["num_states"] = trace.mdp.num_states;
  doc["num_actions"] = trace.mdp.num_actions;
  doc["gamma"] = trace.mdp.gamma;
  doc["num_iters"] = trace.num_steps();
  doc["qstar_residual"] = trace.qstar_residual;
  doc["q0_below_qstar"] = trace.q0_below_qstar;
  Json steps = Json::array();
  auto optional_field = [](const std::optional<double>& value) {
    return value ? Json(*value) : Json(nullptr);
  };
  for (const StepRecord& rec : trace.per_step) {
    Json step;
    step["k"] = rec.k;
    step["inf_norm"] = rec.inf_norm;
    step["min_orthant_slack"] = rec.orthant_slack;
    step["policy_hash"] = policy_hash_hex(rec.greedy_hash);
    step["sandwich_lower_slack"] = optional_field(rec.sandwich_lower_slack);
    step["sandwich_upper_slack"] = optional_field(rec.sandwich_upper_slack);
    step["m_norm"] = optional_field(rec.m_norm);
    step["v_functional"] = optional_field(rec.v_functional);
    step["v_bound"] = optional_field(rec.v_bound);
    step["sharp_lower_slack"] = optional_field(rec.sharp_lower_slack);
    steps.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps);
  if (include_vectors) {
    Json qstar = Json::array();
    for (int i = 0; i < trace.qstar.values.size(); ++i) {
      qstar.push_back(trace.qstar.values[i]);
    }
    doc["qstar"] = std::move(qstar);
    Json iterates = Json::array();
    for (const QVector& q : trace.iterates) {
      Json values = Json::array();
      for (int i = 0; i < q.values.size(); ++i) values.push_back(q.values[i]);
      iterates.push_back(std::move(values));
    }
    doc["iterates"] = std::move(iterates);
  }
  return doc;
}

/**
 * Per-iteration linear-functional data behind the half-plane picture: for
 * each certificate, v^T (Q_k - Q*) next to its decay envelope
 * rho^k v^T (Q_0 - Q*). Rendering is left to external tooling.
 */
inline std::string emit_halfplane_data(
    const QviTrace& trace, const std::vector<LyapunovCertificate>& certs) {
  std::ostringstream out;
  out << 'k';
  for (std::size_t c = 0; c < certs.size(); ++c) {
    out << ",v_functional_" << (c + 1) << ",v_bound_" << (c + 1);
  }
  out << '\n';
  std::vector<double> rho_pow(certs.size(), 1.0);
  std::vector<double> v_delta0(certs.size());
  for (std::size_t c = 0; c < certs.size(); ++c) {
    v_delta0[c] = certs[c].v_vector.dot(trace.iterates.front().values -
                                        trace.qstar.values);
  }
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    const Eigen::VectorXd delta =
        trace.iterates[k].values - trace.qstar.values;
    out << k;
    for (std::size_t c = 0; c < certs.size(); ++c) {
      out << ',' << format_double(certs[c].v_vector.dot(delta)) << ','
          << format_double(rho_pow[c] * v_delta0[c]);
      rho_pow[c] *= certs[c].rho();
    }
    out << '\n';
  }
  return out.str();
}

// --- reports ----------------------------------------------------------------

inline Json clause_to_json(const ClauseResult& clause) {
  Json doc;
  doc["name"] = clause.name;
  doc["applicable"] = clause.applicable;
  if (clause.applicable) {
    doc["passed"] = clause.passed;
    if (clause.worst_k >= 0) {
      doc["worst_slack"] = clause.worst_slack;
      doc["worst_k"] = clause.worst_k;
    } else {
      doc["worst_slack"] = nullptr;
      doc["worst_k"] = nullptr;
    }
  }
  return doc;
}

inline Json report_to_json(const InvariantReport& report) {
  Json doc;
  Json clauses = Json::array();
  for (const ClauseResult* clause : report.clauses()) {
    clauses.push_back(clause_to_json(*clause));
  }
  doc["clauses"] = std::move(clauses);
  doc["q0_below_qstar"] = report.q0_below_qstar;
  doc["qstar_residual"] = report.qstar_residual;
  doc["sharp_linear_slack"] = report.sharp_linear_slack
                                  ? Json(*report.sharp_linear_slack)
                                  : Json(nullptr);
  doc["passed"] = report.all_passed();
  return doc;
}

}  // namespace vicert
