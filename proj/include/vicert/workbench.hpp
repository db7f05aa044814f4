#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vicert/engine.hpp"
#include "vicert/generate.hpp"
#include "vicert/io.hpp"

namespace vicert {

enum class WMode { kOnes, kRandomPositive };
enum class Q0Mode { kOrthant, kRandom, kZero, kCustomFile };

inline std::string to_string(WMode mode) {
  return mode == WMode::kOnes ? "ones" : "random-positive";
}

inline std::string to_string(Q0Mode mode) {
  switch (mode) {
    case Q0Mode::kOrthant: return "orthant";
    case Q0Mode::kRandom: return "random";
    case Q0Mode::kZero: return "zero";
    case Q0Mode::kCustomFile: return "custom-file";
  }
  return "orthant";
}

inline WMode parse_w_mode(const std::string& text) {
  if (text == "ones") return WMode::kOnes;
  if (text == "random-positive") return WMode::kRandomPositive;
  throw Error("unknown w mode '" + text + "' (ones | random-positive)");
}

inline Q0Mode parse_q0_mode(const std::string& text) {
  if (text == "orthant") return Q0Mode::kOrthant;
  if (text == "random") return Q0Mode::kRandom;
  if (text == "zero") return Q0Mode::kZero;
  if (text == "custom-file") return Q0Mode::kCustomFile;
  throw Error("unknown q0 mode '" + text +
              "' (orthant | random | zero | custom-file)");
}

/**
 * One experiment: generate (or load) an instance, solve it, certify it,
 * run the instrumented iteration, and check every claim.
 *
 * All randomness comes from a single seeded stream with fixed draw order:
 * transitions, rewards, q0 (random mode only), w (random-positive mode
 * only), then extra half-plane weight draws. Identical configs therefore
 * produce byte-identical artifacts.
 */
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int num_states = 5;
  int num_actions = 3;
  double gamma = 0.9;
  std::optional<double> epsilon;  // empty = auto: (1 - gamma)/2
  WMode w_mode = WMode::kOnes;
  int num_iters = 200;
  Q0Mode q0_mode = Q0Mode::kOrthant;
  std::string q0_file;             // q0_mode == kCustomFile
  std::string mdp_file;            // load instead of generate when set
  std::string out_dir;             // artifact directory (run_experiment)
  int halfplane_draws = 0;         // extra certificates for half-plane data
  std::string halfplane_file;      // empty = skip (relative to out_dir)
  bool trace_vectors = false;      // include iterates in trace.json
  bool write_trace_json = false;

  double resolved_epsilon() const {
    return epsilon ? *epsilon : default_epsilon(gamma);
  }
};

struct ExperimentResult {
  int exit_code = 0;  // 0 pass, 1 claim violation
  Mdp mdp;
  QVector qstar{};
  LyapunovCertificate certificate;
  std::vector<LyapunovCertificate> halfplane_certs;  // extra random-w draws
  QviTrace trace;
  InvariantReport report;
};

inline void validate_config(const ExperimentConfig& config) {
  if (config.num_states <= 0 || config.num_actions <= 0) {
    throw Error("config: state and action counts must be positive");
  }
  if (!(config.gamma >= 0.0 && config.gamma < 1.0)) {
    throw BadGamma("config: gamma must lie in [0,1)");
  }
  if (config.num_iters < 0) throw Error("config: num-iters must be >= 0");
  const double eps = config.resolved_epsilon();
  require_epsilon(config.gamma, eps, "config");
  if (config.q0_mode == Q0Mode::kCustomFile && config.q0_file.empty()) {
    throw Error("config: q0 mode custom-file needs a q0 file path");
  }
  if (config.halfplane_draws < 0) {
    throw Error("config: halfplane-draws must be >= 0");
  }
}

/// Config echo embedded in report.json. Output paths are deliberately
/// excluded so reruns into different directories stay byte-identical.
inline Json config_to_json(const ExperimentConfig& config) {
  Json doc;
  doc["seed"] = config.seed;
  doc["num_states"] = config.num_states;
  doc["num_actions"] = config.num_actions;
  doc["gamma"] = config.gamma;
  doc["epsilon"] = config.resolved_epsilon();
  doc["epsilon_mode"] = config.epsilon ? "fixed" : "auto";
  doc["w_mode"] = to_string(config.w_mode);
  doc["num_iters"] = config.num_iters;
  doc["q0_mode"] = to_string(config.q0_mode);
  doc["mdp_source"] = config.mdp_file.empty() ? "generated" : "file";
  doc["generator"] = kGeneratorName;
  return doc;
}

/// Runs the full pipeline in memory; does not touch the filesystem.
inline ExperimentResult run_experiment_in_memory(
    const ExperimentConfig& config) {
  validate_config(config);
  SeededRng rng(config.seed);

  ExperimentResult result;
  result.mdp = config.mdp_file.empty()
                   ? generate_mdp(rng, config.num_states, config.num_actions,
                                  config.gamma)
                   : read_mdp_json(config.mdp_file);
  const Mdp& mdp = result.mdp;

  result.qstar = solve_qstar_policy_iteration(mdp);

  QVector q0 = QVector::zero(mdp);
  switch (config.q0_mode) {
    case Q0Mode::kOrthant: q0 = orthant_start(mdp); break;
    case Q0Mode::kRandom: q0 = random_q0(rng, mdp); break;
    case Q0Mode::kZero: break;
    case Q0Mode::kCustomFile: q0 = read_qvector_json(config.q0_file, mdp); break;
  }

  const double eps = config.resolved_epsilon();
  const Eigen::VectorXd w =
      config.w_mode == WMode::kOnes
          ? Eigen::VectorXd::Ones(mdp.dim()).eval()
          : random_positive_vector(rng, mdp.dim());
  result.certificate = make_certificate(mdp, result.qstar, eps, w);
  for (int draw = 0; draw < config.halfplane_draws; ++draw) {
    result.halfplane_certs.push_back(make_certificate(
        mdp, result.qstar, eps, random_positive_vector(rng, mdp.dim())));
  }

  result.trace = run_qvi(mdp, q0, config.num_iters, result.qstar);
  attach_certificate_metrics(result.trace, result.certificate);
  result.report = check_invariants(result.trace, &result.certificate);
  result.exit_code = result.report.all_passed() ? 0 : 1;
  return result;
}

inline Json experiment_report_json(const ExperimentConfig& config,
                                   const ExperimentResult& result) {
  Json doc;
  doc["config"] = config_to_json(config);
  Json report = report_to_json(result.report);
  for (auto& [key, value] : report.items()) doc[key] = value;
  doc["certificate_diagnostics"] =
      certificate_to_json(result.certificate)["diagnostics"];
  return doc;
}

/**
 * Runs an experiment and writes mdp.json, qstar.json, certificate.json,
 * trace.csv and report.json (plus optional half-plane CSV and trace.json)
 * into config.out_dir. Returns exit code 0 when every applicable clause
 * passed, 1 otherwise; input problems throw.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.out_dir.empty()) throw Error("config: out-dir is required");
  ExperimentResult result = run_experiment_in_memory(config);

  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string());

  write_mdp_json(result.mdp, (dir / "mdp.json").string());
  write_qstar_json(result.qstar, result.mdp, result.trace.qstar_residual,
                   (dir / "qstar.json").string());
  write_certificate_json(result.certificate,
                         (dir / "certificate.json").string());
  write_trace_csv(result.trace, (dir / "trace.csv").string());
  write_json_file((dir / "report.json").string(),
                  experiment_report_json(config, result));
  if (config.write_trace_json) {
    write_json_file((dir / "trace.json").string(),
                    trace_to_json(result.trace, config.trace_vectors));
  }
  if (!config.halfplane_file.empty()) {
    std::vector<LyapunovCertificate> certs = {result.certificate};
    certs.insert(certs.end(), result.halfplane_certs.begin(),
                 result.halfplane_certs.end());
    write_text_file((dir / config.halfplane_file).string(),
                    emit_halfplane_data(result.trace, certs));
  }
  return result;
}

}  // namespace vicert
