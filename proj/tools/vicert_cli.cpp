// Command-line workbench: seeded instance generation, exact solves,
// stability certificates, instrumented value-iteration traces, and
// machine-checked convergence claims.
//
// Exit codes: 0 all applicable claims pass, 1 claim violation,
// 2 input/config error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "vicert/vicert.hpp"

namespace {

using vicert::ExperimentConfig;
using vicert::Json;

/// "auto" or a number; resolved against gamma later.
std::optional<double> parse_epsilon(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw vicert::Error("--epsilon expects a number or 'auto', got '" + text +
                        "'");
  }
}

void print_clause_lines(const vicert::InvariantReport& report,
                        std::ostream& out) {
  for (const vicert::ClauseResult* clause : report.clauses()) {
    out << "  " << clause->name << ": ";
    if (!clause->applicable) {
      out << "not applicable\n";
      continue;
    }
    out << (clause->passed ? "pass" : "FAIL");
    if (clause->worst_k >= 0) {
      out << " (worst slack " << vicert::format_double(clause->worst_slack)
          << " at k=" << clause->worst_k << ")";
    }
    out << "\n";
  }
}

int report_outcome(const vicert::InvariantReport& report) {
  print_clause_lines(report, std::cout);
  if (!report.all_passed()) {
    for (const vicert::ClauseResult* clause : report.clauses()) {
      if (!clause->ok()) {
        std::cerr << "claim violation: " << clause->name << " at k="
                  << clause->worst_k << " slack "
                  << vicert::format_double(clause->worst_slack) << "\n";
      }
    }
    return 1;
  }
  return 0;
}

struct CommonFlags {
  std::uint64_t seed = 0;
  int num_states = 5;
  int num_actions = 3;
  double gamma = 0.9;
  std::string epsilon = "auto";
  std::string w_mode = "ones";
  int num_iters = 200;
  std::string q0_mode = "orthant";
  std::string q0_file;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"value-iteration certification workbench"};
  app.require_subcommand(1);

  // --- gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a seeded random instance");
  CommonFlags gen_flags;
  std::string gen_out = "mdp.json";
  gen->add_option("--seed", gen_flags.seed, "RNG seed");
  gen->add_option("--num-states", gen_flags.num_states, "number of states");
  gen->add_option("--num-actions", gen_flags.num_actions, "number of actions");
  gen->add_option("--gamma", gen_flags.gamma, "discount factor in [0,1)");
  gen->add_option("--out", gen_out, "output path for mdp.json");

  // --- solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "compute the optimal Q-function");
  std::string solve_mdp, solve_out = "qstar.json";
  solve->add_option("--mdp", solve_mdp, "input mdp.json")->required();
  solve->add_option("--out", solve_out, "output path for qstar.json");

  // --- certify ---------------------------------------------------------------
  auto* certify =
      app.add_subcommand("certify", "build the stability certificate (M, v)");
  std::string cert_mdp, cert_qstar, cert_out = "certificate.json";
  CommonFlags cert_flags;
  certify->add_option("--mdp", cert_mdp, "input mdp.json")->required();
  certify->add_option("--qstar", cert_qstar,
                      "optional qstar.json (solved if omitted)");
  certify->add_option("--epsilon", cert_flags.epsilon,
                      "margin epsilon, or 'auto' for (1-gamma)/2");
  certify->add_option("--w-mode", cert_flags.w_mode,
                      "ones | random-positive");
  certify->add_option("--seed", cert_flags.seed, "seed for random w draws");
  certify->add_option("--out", cert_out, "output path for certificate.json");

  // --- run -------------------------------------------------------------------
  auto* run = app.add_subcommand(
      "run", "generate, solve, certify, trace and verify in one pass");
  CommonFlags run_flags;
  std::string run_out_dir, run_mdp_file, run_halfplane;
  int run_halfplane_draws = 0;
  bool run_trace_json = false, run_trace_vectors = false;
  run->add_option("--seed", run_flags.seed, "RNG seed");
  run->add_option("--num-states", run_flags.num_states, "number of states");
  run->add_option("--num-actions", run_flags.num_actions, "number of actions");
  run->add_option("--gamma", run_flags.gamma, "discount factor in [0,1)");
  run->add_option("--epsilon", run_flags.epsilon,
                  "margin epsilon, or 'auto' for (1-gamma)/2");
  run->add_option("--w-mode", run_flags.w_mode, "ones | random-positive");
  run->add_option("--num-iters", run_flags.num_iters, "iteration count K");
  run->add_option("--q0", run_flags.q0_mode,
                  "orthant | random | zero | custom-file");
  run->add_option("--q0-file", run_flags.q0_file,
                  "q0 values file for --q0 custom-file");
  run->add_option("--mdp-file", run_mdp_file,
                  "load this instance instead of generating one");
  run->add_option("--out-dir", run_out_dir, "artifact directory")->required();
  run->add_option("--halfplane", run_halfplane,
                  "also write half-plane CSV (path relative to out-dir)");
  run->add_option("--halfplane-draws", run_halfplane_draws,
                  "extra random-w certificates in the half-plane CSV");
  run->add_flag("--trace-json", run_trace_json, "also write trace.json");
  run->add_flag("--trace-vectors", run_trace_vectors,
                "include full iterate vectors in trace.json");

  // --- verify ------------------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify", "check every claim for an instance loaded from files");
  CommonFlags verify_flags;
  std::string verify_mdp, verify_qstar, verify_cert;
  std::string verify_report, verify_trace;
  verify->add_option("--mdp", verify_mdp, "input mdp.json")->required();
  verify->add_option("--qstar", verify_qstar,
                     "optional qstar.json (solved if omitted)");
  verify->add_option("--cert", verify_cert,
                     "optional certificate.json (built if omitted)");
  verify->add_option("--epsilon", verify_flags.epsilon,
                     "margin epsilon, or 'auto' for (1-gamma)/2");
  verify->add_option("--w-mode", verify_flags.w_mode, "ones | random-positive");
  verify->add_option("--seed", verify_flags.seed,
                     "seed for random q0/w draws");
  verify->add_option("--num-iters", verify_flags.num_iters,
                     "iteration count K");
  verify->add_option("--q0", verify_flags.q0_mode,
                     "orthant | random | zero | custom-file");
  verify->add_option("--q0-file", verify_flags.q0_file,
                     "q0 values file for --q0 custom-file");
  verify->add_option("--report", verify_report, "write report.json here");
  verify->add_option("--trace", verify_trace, "write trace.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const vicert::Mdp mdp =
          vicert::generate_mdp(gen_flags.seed, gen_flags.num_states,
                               gen_flags.num_actions, gen_flags.gamma);
      vicert::write_mdp_json(mdp, gen_out);
      std::cout << "wrote " << gen_out << " (" << mdp.num_states
                << " states, " << mdp.num_actions << " actions, gamma "
                << vicert::format_double(mdp.gamma) << ")\n";
      return 0;
    }

    if (solve->parsed()) {
      const vicert::Mdp mdp = vicert::read_mdp_json(solve_mdp);
      const vicert::QVector qstar = vicert::solve_qstar_policy_iteration(mdp);
      const double residual = vicert::bellman_residual(qstar, mdp);
      vicert::write_qstar_json(qstar, mdp, residual, solve_out);
      std::cout << "wrote " << solve_out << " (Bellman residual "
                << vicert::format_double(residual) << ")\n";
      return 0;
    }

    if (certify->parsed()) {
      const vicert::Mdp mdp = vicert::read_mdp_json(cert_mdp);
      const vicert::QVector qstar =
          cert_qstar.empty() ? vicert::solve_qstar_policy_iteration(mdp)
                             : vicert::read_qvector_json(cert_qstar, mdp);
      const auto epsilon = parse_epsilon(cert_flags.epsilon);
      const double eps =
          epsilon ? *epsilon : vicert::default_epsilon(mdp.gamma);
      vicert::SeededRng rng(cert_flags.seed);
      const Eigen::VectorXd w =
          vicert::parse_w_mode(cert_flags.w_mode) == vicert::WMode::kOnes
              ? Eigen::VectorXd::Ones(mdp.dim()).eval()
              : vicert::random_positive_vector(rng, mdp.dim());
      const vicert::LyapunovCertificate cert =
          vicert::make_certificate(mdp, qstar, eps, w);
      vicert::write_certificate_json(cert, cert_out);
      std::cout << "wrote " << cert_out << " (epsilon "
                << vicert::format_double(eps) << ", lambda_max "
                << vicert::format_double(cert.diagnostics.lambda_max)
                << ", series depth " << cert.diagnostics.series_depth << ")\n";
      return 0;
    }

    if (run->parsed()) {
      ExperimentConfig config;
      config.seed = run_flags.seed;
      config.num_states = run_flags.num_states;
      config.num_actions = run_flags.num_actions;
      config.gamma = run_flags.gamma;
      config.epsilon = parse_epsilon(run_flags.epsilon);
      config.w_mode = vicert::parse_w_mode(run_flags.w_mode);
      config.num_iters = run_flags.num_iters;
      config.q0_mode = vicert::parse_q0_mode(run_flags.q0_mode);
      config.q0_file = run_flags.q0_file;
      config.mdp_file = run_mdp_file;
      config.out_dir = run_out_dir;
      config.halfplane_file = run_halfplane;
      config.halfplane_draws = run_halfplane_draws;
      config.write_trace_json = run_trace_json;
      config.trace_vectors = run_trace_vectors;
      const vicert::ExperimentResult result = vicert::run_experiment(config);
      std::cout << "artifacts in " << run_out_dir << "\n";
      return report_outcome(result.report);
    }

    if (verify->parsed()) {
      const vicert::Mdp mdp = vicert::read_mdp_json(verify_mdp);
      const vicert::QVector qstar =
          verify_qstar.empty() ? vicert::solve_qstar_policy_iteration(mdp)
                               : vicert::read_qvector_json(verify_qstar, mdp);
      vicert::SeededRng rng(verify_flags.seed);

      vicert::QVector q0 = vicert::QVector::zero(mdp);
      switch (vicert::parse_q0_mode(verify_flags.q0_mode)) {
        case vicert::Q0Mode::kOrthant: q0 = vicert::orthant_start(mdp); break;
        case vicert::Q0Mode::kRandom: q0 = vicert::random_q0(rng, mdp); break;
        case vicert::Q0Mode::kZero: break;
        case vicert::Q0Mode::kCustomFile:
          if (verify_flags.q0_file.empty()) {
            throw vicert::Error("--q0 custom-file needs --q0-file");
          }
          q0 = vicert::read_qvector_json(verify_flags.q0_file, mdp);
          break;
      }

      vicert::LyapunovCertificate cert;
      if (verify_cert.empty()) {
        const auto epsilon = parse_epsilon(verify_flags.epsilon);
        const double eps =
            epsilon ? *epsilon : vicert::default_epsilon(mdp.gamma);
        const Eigen::VectorXd w =
            vicert::parse_w_mode(verify_flags.w_mode) == vicert::WMode::kOnes
                ? Eigen::VectorXd::Ones(mdp.dim()).eval()
                : vicert::random_positive_vector(rng, mdp.dim());
        cert = vicert::make_certificate(mdp, qstar, eps, w);
      } else {
        cert = vicert::read_certificate_json(verify_cert);
        if (cert.m_matrix.rows() != mdp.dim()) {
          throw vicert::Error("certificate size does not match the model");
        }
      }

      vicert::QviTrace trace =
          vicert::run_qvi(mdp, q0, verify_flags.num_iters, qstar);
      vicert::attach_certificate_metrics(trace, cert);
      const vicert::InvariantReport report =
          vicert::check_invariants(trace, &cert);
      if (!verify_trace.empty()) vicert::write_trace_csv(trace, verify_trace);
      if (!verify_report.empty()) {
        Json doc = vicert::report_to_json(report);
        doc["generator"] = vicert::kGeneratorName;
        vicert::write_json_file(verify_report, doc);
      }
      return report_outcome(report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
