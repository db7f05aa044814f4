// Walkthrough: solve a seeded instance, build both certificates, and watch
// every tracked quantity contract along the iteration.

#include <iostream>

#include "vicert/vicert.hpp"

int main() {
  using namespace vicert;

  const Mdp mdp = generate_mdp(/*seed=*/7, /*num_states=*/4,
                               /*num_actions=*/2, /*gamma=*/0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  std::cout << "instance: " << mdp.num_states << " states, "
            << mdp.num_actions << " actions, gamma " << mdp.gamma << "\n";
  std::cout << "||Q*||_inf = " << qstar.values.lpNorm<Eigen::Infinity>()
            << " (bound " << qstar_norm_bound(mdp) << ")\n";
  std::cout << "Bellman residual of Q*: " << bellman_residual(qstar, mdp)
            << "\n\n";

  const double epsilon = default_epsilon(mdp.gamma);
  const LyapunovCertificate cert = make_certificate(
      mdp, qstar, epsilon, Eigen::VectorXd::Ones(mdp.dim()));
  std::cout << "certificate with epsilon = " << epsilon << ":\n"
            << "  series depth        " << cert.diagnostics.series_depth << "\n"
            << "  equation residual   " << cert.diagnostics.lyapunov_residual
            << "\n"
            << "  lambda_min(M)       " << cert.diagnostics.lambda_min << "\n"
            << "  lambda_max(M)       " << cert.diagnostics.lambda_max
            << "  (bound " << cert.diagnostics.lambda_max_bound << ")\n"
            << "  ||v||_inf           "
            << cert.v_vector.lpNorm<Eigen::Infinity>() << "\n\n";

  QviTrace trace = run_qvi(mdp, orthant_start(mdp), 30, qstar);
  attach_certificate_metrics(trace, cert);
  std::cout << "k   ||Q_k-Q*||_inf   ||Q_k-Q*||_M     v'(Q_k-Q*)\n";
  for (int k = 0; k <= trace.num_steps(); k += 5) {
    const StepRecord& rec = trace.per_step[k];
    std::cout << k << "\t" << rec.inf_norm << "\t" << *rec.m_norm << "\t"
              << *rec.v_functional << "\n";
  }

  const InvariantReport report = check_invariants(trace, &cert);
  std::cout << "\nall claims pass: " << (report.all_passed() ? "yes" : "NO")
            << "\n";
  return report.all_passed() ? 0 : 1;
}
