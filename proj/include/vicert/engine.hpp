#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vicert/lyapunov.hpp"
#include "vicert/switching.hpp"

namespace vicert {

/// Required Bellman residual of a computed optimum.
inline constexpr double kQstarResidualTol = 1e-10;
/// Cap on exhaustively enumerable policies.
inline constexpr double kBruteForceCap = 1e6;

/// Exact policy evaluation: solves (I - gamma P Pi_pi) q = R with one
/// iterative-refinement pass. Throws SingularEvaluation if the solve does
/// not reach tolerance (impossible for a validated model with gamma < 1).
inline QVector policy_evaluation(const DeterministicPolicy& pi,
                                 const Mdp& mdp) {
  const int n = mdp.dim();
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(n, n) - system_matrix_for_policy(pi, mdp);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
  Eigen::VectorXd q = lu.solve(mdp.rewards);
  q += lu.solve(mdp.rewards - lhs * q);
  const double residual = (mdp.rewards - lhs * q).lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + qstar_norm_bound(mdp);
  if (!q.allFinite() || residual > 1e-9 * scale) {
    throw SingularEvaluation("policy_evaluation: solve residual " +
                             std::to_string(residual));
  }
  return {std::move(q)};
}

/**
 * Ground-truth optimum by policy iteration: exact evaluation, greedy
 * improvement, stop when the policy repeats. Terminates after finitely
 * many policies and is independent of the fixed-point iteration it is
 * later used to judge. The result satisfies ||F Q* - Q*||_inf <= 1e-10.
 */
inline QVector solve_qstar_policy_iteration(const Mdp& mdp) {
  DeterministicPolicy pi{std::vector<int>(mdp.num_states, 0)};
  QVector q = policy_evaluation(pi, mdp);
  // Far more than the number of strict value improvements ever observed at
  // desk scale; a hit means the improvement step is broken.
  const int max_rounds = 100000;
  for (int round = 0; round < max_rounds; ++round) {
    DeterministicPolicy improved = greedy_policy(q, mdp);
    if (improved == pi) {
      const double residual = bellman_residual(q, mdp);
      if (residual > kQstarResidualTol) {
        throw Error("solve_qstar_policy_iteration: converged policy has "
                    "Bellman residual " +
                    std::to_string(residual));
      }
      return q;
    }
    pi = std::move(improved);
    q = policy_evaluation(pi, mdp);
  }
  throw Error("solve_qstar_policy_iteration: policy iteration failed to "
              "terminate");
}

/**
 * Oracle optimum by exhaustive policy enumeration: evaluates every
 * deterministic policy and returns the componentwise maximum of the
 * policy values, which equals the optimum for a discounted model. The
 * evaluation route deliberately differs from policy_evaluation: it solves
 * the |S|-dimensional state system (I - gamma P_pi) V = R_pi and expands
 * Q = R + gamma P V.
 */
inline QVector solve_qstar_bruteforce(const Mdp& mdp) {
  const double count =
      std::pow(static_cast<double>(mdp.num_actions), mdp.num_states);
  if (!(count <= kBruteForceCap)) {
    throw TooManyPolicies("solve_qstar_bruteforce: |A|^|S| = " +
                          std::to_string(count) + " exceeds cap");
  }
  const int ns = mdp.num_states;
  Eigen::VectorXd best =
      Eigen::VectorXd::Constant(mdp.dim(), -std::numeric_limits<double>::infinity());
  std::vector<int> actions(ns, 0);
  for (;;) {
    Eigen::MatrixXd chain(ns, ns);   // P(s'|s, pi(s))
    Eigen::VectorXd reward_pi(ns);   // R(s, pi(s))
    for (int s = 0; s < ns; ++s) {
      const int row = actions[s] * ns + s;
      chain.row(s) = mdp.transitions.row(row);
      reward_pi[s] = mdp.rewards[row];
    }
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(ns, ns) - mdp.gamma * chain;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    Eigen::VectorXd value = lu.solve(reward_pi);
    value += lu.solve(reward_pi - lhs * value);
    const Eigen::VectorXd q_pi =
        mdp.rewards + mdp.gamma * (mdp.transitions * value);
    best = best.cwiseMax(q_pi);

    int digit = 0;  // odometer over policies
    while (digit < ns && ++actions[digit] == mdp.num_actions) {
      actions[digit] = 0;
      ++digit;
    }
    if (digit == ns) break;
  }
  return {std::move(best)};
}

/// Below-optimum start vector -1/(1-gamma) * 1; componentwise <= Q* for any
/// unit-bounded reward model.
inline QVector orthant_start(const Mdp& mdp) {
  return QVector::constant(mdp, -qstar_norm_bound(mdp));
}

/// 64-bit FNV-1a hash of a policy's action index sequence.
inline std::uint64_t policy_hash(const DeterministicPolicy& pi) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const int action : pi.actions) {
    std::uint32_t bits = static_cast<std::uint32_t>(action);
    for (int byte = 0; byte < 4; ++byte) {
      hash ^= (bits >> (8 * byte)) & 0xffu;
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

/// Per-iteration metrics. Certificate-dependent fields stay empty until
/// attach_certificate_metrics fills them.
struct StepRecord {
  int k = 0;
  double inf_norm = 0.0;       // ||Q_k - Q*||_inf
  double orthant_slack = 0.0;  // min_i (Q* - Q_k)_i
  DeterministicPolicy greedy;
  std::uint64_t greedy_hash = 0;
  // Arrival slacks of the two-sided error bound for the transition into k.
  std::optional<double> sandwich_lower_slack;
  std::optional<double> sandwich_upper_slack;
  std::optional<double> m_norm;        // ||Q_k - Q*||_M
  std::optional<double> v_functional;  // v^T (Q_k - Q*)
  std::optional<double> v_bound;       // rho^k v^T (Q_0 - Q*)
  std::optional<double> sharp_lower_slack;  // two-term lower bound margin
};

/// A fully instrumented fixed-point run Q_{k+1} = F Q_k.
struct QviTrace {
  Mdp mdp;
  std::vector<QVector> iterates;  // Q_0 .. Q_K
  QVector qstar;
  double qstar_residual = 0.0;
  bool q0_below_qstar = false;
  std::vector<StepRecord> per_step;  // length K+1

  int num_steps() const { return static_cast<int>(iterates.size()) - 1; }
};

/**
 * Runs num_iters sweeps from q0 and records the certificate-free metrics:
 * infinity-norm errors, greedy policies, below-optimum slack, and the
 * componentwise sandwich slacks of every transition. Violated sandwich
 * slacks are recorded, not thrown, so a bad run can still be reported and
 * attributed via the stored qstar residual.
 */
inline QviTrace run_qvi(const Mdp& mdp, const QVector& q0, int num_iters,
                        QVector qstar) {
  check_sized_for(q0, mdp, "run_qvi");
  check_sized_for(qstar, mdp, "run_qvi");
  if (num_iters < 0) throw Error("run_qvi: num_iters must be >= 0");

  QviTrace trace;
  trace.mdp = mdp;
  trace.qstar = std::move(qstar);
  trace.qstar_residual = bellman_residual(trace.qstar, mdp);
  trace.q0_below_qstar =
      ((q0.values - trace.qstar.values).array() <= 0.0).all();
  trace.iterates.reserve(num_iters + 1);
  trace.per_step.reserve(num_iters + 1);
  trace.iterates.push_back(q0);

  const DeterministicPolicy optimal = greedy_policy(trace.qstar, mdp);
  auto record_state = [&](int k, const QVector& q) {
    StepRecord rec;
    rec.k = k;
    const Eigen::VectorXd delta = q.values - trace.qstar.values;
    rec.inf_norm = delta.lpNorm<Eigen::Infinity>();
    rec.orthant_slack = (-delta).minCoeff();
    rec.greedy = greedy_policy(q, mdp);
    rec.greedy_hash = policy_hash(rec.greedy);
    trace.per_step.push_back(std::move(rec));
  };
  record_state(0, q0);

  for (int k = 0; k < num_iters; ++k) {
    const QVector& current = trace.iterates.back();
    QVector next = bellman_operator(current, mdp);
    const Eigen::VectorXd delta = current.values - trace.qstar.values;
    const Eigen::VectorXd delta_next = next.values - trace.qstar.values;
    const Eigen::VectorXd lower = apply_mode(optimal, mdp, delta);
    const Eigen::VectorXd upper =
        apply_mode(trace.per_step.back().greedy, mdp, delta);
    record_state(k + 1, next);
    trace.per_step.back().sandwich_lower_slack = (delta_next - lower).minCoeff();
    trace.per_step.back().sandwich_upper_slack = (upper - delta_next).minCoeff();
    trace.iterates.push_back(std::move(next));
  }
  return trace;
}

inline QviTrace run_qvi(const Mdp& mdp, const QVector& q0, int num_iters) {
  return run_qvi(mdp, q0, num_iters, solve_qstar_policy_iteration(mdp));
}

/// Fills the certificate-dependent per-step metrics of an existing trace.
inline void attach_certificate_metrics(QviTrace& trace,
                                       const LyapunovCertificate& cert) {
  if (cert.m_matrix.rows() != trace.mdp.dim()) {
    throw Error("attach_certificate_metrics: certificate size mismatch");
  }
  const double rho = cert.rho();
  double rho_pow = 1.0;
  double v_delta_prev = 0.0;
  double w_delta_prev = 0.0;
  const double v_delta0 =
      cert.v_vector.dot(trace.iterates.front().values - trace.qstar.values);
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    const Eigen::VectorXd delta =
        trace.iterates[k].values - trace.qstar.values;
    StepRecord& rec = trace.per_step[k];
    rec.m_norm = weighted_norm(cert.m_matrix, delta);
    const double v_delta = cert.v_vector.dot(delta);
    const double w_delta = cert.w_vector.dot(delta);
    rec.v_functional = v_delta;
    rec.v_bound = rho_pow * v_delta0;
    if (k > 0) {
      // Margin of the two-term lower bound rho (v - w)^T delta_{k-1}.
      rec.sharp_lower_slack = v_delta - rho * (v_delta_prev - w_delta_prev);
    }
    v_delta_prev = v_delta;
    w_delta_prev = w_delta;
    rho_pow *= rho;
  }
}

/// Outcome of one checked claim. `worst_k` is the transition index for
/// per-step claims and the iterate index for cumulative ones; -1 when the
/// trace has no data for the claim.
struct ClauseResult {
  std::string name;
  bool applicable = false;
  bool passed = false;
  double worst_slack = std::numeric_limits<double>::infinity();
  int worst_k = -1;

  bool ok() const { return !applicable || passed; }
};

/**
 * Pass/fail ledger for every per-iteration claim, each with the worst
 * observed slack (negative beyond kSlackTol means violated):
 *
 *   infnorm_contraction  ||Q_{k+1}-Q*|| <= gamma ||Q_k-Q*||      (all starts)
 *   geometric_rate       ||Q_k-Q*|| <= gamma^k ||Q_0-Q*||        (all starts)
 *   sandwich_bounds      A_{Q*} delta_k <= delta_{k+1} <= A_{Q_k} delta_k
 *   orthant_invariance   Q_k <= Q*                       (below-opt starts)
 *   m_norm_contraction   ||.||_M contracts at rate rho   (below-opt starts)
 *   linear_functional    rho v'delta_k <= v'delta_{k+1} <= 0
 *   cumulative_linear    rho^k v'delta_0 <= v'delta_k <= 0
 */
struct InvariantReport {
  ClauseResult infnorm_contraction;
  ClauseResult geometric_rate;
  ClauseResult sandwich_bounds;
  ClauseResult orthant_invariance;
  ClauseResult m_norm_contraction;
  ClauseResult linear_functional;
  ClauseResult cumulative_linear;
  /// Worst margin of the sharper two-term linear lower bound; diagnostic
  /// only, never gates.
  std::optional<double> sharp_linear_slack;
  double qstar_residual = 0.0;
  bool q0_below_qstar = false;

  std::vector<const ClauseResult*> clauses() const {
    return {&infnorm_contraction, &geometric_rate,   &sandwich_bounds,
            &orthant_invariance,  &m_norm_contraction, &linear_functional,
            &cumulative_linear};
  }

  bool all_passed() const {
    for (const ClauseResult* clause : clauses()) {
      if (!clause->ok()) return false;
    }
    return true;
  }

  /// Throws ClaimViolation naming the first failed clause.
  void require() const {
    for (const ClauseResult* clause : clauses()) {
      if (!clause->ok()) {
        throw ClaimViolation("claim " + clause->name + " failed at k=" +
                             std::to_string(clause->worst_k) + " with slack " +
                             std::to_string(clause->worst_slack));
      }
    }
  }
};

namespace detail {

inline void fold_slack(ClauseResult& clause, double slack, int k) {
  if (slack < clause.worst_slack) {
    clause.worst_slack = slack;
    clause.worst_k = k;
  }
}

inline void finalize(ClauseResult& clause) {
  if (clause.applicable) clause.passed = clause.worst_slack >= -kSlackTol;
}

}  // namespace detail

/**
 * Checks every claim against a finished trace. Certificate-dependent and
 * below-optimum clauses are evaluated only when Q_0 <= Q* componentwise
 * (and, for M/v clauses, a certificate is supplied); otherwise they are
 * marked not applicable. All comparisons recompute from the stored
 * iterates, so the report is independent of any attached metrics.
 */
inline InvariantReport check_invariants(
    const QviTrace& trace, const LyapunovCertificate* cert = nullptr) {
  const Mdp& mdp = trace.mdp;
  const double gamma = mdp.gamma;
  const int num_steps = trace.num_steps();

  InvariantReport report;
  report.qstar_residual = trace.qstar_residual;
  report.q0_below_qstar = trace.q0_below_qstar;
  const bool orthant = trace.q0_below_qstar;
  const bool with_cert = orthant && cert != nullptr;

  report.infnorm_contraction = {"infnorm_contraction", true, true};
  report.geometric_rate = {"geometric_rate", true, true};
  report.sandwich_bounds = {"sandwich_bounds", true, true};
  report.orthant_invariance = {"orthant_invariance", orthant, false};
  report.m_norm_contraction = {"m_norm_contraction", with_cert, false};
  report.linear_functional = {"linear_functional", with_cert, false};
  report.cumulative_linear = {"cumulative_linear", with_cert, false};

  std::vector<Eigen::VectorXd> deltas;
  deltas.reserve(trace.iterates.size());
  for (const QVector& q : trace.iterates) {
    deltas.push_back(q.values - trace.qstar.values);
  }
  const DeterministicPolicy optimal = greedy_policy(trace.qstar, mdp);

  const double inf0 = deltas[0].lpNorm<Eigen::Infinity>();
  double gamma_pow = 1.0;
  double inf_prev = inf0;
  for (int k = 0; k <= num_steps; ++k) {
    const double inf_k = deltas[k].lpNorm<Eigen::Infinity>();
    if (k > 0) {
      detail::fold_slack(report.infnorm_contraction,
                         gamma * inf_prev - inf_k, k - 1);
    }
    detail::fold_slack(report.geometric_rate, gamma_pow * inf0 - inf_k, k);
    if (orthant) {
      detail::fold_slack(report.orthant_invariance, (-deltas[k]).minCoeff(), k);
    }
    inf_prev = inf_k;
    gamma_pow *= gamma;
  }

  for (int k = 0; k < num_steps; ++k) {
    const DeterministicPolicy mode = greedy_policy(trace.iterates[k], mdp);
    const Eigen::VectorXd lower = apply_mode(optimal, mdp, deltas[k]);
    const Eigen::VectorXd upper = apply_mode(mode, mdp, deltas[k]);
    detail::fold_slack(report.sandwich_bounds,
                       (deltas[k + 1] - lower).minCoeff(), k);
    detail::fold_slack(report.sandwich_bounds,
                       (upper - deltas[k + 1]).minCoeff(), k);
  }

  if (with_cert) {
    const double rho = cert->rho();
    double sharp_worst = std::numeric_limits<double>::infinity();
    const double v_delta0 = cert->v_vector.dot(deltas[0]);
    double rho_pow = 1.0;
    double m_prev = 0.0;
    double v_prev = 0.0;
    double w_prev = 0.0;
    for (int k = 0; k <= num_steps; ++k) {
      const double m_k = weighted_norm(cert->m_matrix, deltas[k]);
      const double v_k = cert->v_vector.dot(deltas[k]);
      const double w_k = cert->w_vector.dot(deltas[k]);
      if (k > 0) {
        detail::fold_slack(report.m_norm_contraction, rho * m_prev - m_k,
                           k - 1);
        detail::fold_slack(report.linear_functional,
                           std::min(v_k - rho * v_prev, -v_k), k - 1);
        sharp_worst =
            std::min(sharp_worst, v_k - rho * (v_prev - w_prev));
      }
      detail::fold_slack(report.cumulative_linear,
                         std::min(v_k - rho_pow * v_delta0, -v_k), k);
      m_prev = m_k;
      v_prev = v_k;
      w_prev = w_k;
      rho_pow *= rho;
    }
    report.sharp_linear_slack =
        num_steps > 0 ? std::optional<double>(sharp_worst) : std::nullopt;
  }

  detail::finalize(report.infnorm_contraction);
  detail::finalize(report.geometric_rate);
  detail::finalize(report.sandwich_bounds);
  detail::finalize(report.orthant_invariance);
  detail::finalize(report.m_norm_contraction);
  detail::finalize(report.linear_functional);
  detail::finalize(report.cumulative_linear);
  return report;
}

}  // namespace vicert
