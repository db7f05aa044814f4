#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "vicert/policy.hpp"

namespace vicert {

/// Absolute tolerance for every componentwise inequality check. Sits well
/// above accumulated arithmetic noise and far below any real violation.
inline constexpr double kSlackTol = 1e-9;

/// Induced infinity norm (max absolute row sum) of a dense matrix.
inline double induced_inf_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Mode matrix gamma * P * Pi_pi for a fixed policy, materialized densely.
/// Entrywise nonnegative with every row summing to gamma.
inline Eigen::MatrixXd system_matrix_for_policy(const DeterministicPolicy& pi,
                                                const Mdp& mdp) {
  check_policy_for(pi, mdp, "system_matrix_for_policy");
  const int n = mdp.dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  // Column (s', pi(s')) receives gamma * P(s'|.,.); all other columns are 0.
  for (int s = 0; s < mdp.num_states; ++s) {
    a.col(pi.actions[s] * mdp.num_states + s) =
        mdp.gamma * mdp.transitions.col(s);
  }
  return a;
}

/// A_Q = gamma * P * Pi_{greedy(Q)}.
inline Eigen::MatrixXd system_matrix(const QVector& q, const Mdp& mdp) {
  return system_matrix_for_policy(greedy_policy(q, mdp), mdp);
}

/// Applies the mode matrix of `pi` to x without materializing it:
/// gamma * P * (Pi_pi x).
inline Eigen::VectorXd apply_mode(const DeterministicPolicy& pi,
                                  const Mdp& mdp, const Eigen::VectorXd& x) {
  return mdp.gamma * (mdp.transitions * select_by_policy(x, pi, mdp));
}

/**
 * Offset term b_Q = gamma * P * (Pi_Q - Pi_{Q*}) Q* of the switched affine
 * realization Q_{k+1} - Q* = A_{Q_k}(Q_k - Q*) + b_{Q_k}.
 *
 * With the true optimum this is componentwise <= 0, and exactly zero when
 * greedy(q) agrees with greedy(qstar).
 */
inline Eigen::VectorXd affine_term(const QVector& q, const QVector& qstar,
                                   const Mdp& mdp) {
  check_sized_for(q, mdp, "affine_term");
  check_sized_for(qstar, mdp, "affine_term");
  const DeterministicPolicy mode = greedy_policy(q, mdp);
  const DeterministicPolicy optimal = greedy_policy(qstar, mdp);
  if (mode == optimal) return Eigen::VectorXd::Zero(mdp.dim());
  return apply_mode(mode, mdp, qstar.values) -
         apply_mode(optimal, mdp, qstar.values);
}

/// One realized mode of the switched affine system.
struct SwitchedAffineSystem {
  Eigen::MatrixXd a_matrix;
  Eigen::VectorXd b_vector;
  DeterministicPolicy mode_policy;
};

inline SwitchedAffineSystem realize_system(const QVector& q,
                                           const QVector& qstar,
                                           const Mdp& mdp) {
  SwitchedAffineSystem sys;
  sys.mode_policy = greedy_policy(q, mdp);
  sys.a_matrix = system_matrix_for_policy(sys.mode_policy, mdp);
  sys.b_vector = affine_term(q, qstar, mdp);
  return sys;
}

/// Componentwise slack of the two-sided error bound
/// A_{Q*}(Q_k - Q*) <= Q_{k+1} - Q* <= A_{Q_k}(Q_k - Q*).
struct SandwichReport {
  double lower_slack = 0.0;  // min_i (delta_next - A_{Q*} delta)_i
  int lower_worst_index = -1;
  double upper_slack = 0.0;  // min_i (A_{Q_k} delta - delta_next)_i
  int upper_worst_index = -1;
  double qstar_residual = 0.0;  // ||F qstar - qstar||_inf, for attribution

  double min_slack() const { return std::min(lower_slack, upper_slack); }
};

/**
 * Checks both sandwich inequalities for one transition q_k -> q_next.
 *
 * Requires q_next = F(q_k). Negative slack beyond kSlackTol throws
 * BoundViolation: with an exact optimum the inequalities hold in exact
 * arithmetic, so a violation signals an implementation bug or an
 * inaccurate qstar (see the recorded residual).
 */
inline SandwichReport sandwich_bounds(const QVector& q_k, const QVector& q_next,
                                      const QVector& qstar, const Mdp& mdp) {
  check_sized_for(q_k, mdp, "sandwich_bounds");
  check_sized_for(q_next, mdp, "sandwich_bounds");
  check_sized_for(qstar, mdp, "sandwich_bounds");
  const Eigen::VectorXd delta = q_k.values - qstar.values;
  const Eigen::VectorXd delta_next = q_next.values - qstar.values;
  const Eigen::VectorXd lower =
      apply_mode(greedy_policy(qstar, mdp), mdp, delta);
  const Eigen::VectorXd upper = apply_mode(greedy_policy(q_k, mdp), mdp, delta);

  SandwichReport report;
  report.lower_slack = (delta_next - lower).minCoeff(&report.lower_worst_index);
  report.upper_slack = (upper - delta_next).minCoeff(&report.upper_worst_index);
  report.qstar_residual = bellman_residual(qstar, mdp);
  if (report.min_slack() < -kSlackTol) {
    throw BoundViolation(
        "sandwich_bounds: slack " + std::to_string(report.min_slack()) +
        " at component " +
        describe_pair(report.lower_slack < report.upper_slack
                          ? report.lower_worst_index
                          : report.upper_worst_index,
                      mdp.num_states) +
        " (qstar residual " + std::to_string(report.qstar_residual) + ")");
  }
  return report;
}

/// Max absolute row sum of A_Q. Equals gamma exactly for any Q, since each
/// row of P * Pi_Q is a probability row scaled by gamma.
inline double verify_infnorm_lemma(const QVector& q, const Mdp& mdp) {
  const double norm = induced_inf_norm(system_matrix(q, mdp));
  if (std::abs(norm - mdp.gamma) > kRowSumTol) {
    throw Error("verify_infnorm_lemma: max row sum " + std::to_string(norm) +
                " deviates from gamma " + std::to_string(mdp.gamma));
  }
  return norm;
}

}  // namespace vicert
