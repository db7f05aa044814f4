#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "vicert/mdp.hpp"

namespace vicert {

/// Greedy policy of q: for each state the smallest action index attaining
/// max_a Q(s,a). The tie-break is fixed so traces are reproducible.
inline DeterministicPolicy greedy_policy(const QVector& q, const Mdp& mdp) {
  check_sized_for(q, mdp, "greedy_policy");
  DeterministicPolicy pi;
  pi.actions.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    double best_value = q.values[s];  // flat_index(s, 0) == s
    for (int a = 1; a < mdp.num_actions; ++a) {
      const double value = q.values[a * mdp.num_states + s];
      if (value > best_value) {
        best_value = value;
        best = a;
      }
    }
    pi.actions[s] = best;
  }
  return pi;
}

/**
 * Selector matrix of a deterministic policy: the |S| x |S||A| matrix whose
 * row s is the one-hot of (s, pi(s)). Stored sparsely (|S| nonzeros); the
 * dense form is materialized on demand only.
 *
 * For any policy, transitions * dense() is the |S||A| x |S||A| transition
 * matrix of the state-action chain.
 */
class ActionTransitionMatrix {
 public:
  ActionTransitionMatrix(DeterministicPolicy pi, const Mdp& mdp)
      : actions_(std::move(pi.actions)),
        num_states_(mdp.num_states),
        num_actions_(mdp.num_actions) {
    check_policy_for(DeterministicPolicy{actions_}, mdp,
                     "ActionTransitionMatrix");
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  DeterministicPolicy policy() const { return DeterministicPolicy{actions_}; }

  /// Flat column of the single 1 in row s.
  int column(int s) const { return actions_[s] * num_states_ + s; }

  /// Pi * x: picks x(s, pi(s)) per state.
  Eigen::VectorXd select(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(num_states_);
    for (int s = 0; s < num_states_; ++s) out[s] = x[column(s)];
    return out;
  }

  /// Pi^T * y: scatters y back into the flat layout.
  Eigen::VectorXd scatter(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_states_ * num_actions_);
    for (int s = 0; s < num_states_; ++s) out[column(s)] = y[s];
    return out;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(num_states_, num_states_ * num_actions_);
    for (int s = 0; s < num_states_; ++s) out(s, column(s)) = 1.0;
    return out;
  }

 private:
  std::vector<int> actions_;
  int num_states_;
  int num_actions_;
};

inline ActionTransitionMatrix action_transition_matrix(
    const DeterministicPolicy& pi, const Mdp& mdp) {
  return ActionTransitionMatrix(pi, mdp);
}

/// Convenience form of Pi * x without building the selector object.
inline Eigen::VectorXd select_by_policy(const Eigen::VectorXd& x,
                                        const DeterministicPolicy& pi,
                                        const Mdp& mdp) {
  Eigen::VectorXd out(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    out[s] = x[pi.actions[s] * mdp.num_states + s];
  }
  return out;
}

/**
 * One Bellman optimality sweep in vector form: F Q = R + gamma * P * m
 * where m(s) = max_a Q(s,a). Componentwise identical (to rounding) to the
 * per-entry update R(s,a) + gamma * sum_s' P(s'|s,a) max_a' Q(s',a').
 */
inline QVector bellman_operator(const QVector& q, const Mdp& mdp) {
  check_sized_for(q, mdp, "bellman_operator");
  const Eigen::Map<const Eigen::MatrixXd> by_state(
      q.values.data(), mdp.num_states, mdp.num_actions);
  const Eigen::VectorXd best = by_state.rowwise().maxCoeff();
  return {mdp.rewards + mdp.gamma * (mdp.transitions * best)};
}

/// ||F q - q||_inf.
inline double bellman_residual(const QVector& q, const Mdp& mdp) {
  return (bellman_operator(q, mdp).values - q.values)
      .lpNorm<Eigen::Infinity>();
}

}  // namespace vicert
