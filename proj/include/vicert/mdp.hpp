#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "vicert/errors.hpp"

namespace vicert {

/// Absolute tolerance for row-stochasticity checks. Rows are never
/// renormalized; out-of-tolerance rows are rejected.
inline constexpr double kRowSumTol = 1e-12;

/**
 * Finite discounted MDP in stacked matrix form.
 *
 * Transition rows are stored action-major: row a*num_states + s holds
 * P(.|s,a), so `transitions` is a (|S||A|) x |S| row-stochastic matrix and
 * `rewards` the matching vector of expected one-step rewards R(s,a).
 * Instances are treated as immutable once validated and are safe to share
 * across threads.
 */
struct Mdp {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.0;
  Eigen::MatrixXd transitions;  // (|S||A|) x |S|
  Eigen::VectorXd rewards;      // |S||A|

  int dim() const { return num_states * num_actions; }
};

/// Flat position of the pair (s,a) in the action-major vector layout:
/// index(s,a) = a*|S| + s. Bijective on {0..|S|-1} x {0..|A|-1}.
inline int flat_index(int s, int a, int num_states, int num_actions) {
  if (s < 0 || s >= num_states || a < 0 || a >= num_actions) {
    throw IndexOutOfRange("flat_index: pair (" + std::to_string(s) + "," +
                          std::to_string(a) + ") outside " +
                          std::to_string(num_states) + " states x " +
                          std::to_string(num_actions) + " actions");
  }
  return a * num_states + s;
}

inline int flat_index(int s, int a, const Mdp& mdp) {
  return flat_index(s, a, mdp.num_states, mdp.num_actions);
}

/// Decodes a flat index back to "(s,a)" for error messages.
inline std::string describe_pair(int flat, int num_states) {
  const int s = flat % num_states;
  const int a = flat / num_states;
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

/**
 * Checks every standing assumption and returns the model unchanged.
 *
 * Rejects: transition rows with entries outside [0,1] or row sums off 1 by
 * more than kRowSumTol (NonStochasticRow), expected rewards with |R| > 1
 * (RewardOutOfBounds), and gamma outside [0,1) (BadGamma). Non-finite
 * values fail the same checks. Validation is idempotent.
 */
inline Mdp validate(Mdp mdp) {
  if (mdp.num_states <= 0 || mdp.num_actions <= 0) {
    throw Error("validate: state and action counts must be positive");
  }
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) {
    throw BadGamma("validate: gamma must lie in [0,1), got " +
                   std::to_string(mdp.gamma));
  }
  const int n = mdp.dim();
  if (mdp.transitions.rows() != n || mdp.transitions.cols() != mdp.num_states) {
    throw Error("validate: transitions must be (|S||A|) x |S|, got " +
                std::to_string(mdp.transitions.rows()) + " x " +
                std::to_string(mdp.transitions.cols()));
  }
  if (mdp.rewards.size() != n) {
    throw Error("validate: rewards must have length |S||A|");
  }
  for (int row = 0; row < n; ++row) {
    double sum = 0.0;
    for (int col = 0; col < mdp.num_states; ++col) {
      const double p = mdp.transitions(row, col);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw NonStochasticRow("validate: transition entry " +
                               std::to_string(p) + " at row " +
                               describe_pair(row, mdp.num_states) +
                               " outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw NonStochasticRow("validate: transition row " +
                             describe_pair(row, mdp.num_states) +
                             " sums to " + std::to_string(sum));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!(std::abs(mdp.rewards[i]) <= 1.0)) {
      throw RewardOutOfBounds("validate: expected reward " +
                              std::to_string(mdp.rewards[i]) + " at " +
                              describe_pair(i, mdp.num_states) +
                              " exceeds unit bound");
    }
  }
  return mdp;
}

/// Upper bound 1/(1-gamma) on ||Q*||_inf for a unit-bounded reward model.
/// Also used as the magnitude of the below-optimum start vector.
inline double qstar_norm_bound(const Mdp& mdp) {
  return 1.0 / (1.0 - mdp.gamma);
}

/**
 * Q-function flattened to a single vector of length |S||A|; entry (s,a)
 * lives at flat_index(s,a). Immutable by convention.
 */
struct QVector {
  Eigen::VectorXd values;

  static QVector zero(const Mdp& mdp) {
    return {Eigen::VectorXd::Zero(mdp.dim())};
  }
  static QVector constant(const Mdp& mdp, double value) {
    return {Eigen::VectorXd::Constant(mdp.dim(), value)};
  }
};

/// Map from states to action indices.
struct DeterministicPolicy {
  std::vector<int> actions;

  bool operator==(const DeterministicPolicy&) const = default;
};

inline void check_sized_for(const QVector& q, const Mdp& mdp,
                            const char* where) {
  if (q.values.size() != mdp.dim()) {
    throw Error(std::string(where) + ": Q vector has length " +
                std::to_string(q.values.size()) + ", model needs " +
                std::to_string(mdp.dim()));
  }
}

inline void check_policy_for(const DeterministicPolicy& pi, const Mdp& mdp,
                             const char* where) {
  if (static_cast<int>(pi.actions.size()) != mdp.num_states) {
    throw Error(std::string(where) + ": policy has " +
                std::to_string(pi.actions.size()) + " entries, model has " +
                std::to_string(mdp.num_states) + " states");
  }
  for (int s = 0; s < mdp.num_states; ++s) {
    if (pi.actions[s] < 0 || pi.actions[s] >= mdp.num_actions) {
      throw IndexOutOfRange(std::string(where) + ": action " +
                            std::to_string(pi.actions[s]) + " at state " +
                            std::to_string(s) + " out of range");
    }
  }
}

}  // namespace vicert
