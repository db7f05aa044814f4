#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "vicert/mdp.hpp"

namespace vicert {

/// Algorithm name recorded in reports. Traces are reproducible across
/// implementations only when the generator matches; file-based inputs are
/// the portable route.
inline constexpr const char* kGeneratorName = "mt19937_64-raw53";

/**
 * Deterministic random source: std::mt19937_64 with an explicit 53-bit
 * mantissa mapping, so the double stream is pinned by the seed on every
 * platform (the standard fixes the engine's output; the mapping here avoids
 * the unspecified std::uniform_real_distribution).
 */
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_positive01() { return 1.0 - uniform01(); }

  /// Uniform on [-bound, bound).
  double uniform_symmetric(double bound) {
    return (2.0 * uniform01() - 1.0) * bound;
  }

 private:
  std::mt19937_64 engine_;
};

/**
 * Seeded random instance: every transition row is a normalized vector of
 * strictly positive uniforms (so the chain is irreducible) and rewards are
 * uniform on [-1, 1). Draw order is fixed: transition rows in action-major
 * order, then rewards in flat order. The result always validates.
 */
inline Mdp generate_mdp(SeededRng& rng, int num_states, int num_actions,
                        double gamma) {
  if (num_states <= 0 || num_actions <= 0) {
    throw Error("generate_mdp: state and action counts must be positive");
  }
  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.gamma = gamma;
  mdp.transitions.resize(num_states * num_actions, num_states);
  mdp.rewards.resize(num_states * num_actions);
  for (int row = 0; row < mdp.dim(); ++row) {
    double sum = 0.0;
    for (int col = 0; col < num_states; ++col) {
      const double weight = rng.uniform_positive01();
      mdp.transitions(row, col) = weight;
      sum += weight;
    }
    mdp.transitions.row(row) /= sum;
  }
  for (int i = 0; i < mdp.dim(); ++i) {
    mdp.rewards[i] = rng.uniform_symmetric(1.0);
  }
  return validate(std::move(mdp));
}

inline Mdp generate_mdp(std::uint64_t seed, int num_states, int num_actions,
                        double gamma) {
  SeededRng rng(seed);
  return generate_mdp(rng, num_states, num_actions, gamma);
}

/// Entrywise uniform on (0, 1]; weight vectors for linear certificates.
inline Eigen::VectorXd random_positive_vector(SeededRng& rng, int dim) {
  Eigen::VectorXd w(dim);
  for (int i = 0; i < dim; ++i) w[i] = rng.uniform_positive01();
  return w;
}

/// Random start with ||Q_0||_inf <= 2/(1-gamma), entrywise uniform.
inline QVector random_q0(SeededRng& rng, const Mdp& mdp) {
  const double bound = 2.0 * qstar_norm_bound(mdp);
  QVector q = QVector::zero(mdp);
  for (int i = 0; i < mdp.dim(); ++i) {
    q.values[i] = rng.uniform_symmetric(bound);
  }
  return q;
}

}  // namespace vicert
