#include <catch2/catch_amalgamated.hpp>

#include "vicert/engine.hpp"
#include "vicert/generate.hpp"
#include "vicert/switching.hpp"

using namespace vicert;

namespace {

Mdp scalar_mdp(double reward, double gamma) {
  Mdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 1;
  mdp.gamma = gamma;
  mdp.transitions = Eigen::MatrixXd::Ones(1, 1);
  mdp.rewards = Eigen::VectorXd::Constant(1, reward);
  return validate(std::move(mdp));
}

QVector random_vector(SeededRng& rng, const Mdp& mdp, double bound) {
  QVector q = QVector::zero(mdp);
  for (int i = 0; i < mdp.dim(); ++i) q.values[i] = rng.uniform_symmetric(bound);
  return q;
}

}  // namespace

TEST_CASE("system_matrix on the scalar model") {
  const Mdp mdp = scalar_mdp(0.0, 0.9);
  const Eigen::MatrixXd a = system_matrix(QVector::zero(mdp), mdp);
  REQUIRE(a.rows() == 1);
  CHECK(a(0, 0) == 0.9);
}

TEST_CASE("system_matrix vanishes for gamma = 0") {
  const Mdp mdp = generate_mdp(12, 3, 2, 0.0);
  CHECK(system_matrix(QVector::zero(mdp), mdp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("system_matrix rows are nonnegative and sum to gamma") {
  const Mdp mdp = generate_mdp(9, 3, 2, 0.9);
  SeededRng rng(10);
  const Eigen::MatrixXd a = system_matrix(random_vector(rng, mdp, 5), mdp);
  CHECK((a.array() >= 0.0).all());
  for (int row = 0; row < a.rows(); ++row) {
    CHECK_THAT(a.row(row).sum(), Catch::Matchers::WithinAbs(0.9, 1e-12));
  }
}

TEST_CASE("system_matrix depends on q only through its greedy policy") {
  const Mdp mdp = generate_mdp(14, 4, 3, 0.8);
  SeededRng rng(15);
  const QVector q = random_vector(rng, mdp, 3);
  QVector shifted{q.values.array() + 7.5};  // same argmax pattern
  CHECK(system_matrix(q, mdp) == system_matrix(shifted, mdp));
}

TEST_CASE("affine_term is zero at the optimum and for single policies") {
  const Mdp scalar = scalar_mdp(0.5, 0.9);
  const QVector qstar_scalar = solve_qstar_policy_iteration(scalar);
  SeededRng rng(4);
  CHECK(affine_term(random_vector(rng, scalar, 9), qstar_scalar, scalar)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const Mdp mdp = generate_mdp(21, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  CHECK(affine_term(qstar, qstar, mdp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("affine_term is nonpositive and matches the selector-matrix route") {
  const Mdp mdp = generate_mdp(33, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const QVector q = QVector::constant(mdp, -qstar_norm_bound(mdp));
  const Eigen::VectorXd b = affine_term(q, qstar, mdp);
  CHECK((b.array() <= 1e-12).all());

  // Recompute through explicit dense selector matrices.
  const Eigen::MatrixXd pi_q =
      action_transition_matrix(greedy_policy(q, mdp), mdp).dense();
  const Eigen::MatrixXd pi_star =
      action_transition_matrix(greedy_policy(qstar, mdp), mdp).dense();
  const Eigen::VectorXd expected =
      mdp.gamma * mdp.transitions * (pi_q - pi_star) * qstar.values;
  CHECK((b - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("switched affine realization reproduces the Bellman step exactly") {
  for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Mdp mdp = generate_mdp(seed, 4, 3, 0.95);
    const QVector qstar = solve_qstar_policy_iteration(mdp);
    SeededRng rng(seed + 7);
    for (int trial = 0; trial < 10; ++trial) {
      const QVector q = random_vector(rng, mdp, 2 * qstar_norm_bound(mdp));
      const SwitchedAffineSystem sys = realize_system(q, qstar, mdp);
      const Eigen::VectorXd via_system =
          sys.a_matrix * (q.values - qstar.values) + sys.b_vector;
      const Eigen::VectorXd direct =
          bellman_operator(q, mdp).values - qstar.values;
      CHECK((via_system - direct).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}

TEST_CASE("arbitrary mode products contract geometrically") {
  const Mdp mdp = generate_mdp(6, 3, 3, 0.9);
  SeededRng rng(66);
  Eigen::VectorXd x = random_vector(rng, mdp, 10).values;
  const double x0_norm = x.lpNorm<Eigen::Infinity>();
  double rate = 1.0;
  for (int k = 0; k < 12; ++k) {
    const DeterministicPolicy mode =
        greedy_policy(random_vector(rng, mdp, 5), mdp);
    x = apply_mode(mode, mdp, x);
    rate *= mdp.gamma;
    CHECK(x.lpNorm<Eigen::Infinity>() <= rate * x0_norm + 1e-12);
  }
}

TEST_CASE("sandwich_bounds is exact at the fixed point") {
  const Mdp mdp = generate_mdp(2, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const QVector next = bellman_operator(qstar, mdp);
  const SandwichReport report = sandwich_bounds(qstar, next, qstar, mdp);
  CHECK(std::abs(report.lower_slack) <= 1e-10);
  CHECK(std::abs(report.upper_slack) <= 1e-10);
  CHECK(report.qstar_residual <= 1e-10);
}

TEST_CASE("sandwich_bounds on the scalar model pins both sides") {
  const Mdp mdp = scalar_mdp(0.5, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);  // 5.0
  QVector q{Eigen::VectorXd::Constant(1, qstar.values[0] - 1.0)};
  const QVector next = bellman_operator(q, mdp);
  // Scalar system: both bounds equal 0.9 * (-1) and the step lands on them.
  CHECK_THAT(next.values[0] - qstar.values[0],
             Catch::Matchers::WithinAbs(-0.9, 1e-12));
  const SandwichReport report = sandwich_bounds(q, next, qstar, mdp);
  CHECK(std::abs(report.lower_slack) <= 1e-12);
  CHECK(std::abs(report.upper_slack) <= 1e-12);
}

TEST_CASE("sandwich_bounds flags a corrupted step") {
  const Mdp mdp = generate_mdp(51, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  SeededRng rng(52);
  const QVector q = random_vector(rng, mdp, 5);
  QVector corrupted = bellman_operator(q, mdp);
  corrupted.values[0] += 1.0;  // breaks the upper inequality
  CHECK_THROWS_AS(sandwich_bounds(q, corrupted, qstar, mdp), BoundViolation);
}

TEST_CASE("sandwich campaign over random instances and starts") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double gamma = (seed % 3 == 0) ? 0.5 : (seed % 3 == 1 ? 0.9 : 0.95);
    SeededRng rng(seed);
    const Mdp mdp = generate_mdp(rng, 3, 2, gamma);
    const QVector qstar = solve_qstar_policy_iteration(mdp);
    QVector q = random_vector(rng, mdp, 2 * qstar_norm_bound(mdp));
    for (int k = 0; k < 50; ++k) {
      const QVector next = bellman_operator(q, mdp);
      const SandwichReport report = sandwich_bounds(q, next, qstar, mdp);
      REQUIRE(report.min_slack() >= -kSlackTol);
      q = next;
      ++checked;
    }
  }
  CHECK(checked == 100 * 50);
}

TEST_CASE("verify_infnorm_lemma returns the max row sum") {
  CHECK(verify_infnorm_lemma(QVector::zero(scalar_mdp(0.0, 0.9)),
                             scalar_mdp(0.0, 0.9)) == 0.9);
  const Mdp zero_gamma = generate_mdp(31, 3, 2, 0.0);
  CHECK(verify_infnorm_lemma(QVector::zero(zero_gamma), zero_gamma) == 0.0);

  const Mdp mdp = generate_mdp(44, 4, 3, 0.85);
  SeededRng rng(45);
  const double norm = verify_infnorm_lemma(random_vector(rng, mdp, 7), mdp);
  CHECK_THAT(norm, Catch::Matchers::WithinAbs(0.85, 1e-12));
}
