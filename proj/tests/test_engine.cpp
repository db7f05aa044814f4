#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vicert/engine.hpp"
#include "vicert/generate.hpp"

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

}  // namespace

TEST_CASE("policy iteration solves the scalar model") {
  const Mdp mdp = scalar_mdp(0.5, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  CHECK_THAT(qstar.values[0], Catch::Matchers::WithinAbs(5.0, 1e-12));
}

TEST_CASE("policy iteration with gamma = 0 returns the rewards") {
  const Mdp mdp = generate_mdp(2, 4, 3, 0.0);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  CHECK((qstar.values - mdp.rewards).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("policy iteration matches exhaustive enumeration") {
  const Mdp mdp = generate_mdp(6, 3, 2, 0.9);
  const QVector via_pi = solve_qstar_policy_iteration(mdp);
  const QVector via_enum = solve_qstar_bruteforce(mdp);
  CHECK((via_pi.values - via_enum.values).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("brute force degenerate and dominance cases") {
  const Mdp scalar = scalar_mdp(0.5, 0.9);
  CHECK_THAT(solve_qstar_bruteforce(scalar).values[0],
             Catch::Matchers::WithinAbs(5.0, 1e-12));

  // Identical transitions per action, rewards favor action 1 everywhere:
  // the optimal policy must be (1,1).
  Mdp dominance;
  dominance.num_states = 2;
  dominance.num_actions = 2;
  dominance.gamma = 0.9;
  dominance.transitions.resize(4, 2);
  dominance.transitions << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  dominance.rewards.resize(4);
  dominance.rewards << 0.1, 0.2, 0.8, 0.9;  // action 1 strictly better
  dominance = validate(std::move(dominance));
  const QVector qstar = solve_qstar_bruteforce(dominance);
  CHECK(greedy_policy(qstar, dominance).actions == std::vector<int>{1, 1});
}

TEST_CASE("brute force refuses oversized policy spaces") {
  // 2^21 > 1e6 policies.
  const Mdp mdp = generate_mdp(1, 21, 2, 0.5);
  CHECK_THROWS_AS(solve_qstar_bruteforce(mdp), TooManyPolicies);
}

TEST_CASE("oracle equivalence campaign on small instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int ns = 2 + static_cast<int>(seed % 3);
    const int na = 2 + static_cast<int>(seed % 2);
    const double gamma = (seed % 3 == 0) ? 0.5 : (seed % 3 == 1 ? 0.9 : 0.95);
    const Mdp mdp = generate_mdp(seed, ns, na, gamma);
    const QVector via_pi = solve_qstar_policy_iteration(mdp);
    const QVector via_enum = solve_qstar_bruteforce(mdp);
    CHECK((via_pi.values - via_enum.values).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(bellman_residual(via_pi, mdp) <= 1e-10);
  }
}

TEST_CASE("run_qvi stays at the fixed point") {
  const Mdp mdp = generate_mdp(9, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const QviTrace trace = run_qvi(mdp, qstar, 20, qstar);
  for (const StepRecord& rec : trace.per_step) {
    CHECK(rec.inf_norm <= 1e-12);
  }
}

TEST_CASE("run_qvi scalar hand computation") {
  const Mdp mdp = scalar_mdp(0.5, 0.9);
  const QviTrace trace = run_qvi(mdp, QVector::zero(mdp), 2);
  REQUIRE(trace.iterates.size() == 3);
  CHECK(trace.iterates[0].values[0] == 0.0);
  CHECK_THAT(trace.iterates[1].values[0],
             Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(trace.iterates[2].values[0],
             Catch::Matchers::WithinAbs(0.95, 1e-15));
}

TEST_CASE("run_qvi reaches the geometric envelope after 100 sweeps") {
  const Mdp mdp = generate_mdp(10, 4, 3, 0.9);
  SeededRng rng(11);
  QVector q0 = QVector::zero(mdp);
  for (int i = 0; i < mdp.dim(); ++i) q0.values[i] = rng.uniform_symmetric(15);
  const QviTrace trace = run_qvi(mdp, q0, 100);
  const double envelope =
      std::pow(0.9, 100) * trace.per_step.front().inf_norm;
  CHECK(trace.per_step.back().inf_norm <= envelope + 1e-9);
}

TEST_CASE("orthant_start sits below the optimum") {
  CHECK(orthant_start(scalar_mdp(0.0, 0.9)).values[0] ==
        -qstar_norm_bound(scalar_mdp(0.0, 0.9)));
  CHECK(orthant_start(scalar_mdp(0.0, 0.0)).values[0] == -1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mdp mdp = generate_mdp(seed, 4, 2, 0.9);
    const QVector qstar = solve_qstar_policy_iteration(mdp);
    const QVector start = orthant_start(mdp);
    CHECK(((qstar.values - start.values).array() >= -1e-12).all());
  }
}

TEST_CASE("check_invariants on the scalar orthant run is tight") {
  const Mdp mdp = scalar_mdp(0.5, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const LyapunovCertificate cert =
      make_certificate(mdp, qstar, 0.05, Eigen::VectorXd::Ones(1));
  QviTrace trace = run_qvi(mdp, orthant_start(mdp), 50, qstar);
  attach_certificate_metrics(trace, cert);
  const InvariantReport report = check_invariants(trace, &cert);
  CHECK(report.all_passed());
  CHECK_NOTHROW(report.require());
  // Scalar dynamics make the per-step infinity-norm contraction exact.
  CHECK(std::abs(report.infnorm_contraction.worst_slack) <= 1e-9);
  for (const ClauseResult* clause : report.clauses()) {
    CHECK(clause->applicable);
    CHECK(clause->passed);
  }
}

TEST_CASE("check_invariants at the fixed point has ~zero slacks") {
  const Mdp mdp = generate_mdp(30, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const QviTrace trace = run_qvi(mdp, qstar, 10, qstar);
  const LyapunovCertificate cert = make_certificate(
      mdp, qstar, default_epsilon(0.9), Eigen::VectorXd::Ones(mdp.dim()));
  const InvariantReport report = check_invariants(trace, &cert);
  CHECK(report.all_passed());
  CHECK(std::abs(report.orthant_invariance.worst_slack) <= 1e-10);
  CHECK(std::abs(report.cumulative_linear.worst_slack) <= 1e-9);
}

TEST_CASE("check_invariants marks gated clauses not applicable") {
  const Mdp mdp = generate_mdp(31, 3, 2, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  // A start strictly above the optimum cannot satisfy the gate.
  QVector q0{qstar.values.array() + 1.0};
  QviTrace trace = run_qvi(mdp, q0, 30, qstar);
  const LyapunovCertificate cert = make_certificate(
      mdp, qstar, default_epsilon(0.9), Eigen::VectorXd::Ones(mdp.dim()));
  const InvariantReport report = check_invariants(trace, &cert);
  CHECK_FALSE(report.q0_below_qstar);
  CHECK(report.infnorm_contraction.applicable);
  CHECK(report.geometric_rate.applicable);
  CHECK(report.sandwich_bounds.applicable);
  CHECK_FALSE(report.orthant_invariance.applicable);
  CHECK_FALSE(report.m_norm_contraction.applicable);
  CHECK_FALSE(report.linear_functional.applicable);
  CHECK_FALSE(report.cumulative_linear.applicable);
  CHECK(report.all_passed());  // gated clauses do not block
}

TEST_CASE("check_invariants flags a poisoned optimum") {
  const Mdp mdp = generate_mdp(32, 3, 2, 0.9);
  QVector fake_qstar = solve_qstar_policy_iteration(mdp);
  fake_qstar.values[0] -= 0.5;  // below the true optimum: claims must fail
  const QviTrace trace = run_qvi(mdp, orthant_start(mdp), 50, fake_qstar);
  const InvariantReport report = check_invariants(trace);
  CHECK_FALSE(report.all_passed());
  CHECK(report.qstar_residual > 1e-3);  // failure is attributable
  CHECK_THROWS_AS(report.require(), ClaimViolation);
}

TEST_CASE("claims hold across margins and weight draws") {
  const Mdp mdp = generate_mdp(70, 4, 3, 0.9);
  const QVector qstar = solve_qstar_policy_iteration(mdp);
  const QviTrace trace = run_qvi(mdp, orthant_start(mdp), 120, qstar);
  SeededRng rng(71);
  for (const double frac : {0.1, 0.5, 0.9}) {
    const double epsilon = frac * (1.0 - mdp.gamma);
    for (int draw = 0; draw < 2; ++draw) {
      const Eigen::VectorXd w = draw == 0
                                    ? Eigen::VectorXd::Ones(mdp.dim()).eval()
                                    : random_positive_vector(rng, mdp.dim());
      const LyapunovCertificate cert =
          make_certificate(mdp, qstar, epsilon, w);
      const InvariantReport report = check_invariants(trace, &cert);
      CHECK(report.all_passed());
      // The sharper two-term lower bound holds as well.
      REQUIRE(report.sharp_linear_slack.has_value());
      CHECK(*report.sharp_linear_slack >= -kSlackTol);
    }
  }
}

TEST_CASE("orthant starts produce monotone trajectories") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mdp mdp = generate_mdp(seed, 3, 3, 0.9);
    const QviTrace trace = run_qvi(mdp, orthant_start(mdp), 40);
    for (int k = 0; k < trace.num_steps(); ++k) {
      const Eigen::VectorXd diff =
          trace.iterates[k + 1].values - trace.iterates[k].values;
      CHECK(diff.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("trace bookkeeping matches its definition") {
  const Mdp mdp = generate_mdp(90, 3, 2, 0.8);
  const QviTrace trace = run_qvi(mdp, QVector::zero(mdp), 15);
  REQUIRE(trace.per_step.size() == 16);
  for (int k = 0; k <= trace.num_steps(); ++k) {
    CHECK(trace.per_step[k].k == k);
    if (k > 0) {
      const QVector expected =
          bellman_operator(trace.iterates[k - 1], mdp);
      CHECK((trace.iterates[k].values - expected.values)
                .lpNorm<Eigen::Infinity>() == 0.0);
      REQUIRE(trace.per_step[k].sandwich_lower_slack.has_value());
      REQUIRE(trace.per_step[k].sandwich_upper_slack.has_value());
      CHECK(*trace.per_step[k].sandwich_lower_slack >= -kSlackTol);
      CHECK(*trace.per_step[k].sandwich_upper_slack >= -kSlackTol);
    } else {
      CHECK_FALSE(trace.per_step[k].sandwich_lower_slack.has_value());
    }
  }
}

TEST_CASE("run_qvi rejects negative iteration counts") {
  const Mdp mdp = scalar_mdp(0.0, 0.5);
  CHECK_THROWS_AS(run_qvi(mdp, QVector::zero(mdp), -1), Error);
}

TEST_CASE("policy evaluation guards against a singular system") {
  // Unvalidated gamma = 1 with an identity chain makes I - gamma*P*Pi
  // exactly singular; the guard must fire instead of returning garbage.
  Mdp malformed;
  malformed.num_states = 2;
  malformed.num_actions = 1;
  malformed.gamma = 1.0;
  malformed.transitions = Eigen::MatrixXd::Identity(2, 2);
  malformed.rewards = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(policy_evaluation(DeterministicPolicy{{0, 0}}, malformed),
                  SingularEvaluation);
}
