#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "vicert/switching.hpp"

namespace vicert {

/// Series terms below this induced-norm cutoff are dropped.
inline constexpr double kSeriesTermCutoff = 1e-14;
/// Hard cap on series length; unreachable for admissible inputs and only
/// guards malformed mode matrices.
inline constexpr int kSeriesCap = 1000000;
/// Tolerance on the quadratic-certificate equation residual.
inline constexpr double kLyapunovResidualTol = 1e-8;
/// Tolerance on the linear-certificate identity residual.
inline constexpr double kVIdentityTol = 1e-9;

inline void require_epsilon(double gamma, double epsilon, const char* where) {
  const double rho = gamma + epsilon;
  if (!(epsilon > 0.0) || !(rho > 0.0 && rho < 1.0)) {
    throw BadEpsilon(std::string(where) + ": need epsilon > 0 and gamma " +
                     "+ epsilon in (0,1), got gamma=" + std::to_string(gamma) +
                     " epsilon=" + std::to_string(epsilon));
  }
}

struct LyapunovMatrixResult {
  Eigen::MatrixXd m;
  double residual = 0.0;  // ||A^T M A - rho^2 (M - I)||_inf
  int series_depth = 0;   // number of summed terms
};

/**
 * Quadratic certificate for the optimal mode matrix A = A_{Q*}:
 *
 *   M = sum_{k>=0} rho^{-2k} (A^k)^T A^k,   rho = gamma + epsilon,
 *
 * summed directly until the term's induced infinity norm drops below
 * kSeriesTermCutoff. M solves A^T M A = rho^2 (M - I), satisfies M >= I in
 * the definite order, and inherits entrywise nonnegativity from A. The
 * terms decay like (gamma/rho)^{2k}, so the sum always converges for
 * admissible inputs; the depth cap only catches malformed matrices.
 */
inline LyapunovMatrixResult lyapunov_matrix(const Eigen::MatrixXd& a_star,
                                            double gamma, double epsilon) {
  require_epsilon(gamma, epsilon, "lyapunov_matrix");
  if (a_star.rows() != a_star.cols()) {
    throw Error("lyapunov_matrix: mode matrix must be square");
  }
  const double rho = gamma + epsilon;
  const int n = static_cast<int>(a_star.rows());
  const Eigen::MatrixXd scaled = a_star / rho;  // A / rho, powers of this

  LyapunovMatrixResult result;
  result.m = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (;;) {
    const Eigen::MatrixXd term = power.transpose() * power;
    const double term_norm = induced_inf_norm(term);
    if (!std::isfinite(term_norm)) {
      throw NonConvergentSeries(
          "lyapunov_matrix: series term diverged at depth " +
          std::to_string(result.series_depth));
    }
    if (term_norm < kSeriesTermCutoff) break;
    result.m += term;
    ++result.series_depth;
    if (result.series_depth > kSeriesCap) {
      throw NonConvergentSeries("lyapunov_matrix: series exceeded cap of " +
                                std::to_string(kSeriesCap) + " terms");
    }
    power = scaled * power;
  }
  // Each term is symmetric up to rounding; make it exact.
  result.m = 0.5 * (result.m + result.m.transpose()).eval();
  result.residual = induced_inf_norm(
      a_star.transpose() * result.m * a_star -
      rho * rho * (result.m - Eigen::MatrixXd::Identity(n, n)));
  return result;
}

/**
 * Linear certificate vector for the optimal mode matrix:
 *
 *   v = (sum_{i>=0} rho^{-i} A^i)^T w,
 *
 * computed as the exact solve (I - A^T/rho) v = w (the system is
 * nonsingular since ||A||_inf = gamma < rho). v is strictly positive,
 * dominates w componentwise, and satisfies v^T A = rho (v^T - w^T).
 */
inline Eigen::VectorXd lyapunov_vector(const Eigen::MatrixXd& a_star,
                                       double gamma, double epsilon,
                                       const Eigen::VectorXd& w) {
  require_epsilon(gamma, epsilon, "lyapunov_vector");
  if (a_star.rows() != a_star.cols() || w.size() != a_star.rows()) {
    throw Error("lyapunov_vector: size mismatch between mode matrix and w");
  }
  if (!(w.array() > 0.0).all()) {
    throw NonPositiveW("lyapunov_vector: w must be strictly positive");
  }
  const double rho = gamma + epsilon;
  const int n = static_cast<int>(a_star.rows());
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(n, n) - a_star.transpose() / rho;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
  Eigen::VectorXd v = lu.solve(w);
  v += lu.solve(w - lhs * v);  // one refinement pass
  if (!v.allFinite() || !(v.array() > 0.0).all()) {
    throw Error("lyapunov_vector: solve failed to produce a positive vector");
  }
  return v;
}

/// ||v^T A - rho (v^T - w^T)||_inf.
inline double v_identity_residual(const Eigen::VectorXd& v,
                                  const Eigen::VectorXd& w,
                                  const Eigen::MatrixXd& a_star, double gamma,
                                  double epsilon) {
  const double rho = gamma + epsilon;
  return (a_star.transpose() * v - rho * (v - w)).lpNorm<Eigen::Infinity>();
}

struct CertificateDiagnostics {
  double lyapunov_residual = 0.0;
  int series_depth = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_max_bound = 0.0;
  double min_m_entry = 0.0;
  double v_identity_residual = 0.0;
  double loose_v_bound = 0.0;  // ||w||_1 / (1 - gamma); can fail, informational
  double tight_v_bound = 0.0;  // ||w||_1 * rho / epsilon; always holds
  bool loose_v_bound_holds = false;
  bool tight_v_bound_holds = false;
};

/**
 * A full stability certificate for the optimal mode: the margin epsilon,
 * the quadratic weight M, the linear weight v generated from w, and the
 * diagnostics proving every defining bound.
 */
struct LyapunovCertificate {
  double gamma = 0.0;
  double epsilon = 0.0;
  Eigen::MatrixXd m_matrix;
  Eigen::VectorXd w_vector;
  Eigen::VectorXd v_vector;
  CertificateDiagnostics diagnostics;

  double rho() const { return gamma + epsilon; }
};

struct MBoundsReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_max_bound = 0.0;
  double min_entry = 0.0;
};

/// lambda_max bound |S||A| / (1 - (gamma/rho)^2) for an n-dimensional mode.
inline double lambda_max_bound(int n, double gamma, double epsilon) {
  const double ratio = gamma / (gamma + epsilon);
  return static_cast<double>(n) / (1.0 - ratio * ratio);
}

/**
 * Eigenvalue and nonnegativity checks on a constructed M:
 * lambda_min >= 1, lambda_max <= |S||A| / (1 - (gamma/rho)^2), all entries
 * nonnegative, and the recorded certificate-equation residual within
 * tolerance. Throws CertificateInvalid naming the failing clause.
 */
inline MBoundsReport verify_m_bounds(const LyapunovCertificate& cert,
                                     const Mdp& mdp) {
  if (cert.m_matrix.rows() != mdp.dim() || cert.m_matrix.cols() != mdp.dim()) {
    throw Error("verify_m_bounds: certificate size does not match model");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cert.m_matrix,
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error("verify_m_bounds: eigensolve failed");
  }
  MBoundsReport report;
  report.lambda_min = eig.eigenvalues().minCoeff();
  report.lambda_max = eig.eigenvalues().maxCoeff();
  report.lambda_max_bound = lambda_max_bound(mdp.dim(), cert.gamma, cert.epsilon);
  report.min_entry = cert.m_matrix.minCoeff();

  if (report.lambda_min < 1.0 - kSlackTol) {
    throw CertificateInvalid("verify_m_bounds: lambda_min(M) = " +
                             std::to_string(report.lambda_min) + " < 1");
  }
  if (report.lambda_max > report.lambda_max_bound * (1.0 + 1e-6)) {
    throw CertificateInvalid("verify_m_bounds: lambda_max(M) = " +
                             std::to_string(report.lambda_max) +
                             " exceeds bound " +
                             std::to_string(report.lambda_max_bound));
  }
  if (report.min_entry < -1e-12) {
    throw CertificateInvalid("verify_m_bounds: M has negative entry " +
                             std::to_string(report.min_entry));
  }
  if (cert.diagnostics.lyapunov_residual > kLyapunovResidualTol) {
    throw CertificateInvalid(
        "verify_m_bounds: certificate-equation residual " +
        std::to_string(cert.diagnostics.lyapunov_residual) + " exceeds " +
        std::to_string(kLyapunovResidualTol));
  }
  return report;
}

struct VBoundsReport {
  double v_inf = 0.0;
  double w_inf = 0.0;
  double loose_bound = 0.0;
  double tight_bound = 0.0;
  bool loose_bound_holds = false;
  bool tight_bound_holds = false;
  double min_v_minus_w = 0.0;
};

/**
 * Norm checks on a linear certificate.
 *
 * Always holds (asserted): ||v||_inf >= ||w||_inf and v >= w componentwise
 * (the generating series dominates its i=0 term), and the weighted-tail
 * bound ||v||_inf <= ||w||_1 * rho/epsilon. The unweighted-tail constant
 * ||w||_1 / (1 - gamma) is reported for comparison but can be exceeded
 * (scalar example gamma=0.9, epsilon=0.05, w=1 gives v = 19 > 10), so it
 * is informational only and never enforced.
 */
inline VBoundsReport verify_v_bounds(const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& w, double gamma,
                                     double epsilon) {
  require_epsilon(gamma, epsilon, "verify_v_bounds");
  if (v.size() != w.size()) {
    throw Error("verify_v_bounds: v and w sizes differ");
  }
  const double rho = gamma + epsilon;
  VBoundsReport report;
  report.v_inf = v.lpNorm<Eigen::Infinity>();
  report.w_inf = w.lpNorm<Eigen::Infinity>();
  report.loose_bound = w.lpNorm<1>() / (1.0 - gamma);
  report.tight_bound = w.lpNorm<1>() * rho / epsilon;
  report.loose_bound_holds = report.v_inf <= report.loose_bound + kSlackTol;
  report.tight_bound_holds = report.v_inf <= report.tight_bound + kSlackTol;
  report.min_v_minus_w = (v - w).minCoeff();

  if (!report.tight_bound_holds) {
    throw CertificateInvalid("verify_v_bounds: ||v||_inf = " +
                             std::to_string(report.v_inf) +
                             " exceeds ||w||_1 * rho/epsilon = " +
                             std::to_string(report.tight_bound));
  }
  if (report.v_inf < report.w_inf - kSlackTol) {
    throw CertificateInvalid("verify_v_bounds: ||v||_inf below ||w||_inf");
  }
  if (report.min_v_minus_w < -kSlackTol) {
    throw CertificateInvalid("verify_v_bounds: v fails to dominate w by " +
                             std::to_string(report.min_v_minus_w));
  }
  return report;
}

/// sqrt(x^T M x) for positive definite M.
inline double weighted_norm(const Eigen::MatrixXd& m_matrix,
                            const Eigen::VectorXd& x) {
  if (m_matrix.rows() != x.size() || m_matrix.cols() != x.size()) {
    throw Error("weighted_norm: size mismatch");
  }
  const double quad = x.dot(m_matrix * x);
  return std::sqrt(std::max(quad, 0.0));
}

/**
 * Builds and fully validates a certificate for a solved model: realizes
 * A_{Q*} from the greedy policy of qstar, sums the quadratic series,
 * solves for the linear vector, and asserts every bound along the way.
 */
inline LyapunovCertificate make_certificate(const Mdp& mdp,
                                            const QVector& qstar,
                                            double epsilon,
                                            const Eigen::VectorXd& w) {
  require_epsilon(mdp.gamma, epsilon, "make_certificate");
  check_sized_for(qstar, mdp, "make_certificate");
  if (w.size() != mdp.dim()) {
    throw Error("make_certificate: w must have length |S||A|");
  }
  const Eigen::MatrixXd a_star =
      system_matrix_for_policy(greedy_policy(qstar, mdp), mdp);

  const LyapunovMatrixResult mres = lyapunov_matrix(a_star, mdp.gamma, epsilon);
  if (mres.residual > kLyapunovResidualTol) {
    throw CertificateInvalid("make_certificate: certificate-equation residual " +
                             std::to_string(mres.residual));
  }
  const Eigen::VectorXd v = lyapunov_vector(a_star, mdp.gamma, epsilon, w);
  const double vres = v_identity_residual(v, w, a_star, mdp.gamma, epsilon);
  if (vres > kVIdentityTol) {
    throw CertificateInvalid("make_certificate: linear-identity residual " +
                             std::to_string(vres));
  }

  LyapunovCertificate cert;
  cert.gamma = mdp.gamma;
  cert.epsilon = epsilon;
  cert.m_matrix = mres.m;
  cert.w_vector = w;
  cert.v_vector = v;
  cert.diagnostics.lyapunov_residual = mres.residual;
  cert.diagnostics.series_depth = mres.series_depth;
  cert.diagnostics.v_identity_residual = vres;

  const MBoundsReport mb = verify_m_bounds(cert, mdp);
  cert.diagnostics.lambda_min = mb.lambda_min;
  cert.diagnostics.lambda_max = mb.lambda_max;
  cert.diagnostics.lambda_max_bound = mb.lambda_max_bound;
  cert.diagnostics.min_m_entry = mb.min_entry;

  const VBoundsReport vb = verify_v_bounds(v, w, mdp.gamma, epsilon);
  cert.diagnostics.loose_v_bound = vb.loose_bound;
  cert.diagnostics.tight_v_bound = vb.tight_bound;
  cert.diagnostics.loose_v_bound_holds = vb.loose_bound_holds;
  cert.diagnostics.tight_v_bound_holds = vb.tight_bound_holds;
  return cert;
}

/// Midpoint of the admissible margin interval; the default when the caller
/// does not pin epsilon.
inline double default_epsilon(double gamma) { return (1.0 - gamma) / 2.0; }

}  // namespace vicert
