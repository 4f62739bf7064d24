#pragma once

#include <vector>

#include "odenet/inner.hpp"
#include "odenet/penalties.hpp"

namespace odenet {

/// IRLS working responses and weights at the expansion point theta_tilde:
/// u_i = -y_i + b'(theta_i), w_i = b''(theta_i) (floored at 1e-10),
/// ytilde_i = theta_i - u_i / w_i.
struct WorkingResponse {
  Vec ytilde;
  Vec w;
};
WorkingResponse working_response(const Family& family, const Vec& y, const Vec& theta_tilde);

/// First-order model of the profiled process at the observation times:
/// theta_j(t_i; gamma) ~ offset_i + X.row(i) . (gamma - gamma_tilde),
/// with offset = h(t_i).c* and X = h(t_i)^T J from the implicit-function
/// derivative J = dc*/dgamma^T.
struct LinearizedDesign {
  Mat X;       // n x (p+1)
  Vec offset;  // n
};
LinearizedDesign linearized_design(const InnerProblem& prob, const Vec& c_star, const Mat& J);

struct PwlsResult {
  Vec gamma;
  bool converged = true;
  int sweeps = 0;
};

/// Cyclic coordinate descent for
///   (1/2n) sum_i w_i (ytilde_i - offset_i - X.row(i).(gamma - gamma_init))^2
///   + sum_{k not in unpenalized} p(|gamma_k|),
/// with exact scalar minimization per coordinate.  gamma_init is both the
/// expansion point and the starting iterate.  Stops when no coordinate moves
/// more than 1e-8; flags (not throws) after 10^4 sweeps.
PwlsResult penalized_wls(const Mat& X, const Vec& offset, const Vec& ytilde, const Vec& w,
                         const Penalty& pen, const std::vector<int>& unpenalized,
                         const Vec& gamma_init);

/// Plain penalized regression (1/2n) sum_i w_i (y_i - X.row(i).gamma)^2 + PEN,
/// warm-started at `start`: the offset is the predictor at the start, which
/// makes y - offset the residual penalized_wls expects.
inline PwlsResult penalized_regression(const Mat& X, const Vec& y, const Vec& w,
                                       const Penalty& pen, const std::vector<int>& unpenalized,
                                       const Vec& start) {
  return penalized_wls(X, X * start, y, w, pen, unpenalized, start);
}

/// Shared mutable state of the block-coordinate driver.
struct ProfileState {
  Mat coef;   // m x p basis coefficients
  Mat gamma;  // p x (p+1) structural parameters
};

struct OuterStepResult {
  Vec gamma_j;             // accepted row
  InnerSolution inner;     // inner solution at the accepted row
  double h_before = 0.0;   // H_j at the expansion point
  double h_after = 0.0;    // H_j at the accepted row
  bool descended = true;   // h_after <= h_before + 1e-10
  bool wls_converged = true;
  int backtracks = 0;
};

/// One profiled update of gamma_j: working response + linearized design +
/// penalized WLS, then a fresh inner solve at the candidate.  If H_j rose,
/// the step toward the candidate is halved up to max_backtracks times (each
/// check costs one inner solve); a still-ascending step is accepted and
/// flagged so the descent diagnostic sees it.
OuterStepResult outer_step_at(const InnerProblem& prob_at_tilde, const InnerSolution& sol_at_tilde,
                              const Penalty& pen, int max_backtracks = 4);

/// Convenience form matching the driver state; solves the inner problem at
/// state.gamma.row(j) first.
OuterStepResult outer_step(int j, const ObservationSet& data, const BasisSystem& basis,
                           const BasisTables& tables, double lambda_theta,
                           const ProfileState& state, const Penalty& pen,
                           int max_backtracks = 4);

/// H_j(gamma_j): penalized likelihood with a fresh inner solve at gamma_j.
/// The intercept is never penalized.
double h_value(int j, const Vec& gamma_j, const ObservationSet& data, const BasisSystem& basis,
               const BasisTables& tables, double lambda_theta, const ProfileState& state,
               const Penalty& pen);

}  // namespace odenet
