#include "odenet/outer.hpp"

#include <cmath>

namespace odenet {

WorkingResponse working_response(const Family& family, const Vec& y, const Vec& theta_tilde) {
  const int n = static_cast<int>(y.size());
  if (theta_tilde.size() != n) throw InvalidData("working response length mismatch");
  WorkingResponse out;
  out.ytilde.resize(n);
  out.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = -y[i] + cumulant(family, theta_tilde[i], 1);
    const double w = std::max(cumulant(family, theta_tilde[i], 2), 1e-10);
    out.w[i] = w;
    out.ytilde[i] = theta_tilde[i] - u / w;
  }
  return out;
}

LinearizedDesign linearized_design(const InnerProblem& prob, const Vec& c_star, const Mat& J) {
  LinearizedDesign out;
  out.offset = prob.tables->at_times.apply(c_star);
  out.X = prob.tables->at_times.apply(J);
  return out;
}

PwlsResult penalized_wls(const Mat& X, const Vec& offset, const Vec& ytilde, const Vec& w,
                         const Penalty& pen, const std::vector<int>& unpenalized,
                         const Vec& gamma_init) {
  const int n = static_cast<int>(X.rows());
  const int q = static_cast<int>(X.cols());
  std::vector<bool> is_free(q, false);
  for (int k : unpenalized) is_free[k] = true;

  PwlsResult out;
  out.gamma = gamma_init;
  // Residual of the working model; the expansion point lands in z.
  Vec r = ytilde - offset;  // equals z - X*gamma at gamma = gamma_init
  Vec col_w(q);
  for (int k = 0; k < q; ++k) col_w[k] = X.col(k).cwiseAbs2().dot(w) / n;
  const double col_floor = 1e-13 * col_w.maxCoeff();

  const int max_sweeps = 10000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    out.sweeps = sweep + 1;
    double max_change = 0.0;
    for (int k = 0; k < q; ++k) {
      if (col_w[k] <= col_floor) continue;  // column carries no information
      const double gk = out.gamma[k];
      double b = 0.0;
      for (int i = 0; i < n; ++i) b += w[i] * X(i, k) * r[i];
      const double zk = b / (n * col_w[k]) + gk;
      const double gnew = is_free[k] ? zk : scalar_update(pen, zk, col_w[k]);
      if (gnew != gk) {
        r -= (gnew - gk) * X.col(k);
        out.gamma[k] = gnew;
        max_change = std::max(max_change, std::abs(gnew - gk));
      }
    }
    if (max_change <= 1e-8) return out;
  }
  out.converged = false;
  return out;
}

namespace {

double penalty_on_row(const Penalty& pen, const Vec& gamma_row) {
  // Intercept gamma_j0 stays unpenalized throughout.
  return penalty_value(pen, gamma_row.tail(gamma_row.size() - 1));
}

}  // namespace

OuterStepResult outer_step_at(const InnerProblem& prob, const InnerSolution& sol,
                              const Penalty& pen, int max_backtracks) {
  OuterStepResult out;
  const Vec& gamma_tilde = prob.gamma_row;
  out.h_before = sol.nll + penalty_on_row(pen, gamma_tilde);

  Mat J;
  try {
    J = dc_dgamma_with_band(prob, sol.coef, sol.hessian_band);
  } catch (const LinearAlgebraError&) {
    J = dc_dgamma_with_band(prob, sol.coef, sol.hessian_band, 1e-10);
  }
  const LinearizedDesign design = linearized_design(prob, sol.coef, J);
  const WorkingResponse wr = working_response(prob.family, *prob.y, design.offset);
  const PwlsResult pw =
      penalized_wls(design.X, design.offset, wr.ytilde, wr.w, pen, {0}, gamma_tilde);
  out.wls_converged = pw.converged;

  Vec candidate = pw.gamma;
  InnerProblem prob_try = prob;
  for (int bt = 0;; ++bt) {
    prob_try.gamma_row = candidate;
    InnerSolution sol_try = solve_inner_full(prob_try, sol.coef);
    out.h_after = sol_try.nll + penalty_on_row(pen, candidate);
    out.gamma_j = candidate;
    out.inner = std::move(sol_try);
    out.backtracks = bt;
    if (out.h_after <= out.h_before + 1e-10 || bt >= max_backtracks) break;
    candidate = gamma_tilde + 0.5 * (candidate - gamma_tilde);
  }
  out.descended = out.h_after <= out.h_before + 1e-10;
  return out;
}

OuterStepResult outer_step(int j, const ObservationSet& data, const BasisSystem& basis,
                           const BasisTables& tables, double lambda_theta,
                           const ProfileState& state, const Penalty& pen, int max_backtracks) {
  const Vec y_j = data.y.col(j);
  InnerProblem prob{j,      &y_j,   data.families[j], state.gamma.row(j).transpose(),
                    &state.coef, &basis, &tables,      lambda_theta};
  const InnerSolution sol = solve_inner_full(prob, state.coef.col(j));
  return outer_step_at(prob, sol, pen, max_backtracks);
}

double h_value(int j, const Vec& gamma_j, const ObservationSet& data, const BasisSystem& basis,
               const BasisTables& tables, double lambda_theta, const ProfileState& state,
               const Penalty& pen) {
  const Vec y_j = data.y.col(j);
  InnerProblem prob{j,      &y_j,   data.families[j], gamma_j,
                    &state.coef, &basis, &tables,      lambda_theta};
  const InnerSolution sol = solve_inner_full(prob, state.coef.col(j));
  return sol.nll + penalty_on_row(pen, gamma_j);
}

}  // namespace odenet
