#include "odenet/inner.hpp"

#include <cmath>
#include <limits>

namespace odenet {

namespace {

// Coefficients of the fixed part of the penalty residual: sum_{k != j} gamma_k c_k.
Vec others_coef(const InnerProblem& prob) {
  Vec o = Vec::Zero(prob.n_basis());
  for (int k = 0; k < prob.p(); ++k) {
    if (k == prob.j) continue;
    const double g = prob.gamma_row[k + 1];
    if (g != 0.0) o += g * prob.all_coef->col(k);
  }
  return o;
}

// Residual r(s_q) = c.h'(s_q) - gamma_0 - sum_k gamma_k theta_k(s_q) at the
// quadrature nodes, with theta_j = c.h.
Vec node_residual(const InnerProblem& prob, const Vec& c, const Vec& o_coef) {
  const BasisTables& t = *prob.tables;
  Vec r = t.deriv_at_nodes.apply(c);
  const Vec combined = o_coef + prob.gamma_row[prob.j + 1] * c;
  r -= t.at_nodes.apply(combined);
  r.array() -= prob.gamma_row[0];
  return r;
}

struct EvalParts {
  double nll = 0.0;
  double penalty = 0.0;
  double value() const { return nll + penalty; }
};

EvalParts eval_value(const InnerProblem& prob, const Vec& c, const Vec& o_coef) {
  EvalParts out;
  const BasisTables& t = *prob.tables;
  const Vec theta = t.at_times.apply(c);
  double acc = 0.0;
  for (int i = 0; i < theta.size(); ++i)
    acc += (*prob.y)[i] * theta[i] - cumulant(prob.family, theta[i], 0);
  out.nll = -acc / prob.n_obs();
  if (prob.lambda_theta > 0.0) {
    const Vec r = node_residual(prob, c, o_coef);
    out.penalty = prob.lambda_theta * r.dot(t.node_weights.cwiseProduct(r));
  }
  return out;
}

}  // namespace

double g_value(const InnerProblem& prob, const Vec& c) {
  return eval_value(prob, c, others_coef(prob)).value();
}

Vec g_gradient(const InnerProblem& prob, const Vec& c) {
  const BasisTables& t = *prob.tables;
  const Vec theta = t.at_times.apply(c);
  Vec u(theta.size());
  for (int i = 0; i < theta.size(); ++i)
    u[i] = (*prob.y)[i] - cumulant(prob.family, theta[i], 1);
  Vec grad = t.at_times.apply_transpose(u) * (-1.0 / prob.n_obs());
  if (prob.lambda_theta > 0.0) {
    const double gjj = prob.gamma_row[prob.j + 1];
    const Vec wr =
        t.node_weights.cwiseProduct(node_residual(prob, c, others_coef(prob)));
    grad += 2.0 * prob.lambda_theta *
            (t.deriv_at_nodes.apply_transpose(wr) - gjj * t.at_nodes.apply_transpose(wr));
  }
  return grad;
}

namespace {

Mat hessian_band(const InnerProblem& prob, const Vec& c) {
  const BasisTables& t = *prob.tables;
  const int m = prob.n_basis();
  Mat band = Mat::Zero(prob.basis->order(), m);
  const Vec theta = t.at_times.apply(c);
  Vec w(theta.size());
  for (int i = 0; i < theta.size(); ++i)
    w[i] = cumulant(prob.family, theta[i], 2) / prob.n_obs();
  t.at_times.add_weighted_gram(w, band);
  if (prob.lambda_theta > 0.0) {
    const double gjj = prob.gamma_row[prob.j + 1];
    const BasisRows pen_rows = axpy(t.deriv_at_nodes, -gjj, t.at_nodes);
    pen_rows.add_weighted_gram(2.0 * prob.lambda_theta * t.node_weights, band);
  }
  return band;
}

}  // namespace

Mat g_hessian(const InnerProblem& prob, const Vec& c) {
  return band_to_dense(hessian_band(prob, c));
}

InnerSolution solve_inner_full(const InnerProblem& prob, Vec c_init) {
  const int m = prob.n_basis();
  InnerSolution sol;
  sol.coef = c_init.size() == 0 ? Vec::Zero(m) : std::move(c_init);
  const Vec o_coef = others_coef(prob);

  EvalParts parts = eval_value(prob, sol.coef, o_coef);
  if (!std::isfinite(parts.value()))
    throw ConvergenceFailure("inner objective non-finite at the starting point", sol.coef);

  for (int iter = 0; iter < 100; ++iter) {
    sol.iterations = iter;
    sol.gradient = g_gradient(prob, sol.coef);
    sol.hessian_band = hessian_band(prob, sol.coef);

    BandedCholesky chol;
    if (!chol.compute(sol.hessian_band)) {
      Mat ridged = sol.hessian_band;
      ridged.row(0).array() += 1e-10;
      if (!chol.compute(ridged))
        throw LinearAlgebraError("inner Hessian not positive definite even with ridge");
    }
    Vec step = -chol.solve(sol.gradient);

    // Step halving keeps G_j non-increasing; Poisson/Bernoulli cumulants can
    // overshoot on the full Newton step.
    double scale = 1.0;
    bool accepted = false;
    bool any_finite = false;
    Vec c_try;
    EvalParts parts_try;
    for (int h = 0; h < 60; ++h, scale *= 0.5) {
      c_try = sol.coef + scale * step;
      parts_try = eval_value(prob, c_try, o_coef);
      const double v = parts_try.value();
      if (!std::isfinite(v)) continue;
      any_finite = true;
      if (v <= parts.value() + 1e-12 * std::max(1.0, std::abs(parts.value()))) {
        accepted = true;
        break;
      }
    }
    if (!any_finite)
      throw ConvergenceFailure("inner objective non-finite on every halved step", sol.coef);
    if (!accepted) break;  // no finite step improves: at the floor of rounding

    const double moved = (scale * step).lpNorm<Eigen::Infinity>();
    sol.coef = std::move(c_try);
    parts = parts_try;
    if (moved <= 1e-8) break;
  }

  // Final state, all evaluated at the returned coefficients.
  sol.gradient = g_gradient(prob, sol.coef);
  sol.hessian_band = hessian_band(prob, sol.coef);
  sol.nll = parts.nll;
  sol.value = parts.value();
  return sol;
}

Mat dc_dgamma(const InnerProblem& prob, const Vec& c_star, double ridge) {
  return dc_dgamma_with_band(prob, c_star, hessian_band(prob, c_star), ridge);
}

Mat dc_dgamma_with_band(const InnerProblem& prob, const Vec& c_star, Mat band, double ridge) {
  const int m = prob.n_basis();
  const int p = prob.p();
  if (prob.lambda_theta == 0.0) return Mat::Zero(m, p + 1);

  if (ridge > 0.0) band.row(0).array() += ridge;
  BandedCholesky chol;
  if (!chol.compute(band))
    throw LinearAlgebraError("inner Hessian singular in dc_dgamma");

  const BasisTables& t = *prob.tables;
  const double two_lambda = 2.0 * prob.lambda_theta;
  const double gjj = prob.gamma_row[prob.j + 1];
  const BasisRows pen_rows = axpy(t.deriv_at_nodes, -gjj, t.at_nodes);
  const Vec o_coef = others_coef(prob);
  const Vec r = node_residual(prob, c_star, o_coef);
  const Vec& w = t.node_weights;

  // Mixed second derivatives d2G / dc dgamma_k, by column.
  Mat mixed(m, p + 1);
  mixed.col(0) = -two_lambda * pen_rows.apply_transpose(w);
  for (int k = 0; k < p; ++k) {
    const Vec theta_k =
        t.at_nodes.apply(k == prob.j ? c_star : Vec(prob.all_coef->col(k)));
    mixed.col(k + 1) = -two_lambda * pen_rows.apply_transpose(w.cwiseProduct(theta_k));
  }
  // The own-equation column picks up the residual term as well.
  mixed.col(prob.j + 1) -= two_lambda * t.at_nodes.apply_transpose(w.cwiseProduct(r));

  return -chol.solve(std::move(mixed));
}

}  // namespace odenet
