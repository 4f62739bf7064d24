#pragma once

#include "odenet/banded.hpp"
#include "odenet/basis.hpp"
#include "odenet/expfam.hpp"
#include "odenet/model.hpp"

namespace odenet {

/// One process's penalized-likelihood smoothing problem given its ODE row:
///
///   G_j(c) = -(1/n) sum_i { y_i c.h(t_i) - b(c.h(t_i)) }
///            + lambda_theta * int_0^1 { c.h'(t) - gamma_0 - sum_k gamma_k theta_k(t) }^2 dt
///
/// where theta_j inside the penalty is c.h(t) and the other processes come
/// from the columns k != j of `all_coef`.  Pointers are non-owning views into
/// the driver's state; the problem reads them only.
struct InnerProblem {
  int j = 0;
  const Vec* y = nullptr;        // n observations of process j
  Family family;
  Vec gamma_row;                 // p+1 values (gamma_j0, gamma_j1, ..., gamma_jp)
  const Mat* all_coef = nullptr; // m x p; column j is ignored
  const BasisSystem* basis = nullptr;
  const BasisTables* tables = nullptr;
  double lambda_theta = 0.0;

  int n_obs() const { return static_cast<int>(y->size()); }
  int n_basis() const { return basis->size(); }
  int p() const { return static_cast<int>(all_coef->cols()); }
};

double g_value(const InnerProblem& prob, const Vec& c);
Vec g_gradient(const InnerProblem& prob, const Vec& c);
/// Dense m x m symmetric Hessian; banded internally with kd = order-1.
Mat g_hessian(const InnerProblem& prob, const Vec& c);

struct InnerSolution {
  Vec coef;
  double value = 0.0;       // G_j at coef
  double nll = 0.0;         // likelihood part alone (the H_j building block)
  Vec gradient;             // gradient at coef
  Mat hessian_band;         // lower band at coef
  int iterations = 0;
};

/// Newton with step halving from c_init (zeros if empty); stops when the
/// accepted step has sup-norm <= 1e-8 or after 100 iterations.  Singular
/// Hessians fall back once to a 1e-10 ridge.  Throws ConvergenceFailure if
/// the objective is non-finite on a full step and every halving of it.
InnerSolution solve_inner_full(const InnerProblem& prob, Vec c_init);

inline Vec solve_inner(const InnerProblem& prob, Vec c_init) {
  return solve_inner_full(prob, std::move(c_init)).coef;
}

/// Implicit-function derivative of the inner solution,
///   dc*/dgamma^T = -[d2G/dc dc^T]^{-1} [d2G/dc dgamma^T],  an m x (p+1) matrix.
/// ridge is added to the Hessian diagonal before factoring; throws
/// LinearAlgebraError when the (ridged) Hessian is not positive definite.
Mat dc_dgamma(const InnerProblem& prob, const Vec& c_star, double ridge = 0.0);

/// Same, reusing a Hessian band already assembled at c_star.
Mat dc_dgamma_with_band(const InnerProblem& prob, const Vec& c_star, Mat hessian_band,
                        double ridge = 0.0);

}  // namespace odenet
