#pragma once

#include <vector>

#include "odenet/basis.hpp"
#include "odenet/expfam.hpp"
#include "odenet/types.hpp"

namespace odenet {

/// Intercepts and interaction weights of the linear ODE system,
/// theta_j'(t) = gamma(j,0) + sum_k gamma(j,k) theta_k(t).
/// Row j is (gamma_j0, gamma_j1, ..., gamma_jp); exact zeros in columns
/// 1..p define the recovered network.
struct StructuralParams {
  Mat gamma;  // p x (p+1)

  StructuralParams() = default;
  explicit StructuralParams(Mat g) : gamma(std::move(g)) {
    if (gamma.cols() != gamma.rows() + 1)
      throw InvalidConfig("structural matrix must be p x (p+1)");
  }
  static StructuralParams zero(int p) { return StructuralParams(Mat::Zero(p, p + 1)); }

  int p() const { return static_cast<int>(gamma.rows()); }
  double intercept(int j) const { return gamma(j, 0); }
  /// Interaction block (columns 1..p) as a p x p view.
  Eigen::Block<const Mat> weights() const { return gamma.block(0, 1, p(), p()); }
  int nonzero_weights() const { return static_cast<int>((weights().array() != 0.0).count()); }
};

/// Observations of all processes on a common, strictly increasing time grid
/// rescaled to [0,1].  time_offset/time_scale restore original units:
/// t_original = time_offset + time_scale * t.
struct ObservationSet {
  Vec times;  // n, in [0,1]
  Mat y;      // n x p
  std::vector<Family> families;
  double time_offset = 0.0;
  double time_scale = 1.0;

  int n() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
  void validate() const;
};

/// Basis-coefficient matrix for all latent processes: theta_j(t) = coef.col(j) . h(t).
struct ProcessFit {
  BasisSystem basis;
  Mat coef;  // m x p

  ProcessFit(BasisSystem b, Mat c) : basis(std::move(b)), coef(std::move(c)) {
    if (coef.rows() != basis.size()) throw InvalidConfig("coefficient rows must match basis size");
  }

  int p() const { return static_cast<int>(coef.cols()); }
  /// theta_j(t) or its derivative.
  double value(int j, double t, int deriv = 0) const;
  /// All processes at a set of points, as a points x p matrix.
  Mat values(const Vec& ts, int deriv = 0) const;
};

/// Right-hand side gamma_j0 + sum_k gamma_jk theta_k for all j.
Vec ode_rhs(const StructuralParams& sp, const Vec& theta);

/// Aggregated squared ODE residual, sum_j int_0^1 {theta_j' - rhs_j}^2 dt,
/// by the basis quadrature rule.
double ode_fidelity(const ProcessFit& fit, const StructuralParams& sp);

}  // namespace odenet
