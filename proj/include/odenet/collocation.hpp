#pragma once

#include "odenet/fit_result.hpp"
#include "odenet/outer.hpp"

namespace odenet {

/// Exponential-family smoothing of each process over the spline space with a
/// curvature penalty lambda_s * int (theta'')^2.  A negative roughness value
/// requests the automatic grid search minimizing nll + df*log(n)/n, with df
/// the trace of the working-weight smoother.
struct SmoothConfig {
  BasisSystem basis;
  double roughness_lambda = -1.0;  // < 0: choose from the grid below
  std::vector<double> lambda_grid;

  explicit SmoothConfig(BasisSystem b) : basis(std::move(b)) {
    for (int e = -12; e <= 0; ++e) lambda_grid.push_back(std::pow(10.0, e));
  }
};

ProcessFit smooth_processes(const ObservationSet& data, const SmoothConfig& cfg);

/// The regression stage of the vanilla two-step method, usable with any
/// process fit (e.g. exact projections in tests): per equation j, penalized
/// least squares of the fitted derivative on the fitted processes over the
/// quadrature nodes.  The grid is traversed from its largest value down with
/// warm starts; lambda is selected by BIC on the integrated residuals.
FitResult vanilla_gamma(const ProcessFit& smooths, const ObservationSet& data, const Penalty& pen,
                        const std::vector<double>& lambda_grid);

FitResult fit_vanilla(const ObservationSet& data, const BasisSystem& basis, const Penalty& pen,
                      const std::vector<double>& lambda_grid);

/// Antiderivatives of the fitted processes, evaluable anywhere in [0,1] via
/// per-interval Gauss-Legendre partial sums (exact for the spline integrand).
/// Holds a reference to the fit, which must outlive this object.
class IntegratedProcesses {
 public:
  explicit IntegratedProcesses(const ProcessFit& fit);

  double value(int k, double t) const;
  /// ts x p matrix of all antiderivative values.
  Mat values(const Vec& ts) const;

 private:
  const ProcessFit* fit_;
  Vec breaks_;
  Mat cumulative_;  // breaks x p, integral from 0 to each breakpoint
  Vec gl_nodes_, gl_weights_;
};

inline IntegratedProcesses integrated_processes(const ProcessFit& fit) {
  return IntegratedProcesses(fit);
}

/// GRADE: penalized exponential-family regression of the observations on
/// [1, t, integrated processes], fitted by IRLS around penalized WLS.
FitResult grade_gamma(const ProcessFit& smooths, const ObservationSet& data, const Penalty& pen,
                      const std::vector<double>& lambda_grid);

FitResult fit_grade(const ObservationSet& data, const BasisSystem& basis, const Penalty& pen,
                    const std::vector<double>& lambda_grid);

/// Default sparsity-grid choices for the two-step methods.
std::vector<double> default_two_step_grid();

}  // namespace odenet
