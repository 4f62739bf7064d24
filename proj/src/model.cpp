#include "odenet/model.hpp"

#include <cmath>

namespace odenet {

void ObservationSet::validate() const {
  if (times.size() != y.rows()) throw InvalidData("times and observation rows disagree");
  if (static_cast<int>(families.size()) != p()) throw InvalidData("family tags must match columns");
  for (int i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0 && times[i] <= 1.0)) throw InvalidData("times must lie in [0,1]");
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidData("times must be strictly increasing");
  }
  for (int j = 0; j < p(); ++j) check_support(families[j], y.col(j));
}

double ProcessFit::value(int j, double t, int deriv) const {
  std::vector<double> loc(basis.order());
  const int first = basis.eval_local(t, deriv, loc.data());
  double acc = 0.0;
  for (int k = 0; k < basis.order(); ++k) acc += loc[k] * coef(first + k, j);
  return acc;
}

Mat ProcessFit::values(const Vec& ts, int deriv) const {
  return tabulate(basis, ts, deriv).apply(coef);
}

Vec ode_rhs(const StructuralParams& sp, const Vec& theta) {
  if (theta.size() != sp.p()) throw InvalidData("state dimension must match structural matrix");
  return sp.gamma.col(0) + sp.weights() * theta;
}

double ode_fidelity(const ProcessFit& fit, const StructuralParams& sp) {
  if (sp.p() != fit.p()) throw InvalidData("structural matrix and fit dimension disagree");
  const Vec& nodes = fit.basis.quadrature().nodes;
  const Vec& w = fit.basis.quadrature().weights;
  const Mat theta = tabulate(fit.basis, nodes, 0).apply(fit.coef);   // Q x p
  const Mat dtheta = tabulate(fit.basis, nodes, 1).apply(fit.coef);  // Q x p
  double acc = 0.0;
  for (int q = 0; q < nodes.size(); ++q) {
    const Vec resid =
        dtheta.row(q).transpose() - sp.gamma.col(0) - sp.weights() * theta.row(q).transpose();
    acc += w[q] * resid.squaredNorm();
  }
  return acc;
}

}  // namespace odenet
