#include "odenet/penalties.hpp"

#include <algorithm>
#include <cmath>

namespace odenet {

double scad_marginal(double u, double lambda, double a) {
  if (u <= lambda) return lambda * u;
  if (u < a * lambda) return -(u * u - 2.0 * a * lambda * u + lambda * lambda) / (2.0 * (a - 1.0));
  return 0.5 * (a + 1.0) * lambda * lambda;
}

double penalty_value(const Penalty& pen, const Vec& v) {
  if (pen.kind == PenaltyKind::lasso) return pen.lambda * v.lpNorm<1>();
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += scad_marginal(std::abs(v[i]), pen.lambda, pen.a);
  return acc;
}

namespace {

double soft_threshold(double z, double t) {
  return std::copysign(std::max(std::abs(z) - t, 0.0), z);
}

}  // namespace

double scalar_update(const Penalty& pen, double z, double w) {
  if (!(w > 0.0)) throw InvalidConfig("scalar_update weight must be positive");
  const double lambda = pen.lambda;
  if (lambda == 0.0) return z;
  if (pen.kind == PenaltyKind::lasso) return soft_threshold(z, lambda / w);

  // SCAD: the objective is piecewise quadratic in |g|; collect the stationary
  // point of each branch (clipped to its region) plus the region boundaries
  // and keep the best.  This stays exact even when w(a-1) <= 1 makes the
  // middle branch nonconcave.
  const double a = pen.a;
  const double s = z >= 0.0 ? 1.0 : -1.0;
  const double az = std::abs(z);
  double best_g = 0.0;
  double best_f = 0.5 * w * z * z;  // g = 0
  auto consider = [&](double g_abs) {
    g_abs = std::max(0.0, g_abs);
    const double g = s * g_abs;
    const double f = 0.5 * w * (g - z) * (g - z) + scad_marginal(g_abs, lambda, a);
    if (f < best_f) {
      best_f = f;
      best_g = g;
    }
  };
  consider(std::min(soft_threshold(az, lambda / w), lambda));  // inner branch
  const double denom = w * (a - 1.0) - 1.0;
  if (denom > 0.0) {
    const double mid = (w * (a - 1.0) * az - a * lambda) / denom;
    consider(std::clamp(mid, lambda, a * lambda));
  } else {
    consider(lambda);
    consider(a * lambda);
  }
  if (az >= a * lambda) consider(az);  // flat branch: unbiased identity
  consider(a * lambda);
  return best_g;
}

}  // namespace odenet
