#pragma once

#include "odenet/types.hpp"

namespace odenet {

enum class PenaltyKind { lasso, scad };

struct Penalty {
  PenaltyKind kind = PenaltyKind::lasso;
  double lambda = 0.0;
  double a = 3.7;  // SCAD shape

  static Penalty lasso(double lambda) {
    if (!(lambda >= 0.0)) throw InvalidConfig("penalty lambda must be nonnegative");
    return Penalty{PenaltyKind::lasso, lambda, 3.7};
  }
  static Penalty scad(double lambda, double a = 3.7) {
    if (!(lambda >= 0.0)) throw InvalidConfig("penalty lambda must be nonnegative");
    if (!(a > 2.0)) throw InvalidConfig("scad shape parameter must exceed 2");
    return Penalty{PenaltyKind::scad, lambda, a};
  }
  Penalty with_lambda(double lambda) const {
    Penalty out = *this;
    out.lambda = lambda;
    return out;
  }
};

/// SCAD marginal p_lambda(u) for u >= 0: lambda*u on [0, lambda], a quadratic
/// blend on (lambda, a*lambda), constant (a+1)*lambda^2/2 beyond.
double scad_marginal(double u, double lambda, double a);

/// Lasso: lambda * ||v||_1.  SCAD: sum of marginals of |v_k|.
double penalty_value(const Penalty& pen, const Vec& v);

/// argmin over g of (w/2)(g - z)^2 + p(|g|), exactly.  w must be positive.
double scalar_update(const Penalty& pen, double z, double w);

}  // namespace odenet
