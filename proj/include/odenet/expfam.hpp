#pragma once

#include <cstdint>

#include "odenet/types.hpp"

namespace odenet {

enum class FamilyKind { gaussian, poisson, bernoulli };

/// Exponential-family tag for one observed process.  sigma is the Gaussian
/// noise standard deviation; it enters data generation and SNR accounting
/// only, never the fitting criteria (dispersion is absorbed by the tuning).
struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  double sigma = 1.0;

  static Family gaussian(double sigma = 1.0) {
    if (!(sigma >= 0.0)) throw InvalidConfig("gaussian sigma must be nonnegative");
    return Family{FamilyKind::gaussian, sigma};
  }
  static Family poisson() { return Family{FamilyKind::poisson, 0.0}; }
  static Family bernoulli() { return Family{FamilyKind::bernoulli, 0.0}; }
};

const char* family_name(FamilyKind kind);
FamilyKind family_from_name(const std::string& name);

/// b(theta), b'(theta) or b''(theta) of the canonical cumulant.
/// Gaussian: theta^2/2, theta, 1.  Poisson: exp everywhere.
/// Bernoulli: softplus, sigmoid, sigmoid*(1-sigmoid); overflow-safe.
double cumulant(const Family& family, double theta, int deriv);

/// -(1/n) sum_i { y_i theta_i - b(theta_i) }.
double neg_loglik(const Family& family, const Vec& y, const Vec& theta);

/// Throws InvalidData if y violates the family support.
void check_support(const Family& family, const Vec& y);

/// One i.i.d. draw per canonical-parameter entry; deterministic given seed.
Vec sample(const Family& family, const Vec& theta, std::uint64_t seed);

}  // namespace odenet
