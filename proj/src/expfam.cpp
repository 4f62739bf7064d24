#include "odenet/expfam.hpp"

#include <cmath>

#include "odenet/rng.hpp"

namespace odenet {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::bernoulli: return "bernoulli";
  }
  return "?";
}

FamilyKind family_from_name(const std::string& name) {
  if (name == "gaussian") return FamilyKind::gaussian;
  if (name == "poisson") return FamilyKind::poisson;
  if (name == "bernoulli") return FamilyKind::bernoulli;
  throw InvalidConfig("unknown family: " + name);
}

double cumulant(const Family& family, double theta, int deriv) {
  switch (family.kind) {
    case FamilyKind::gaussian:
      return deriv == 0 ? 0.5 * theta * theta : deriv == 1 ? theta : 1.0;
    case FamilyKind::poisson:
      return std::exp(theta);
    case FamilyKind::bernoulli: {
      if (deriv == 0) return softplus(theta);
      const double mu = sigmoid(theta);
      return deriv == 1 ? mu : mu * (1.0 - mu);
    }
  }
  return 0.0;
}

double neg_loglik(const Family& family, const Vec& y, const Vec& theta) {
  if (y.size() != theta.size()) throw InvalidData("observation/parameter length mismatch");
  check_support(family, y);
  double acc = 0.0;
  for (int i = 0; i < y.size(); ++i) acc += y[i] * theta[i] - cumulant(family, theta[i], 0);
  return -acc / static_cast<double>(y.size());
}

void check_support(const Family& family, const Vec& y) {
  switch (family.kind) {
    case FamilyKind::gaussian:
      return;
    case FamilyKind::poisson:
      for (int i = 0; i < y.size(); ++i)
        if (!(y[i] >= 0.0) || y[i] != std::floor(y[i]))
          throw InvalidData("poisson observations must be nonnegative integers");
      return;
    case FamilyKind::bernoulli:
      for (int i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw InvalidData("bernoulli observations must be 0 or 1");
      return;
  }
}

Vec sample(const Family& family, const Vec& theta, std::uint64_t seed) {
  Rng rng(seed);
  Vec y(theta.size());
  switch (family.kind) {
    case FamilyKind::gaussian:
      for (int i = 0; i < theta.size(); ++i) y[i] = theta[i] + family.sigma * rng.normal();
      break;
    case FamilyKind::poisson:
      for (int i = 0; i < theta.size(); ++i) y[i] = rng.poisson(std::exp(theta[i]));
      break;
    case FamilyKind::bernoulli:
      for (int i = 0; i < theta.size(); ++i) y[i] = rng.bernoulli(sigmoid(theta[i]));
      break;
  }
  return y;
}

}  // namespace odenet
