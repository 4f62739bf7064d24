#include <doctest.h>

#include "odenet/expfam.hpp"
#include "odenet/rng.hpp"

using namespace odenet;

TEST_CASE("cumulant values at the anchors") {
  CHECK(cumulant(Family::gaussian(), 2.0, 0) == doctest::Approx(2.0));
  CHECK(cumulant(Family::poisson(), 0.0, 1) == doctest::Approx(1.0));
  CHECK(cumulant(Family::bernoulli(), 0.0, 2) == doctest::Approx(0.25));
  // Overflow-safe tails.
  CHECK(std::isfinite(cumulant(Family::bernoulli(), 800.0, 0)));
  CHECK(cumulant(Family::bernoulli(), 800.0, 0) == doctest::Approx(800.0));
  CHECK(cumulant(Family::bernoulli(), -800.0, 0) == doctest::Approx(0.0));
}

TEST_CASE("cumulant derivatives agree with finite differences") {
  Rng rng(11);
  for (const Family& fam : {Family::gaussian(), Family::poisson(), Family::bernoulli()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const double theta = 10.0 * rng.uniform() - 5.0;
      const double eps = 1e-5;
      for (int d : {0, 1}) {
        const double fd =
            (cumulant(fam, theta + eps, d) - cumulant(fam, theta - eps, d)) / (2 * eps);
        const double analytic = cumulant(fam, theta, d + 1);
        CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
      }
    }
  }
}

TEST_CASE("cumulant convexity on a wide grid") {
  for (const Family& fam : {Family::gaussian(), Family::poisson(), Family::bernoulli()})
    for (double theta = -30.0; theta <= 30.0; theta += 0.25)
      CHECK(cumulant(fam, theta, 2) >= 0.0);
}

TEST_CASE("neg_loglik anchors and errors") {
  CHECK(neg_loglik(Family::gaussian(), Vec::Zero(1), Vec::Zero(1)) == doctest::Approx(0.0));
  CHECK(neg_loglik(Family::poisson(), Vec::Ones(1), Vec::Zero(1)) == doctest::Approx(1.0));
  CHECK(neg_loglik(Family::bernoulli(), Vec::Ones(1), Vec::Zero(1)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(neg_loglik(Family::gaussian(), Vec::Zero(2), Vec::Zero(3)), InvalidData);
  Vec bad(1);
  bad << 0.5;
  CHECK_THROWS_AS(neg_loglik(Family::bernoulli(), bad, Vec::Zero(1)), InvalidData);
  bad << -1.0;
  CHECK_THROWS_AS(neg_loglik(Family::poisson(), bad, Vec::Zero(1)), InvalidData);
}

TEST_CASE("neg_loglik is convex along random segments") {
  Rng rng(21);
  for (const Family& fam : {Family::gaussian(), Family::poisson(), Family::bernoulli()}) {
    for (int trial = 0; trial < 50; ++trial) {
      Vec a(4), b(4), y(4);
      for (int i = 0; i < 4; ++i) {
        a[i] = 2.0 * rng.normal();
        b[i] = 2.0 * rng.normal();
      }
      const Vec theta_data = 0.5 * (a + b);
      y = sample(fam, theta_data, 1000 + trial);
      const double mid = neg_loglik(fam, y, 0.5 * (a + b));
      const double ends = 0.5 * (neg_loglik(fam, y, a) + neg_loglik(fam, y, b));
      CHECK(mid <= ends + 1e-12);
    }
  }
}

TEST_CASE("samplers are deterministic and hit their means") {
  const Vec theta = Vec::Constant(100000, std::log(4.0));
  const Vec a = sample(Family::poisson(), theta, 42);
  const Vec b = sample(Family::poisson(), theta, 42);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.mean() == doctest::Approx(4.0).epsilon(0.025));

  const Vec bern = sample(Family::bernoulli(), Vec::Zero(100000), 7);
  CHECK(bern.mean() == doctest::Approx(0.5).epsilon(0.02));

  const Vec exact = sample(Family::gaussian(0.0), Vec::Constant(5, 3.25), 9);
  CHECK((exact.array() == 3.25).all());

  const Vec gauss = sample(Family::gaussian(2.0), Vec::Zero(100000), 11);
  CHECK(gauss.mean() == doctest::Approx(0.0).epsilon(0.05));
  CHECK(std::sqrt(gauss.squaredNorm() / gauss.size()) == doctest::Approx(2.0).epsilon(0.02));
}
