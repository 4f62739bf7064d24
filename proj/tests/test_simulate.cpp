#include <doctest.h>

#include "odenet/simulate.hpp"
#include "testutil.hpp"

using namespace odenet;
using namespace odenet::testutil;

TEST_CASE("oscillator truth satisfies its own system exactly") {
  for (bool corrected : {true, false}) {
    const OscillatorTruth truth = oscillator_truth(7, corrected);
    const StructuralParams g = truth.gamma_true();
    for (double t : {0.0, 0.2, 0.31, 0.77, 1.0}) {
      Vec state(8), deriv(8);
      for (int j = 0; j < 8; ++j) {
        state[j] = truth.theta(j, t);
        deriv[j] = truth.dtheta(j, t);
      }
      CHECK((deriv - ode_rhs(g, state)).lpNorm<Eigen::Infinity>() <=
            1e-9 * std::max(1.0, state.lpNorm<Eigen::Infinity>()));
    }
    // Initial state is (sin(y_k), cos(y_k)) for each pair.
    for (int pair = 0; pair < 4; ++pair) {
      CHECK(truth.theta(2 * pair, 0.0) == doctest::Approx(std::sin(truth.phases[pair])));
      CHECK(truth.theta(2 * pair + 1, 0.0) == doctest::Approx(std::cos(truth.phases[pair])));
    }
    CHECK(truth.gamma_true().nonzero_weights() == 8);
  }
}

TEST_CASE("projected truth has vanishing fidelity under the true system") {
  const OscillatorTruth truth = oscillator_truth(9);
  const BasisSystem basis = make_bspline_basis(400, 6);
  Mat coef(basis.size(), 8);
  for (int j = 0; j < 8; ++j)
    coef.col(j) = project(basis, [&](double t) { return truth.theta(j, t); });
  CHECK(ode_fidelity(ProcessFit(basis, coef), truth.gamma_true()) <= 1e-6);
}

TEST_CASE("observation generation per family") {
  const OscillatorTruth truth = oscillator_truth(21);
  const ObservationSet exact = generate_observations(
      truth, FamilyKind::gaussian, 50, std::numeric_limits<double>::infinity(), 22);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(exact.y(i, j) == truth.theta(j, exact.times[i]));

  // SNR controls the per-process noise scale.
  const ObservationSet noisy = generate_observations(truth, FamilyKind::gaussian, 10000, 10.0, 23);
  for (int j = 0; j < 8; ++j) {
    Vec theta(10000);
    for (int i = 0; i < 10000; ++i) theta[i] = truth.theta(j, noisy.times[i]);
    const Vec eps = noisy.y.col(j) - theta;
    const double sd_eps = std::sqrt(eps.squaredNorm() / (eps.size() - 1));
    const double sd_theta =
        std::sqrt((theta.array() - theta.mean()).square().sum() / (theta.size() - 1));
    CHECK(sd_eps / sd_theta == doctest::Approx(0.1).epsilon(0.2));
  }

  const ObservationSet pois = generate_observations(truth, FamilyKind::poisson, 200, 10.0, 24);
  check_support(Family::poisson(), pois.y.col(0));
  const ObservationSet bern = generate_observations(truth, FamilyKind::bernoulli, 200, 10.0, 25);
  check_support(Family::bernoulli(), bern.y.col(3));

  CHECK_THROWS_AS(generate_observations(truth, FamilyKind::gaussian, 1, 10.0, 1), InvalidConfig);
  CHECK_THROWS_AS(generate_observations(truth, FamilyKind::gaussian, 50, -1.0, 1), InvalidConfig);
}

TEST_CASE("metrics at the exact answer and at the empty answer") {
  const OscillatorTruth truth = oscillator_truth(31);
  const BasisSystem basis = make_bspline_basis(300, 6);
  Mat coef(basis.size(), 8);
  for (int j = 0; j < 8; ++j)
    coef.col(j) = project(basis, [&](double t) { return truth.theta(j, t); });
  const ProcessFit fit(basis, coef);
  const Vec times = Vec::LinSpaced(300, 0.0, 1.0);

  const Metrics exact = evaluate(fit, truth.gamma_true(), truth, times);
  CHECK(exact.mse_theta <= 1e-10);
  CHECK(exact.mse_dtheta <= 1e-6);
  CHECK(exact.rmse_gamma == 0.0);
  CHECK(exact.tpr == 1.0);
  CHECK(exact.fpr == 0.0);

  const Metrics empty = evaluate(fit, StructuralParams::zero(8), truth, times);
  CHECK(empty.tpr == 0.0);
  CHECK(empty.fpr == 0.0);
  // rms over the eight true frequencies: sqrt(mean of (2k pi)^2 twice each).
  double want = 0.0;
  for (int k = 1; k <= 4; ++k) want += 2.0 * std::pow(2.0 * k * M_PI, 2);
  want = std::sqrt(want / 8.0);
  CHECK(empty.rmse_gamma == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("fpr counts structural false positives over all true zeros") {
  // Hand-built 2-process instance: truth has one nonzero interaction, so the
  // true zeros number 3 interactions + 2 intercepts = 5.
  Mat gt = Mat::Zero(2, 3);
  gt(0, 2) = 1.5;
  Mat gh = Mat::Zero(2, 3);
  gh(0, 2) = 1.2;  // the true positive, recovered
  gh(1, 1) = 0.3;  // one false positive
  gh(0, 0) = 9.9;  // intercepts never count
  const BasisSystem basis = make_bspline_basis(12, 2);
  const ProcessFit fit(basis, Mat::Zero(basis.size(), 2));
  const Metrics m = evaluate_against(Mat::Zero(5, 2), Mat::Zero(5, 2), StructuralParams(gt),
                                     fit, StructuralParams(gh), Vec::LinSpaced(5, 0.0, 1.0));
  CHECK(m.tpr == 1.0);
  CHECK(m.fpr == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("summaries and degenerate intervals") {
  const Summary one = summarize({2.0});
  CHECK(one.degenerate);
  CHECK(one.mean == 2.0);
  CHECK(one.lo == 2.0);
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.lo < s.mean);
  CHECK(!s.degenerate);
}

TEST_CASE("benchmark is reproducible and scheduling-independent") {
  BenchmarkConfig cfg;
  cfg.families = {FamilyKind::gaussian};
  cfg.sizes = {60};
  cfg.snrs = {10.0};
  cfg.reps = 3;
  cfg.methods = {"vanilla", "grade"};
  cfg.seed = 99;
  cfg.workers = 1;
  const std::string a = run_benchmark(cfg).to_csv();
  const std::string b = run_benchmark(cfg).to_csv();
  CHECK(a == b);
  cfg.workers = 2;
  const std::string c = run_benchmark(cfg).to_csv();
  CHECK(a == c);
  CHECK(a.find("vanilla,mse_theta") != std::string::npos);
  // All requested cells are present: 2 methods x 5 metrics + header.
  CHECK(std::count(a.begin(), a.end(), '\n') == 11);
}
