#include <doctest.h>

#include "odenet/collocation.hpp"
#include "testutil.hpp"

using namespace odenet;
using namespace odenet::testutil;

namespace {

ObservationSet oscillator_data(FamilyKind kind, int n, double snr, std::uint64_t seed) {
  return generate_observations(oscillator_truth(seed), kind, n, snr, seed + 1);
}

}  // namespace

TEST_CASE("smoothing interpolates noiseless gaussian data at tiny lambda") {
  const BasisSystem basis = make_bspline_basis(24, 4);
  const OscillatorTruth truth = oscillator_truth(301);
  ObservationSet data;
  data.times = Vec::LinSpaced(24, 0.0, 1.0);
  data.y.resize(24, 1);
  for (int i = 0; i < 24; ++i) data.y(i, 0) = truth.theta(0, data.times[i]);
  data.families = {Family::gaussian()};

  SmoothConfig cfg(basis);
  cfg.roughness_lambda = 1e-14;
  const ProcessFit fit = smooth_processes(data, cfg);
  // m < n here, so the penalty-free limit is the regression spline: the fit
  // must match the least-squares projection onto the basis at the data.
  const BasisRows rows = tabulate(basis, data.times, 0);
  Mat design(24, basis.size());
  design.setZero();
  for (int i = 0; i < 24; ++i)
    for (int k = 0; k < basis.order(); ++k) design(i, rows.first[i] + k) = rows.vals(i, k);
  const Vec ls = (design.transpose() * design).ldlt().solve(design.transpose() * data.y.col(0));
  const Vec ls_fitted = design * ls;
  for (int i = 0; i < 24; ++i)
    CHECK(fit.value(0, data.times[i]) == doctest::Approx(ls_fitted[i]).epsilon(1e-7));
}

TEST_CASE("smoothing tends to the best line as lambda grows") {
  const BasisSystem basis = make_bspline_basis(30, 4);
  Rng rng(310);
  ObservationSet data;
  data.times = Vec::LinSpaced(30, 0.0, 1.0);
  data.y.resize(30, 1);
  for (int i = 0; i < 30; ++i) data.y(i, 0) = 1.0 + 2.0 * data.times[i] + 0.3 * rng.normal();
  data.families = {Family::gaussian()};

  SmoothConfig cfg(basis);
  cfg.roughness_lambda = 1e3;  // far past the data scale but well conditioned
  const ProcessFit fit = smooth_processes(data, cfg);
  // Compare against the ordinary least-squares line.
  Mat X(30, 2);
  X.col(0).setOnes();
  X.col(1) = data.times;
  const Vec line = (X.transpose() * X).ldlt().solve(X.transpose() * data.y.col(0));
  const double slope_mid = fit.value(0, 0.5, 1);
  CHECK(slope_mid == doctest::Approx(line[1]).epsilon(1e-3));
  // Curvature is squeezed out.
  for (double t : {0.2, 0.5, 0.8}) CHECK(std::abs(fit.value(0, t, 2)) < 1e-2);
}

TEST_CASE("poisson smoothing of a sine intensity recovers the process") {
  const int n = 500;
  const OscillatorTruth truth = oscillator_truth(320);
  ObservationSet data;
  data.times = Vec::LinSpaced(n, 0.0, 1.0);
  data.y.resize(n, 1);
  Vec theta(n);
  for (int i = 0; i < n; ++i) theta[i] = std::sin(2.0 * M_PI * data.times[i]);
  data.y.col(0) = sample(Family::poisson(), theta, 321);
  data.families = {Family::poisson()};

  const ProcessFit fit = smooth_processes(data, SmoothConfig(make_bspline_basis(n)));
  double mse = 0.0;
  for (int i = 0; i < n; ++i) mse += std::pow(fit.value(0, data.times[i]) - theta[i], 2);
  mse /= n;
  CHECK(mse <= 0.05);
}

TEST_CASE("auto smoothing matches the best grid point by its own score") {
  const ObservationSet data = oscillator_data(FamilyKind::gaussian, 60, 10.0, 330);
  const ProcessFit fit = smooth_processes(data, SmoothConfig(make_bspline_basis(60)));
  // Fitted processes must be finite and close to the data scale.
  const Mat theta = fit.values(data.times, 0);
  CHECK(theta.allFinite());
  CHECK((theta - data.y).array().abs().maxCoeff() < 3.0);
}

TEST_CASE("vanilla with exact smooths and lambda 0 recovers the truth") {
  const OscillatorTruth truth = oscillator_truth(340);
  const BasisSystem basis = make_bspline_basis(500, 6);
  Mat coef(basis.size(), 8);
  for (int j = 0; j < 8; ++j)
    coef.col(j) = project(basis, [&](double t) { return truth.theta(j, t); });
  const ProcessFit smooths(basis, coef);
  ObservationSet data = oscillator_data(FamilyKind::gaussian, 500,
                                        std::numeric_limits<double>::infinity(), 340);

  const FitResult r = vanilla_gamma(smooths, data, Penalty::lasso(0.0), {0.0});
  CHECK((r.gamma_hat.gamma - truth.gamma_true().gamma).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("vanilla lambda-zero solution matches the Gram normal equations") {
  Rng rng(350);
  const BasisSystem basis = make_bspline_basis(40, 5);
  const int p = 3;
  Mat coef(basis.size(), p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < basis.size(); ++i) coef(i, j) = rng.normal();
  const ProcessFit smooths(basis, coef);
  ObservationSet data;
  data.times = Vec::LinSpaced(40, 0.0, 1.0);
  data.y = Mat::Zero(40, p);
  data.families = {Family::gaussian(), Family::gaussian(), Family::gaussian()};

  const FitResult r = vanilla_gamma(smooths, data, Penalty::lasso(0.0), {0.0});

  // Independent route: Gram-matrix normal equations from the quadrature.
  const Vec& nodes = basis.quadrature().nodes;
  const Vec& w = basis.quadrature().weights;
  Mat design(nodes.size(), p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = tabulate(basis, nodes, 0).apply(coef);
  const Mat dtheta = tabulate(basis, nodes, 1).apply(coef);
  const Mat xtw = design.transpose() * w.asDiagonal();
  const Mat normal = xtw * design;
  for (int j = 0; j < p; ++j) {
    const Vec want = normal.ldlt().solve(xtw * dtheta.col(j));
    CHECK((r.gamma_hat.gamma.row(j).transpose() - want).lpNorm<Eigen::Infinity>() <=
          1e-8 * std::max(1.0, want.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("vanilla at huge lambda zeroes the network and keeps the mean slope") {
  const OscillatorTruth truth = oscillator_truth(360);
  const BasisSystem basis = make_bspline_basis(200, 6);
  Mat coef(basis.size(), 8);
  for (int j = 0; j < 8; ++j)
    coef.col(j) = project(basis, [&](double t) { return truth.theta(j, t); });
  const ProcessFit smooths(basis, coef);
  ObservationSet data = oscillator_data(FamilyKind::gaussian, 200, 10.0, 360);

  const FitResult r = vanilla_gamma(smooths, data, Penalty::lasso(0.0), {1e9});
  CHECK(r.gamma_hat.nonzero_weights() == 0);
  for (int j = 0; j < 8; ++j) {
    const double mean_deriv = integrate(basis, [&](double t) { return smooths.value(j, t, 1); });
    CHECK(r.gamma_hat.gamma(j, 0) == doctest::Approx(mean_deriv).epsilon(1e-6));
  }
}

TEST_CASE("integrated processes: constants, cosine, and the origin") {
  const BasisSystem basis = make_bspline_basis(60, 6);
  Mat coef(basis.size(), 2);
  coef.col(0).setConstant(2.5);  // theta == 2.5
  coef.col(1) = project(basis, [](double t) { return std::cos(2.0 * M_PI * t); });
  const ProcessFit fit(basis, coef);
  const IntegratedProcesses big = integrated_processes(fit);

  CHECK(big.value(0, 0.0) == doctest::Approx(0.0));
  CHECK(big.value(1, 0.0) == doctest::Approx(0.0));
  for (double t : {0.1, 0.37, 0.5, 0.93, 1.0}) {
    CHECK(big.value(0, t) == doctest::Approx(2.5 * t).epsilon(1e-10));
    CHECK(big.value(1, t) ==
          doctest::Approx(std::sin(2.0 * M_PI * t) / (2.0 * M_PI)).epsilon(1e-7));
  }
}

TEST_CASE("grade recovers the integrated equation exactly on a pair") {
  // Two-process oscillator (first pair only), exact smooths, no penalty.
  const OscillatorTruth truth = oscillator_truth(370);
  const BasisSystem basis = make_bspline_basis(300, 6);
  Mat coef(basis.size(), 2);
  for (int j = 0; j < 2; ++j)
    coef.col(j) = project(basis, [&](double t) { return truth.theta(j, t); });
  const ProcessFit smooths(basis, coef);

  ObservationSet data;
  const int n = 300;
  data.times = Vec::LinSpaced(n, 0.0, 1.0);
  data.y.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    data.y(i, 0) = truth.theta(0, data.times[i]);
    data.y(i, 1) = truth.theta(1, data.times[i]);
  }
  data.families = {Family::gaussian(), Family::gaussian()};

  const FitResult r = grade_gamma(smooths, data, Penalty::lasso(0.0), {0.0});
  // True integrated system: theta_1 = sin(y1) + 2pi * Int theta_2, etc.
  Mat want(2, 3);
  want << 0.0, 0.0, 2.0 * M_PI, 0.0, -2.0 * M_PI, 0.0;
  CHECK((r.gamma_hat.gamma - want).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("grade at huge lambda keeps only intercept and trend") {
  const ObservationSet data = oscillator_data(FamilyKind::gaussian, 120, 10.0, 380);
  const BasisSystem basis = make_bspline_basis(120, 6);
  const ProcessFit smooths = smooth_processes(data, SmoothConfig(basis));
  const FitResult r = grade_gamma(smooths, data, Penalty::lasso(0.0), {1e9});
  CHECK(r.gamma_hat.nonzero_weights() == 0);
}

TEST_CASE("gaussian grade IRLS is a single reweighting") {
  Vec y(4), theta(4);
  y << 1.0, -0.5, 2.0, 0.0;
  theta << 0.3, -0.2, 1.0, 0.4;
  const WorkingResponse wr = working_response(Family::gaussian(), y, theta);
  CHECK((wr.ytilde - y).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((wr.w.array() == 1.0).all());
}
