#pragma once

#include <cstdint>
#include <string>

#include "odenet/collocation.hpp"
#include "odenet/profiling.hpp"

namespace odenet {

/// Eight processes in four sine/cosine pairs with frequencies 2k*pi and
/// N(0,1) phases: theta_{2k-1} = sin(2k*pi*t + y_k), theta_{2k} = cos(...).
/// The periodic system has gamma_{2k,2k-1} = -2k*pi so these are exact
/// solutions; the +2k*pi variant, whose exact solutions are hyperbolic, is
/// kept selectable for auditing the sign convention.
struct OscillatorTruth {
  Vec phases;  // 4
  bool corrected_sign = true;

  int p() const { return 8; }
  double theta(int j, double t) const;   // 0-based process index
  double dtheta(int j, double t) const;
  Mat values(const Vec& ts, int deriv = 0) const;
  StructuralParams gamma_true() const;
};

OscillatorTruth oscillator_truth(std::uint64_t seed, bool corrected_sign = true);

/// Observations at n equally spaced times in [0,1].  Gaussian noise comes
/// from the per-process SNR (sd of the latent values over the grid divided
/// by snr; snr = inf means none); Poisson and Bernoulli ignore snr.
ObservationSet generate_observations(const OscillatorTruth& truth, FamilyKind kind, int n,
                                     double snr, std::uint64_t seed);

struct Metrics {
  double mse_theta = 0.0;
  double mse_dtheta = 0.0;
  double rmse_gamma = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// Errors of a fit against a known truth at the observation times.  RMSE is
/// taken over the truly nonzero structural entries; TPR counts recovered
/// ones; FPR counts spurious structural nonzeros over all truly zero
/// entries of the parameter matrix.
Metrics evaluate(const ProcessFit& fit, const StructuralParams& gamma_hat,
                 const OscillatorTruth& truth, const Vec& times);

/// As above with explicit truth values (used by fits on non-simulated data).
Metrics evaluate_against(const Mat& theta_true, const Mat& dtheta_true,
                         const StructuralParams& gamma_true, const ProcessFit& fit,
                         const StructuralParams& gamma_hat, const Vec& times);

struct BenchmarkConfig {
  std::vector<FamilyKind> families{FamilyKind::gaussian};
  std::vector<int> sizes{500};
  std::vector<double> snrs{10.0};  // applied to gaussian cells only
  std::vector<PenaltyKind> penalties{PenaltyKind::lasso};
  std::vector<std::string> methods{"hdgp", "vanilla", "grade"};
  int reps = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  TuningConfig tuning;
  std::vector<double> two_step_grid;  // empty: default_two_step_grid()
  double scad_a = 3.7;
};

struct BenchmarkCell {
  FamilyKind family;
  int n = 0;
  double snr = 0.0;
  PenaltyKind penalty;
  std::string method;
  std::vector<Metrics> reps;      // successful replications, in rep order
  std::vector<int> failed_reps;   // indices of failed replications
};

struct BenchmarkResult {
  std::vector<BenchmarkCell> cells;
  DescentStats descent;            // pooled over the profiling runs
  bool lambda_theta_monotone = true;
  int requested_reps = 0;

  std::string to_csv() const;
  std::string to_json() const;
};

/// mean and normal-approximation 95% interval; degenerate (lo = hi = mean)
/// when fewer than two values exist.
struct Summary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;
};
Summary summarize(const std::vector<double>& values);

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

}  // namespace odenet
