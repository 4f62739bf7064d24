#pragma once

#include <string>
#include <vector>

#include "odenet/model.hpp"

namespace odenet {

/// One accepted or rejected lambda_theta stage of the tuning scheme.
struct StageRecord {
  double lambda_gamma = 0.0;
  double lambda_theta = 0.0;
  double fidelity = 0.0;
  double gamma_change = 0.0;  // vs the previous accepted stage
  int sweeps = 0;
  bool accepted = true;
  std::vector<double> h_total_per_sweep;  // sum_j H_j after each sweep
};

/// Summary of one lambda_gamma grid point.
struct PathRecord {
  double lambda_gamma = 0.0;
  double lambda_theta_final = 0.0;
  double bic = 0.0;
  double fidelity = 0.0;
  int nonzeros = 0;
  bool failed = false;
  std::string error;
};

/// Outer-step descent bookkeeping (the testable consequence of the
/// convergence analysis: H_j should not increase between steps).
struct DescentStats {
  long long steps = 0;
  long long violations = 0;  // H rose by more than 1e-10

  void absorb(const DescentStats& other) {
    steps += other.steps;
    violations += other.violations;
  }
};

struct FitTrace {
  std::vector<StageRecord> stages;
  std::vector<PathRecord> path;
  DescentStats descent;
  bool lambda_theta_monotone = true;
  int inner_failures = 0;
};

struct FitResult {
  StructuralParams gamma_hat;  // reported (thresholded for the profiling method)
  StructuralParams gamma_raw;  // pre-threshold estimate
  ProcessFit fit;
  double lambda_theta = 0.0;
  double lambda_gamma = 0.0;
  double bic = 0.0;
  double fidelity = 0.0;
  FitTrace trace;
};

}  // namespace odenet
