#include "odenet/simulate.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "odenet/rng.hpp"

namespace odenet {

double OscillatorTruth::theta(int j, double t) const {
  const int pair = j / 2;
  const double omega = 2.0 * (pair + 1) * M_PI;
  const double phase = phases[pair];
  if (corrected_sign)
    return j % 2 == 0 ? std::sin(omega * t + phase) : std::cos(omega * t + phase);
  // Flipped sign: theta'_{2k} = +2k*pi*theta_{2k-1}; solutions are hyperbolic
  // mixtures with the same sin/cos initial state.
  const double s = std::sin(phase), c = std::cos(phase);
  return j % 2 == 0 ? s * std::cosh(omega * t) + c * std::sinh(omega * t)
                    : c * std::cosh(omega * t) + s * std::sinh(omega * t);
}

double OscillatorTruth::dtheta(int j, double t) const {
  const int pair = j / 2;
  const double omega = 2.0 * (pair + 1) * M_PI;
  const double phase = phases[pair];
  if (corrected_sign)
    return j % 2 == 0 ? omega * std::cos(omega * t + phase) : -omega * std::sin(omega * t + phase);
  const double s = std::sin(phase), c = std::cos(phase);
  return j % 2 == 0 ? omega * (s * std::sinh(omega * t) + c * std::cosh(omega * t))
                    : omega * (c * std::sinh(omega * t) + s * std::cosh(omega * t));
}

Mat OscillatorTruth::values(const Vec& ts, int deriv) const {
  Mat out(ts.size(), p());
  for (int i = 0; i < ts.size(); ++i)
    for (int j = 0; j < p(); ++j) out(i, j) = deriv == 0 ? theta(j, ts[i]) : dtheta(j, ts[i]);
  return out;
}

StructuralParams OscillatorTruth::gamma_true() const {
  Mat g = Mat::Zero(p(), p() + 1);
  for (int pair = 0; pair < 4; ++pair) {
    const double omega = 2.0 * (pair + 1) * M_PI;
    const int a = 2 * pair, b = 2 * pair + 1;
    g(a, b + 1) = omega;                              // theta_a' = omega * theta_b
    g(b, a + 1) = corrected_sign ? -omega : omega;    // theta_b' = -/+ omega * theta_a
  }
  return StructuralParams(std::move(g));
}

OscillatorTruth oscillator_truth(std::uint64_t seed, bool corrected_sign) {
  Rng rng(mix_seed(seed, 0x05c1));
  OscillatorTruth truth;
  truth.corrected_sign = corrected_sign;
  truth.phases.resize(4);
  for (int k = 0; k < 4; ++k) truth.phases[k] = rng.normal();
  return truth;
}

ObservationSet generate_observations(const OscillatorTruth& truth, FamilyKind kind, int n,
                                     double snr, std::uint64_t seed) {
  if (n < 2) throw InvalidConfig("need at least two observation times");
  if (!(snr > 0.0)) throw InvalidConfig("snr must be positive (inf for noiseless)");
  ObservationSet data;
  data.times.setLinSpaced(n, 0.0, 1.0);
  const Mat theta = truth.values(data.times, 0);
  data.y.resize(n, truth.p());
  data.families.reserve(truth.p());
  for (int j = 0; j < truth.p(); ++j) {
    Family family;
    switch (kind) {
      case FamilyKind::gaussian: {
        double sigma = 0.0;
        if (std::isfinite(snr)) {
          const double sd = std::sqrt((theta.col(j).array() - theta.col(j).mean()).square().sum() /
                                      (n - 1));
          sigma = sd / snr;
        }
        family = Family::gaussian(sigma);
        break;
      }
      case FamilyKind::poisson:
        family = Family::poisson();
        break;
      case FamilyKind::bernoulli:
        family = Family::bernoulli();
        break;
    }
    data.y.col(j) = sample(family, theta.col(j), mix_seed(seed, 0xda7a, j));
    data.families.push_back(family);
  }
  return data;
}

Metrics evaluate_against(const Mat& theta_true, const Mat& dtheta_true,
                         const StructuralParams& gamma_true, const ProcessFit& fit,
                         const StructuralParams& gamma_hat, const Vec& times) {
  Metrics m;
  const Mat theta_fit = fit.values(times, 0);
  const Mat dtheta_fit = fit.values(times, 1);
  m.mse_theta = (theta_fit - theta_true).array().square().mean();
  m.mse_dtheta = (dtheta_fit - dtheta_true).array().square().mean();

  const int p = gamma_true.p();
  int positives = 0, recovered = 0, negatives = 0, spurious = 0;
  double sq = 0.0;
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k <= p; ++k) {
      const bool truly_zero = gamma_true.gamma(j, k) == 0.0;
      if (truly_zero) ++negatives;  // intercept zeros count as negative slots
      if (k == 0) continue;         // but only structural entries can be called
      if (!truly_zero) {
        ++positives;
        const double d = gamma_hat.gamma(j, k) - gamma_true.gamma(j, k);
        sq += d * d;
        if (gamma_hat.gamma(j, k) != 0.0) ++recovered;
      } else if (gamma_hat.gamma(j, k) != 0.0) {
        ++spurious;
      }
    }
  }
  m.rmse_gamma = positives > 0 ? std::sqrt(sq / positives) : 0.0;
  m.tpr = positives > 0 ? double(recovered) / positives : 1.0;
  m.fpr = negatives > 0 ? double(spurious) / negatives : 0.0;
  return m;
}

Metrics evaluate(const ProcessFit& fit, const StructuralParams& gamma_hat,
                 const OscillatorTruth& truth, const Vec& times) {
  return evaluate_against(truth.values(times, 0), truth.values(times, 1), truth.gamma_true(),
                          fit, gamma_hat, times);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / values.size();
  if (values.size() < 2) {
    s.lo = s.hi = s.mean;
    s.degenerate = true;
    return s;
  }
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  var /= (values.size() - 1);
  const double half = 1.96 * std::sqrt(var / values.size());
  s.lo = s.mean - half;
  s.hi = s.mean + half;
  return s;
}

namespace {

const char* penalty_name(PenaltyKind k) { return k == PenaltyKind::lasso ? "lasso" : "scad"; }

std::string format_double(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

struct RepOutcome {
  bool ok = false;
  Metrics metrics;
  DescentStats descent;
  bool lambda_monotone = true;
};

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkResult result;
  result.requested_reps = cfg.reps;

  struct CellSpec {
    FamilyKind family;
    int n;
    double snr;
    PenaltyKind penalty;
  };
  std::vector<CellSpec> specs;
  for (FamilyKind family : cfg.families)
    for (int n : cfg.sizes)
      for (double snr : cfg.snrs)
        for (PenaltyKind pk : cfg.penalties) specs.push_back({family, n, snr, pk});

  // One slot per (cell, method, rep); filled by the workers, reduced in
  // deterministic order afterwards so worker count cannot affect output.
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_cells = static_cast<int>(specs.size());
  std::vector<RepOutcome> slots(static_cast<size_t>(n_cells) * n_methods * cfg.reps);

  auto run_one = [&](int cell_idx, int rep) {
    const CellSpec& spec = specs[cell_idx];
    // Seeds depend on data-defining fields only, so penalties and methods
    // pair over common draws.
    const std::uint64_t data_seed =
        mix_seed(cfg.seed,
                 mix_seed(static_cast<std::uint64_t>(spec.family), spec.n,
                          std::bit_cast<std::uint64_t>(spec.snr)),
                 rep);
    const OscillatorTruth truth = oscillator_truth(data_seed);
    const ObservationSet data = generate_observations(truth, spec.family, spec.n, spec.snr,
                                                      mix_seed(data_seed, 1));
    const Penalty pen = spec.penalty == PenaltyKind::lasso ? Penalty::lasso(1.0)
                                                           : Penalty::scad(1.0, cfg.scad_a);

    // The baselines share one smoothing stage.
    std::optional<ProcessFit> smooths;
    for (int mi = 0; mi < n_methods; ++mi) {
      RepOutcome& slot =
          slots[(static_cast<size_t>(cell_idx) * n_methods + mi) * cfg.reps + rep];
      try {
        const std::string& method = cfg.methods[mi];
        if (method == "hdgp") {
          FitResult fr = fit_hdgp(data, cfg.tuning, pen);
          slot.metrics = evaluate(fr.fit, fr.gamma_hat, truth, data.times);
          slot.descent = fr.trace.descent;
          slot.lambda_monotone = fr.trace.lambda_theta_monotone;
        } else {
          if (!smooths)
            smooths = smooth_processes(data, SmoothConfig(make_bspline_basis(data.n())));
          const std::vector<double>& grid =
              cfg.two_step_grid.empty() ? default_two_step_grid() : cfg.two_step_grid;
          FitResult fr = method == "vanilla" ? vanilla_gamma(*smooths, data, pen, grid)
                                             : grade_gamma(*smooths, data, pen, grid);
          slot.metrics = evaluate(fr.fit, fr.gamma_hat, truth, data.times);
        }
        slot.ok = true;
      } catch (const std::exception&) {
        slot.ok = false;
      }
    }
  };

  const long total_tasks = static_cast<long>(n_cells) * cfg.reps;
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (long t = next.fetch_add(1); t < total_tasks; t = next.fetch_add(1))
      run_one(static_cast<int>(t / cfg.reps), static_cast<int>(t % cfg.reps));
  };
  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (int ci = 0; ci < n_cells; ++ci) {
    for (int mi = 0; mi < n_methods; ++mi) {
      BenchmarkCell cell;
      cell.family = specs[ci].family;
      cell.n = specs[ci].n;
      cell.snr = specs[ci].snr;
      cell.penalty = specs[ci].penalty;
      cell.method = cfg.methods[mi];
      for (int rep = 0; rep < cfg.reps; ++rep) {
        const RepOutcome& slot =
            slots[(static_cast<size_t>(ci) * n_methods + mi) * cfg.reps + rep];
        if (!slot.ok) {
          cell.failed_reps.push_back(rep);
          continue;
        }
        cell.reps.push_back(slot.metrics);
        result.descent.absorb(slot.descent);
        if (!slot.lambda_monotone) result.lambda_theta_monotone = false;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

namespace {

const std::pair<const char*, double Metrics::*> kMetricFields[] = {
    {"mse_theta", &Metrics::mse_theta}, {"mse_dtheta", &Metrics::mse_dtheta},
    {"rmse_gamma", &Metrics::rmse_gamma}, {"tpr", &Metrics::tpr}, {"fpr", &Metrics::fpr}};

}  // namespace

std::string BenchmarkResult::to_csv() const {
  std::ostringstream out;
  out << "family,n,snr,penalty,method,metric,mean,ci_lo,ci_hi\n";
  for (const BenchmarkCell& cell : cells) {
    for (const auto& [name, field] : kMetricFields) {
      std::vector<double> values;
      values.reserve(cell.reps.size());
      for (const Metrics& m : cell.reps) values.push_back(m.*field);
      const Summary s = summarize(values);
      out << family_name(cell.family) << ',' << cell.n << ',' << format_double(cell.snr) << ','
          << penalty_name(cell.penalty) << ',' << cell.method << ',' << name << ','
          << format_double(s.mean) << ',' << format_double(s.lo) << ',' << format_double(s.hi)
          << '\n';
    }
  }
  return out.str();
}

std::string BenchmarkResult::to_json() const {
  nlohmann::ordered_json root;
  root["requested_reps"] = requested_reps;
  root["descent"] = {{"steps", descent.steps}, {"violations", descent.violations}};
  root["lambda_theta_monotone"] = lambda_theta_monotone;
  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  for (const BenchmarkCell& cell : cells) {
    nlohmann::ordered_json c;
    c["family"] = family_name(cell.family);
    c["n"] = cell.n;
    c["snr"] = std::isfinite(cell.snr) ? nlohmann::ordered_json(cell.snr)
                                       : nlohmann::ordered_json("inf");
    c["penalty"] = penalty_name(cell.penalty);
    c["method"] = cell.method;
    c["completed_reps"] = cell.reps.size();
    c["failed_reps"] = cell.failed_reps;
    for (const auto& [name, field] : kMetricFields) {
      std::vector<double> values;
      values.reserve(cell.reps.size());
      for (const Metrics& m : cell.reps) values.push_back(m.*field);
      const Summary s = summarize(values);
      c[name] = {{"mean", s.mean},
                 {"ci_lo", s.lo},
                 {"ci_hi", s.hi},
                 {"degenerate", s.degenerate},
                 {"values", values}};
    }
    cells_json.push_back(std::move(c));
  }
  root["cells"] = std::move(cells_json);
  return root.dump(2);
}

}  // namespace odenet
