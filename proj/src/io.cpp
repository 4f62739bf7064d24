#include "odenet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace odenet {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& field, int line) {
  const std::string t = trim(field);
  if (t.empty()) throw ParseError("empty numeric field", line);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw ParseError("non-numeric value '" + t + "'", line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

FamilyKind infer_family(const Vec& y) {
  bool binary = true, counts = true;
  for (int i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) binary = false;
    if (!(y[i] >= 0.0) || y[i] != std::floor(y[i])) counts = false;
  }
  if (binary) return FamilyKind::bernoulli;
  if (counts) return FamilyKind::poisson;
  return FamilyKind::gaussian;
}

std::string fmt(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

Dataset ingest_csv(const std::string& path,
                   const std::map<std::string, std::string>& family_overrides) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path);

  std::map<std::string, std::string> sidecar;
  std::vector<std::string> series;
  std::map<std::string, int> series_index;
  std::vector<double> times_raw;
  std::vector<int> series_of;
  std::vector<double> value_of;

  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      // `# family: series=name` sidecar annotations travel with the data.
      const std::string tag = "family:";
      auto pos = t.find(tag);
      if (pos != std::string::npos) {
        const std::string rest = trim(t.substr(pos + tag.size()));
        const auto eq = rest.find('=');
        if (eq != std::string::npos)
          sidecar[trim(rest.substr(0, eq))] = trim(rest.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      const auto fields = split_csv(t);
      if (fields.size() != 3 || trim(fields[0]) != "time" || trim(fields[1]) != "series" ||
          trim(fields[2]) != "value")
        throw ParseError("expected header time,series,value", line_no);
      header_seen = true;
      continue;
    }
    const auto fields = split_csv(t);
    if (fields.size() != 3) throw ParseError("expected three fields", line_no);
    const double time = parse_number(fields[0], line_no);
    const std::string name = trim(fields[1]);
    const double value = parse_number(fields[2], line_no);
    auto [it, inserted] = series_index.try_emplace(name, static_cast<int>(series.size()));
    if (inserted) series.push_back(name);
    times_raw.push_back(time);
    series_of.push_back(it->second);
    value_of.push_back(value);
  }
  if (!header_seen) throw ParseError("missing header", line_no);
  if (series.empty()) throw InvalidData("no observations in " + path);

  std::vector<double> unique_times = times_raw;
  std::sort(unique_times.begin(), unique_times.end());
  unique_times.erase(std::unique(unique_times.begin(), unique_times.end()), unique_times.end());
  const int n = static_cast<int>(unique_times.size());
  const int p = static_cast<int>(series.size());
  if (n < 2) throw InvalidData("need at least two distinct times");

  std::map<double, int> time_index;
  for (int i = 0; i < n; ++i) time_index[unique_times[i]] = i;

  Mat y = Mat::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
  for (size_t r = 0; r < times_raw.size(); ++r) {
    double& slot = y(time_index[times_raw[r]], series_of[r]);
    if (!std::isnan(slot))
      throw InvalidData("duplicate cell for series '" + series[series_of[r]] + "' at time " +
                        fmt(times_raw[r], "%g"));
    slot = value_of[r];
  }
  std::string gaps;
  int gap_count = 0;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)
      if (std::isnan(y(i, j))) {
        if (++gap_count <= 8)
          gaps += "\n  series '" + series[j] + "' missing time " + fmt(unique_times[i], "%g");
      }
  if (gap_count > 0)
    throw InvalidData("ragged series: " + std::to_string(gap_count) + " missing cells" + gaps);

  Dataset out;
  out.series = series;
  out.obs.time_offset = unique_times.front();
  out.obs.time_scale = unique_times.back() - unique_times.front();
  if (!(out.obs.time_scale > 0.0)) throw InvalidData("degenerate time range");
  out.obs.times.resize(n);
  for (int i = 0; i < n; ++i)
    out.obs.times[i] = (unique_times[i] - out.obs.time_offset) / out.obs.time_scale;
  out.obs.y = std::move(y);

  for (int j = 0; j < p; ++j) {
    std::string forced;
    if (auto it = family_overrides.find(series[j]); it != family_overrides.end())
      forced = it->second;
    else if (auto itc = sidecar.find(series[j]); itc != sidecar.end())
      forced = itc->second;
    const FamilyKind kind =
        forced.empty() ? infer_family(out.obs.y.col(j)) : family_from_name(forced);
    switch (kind) {
      case FamilyKind::gaussian: out.obs.families.push_back(Family::gaussian()); break;
      case FamilyKind::poisson: out.obs.families.push_back(Family::poisson()); break;
      case FamilyKind::bernoulli: out.obs.families.push_back(Family::bernoulli()); break;
    }
  }
  out.obs.validate();
  return out;
}

void write_long_csv(const std::string& path, const Vec& times, const Mat& y,
                    const std::vector<std::string>& series,
                    const std::vector<Family>& families) {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot write " + path);
  for (size_t j = 0; j < series.size(); ++j)
    out << "# family: " << series[j] << "=" << family_name(families[j].kind) << "\n";
  out << "time,series,value\n";
  for (int i = 0; i < times.size(); ++i)
    for (int j = 0; j < y.cols(); ++j)
      out << fmt(times[i], "%.12g") << ',' << series[j] << ',' << fmt(y(i, j), "%.12g") << '\n';
}

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot write " + path);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    for (const std::string& f : split_csv(t)) row.push_back(parse_number(f, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged matrix row", line_no);
    rows.push_back(std::move(row));
  }
  Mat m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void emit_result(const FitResult& result, const Dataset& data, const std::string& outdir,
                 nlohmann::ordered_json meta) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec && !fs::is_directory(outdir)) throw InvalidConfig("cannot create " + outdir);

  const double scale = data.obs.time_scale;
  const double offset = data.obs.time_offset;
  const int p = result.gamma_hat.p();

  // gamma.csv in original time units: d theta / d t_original = gamma_row / scale.
  Mat gamma_original = result.gamma_hat.gamma / scale;
  write_matrix_csv(outdir + "/gamma.csv", gamma_original);

  {
    std::ofstream edges(outdir + "/edges.csv");
    if (!edges) throw InvalidConfig("cannot write edges.csv");
    edges << "source,target,weight,sign\n";
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < p; ++k) {
        const double wjk = gamma_original(j, k + 1);
        if (wjk == 0.0) continue;
        edges << data.series[k] << ',' << data.series[j] << ',' << fmt(wjk) << ','
              << (wjk > 0.0 ? "promote" : "suppress") << '\n';
      }
  }

  {
    std::ofstream fitcsv(outdir + "/fit.csv");
    if (!fitcsv) throw InvalidConfig("cannot write fit.csv");
    fitcsv << "time";
    for (const std::string& s : data.series) fitcsv << ",theta_" << s;
    for (const std::string& s : data.series) fitcsv << ",dtheta_" << s;
    fitcsv << '\n';
    Vec grid(201);
    grid.setLinSpaced(201, 0.0, 1.0);
    const Mat theta = result.fit.values(grid, 0);
    const Mat dtheta = result.fit.values(grid, 1) / scale;
    for (int i = 0; i < grid.size(); ++i) {
      fitcsv << fmt(offset + scale * grid[i], "%.12g");
      for (int j = 0; j < p; ++j) fitcsv << ',' << fmt(theta(i, j), "%.12g");
      for (int j = 0; j < p; ++j) fitcsv << ',' << fmt(dtheta(i, j), "%.12g");
      fitcsv << '\n';
    }
  }

  meta["selection"] = {{"lambda_theta", result.lambda_theta},
                       {"lambda_gamma", result.lambda_gamma},
                       {"bic", result.bic},
                       {"fidelity", result.fidelity}};
  meta["time_axis"] = {{"offset", offset}, {"scale", scale}};
  nlohmann::ordered_json path_json = nlohmann::ordered_json::array();
  for (const PathRecord& r : result.trace.path)
    path_json.push_back({{"lambda_gamma", r.lambda_gamma},
                         {"lambda_theta", r.lambda_theta_final},
                         {"bic", r.bic},
                         {"fidelity", r.fidelity},
                         {"nonzeros", r.nonzeros},
                         {"failed", r.failed}});
  meta["path"] = std::move(path_json);
  nlohmann::ordered_json stages_json = nlohmann::ordered_json::array();
  for (const StageRecord& s : result.trace.stages)
    stages_json.push_back({{"lambda_gamma", s.lambda_gamma},
                           {"lambda_theta", s.lambda_theta},
                           {"fidelity", s.fidelity},
                           {"gamma_change", s.gamma_change},
                           {"sweeps", s.sweeps},
                           {"accepted", s.accepted}});
  meta["lambda_theta_stages"] = std::move(stages_json);
  meta["descent"] = {{"steps", result.trace.descent.steps},
                     {"violations", result.trace.descent.violations}};

  std::ofstream metaout(outdir + "/meta.json");
  if (!metaout) throw InvalidConfig("cannot write meta.json");
  metaout << meta.dump(2) << '\n';
}

}  // namespace odenet
