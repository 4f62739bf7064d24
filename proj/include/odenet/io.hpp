#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "odenet/fit_result.hpp"

namespace odenet {

struct Dataset {
  ObservationSet obs;
  std::vector<std::string> series;  // column names, first-appearance order
};

/// Long-format CSV with header time,series,value.  Comment lines of the form
/// `# family: <series>=<name>` pin a column's family; otherwise it is
/// inferred ({0,1} -> bernoulli, nonnegative integers -> poisson, else
/// gaussian) unless overridden by the caller's map.  Times are rescaled to
/// [0,1]; the affine map is kept on the ObservationSet.
Dataset ingest_csv(const std::string& path,
                   const std::map<std::string, std::string>& family_overrides = {});

/// Writes gamma.csv (original time units), edges.csv (source,target,weight,
/// sign with promote/suppress), fit.csv (fitted processes and derivatives on
/// a 201-point grid) and meta.json (meta_extra augmented with the tuning
/// trace and selection path).
void emit_result(const FitResult& result, const Dataset& data, const std::string& outdir,
                 nlohmann::ordered_json meta_extra);

/// data.csv writer matching ingest_csv (times in original units).
void write_long_csv(const std::string& path, const Vec& times, const Mat& y,
                    const std::vector<std::string>& series,
                    const std::vector<Family>& families);

/// Dense numeric CSV helpers (used for the truth files and gamma.csv).
void write_matrix_csv(const std::string& path, const Mat& m);
Mat read_matrix_csv(const std::string& path);

}  // namespace odenet
