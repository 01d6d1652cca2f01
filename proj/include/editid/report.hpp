#pragma once

// Per-case metric records, their aggregation and the rendered report formats.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "editid/core.hpp"

namespace editid {

/// One scored quantity for one case. A null value carries the error code.
struct MetricRecord {
  std::string metric;
  std::optional<Real> value;
  std::optional<Real> raw;
  std::optional<std::string> error_code;
};

struct CaseResult {
  std::string id;
  std::string pairing;
  std::string group;
  std::string image_name;
  std::string prompt_set;
  int prompt_id = 0;
  std::string prompt;
  std::uint64_t seed = 0;
  std::string with_id_path;  // relative to the run directory
  std::string without_id_path;
  std::string id_branch = "ok";  // ok, disabled, or the error code that bypassed it
  std::vector<MetricRecord> records;
  std::optional<std::pair<std::string, std::string>> expressions;  // (id, generated)
  std::optional<VectorX> stats_with_id;
  std::optional<VectorX> stats_without_id;

  const MetricRecord* find(const std::string& metric) const;
};

struct Aggregate {
  std::optional<Real> mean;
  int count = 0;  // non-null contributions
  int nulls = 0;
};

struct FidGroup {
  std::string pairing;
  int count = 0;
  std::optional<Real> value;
  bool regularized = false;
  Real epsilon = 0;
  std::optional<std::string> error_code;
};

struct MetricReport {
  std::string config_hash;
  std::vector<CaseResult> cases;
  std::map<std::string, Aggregate> aggregates;  // keyed by per-case metric name plus "fid"
  std::vector<FidGroup> fid_groups;
};

/// (column title, aggregate key) in the fixed report order.
const std::vector<std::pair<std::string, std::string>>& report_columns();

/// Column subset used by the layer-selection sweep table.
const std::vector<std::pair<std::string, std::string>>& selection_sweep_columns();

/// Means over non-null records, summed in case order. FID is computed per
/// pairing between the with-ID and without-ID statistic features and then
/// averaged over pairings. Throws EmptyInput for zero cases.
MetricReport aggregate(std::string config_hash, std::vector<CaseResult> cases);

nlohmann::json to_json(const CaseResult& c);
CaseResult case_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

/// Header row + one aggregate row; nulls are empty cells.
std::string render_csv(const MetricReport& r);
std::map<std::string, std::optional<Real>> parse_report_csv(const std::string& text);
std::string render_text(const MetricReport& r);

std::string format_real(Real v);

}  // namespace editid
