#include "editid/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "editid/metrics.hpp"

namespace editid {

using nlohmann::json;

const MetricRecord* CaseResult::find(const std::string& metric) const {
  for (const auto& r : records)
    if (r.metric == metric) return &r;
  return nullptr;
}

const std::vector<std::pair<std::string, std::string>>& report_columns() {
  static const std::vector<std::pair<std::string, std::string>> cols = {
      {"FID", "fid"},
      {"Aesthetic", "aesthetic"},
      {"Image Quality", "image_quality"},
      {"Posediv Yaw", "posediv_yaw"},
      {"Posediv Pitch", "posediv_pitch"},
      {"Posediv Roll", "posediv_roll"},
      {"Landmarkdiff", "landmarkdiff"},
      {"Exprdiv", "exprdiv"},
      {"Facesim", "facesim"},
      {"ClipI", "clip_i"},
      {"ClipT", "clip_t"},
      {"Dino", "dino"},
      {"Fgis", "fgis"},
  };
  return cols;
}

const std::vector<std::pair<std::string, std::string>>& selection_sweep_columns() {
  static const std::vector<std::pair<std::string, std::string>> cols = {
      {"Facesim", "facesim"},
      {"ClipT", "clip_t"},
      {"Posediv Yaw", "posediv_yaw"},
      {"Posediv Pitch", "posediv_pitch"},
      {"Posediv Roll", "posediv_roll"},
      {"Landmarkdiff", "landmarkdiff"},
      {"Exprdiv", "exprdiv"},
  };
  return cols;
}

MetricReport aggregate(std::string config_hash, std::vector<CaseResult> cases) {
  if (cases.empty()) throw Error(ErrorCode::EmptyInput, "cannot report a run with no cases");
  MetricReport r;
  r.config_hash = std::move(config_hash);
  r.cases = std::move(cases);

  std::map<std::string, Real> sums;
  for (const auto& c : r.cases)
    for (const auto& rec : c.records) {
      auto& agg = r.aggregates[rec.metric];
      if (rec.value) {
        sums[rec.metric] += *rec.value;
        ++agg.count;
      } else {
        ++agg.nulls;
      }
    }
  for (auto& [name, agg] : r.aggregates)
    if (agg.count > 0) agg.mean = sums[name] / agg.count;

  // FID per pairing, in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<VectorX>, std::vector<VectorX>>> sets;
  bool any_stats = false;
  for (const auto& c : r.cases) {
    if (!sets.count(c.pairing)) order.push_back(c.pairing);
    auto& s = sets[c.pairing];
    if (c.stats_with_id && c.stats_without_id) {
      any_stats = true;
      s.first.push_back(*c.stats_with_id);
      s.second.push_back(*c.stats_without_id);
    }
  }
  if (any_stats) {
    Aggregate fid_agg;
    Real fid_sum = 0;
    for (const auto& p : order) {
      FidGroup g;
      g.pairing = p;
      const auto& [a, b] = sets[p];
      g.count = static_cast<int>(a.size());
      try {
        const auto res = fid(a, b);
        g.value = res.value;
        g.regularized = res.regularized;
        g.epsilon = res.epsilon;
        fid_sum += res.value;
        ++fid_agg.count;
      } catch (const Error& e) {
        g.error_code = std::string(to_string(e.code()));
        ++fid_agg.nulls;
      }
      r.fid_groups.push_back(std::move(g));
    }
    if (fid_agg.count > 0) fid_agg.mean = fid_sum / fid_agg.count;
    r.aggregates["fid"] = fid_agg;
  }
  return r;
}

namespace {

json opt(const std::optional<Real>& v) { return v ? json(*v) : json(nullptr); }

std::optional<Real> opt_real(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<Real>();
}

json vec_json(const VectorX& v) { return std::vector<Real>(v.data(), v.data() + v.size()); }

VectorX vec_from(const json& j) {
  const auto v = j.get<std::vector<Real>>();
  return Eigen::Map<const VectorX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json to_json(const CaseResult& c) {
  json j;
  j["id"] = c.id;
  j["pairing"] = c.pairing;
  j["group"] = c.group;
  j["image"] = c.image_name;
  j["prompt_set"] = c.prompt_set;
  j["prompt_id"] = c.prompt_id;
  j["prompt"] = c.prompt;
  j["seed"] = c.seed;
  j["image_with_id"] = c.with_id_path;
  j["image_without_id"] = c.without_id_path;
  j["id_branch"] = c.id_branch;
  json recs = json::array();
  for (const auto& r : c.records) {
    json x{{"metric", r.metric}, {"value", opt(r.value)}, {"raw", opt(r.raw)}};
    if (r.error_code) x["error_code"] = *r.error_code;
    recs.push_back(std::move(x));
  }
  j["records"] = recs;
  j["expressions"] = c.expressions ? json{c.expressions->first, c.expressions->second} : json(nullptr);
  j["stats_with_id"] = c.stats_with_id ? vec_json(*c.stats_with_id) : json(nullptr);
  j["stats_without_id"] = c.stats_without_id ? vec_json(*c.stats_without_id) : json(nullptr);
  return j;
}

CaseResult case_from_json(const json& j) {
  CaseResult c;
  c.id = j.at("id").get<std::string>();
  c.pairing = j.at("pairing").get<std::string>();
  c.group = j.value("group", std::string());
  c.image_name = j.value("image", std::string());
  c.prompt_set = j.value("prompt_set", std::string());
  c.prompt_id = j.value("prompt_id", 0);
  c.prompt = j.value("prompt", std::string());
  c.seed = j.value("seed", std::uint64_t{0});
  c.with_id_path = j.value("image_with_id", std::string());
  c.without_id_path = j.value("image_without_id", std::string());
  c.id_branch = j.value("id_branch", std::string("ok"));
  for (const auto& x : j.at("records")) {
    MetricRecord r;
    r.metric = x.at("metric").get<std::string>();
    r.value = opt_real(x, "value");
    r.raw = opt_real(x, "raw");
    if (x.contains("error_code")) r.error_code = x.at("error_code").get<std::string>();
    c.records.push_back(std::move(r));
  }
  if (j.contains("expressions") && !j.at("expressions").is_null())
    c.expressions = std::make_pair(j.at("expressions")[0].get<std::string>(), j.at("expressions")[1].get<std::string>());
  if (j.contains("stats_with_id") && !j.at("stats_with_id").is_null()) c.stats_with_id = vec_from(j.at("stats_with_id"));
  if (j.contains("stats_without_id") && !j.at("stats_without_id").is_null())
    c.stats_without_id = vec_from(j.at("stats_without_id"));
  return c;
}

json to_json(const MetricReport& r) {
  json j;
  j["config_hash"] = r.config_hash;
  json cases = json::array();
  for (const auto& c : r.cases) cases.push_back(to_json(c));
  j["cases"] = cases;
  json aggs = json::object();
  for (const auto& [name, a] : r.aggregates)
    aggs[name] = {{"mean", opt(a.mean)}, {"count", a.count}, {"nulls", a.nulls}};
  j["aggregates"] = aggs;
  json groups = json::array();
  for (const auto& g : r.fid_groups) {
    json x{{"pairing", g.pairing}, {"count", g.count},       {"value", opt(g.value)},
           {"regularized", g.regularized}, {"epsilon", g.epsilon}};
    if (g.error_code) x["error_code"] = *g.error_code;
    groups.push_back(std::move(x));
  }
  j["fid_groups"] = groups;
  json table = json::object();
  json columns = json::array();
  for (const auto& [title, key] : report_columns()) {
    columns.push_back(title);
    const auto it = r.aggregates.find(key);
    table[title] = it == r.aggregates.end() ? json(nullptr) : opt(it->second.mean);
  }
  j["columns"] = columns;
  j["table"] = table;
  return j;
}

MetricReport report_from_json(const json& j) {
  std::vector<CaseResult> cases;
  for (const auto& c : j.at("cases")) cases.push_back(case_from_json(c));
  return aggregate(j.at("config_hash").get<std::string>(), std::move(cases));
}

std::string format_real(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_csv(const MetricReport& r) {
  std::string header, row;
  for (const auto& [title, key] : report_columns()) {
    if (!header.empty()) {
      header += ",";
      row += ",";
    }
    header += title;
    const auto it = r.aggregates.find(key);
    if (it != r.aggregates.end() && it->second.mean) row += format_real(*it->second.mean);
  }
  return header + "\n" + row + "\n";
}

std::map<std::string, std::optional<Real>> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header, row;
  if (!std::getline(in, header) || !std::getline(in, row))
    throw Error(ErrorCode::InvalidInput, "report CSV needs a header and a value row");
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  const auto names = split(header), values = split(row);
  if (names.size() != values.size()) throw Error(ErrorCode::InvalidInput, "report CSV row width differs from header");
  std::map<std::string, std::optional<Real>> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (values[i].empty()) {
      out[names[i]] = std::nullopt;
      continue;
    }
    std::size_t used = 0;
    const Real v = std::stod(values[i], &used);
    if (used != values[i].size()) throw Error(ErrorCode::InvalidInput, "bad CSV number '" + values[i] + "'");
    out[names[i]] = v;
  }
  return out;
}

std::string render_text(const MetricReport& r) {
  std::ostringstream os;
  std::vector<std::string> cells;
  std::vector<std::size_t> widths;
  for (const auto& [title, key] : report_columns()) {
    const auto it = r.aggregates.find(key);
    std::string cell = "-";
    if (it != r.aggregates.end() && it->second.mean) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *it->second.mean);
      cell = buf;
    }
    widths.push_back(std::max(title.size(), cell.size()));
    cells.push_back(cell);
  }
  std::size_t i = 0;
  for (const auto& [title, key] : report_columns()) {
    os << (i ? "  " : "") << std::string(widths[i] - title.size(), ' ') << title;
    ++i;
  }
  os << "\n";
  for (i = 0; i < cells.size(); ++i) os << (i ? "  " : "") << std::string(widths[i] - cells[i].size(), ' ') << cells[i];
  os << "\n\ncases: " << r.cases.size() << "  config: " << r.config_hash << "\n";
  for (const auto& [name, a] : r.aggregates)
    if (a.nulls > 0) os << "nulls: " << name << " " << a.nulls << " of " << a.nulls + a.count << "\n";
  for (const auto& g : r.fid_groups)
    if (g.regularized) os << "fid " << g.pairing << ": covariance regularized (eps " << g.epsilon << ", n " << g.count << ")\n";
  return os.str();
}

}  // namespace editid
