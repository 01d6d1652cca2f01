#include "editid/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace editid {

using nlohmann::json;

std::vector<LayerSelection> load_selection_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open selection file " + file.string());
  std::vector<LayerSelection> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(parse_selection(line));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string row_dir(const char* kind, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/%02zu", kind, i + 1);
  return buf;
}

SweepRow run_row(const HarnessConfig& base, HarnessConfig cfg, const BackendRegistry& registry, const char* kind,
                 std::size_t index, std::string label, std::vector<std::string>& notices) {
  SweepRow row;
  row.label = std::move(label);
  row.run_dir = row_dir(kind, index);
  cfg.output_dir = base.output_dir / row.run_dir;
  auto res = run(cfg, registry);
  // Dataset warnings repeat for every row; keep the first occurrence.
  for (auto& n : res.notices)
    if (std::find(notices.begin(), notices.end(), n) == notices.end()) notices.push_back(std::move(n));
  row.config_hash = res.report.config_hash;
  row.aggregates = res.report.aggregates;
  return row;
}

void write_sweep(const std::filesystem::path& dir, const SweepTable& t) {
  write_file_atomic(dir / "sweep.json", canonical_json(to_json(t)));
  write_file_atomic(dir / "sweep.csv", render_sweep_csv(t));
  write_file_atomic(dir / "sweep.txt", render_sweep_text(t));
}

}  // namespace

SweepTable sweep_selections(const HarnessConfig& cfg, const BackendRegistry& registry,
                            const std::vector<LayerSelection>& selections) {
  if (selections.empty()) throw Error(ErrorCode::EmptyInput, "selection sweep needs at least one selection");
  SweepTable t;
  t.kind = "selections";
  t.columns = selection_sweep_columns();
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& sel : selections) {
    if (!seen.insert(sel.key()).second) {
      t.notices.push_back("duplicate selection " + sel.label + " skipped");
      continue;
    }
    HarnessConfig row_cfg = cfg;
    row_cfg.feature_branch.selection = sel;
    t.rows.push_back(run_row(cfg, std::move(row_cfg), registry, "sweep-selections", index++, sel.label, t.notices));
  }
  write_sweep(cfg.output_dir / "sweep-selections", t);
  return t;
}

std::string FusionCombo::label() const {
  std::string l(to_string(fusion.kind));
  if (fusion.kind == FusionMethod::Kind::Weight && fusion.weights)
    l += "(" + format_real(fusion.weights->first) + "," + format_real(fusion.weights->second) + ")";
  if (fusion.kind == FusionMethod::Kind::Dropout) l += "(" + format_real(fusion.drop_rate) + ")";
  return l + "+" + std::string(to_string(reweight.kind));
}

std::vector<FusionCombo> default_fusion_combos(const ReweightMethod& reweight) {
  using K = FusionMethod::Kind;
  std::vector<FusionCombo> out;
  for (K k : {K::Weight, K::Dropout, K::Concat, K::Sum, K::Multiply, K::Max}) {
    FusionCombo c;
    c.fusion.kind = k;
    if (k == K::Weight) c.fusion.weights = std::make_pair(0.5, 0.5);
    if (k == K::Dropout) c.fusion.drop_rate = 0.1;
    c.reweight = reweight;
    out.push_back(c);
  }
  return out;
}

std::vector<FusionCombo> load_fusion_combos(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Config, "fusion combos must be a JSON array");
  std::vector<FusionCombo> out;
  for (const auto& x : j) {
    if (!x.is_object() || !x.contains("fusion"))
      throw Error(ErrorCode::Config, "each fusion combo needs a 'fusion' object");
    FusionCombo c;
    c.fusion = fusion_from_json(x.at("fusion"));
    if (x.contains("reweight")) c.reweight = reweight_from_json(x.at("reweight"));
    out.push_back(c);
  }
  return out;
}

SweepTable sweep_fusion(const HarnessConfig& cfg, const BackendRegistry& registry,
                        const std::vector<FusionCombo>& combos) {
  if (combos.empty()) throw Error(ErrorCode::EmptyInput, "fusion sweep needs at least one method");
  for (const auto& c : combos) c.fusion.validate();
  SweepTable t;
  t.kind = "fusion";
  t.columns = report_columns();
  std::size_t index = 0;
  for (const auto& c : combos) {
    HarnessConfig row_cfg = cfg;
    row_cfg.integration.fusion = c.fusion;
    row_cfg.integration.reweight = c.reweight;
    t.rows.push_back(run_row(cfg, std::move(row_cfg), registry, "sweep-fusion", index++, c.label(), t.notices));
  }
  write_sweep(cfg.output_dir / "sweep-fusion", t);
  return t;
}

json to_json(const SweepTable& t) {
  json j;
  j["kind"] = t.kind;
  json cols = json::array();
  for (const auto& [title, key] : t.columns) cols.push_back({{"title", title}, {"key", key}});
  j["columns"] = cols;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json aggs = json::object();
    for (const auto& [name, a] : r.aggregates)
      aggs[name] = {{"mean", a.mean ? json(*a.mean) : json(nullptr)}, {"count", a.count}, {"nulls", a.nulls}};
    rows.push_back({{"label", r.label}, {"config_hash", r.config_hash}, {"run_dir", r.run_dir}, {"aggregates", aggs}});
  }
  j["rows"] = rows;
  j["notices"] = t.notices;
  return j;
}

SweepTable sweep_from_json(const json& j) {
  SweepTable t;
  t.kind = j.at("kind").get<std::string>();
  for (const auto& c : j.at("columns")) t.columns.emplace_back(c.at("title").get<std::string>(), c.at("key").get<std::string>());
  for (const auto& r : j.at("rows")) {
    SweepRow row;
    row.label = r.at("label").get<std::string>();
    row.config_hash = r.at("config_hash").get<std::string>();
    row.run_dir = r.value("run_dir", std::string());
    for (const auto& [name, a] : r.at("aggregates").items()) {
      Aggregate agg;
      if (!a.at("mean").is_null()) agg.mean = a.at("mean").get<Real>();
      agg.count = a.at("count").get<int>();
      agg.nulls = a.at("nulls").get<int>();
      row.aggregates[name] = agg;
    }
    t.rows.push_back(std::move(row));
  }
  if (j.contains("notices")) t.notices = j.at("notices").get<std::vector<std::string>>();
  return t;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::optional<Real> mean_of(const std::map<std::string, Aggregate>& aggs, const std::string& key) {
  const auto it = aggs.find(key);
  return it == aggs.end() ? std::nullopt : it->second.mean;
}

}  // namespace

std::string render_sweep_csv(const SweepTable& t) {
  std::ostringstream os;
  os << (t.kind == "selections" ? "Features" : "Method");
  for (const auto& [title, key] : t.columns) os << "," << title;
  os << "\n";
  for (const auto& r : t.rows) {
    os << csv_cell(r.label);
    for (const auto& [title, key] : t.columns) {
      os << ",";
      if (const auto v = mean_of(r.aggregates, key)) os << format_real(*v);
    }
    os << "\n";
  }
  return os.str();
}

std::string render_sweep_text(const SweepTable& t) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({t.kind == "selections" ? "Features" : "Method"});
  for (const auto& [title, key] : t.columns) grid.back().push_back(title);
  for (const auto& r : t.rows) {
    grid.push_back({r.label});
    for (const auto& [title, key] : t.columns) {
      const auto v = mean_of(r.aggregates, key);
      char buf[32] = "-";
      if (v) std::snprintf(buf, sizeof buf, "%.4f", *v);
      grid.back().push_back(buf);
    }
  }
  std::vector<std::size_t> w(grid.front().size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) os << row[c] << std::string(w[c] - row[c].size(), ' ');
      else os << "  " << std::string(w[c] - row[c].size(), ' ') << row[c];
    }
    os << "\n";
  }
  for (const auto& n : t.notices) os << "note: " << n << "\n";
  return os.str();
}

std::vector<TradeoffPoint> plot_tradeoff(const MetricReport& baseline, const SweepTable& sweep) {
  if (sweep.rows.empty()) throw Error(ErrorCode::EmptyInput, "sweep has no rows");
  const auto base = [&](const char* key) { return mean_of(baseline.aggregates, key); };
  const auto delta = [](std::optional<Real> a, std::optional<Real> b) -> std::optional<Real> {
    if (!a || !b) return std::nullopt;
    return *a - *b;
  };
  std::vector<TradeoffPoint> out;
  for (const auto& r : sweep.rows) {
    TradeoffPoint p;
    p.label = r.label;
    p.d_facesim = delta(mean_of(r.aggregates, "facesim"), base("facesim"));
    p.d_yaw = delta(mean_of(r.aggregates, "posediv_yaw"), base("posediv_yaw"));
    p.d_pitch = delta(mean_of(r.aggregates, "posediv_pitch"), base("posediv_pitch"));
    p.d_roll = delta(mean_of(r.aggregates, "posediv_roll"), base("posediv_roll"));
    out.push_back(std::move(p));
  }
  return out;
}

std::string render_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& baseline_hash) {
  std::ostringstream os;
  os << "# baseline " << baseline_hash << "\n";
  os << "selection,delta_facesim,delta_posediv_yaw,delta_posediv_pitch,delta_posediv_roll\n";
  const auto cell = [](const std::optional<Real>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& p : points)
    os << csv_cell(p.label) << "," << cell(p.d_facesim) << "," << cell(p.d_yaw) << "," << cell(p.d_pitch) << ","
       << cell(p.d_roll) << "\n";
  return os.str();
}

}  // namespace editid
