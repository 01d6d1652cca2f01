#include "editid/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "editid/fusion.hpp"

namespace editid {

using nlohmann::json;

namespace {

const std::string kToy = "toy";

void require_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::Config, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok |= (key == a);
    if (!ok) throw Error(ErrorCode::Config, "unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string_view to_string(StrengthSchedule::Kind k) {
  return k == StrengthSchedule::Kind::Constant ? "constant" : "early-boost";
}

std::string_view to_string(LandmarkNormalization n) {
  return n == LandmarkNormalization::PerImage ? "per-image" : "shared-max";
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

const std::string& BackendsConfig::name_for(BackendKind kind) const {
  const auto it = use.find(kind);
  return it == use.end() ? kToy : it->second;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json selection_to_json(const LayerSelection& s) {
  if (s.strategy) return json{{"picks", s.raw_picks}, {"strategy", std::string(to_string(*s.strategy))}};
  return json{{"selection", s.label}};
}

LayerSelection selection_from_json(const json& j) {
  if (j.contains("selection") && j.contains("picks"))
    throw Error(ErrorCode::Config, "feature_branch takes either 'selection' or 'picks', not both");
  if (j.contains("picks")) {
    const auto picks = get<std::vector<int>>(j, "picks", {});
    std::optional<ShiftStrategy> strategy;
    if (j.contains("strategy")) strategy = parse_shift_strategy(j.at("strategy").get<std::string>());
    try {
      return build_selection(picks, strategy);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  }
  if (j.contains("strategy")) throw Error(ErrorCode::Config, "'strategy' needs a 'picks' list");
  if (j.contains("selection")) return parse_selection(j.at("selection").get<std::string>());
  return default_selection();
}

json fusion_to_json(const FusionMethod& f) {
  json j{{"method", std::string(to_string(f.kind))}};
  if (f.kind == FusionMethod::Kind::Weight && f.weights) j["weights"] = {f.weights->first, f.weights->second};
  if (f.kind == FusionMethod::Kind::Dropout) {
    j["rate"] = f.drop_rate;
    j["seed"] = f.seed;
  }
  return j;
}

FusionMethod fusion_from_json(const json& j) {
  require_keys(j, {"method", "weights", "rate", "seed"}, "integration.fusion");
  FusionMethod f;
  f.kind = parse_fusion_kind(get<std::string>(j, "method", "concat"));
  if (j.contains("weights")) {
    const auto w = get<std::vector<Real>>(j, "weights", {});
    if (w.size() != 2) throw Error(ErrorCode::Config, "fusion weights must be a pair [w_query, w_id]");
    f.weights = std::make_pair(w[0], w[1]);
  }
  f.drop_rate = get<Real>(j, "rate", 0.0);
  f.seed = get<std::uint64_t>(j, "seed", 0);
  f.validate();
  return f;
}

json reweight_to_json(const ReweightMethod& r) {
  return json{{"method", std::string(to_string(r.kind))}, {"seed", r.seed}, {"target_dim", r.target_dim}};
}

ReweightMethod reweight_from_json(const json& j) {
  require_keys(j, {"method", "seed", "target_dim"}, "integration.reweight");
  ReweightMethod r;
  if (j.contains("method")) r.kind = parse_reweight_kind(j.at("method").get<std::string>());
  r.seed = get<std::uint64_t>(j, "seed", r.seed);
  r.target_dim = get<int>(j, "target_dim", r.target_dim);
  if (r.target_dim < 1) throw Error(ErrorCode::Config, "reweight target_dim must be >= 1");
  return r;
}

HarnessConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  require_keys(j,
               {"seed", "workers", "output_dir", "backends", "sampler", "feature_branch", "integration", "datasets",
                "prompts", "pairing", "metrics"},
               "config");
  HarnessConfig cfg;
  cfg.seed = get<std::uint64_t>(j, "seed", 0);
  cfg.workers = get<int>(j, "workers", 1);
  if (cfg.workers < 1) throw Error(ErrorCode::Config, "workers must be >= 1");
  if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());

  if (j.contains("backends")) {
    const auto& b = j.at("backends");
    require_keys(b, {"toy_seed", "manifest", "use"}, "backends");
    cfg.backends.toy_seed = get<std::uint64_t>(b, "toy_seed", 0);
    if (b.contains("manifest")) {
      cfg.backends.manifest = b.at("manifest");
      if (!cfg.backends.manifest.is_array()) throw Error(ErrorCode::Config, "backends.manifest must be an array");
      // Plugin paths resolve like every other path.
      for (auto& e : cfg.backends.manifest) {
        const auto entry = e.value("entry", std::string("toy"));
        if (entry.rfind("plugin:", 0) == 0) {
          const auto rest = entry.substr(7);
          const auto colon = rest.rfind(':');
          if (colon != std::string::npos)
            e["entry"] = "plugin:" + resolve(base_dir, rest.substr(0, colon)).string() + rest.substr(colon);
        }
      }
    }
    if (b.contains("use")) {
      if (!b.at("use").is_object()) throw Error(ErrorCode::Config, "backends.use must map kind -> name");
      for (const auto& [kind, name] : b.at("use").items())
        cfg.backends.use[parse_backend_kind(kind)] = name.get<std::string>();
    }
  }

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    require_keys(s, {"steps", "seed", "guidance", "cfg_scale", "name"}, "sampler");
    cfg.sampler.steps = get<int>(s, "steps", cfg.sampler.steps);
    cfg.sampler.seed = get<std::uint64_t>(s, "seed", cfg.sampler.seed);
    cfg.sampler.guidance = get<Real>(s, "guidance", cfg.sampler.guidance);
    cfg.sampler.cfg_scale = get<Real>(s, "cfg_scale", cfg.sampler.cfg_scale);
    cfg.sampler.name = get<std::string>(s, "name", cfg.sampler.name);
    if (cfg.sampler.steps < 1) throw Error(ErrorCode::Config, "sampler.steps must be >= 1");
    if (cfg.sampler.name != "euler") throw Error(ErrorCode::Config, "sampler.name must be 'euler'");
  }

  if (j.contains("feature_branch")) {
    const auto& f = j.at("feature_branch");
    require_keys(f, {"selection", "picks", "strategy", "mask", "id_dim", "hidden", "id_seed", "map_seed"},
                 "feature_branch");
    cfg.feature_branch.selection = selection_from_json(f);
    if (f.contains("mask")) {
      const auto& m = f.at("mask");
      require_keys(m, {"zero_face", "zero_cls", "zero_local", "zero_slots"}, "feature_branch.mask");
      auto& mask = cfg.feature_branch.mask;
      mask.zero_face = get<bool>(m, "zero_face", false);
      mask.zero_cls = get<bool>(m, "zero_cls", false);
      mask.zero_local = get<bool>(m, "zero_local", false);
      for (int s : get<std::vector<int>>(m, "zero_slots", {})) {
        if (s < 1 || s > kSlotCount) throw Error(ErrorCode::Config, "mask slot numbers are 1..5");
        mask.zero_slots.insert(s);
      }
    }
    cfg.feature_branch.id_dim = get<int>(f, "id_dim", cfg.feature_branch.id_dim);
    cfg.feature_branch.hidden = get<int>(f, "hidden", cfg.feature_branch.hidden);
    cfg.feature_branch.id_seed = get<std::uint64_t>(f, "id_seed", cfg.feature_branch.id_seed);
    cfg.feature_branch.map_seed = get<std::uint64_t>(f, "map_seed", cfg.feature_branch.map_seed);
    if (cfg.feature_branch.id_dim < 1 || cfg.feature_branch.hidden < 1)
      throw Error(ErrorCode::Config, "feature_branch dims must be >= 1");
  }

  if (j.contains("integration")) {
    const auto& in = j.at("integration");
    require_keys(in, {"blocks", "reweight", "fusion", "schedule", "perceiver"}, "integration");
    auto& ic = cfg.integration;
    if (in.contains("blocks")) {
      const auto& b = in.at("blocks");
      if (b.is_number_integer()) {
        ic.blocks = select_blocks(b.get<int>());
      } else if (b.is_array()) {
        std::vector<BlockId> ids;
        for (const auto& x : b) ids.push_back(x.is_string() ? parse_block_id(x.get<std::string>())
                                                            : BlockId::from_flat(x.get<int>()));
        ic.blocks = select_blocks(std::move(ids));
      } else {
        throw Error(ErrorCode::Config, "integration.blocks must be a count or a list of block ids");
      }
    }
    if (in.contains("reweight")) ic.reweight = reweight_from_json(in.at("reweight"));
    if (in.contains("fusion")) ic.fusion = fusion_from_json(in.at("fusion"));
    if (in.contains("schedule")) {
      const auto& s = in.at("schedule");
      require_keys(s, {"kind", "base", "boost", "boost_until_fraction"}, "integration.schedule");
      const auto kind = get<std::string>(s, "kind", "constant");
      if (kind == "constant") ic.schedule.kind = StrengthSchedule::Kind::Constant;
      else if (kind == "early-boost") ic.schedule.kind = StrengthSchedule::Kind::EarlyBoost;
      else throw Error(ErrorCode::Config, "schedule.kind must be constant or early-boost");
      ic.schedule.base = get<Real>(s, "base", ic.schedule.base);
      ic.schedule.boost = get<Real>(s, "boost", ic.schedule.boost);
      ic.schedule.boost_until_fraction = get<Real>(s, "boost_until_fraction", ic.schedule.boost_until_fraction);
      ic.schedule.validate();
    }
    if (in.contains("perceiver")) {
      const auto& p = in.at("perceiver");
      require_keys(p, {"seed", "inner_dim", "output_bias"}, "integration.perceiver");
      ic.perceiver.seed = get<std::uint64_t>(p, "seed", ic.perceiver.seed);
      ic.perceiver.inner_dim = get<int>(p, "inner_dim", ic.perceiver.inner_dim);
      ic.perceiver.output_bias = get<bool>(p, "output_bias", ic.perceiver.output_bias);
    }
  }

  if (j.contains("datasets")) {
    for (const auto& d : j.at("datasets")) {
      require_keys(d, {"name", "dir", "expected_count", "genders"}, "datasets[]");
      DatasetGroup g;
      g.name = get<std::string>(d, "name", "");
      if (g.name.empty() || !d.contains("dir")) throw Error(ErrorCode::Config, "datasets[] need 'name' and 'dir'");
      g.image_dir = resolve(base_dir, d.at("dir").get<std::string>());
      if (d.contains("expected_count")) g.expected_count = d.at("expected_count").get<int>();
      if (d.contains("genders"))
        for (const auto& [file, gender] : d.at("genders").items())
          g.genders[file] = parse_gender(gender.get<std::string>());
      cfg.datasets.push_back(std::move(g));
    }
  }
  if (j.contains("prompts")) {
    for (const auto& p : j.at("prompts")) {
      require_keys(p, {"name", "file", "expected_count"}, "prompts[]");
      PromptSource s;
      s.name = get<std::string>(p, "name", "");
      if (s.name.empty() || !p.contains("file")) throw Error(ErrorCode::Config, "prompts[] need 'name' and 'file'");
      s.file = resolve(base_dir, p.at("file").get<std::string>());
      if (p.contains("expected_count")) s.expected_count = p.at("expected_count").get<int>();
      cfg.prompts.push_back(std::move(s));
    }
  }
  if (j.contains("pairing")) {
    cfg.pairing.clear();
    for (const auto& p : j.at("pairing")) {
      require_keys(p, {"dataset", "prompts"}, "pairing[]");
      cfg.pairing.push_back({get<std::string>(p, "dataset", ""), get<std::string>(p, "prompts", "")});
    }
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    require_keys(m, {"enabled", "landmark_normalization"}, "metrics");
    if (m.contains("enabled")) {
      cfg.metrics.enabled.clear();
      for (const auto& name : m.at("enabled").get<std::vector<std::string>>()) {
        if (std::find(kMetricNames.begin(), kMetricNames.end(), name) == kMetricNames.end())
          throw Error(ErrorCode::Config, "unknown metric '" + name + "'");
        cfg.metrics.enabled.insert(name);
      }
    }
    const auto norm = get<std::string>(m, "landmark_normalization", "per-image");
    if (norm == "per-image") cfg.metrics.landmark_normalization = LandmarkNormalization::PerImage;
    else if (norm == "shared-max") cfg.metrics.landmark_normalization = LandmarkNormalization::SharedMax;
    else throw Error(ErrorCode::Config, "landmark_normalization must be per-image or shared-max");
  }
  return cfg;
}

HarnessConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, file.string() + ": " + e.what());
  }
  return parse_config(j, file.parent_path());
}

void apply_env_overrides(HarnessConfig& cfg) {
  if (const char* dir = std::getenv("EDITID_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  if (const char* w = std::getenv("EDITID_WORKERS"); w && *w) {
    char* end = nullptr;
    const long n = std::strtol(w, &end, 10);
    if (*end != '\0' || n < 1) throw Error(ErrorCode::Config, std::string("EDITID_WORKERS must be >= 1, got ") + w);
    cfg.workers = static_cast<int>(n);
  }
}

json to_json(const HarnessConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["output_dir"] = cfg.output_dir.string();

  json use = json::object();
  for (const auto& [kind, name] : cfg.backends.use) use[std::string(to_string(kind))] = name;
  j["backends"] = {{"toy_seed", cfg.backends.toy_seed}, {"manifest", cfg.backends.manifest}, {"use", use}};

  j["sampler"] = {{"steps", cfg.sampler.steps},
                  {"seed", cfg.sampler.seed},
                  {"guidance", cfg.sampler.guidance},
                  {"cfg_scale", cfg.sampler.cfg_scale},
                  {"name", cfg.sampler.name}};

  const auto& fb = cfg.feature_branch;
  json fbj = selection_to_json(fb.selection);
  fbj["mask"] = {{"zero_face", fb.mask.zero_face},
                 {"zero_cls", fb.mask.zero_cls},
                 {"zero_local", fb.mask.zero_local},
                 {"zero_slots", std::vector<int>(fb.mask.zero_slots.begin(), fb.mask.zero_slots.end())}};
  fbj["id_dim"] = fb.id_dim;
  fbj["hidden"] = fb.hidden;
  fbj["id_seed"] = fb.id_seed;
  fbj["map_seed"] = fb.map_seed;
  j["feature_branch"] = fbj;

  const auto& ic = cfg.integration;
  json blocks = json::array();
  for (const auto& b : ic.blocks.selected) blocks.push_back(to_string(b));
  j["integration"] = {{"blocks", blocks},
                      {"reweight", reweight_to_json(ic.reweight)},
                      {"fusion", fusion_to_json(ic.fusion)},
                      {"schedule",
                       {{"kind", std::string(to_string(ic.schedule.kind))},
                        {"base", ic.schedule.base},
                        {"boost", ic.schedule.boost},
                        {"boost_until_fraction", ic.schedule.boost_until_fraction}}},
                      {"perceiver",
                       {{"seed", ic.perceiver.seed},
                        {"inner_dim", ic.perceiver.inner_dim},
                        {"output_bias", ic.perceiver.output_bias}}}};

  json datasets = json::array();
  for (const auto& d : cfg.datasets) {
    json g{{"name", d.name}, {"dir", d.image_dir.string()}};
    if (d.expected_count) g["expected_count"] = *d.expected_count;
    json genders = json::object();
    for (const auto& [file, gender] : d.genders) genders[file] = std::string(to_string(gender));
    g["genders"] = genders;
    datasets.push_back(g);
  }
  j["datasets"] = datasets;
  json prompts = json::array();
  for (const auto& p : cfg.prompts) {
    json s{{"name", p.name}, {"file", p.file.string()}};
    if (p.expected_count) s["expected_count"] = *p.expected_count;
    prompts.push_back(s);
  }
  j["prompts"] = prompts;
  json pairing = json::array();
  for (const auto& p : cfg.pairing) pairing.push_back({{"dataset", p.dataset}, {"prompts", p.prompts}});
  j["pairing"] = pairing;
  j["metrics"] = {{"enabled", std::vector<std::string>(cfg.metrics.enabled.begin(), cfg.metrics.enabled.end())},
                  {"landmark_normalization", std::string(to_string(cfg.metrics.landmark_normalization))}};
  return j;
}

std::string config_hash(const HarnessConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("workers");
  return hex64(fnv1a64(canonical_json(j)));
}

namespace {

void dump(const json& j, std::ostringstream& os, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys already sorted
        if (!first) os << ",\n";
        first = false;
        os << inner << json(it.key()).dump() << ": ";
        dump(it.value(), os, indent + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << inner;
        dump(j[i], os, indent + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        os << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf;
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

std::string canonical_json(const json& j) {
  std::ostringstream os;
  dump(j, os, 0);
  os << "\n";
  return os.str();
}

}  // namespace editid
