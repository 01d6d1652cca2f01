#include "editid/plugin.hpp"

#include <dlfcn.h>

#include "editid/toy_backends.hpp"

namespace editid {

ManifestEntry parse_manifest_entry(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "backend manifest entries must be objects");
  if (!j.contains("kind") || !j.contains("name"))
    throw Error(ErrorCode::Config, "backend manifest entry needs 'kind' and 'name'");
  ManifestEntry e;
  const auto kind = parse_backend_kind(j.at("kind").get<std::string>());
  const auto name = j.at("name").get<std::string>();
  e.descriptor = toy_descriptor(kind, name, j.value("seed", std::uint64_t{0}));
  if (!j.contains("seed")) e.descriptor.seed.reset();
  if (j.contains("output_dims")) e.descriptor.output_dims = j.at("output_dims").get<std::map<std::string, int>>();
  if (j.contains("layer_count")) e.descriptor.layer_count = j.at("layer_count").get<int>();
  e.descriptor.deterministic = j.value("deterministic", true);
  e.entry = j.value("entry", std::string("toy"));
  // Real adapters are assumed single-threaded unless they say otherwise.
  e.descriptor.max_concurrency = j.value("max_concurrency", e.entry == "toy" ? 0 : 1);
  if (e.descriptor.max_concurrency < 0) throw Error(ErrorCode::Config, "max_concurrency must be >= 0");
  return e;
}

nlohmann::json to_json(const BackendDescriptor& d) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(d.kind));
  j["name"] = d.name;
  j["output_dims"] = d.output_dims;
  j["layer_count"] = d.layer_count;
  j["deterministic"] = d.deterministic;
  j["seed"] = d.seed ? nlohmann::json(*d.seed) : nlohmann::json(nullptr);
  j["max_concurrency"] = d.max_concurrency;
  return j;
}

namespace {

std::shared_ptr<const Backend> load_plugin(const ManifestEntry& e) {
  // plugin:<path>:<symbol>; the path itself may contain ':'.
  const std::string spec = e.entry.substr(7);
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
    throw Error(ErrorCode::Config, "plugin entry must look like plugin:<path>:<symbol>, got '" + e.entry + "'");
  const std::string path = spec.substr(0, colon);
  const std::string symbol = spec.substr(colon + 1);

  void* raw = ::dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!raw) throw Error(ErrorCode::NotFound, "cannot load plugin " + path + ": " + ::dlerror());
  std::shared_ptr<void> lib(raw, [](void* h) { ::dlclose(h); });

  auto factory = reinterpret_cast<PluginFactory>(::dlsym(raw, symbol.c_str()));
  if (!factory) throw Error(ErrorCode::NotFound, "plugin " + path + " has no symbol '" + symbol + "'");
  Backend* made = factory(&e.descriptor);
  if (!made) throw Error(ErrorCode::InvalidInput, "plugin factory '" + symbol + "' returned null");
  // The deleter keeps the library mapped until the backend is destroyed.
  return std::shared_ptr<const Backend>(made, [lib](const Backend* b) { delete b; });
}

}  // namespace

std::shared_ptr<const Backend> instantiate(const ManifestEntry& e) {
  if (e.entry == "toy") return make_toy_backend(e.descriptor);
  if (e.entry.rfind("plugin:", 0) == 0) return load_plugin(e);
  throw Error(ErrorCode::Config, "unknown backend entry '" + e.entry + "' (expected toy or plugin:...)");
}

void register_manifest(BackendRegistry& registry, const nlohmann::json& entries) {
  if (!entries.is_array()) throw Error(ErrorCode::Config, "backend manifest must be an array");
  for (const auto& j : entries) {
    auto e = parse_manifest_entry(j);
    auto impl = instantiate(e);
    registry.add(std::move(e.descriptor), std::move(impl));
  }
}

}  // namespace editid
