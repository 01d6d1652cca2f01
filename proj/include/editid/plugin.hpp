#pragma once

// Backend manifest: config entries that register backends by (kind, name).
//
//   {"kind": "face-embedder", "name": "arcface",
//    "entry": "plugin:/opt/adapters/libarcface.so:make_arcface",
//    "output_dims": {"embedding": 512}, "seed": 3, "max_concurrency": 1}
//
// "entry": "toy" builds the in-tree toy backend for the kind. A plugin entry
// names a shared object and an exported factory with the signature of
// PluginFactory; the object must be built against these headers.

#include <json.hpp>

#include "editid/backends.hpp"

namespace editid {

extern "C" {
/// Returns a heap-allocated backend (owned by the caller) or null on failure.
using PluginFactory = Backend* (*)(const BackendDescriptor* descriptor);
}

struct ManifestEntry {
  BackendDescriptor descriptor;
  std::string entry = "toy";
};

/// Parses one manifest object. Missing output_dims fall back to the toy
/// defaults for the kind.
ManifestEntry parse_manifest_entry(const nlohmann::json& j);
nlohmann::json to_json(const BackendDescriptor& d);

/// Instantiates the entry (toy or dlopen'd plugin). The shared object stays
/// loaded for as long as the returned backend is alive.
std::shared_ptr<const Backend> instantiate(const ManifestEntry& entry);

/// Parses, instantiates and registers every entry of a manifest array.
void register_manifest(BackendRegistry& registry, const nlohmann::json& entries);

}  // namespace editid
