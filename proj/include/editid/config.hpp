#pragma once

// Run configuration. The JSON layout:
//
//   seed, workers, output_dir
//   backends:       {toy_seed, manifest: [...], use: {"<kind>": "<name>"}}
//   sampler:        {steps, seed, guidance, name}
//   feature_branch: {selection | picks + strategy, mask, id_dim, hidden, id_seed, map_seed}
//   integration:    {blocks, reweight, fusion, schedule, perceiver}
//   datasets:       [{name, dir, expected_count, genders}]
//   prompts:        [{name, file, expected_count}]
//   pairing:        [{dataset, prompts}]
//   metrics:        {enabled: [...], landmark_normalization}
//
// Relative paths resolve against the config file's directory.
// EDITID_OUTPUT_DIR and EDITID_WORKERS override output_dir and workers.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "editid/backends.hpp"
#include "editid/dataset.hpp"
#include "editid/features.hpp"
#include "editid/flow.hpp"
#include "editid/fusion.hpp"
#include "editid/integration.hpp"
#include "editid/metrics.hpp"
#include "editid/selection.hpp"

namespace editid {

/// Metric names in report column order (Posediv counts once).
inline const std::vector<std::string> kMetricNames = {
    "fid",      "aesthetic", "image_quality", "posediv", "landmarkdiff", "exprdiv",
    "facesim",  "clip_i",    "clip_t",        "dino",    "fgis",
};

struct BackendsConfig {
  std::uint64_t toy_seed = 0;
  nlohmann::json manifest = nlohmann::json::array();
  std::map<BackendKind, std::string> use;  // unspecified kinds resolve to "toy"

  const std::string& name_for(BackendKind kind) const;
};

struct FeatureBranchConfig {
  LayerSelection selection = default_selection();
  AblationMask mask;
  int id_dim = 32;
  int hidden = 64;
  std::uint64_t id_seed = 301;
  std::uint64_t map_seed = 302;
};

struct MetricsConfig {
  std::set<std::string> enabled{kMetricNames.begin(), kMetricNames.end()};
  LandmarkNormalization landmark_normalization = LandmarkNormalization::PerImage;

  bool on(const std::string& metric) const { return enabled.count(metric) > 0; }
};

struct PromptSource {
  std::string name;
  std::filesystem::path file;
  std::optional<int> expected_count;
};

struct HarnessConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "editid-out";
  BackendsConfig backends;
  SamplerSettings sampler;
  FeatureBranchConfig feature_branch;
  IntegrationConfig integration;
  std::vector<DatasetGroup> datasets;
  std::vector<PromptSource> prompts;
  std::vector<Pairing> pairing = default_pairing();
  MetricsConfig metrics;
};

/// Strict parse: unknown top-level sections are Config errors.
HarnessConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
HarnessConfig load_config(const std::filesystem::path& file);
void apply_env_overrides(HarnessConfig& cfg);

/// Normalised snapshot with every default filled in.
nlohmann::json to_json(const HarnessConfig& cfg);

/// FNV-1a of the canonical snapshot minus output_dir and workers, as 16 hex
/// digits. Neither excluded field can change numeric results.
std::string config_hash(const HarnessConfig& cfg);

/// Sorted keys, 2-space indent, floats as %.17g, non-finite floats as null.
std::string canonical_json(const nlohmann::json& j);

std::string hex64(std::uint64_t v);

nlohmann::json selection_to_json(const LayerSelection& s);
LayerSelection selection_from_json(const nlohmann::json& j);
nlohmann::json fusion_to_json(const FusionMethod& f);
FusionMethod fusion_from_json(const nlohmann::json& j);
nlohmann::json reweight_to_json(const ReweightMethod& r);
ReweightMethod reweight_from_json(const nlohmann::json& j);

}  // namespace editid
