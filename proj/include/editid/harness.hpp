#pragma once

// IBench orchestration: resolve backends, pair datasets with prompts,
// generate with and without the ID branch, score, persist, aggregate.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "editid/config.hpp"
#include "editid/generator.hpp"
#include "editid/report.hpp"

namespace editid {

inline constexpr std::string_view kCodeVersion = "editid 0.1.0";

/// Registers the toy set under "toy" and every manifest entry.
void populate_registry(BackendRegistry& registry, const BackendsConfig& cfg);

/// Handles resolved once per run. Generation uses the face-detector kind;
/// metrics use the landmark-detector kind, so the two can differ.
struct RunBackends {
  BackendHandle face_detector, face_embedder, layered_encoder, generator;
  BackendHandle metric_detector, text_encoder, image_encoder, fine_encoder, head_pose, expression, statistics,
      aesthetic, quality;

  static RunBackends resolve(const BackendRegistry& registry, const BackendsConfig& cfg);
  std::vector<const BackendDescriptor*> descriptors() const;
  /// Smallest positive max_concurrency among the handles, or 0 if none.
  int concurrency_limit() const;
};

/// Edit feature for one ID image, or nullopt when the mask disables the
/// whole branch. Throws FaceNotFound when the generation detector fails.
std::optional<EditFeature> build_edit_feature(const ImageBuffer& id_image, const RunBackends& b,
                                              const FeatureBranchConfig& cfg);

struct GeneratedPair {
  ImageBuffer with_id;
  ImageBuffer without_id;
  std::string id_branch = "ok";
};

/// Both images share the seed. If the ID branch cannot run (no face) the
/// with-ID image falls back to the plain sample and id_branch names the error.
GeneratedPair generate_pair(const ImageBuffer& id_image, const std::string& prompt, std::uint64_t seed,
                            const RunBackends& b, const HarnessConfig& cfg);

/// Scores every enabled metric; failures become null records with codes.
void score_case(CaseResult& out, const ImageBuffer& id_image, const GeneratedPair& images, const RunBackends& b,
                const MetricsConfig& metrics);

struct RunResult {
  nlohmann::json manifest;
  MetricReport report;
  std::vector<std::string> notices;
  std::filesystem::path run_dir;
};

/// Full evaluation into cfg.output_dir. Writes cases/<address>/*.ppm,
/// report.json (canonical), report.csv, report.txt and manifest.json.
RunResult run(const HarnessConfig& cfg, const BackendRegistry& registry);

/// Manifest without its timestamps, for byte comparisons.
nlohmann::json canonical_manifest(nlohmann::json manifest);

/// Re-renders report.json/csv/txt next to a manifest from its case records.
MetricReport report(const std::filesystem::path& manifest_path);

/// Write-then-rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace editid
