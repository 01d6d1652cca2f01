#pragma once

// Ablation sweeps over layer selections and fusion/reweight combinations,
// plus the Facesim-vs-Posediv tradeoff data derived from them.

#include <filesystem>
#include <string>
#include <vector>

#include "editid/harness.hpp"

namespace editid {

struct SweepRow {
  std::string label;
  std::string config_hash;
  std::map<std::string, Aggregate> aggregates;
  std::string run_dir;  // relative to the sweep directory
};

struct SweepTable {
  std::string kind;  // "selections" or "fusion"
  std::vector<std::pair<std::string, std::string>> columns;  // (title, aggregate key)
  std::vector<SweepRow> rows;
  std::vector<std::string> notices;
};

/// One selection string per line ("-" or "0" for ZERO); '#' comments and
/// blank lines are skipped.
std::vector<LayerSelection> load_selection_file(const std::filesystem::path& file);

/// One run per distinct selection, all sharing seeds, under
/// <output_dir>/sweep-selections/NN. Duplicates are dropped with a notice.
SweepTable sweep_selections(const HarnessConfig& cfg, const BackendRegistry& registry,
                            const std::vector<LayerSelection>& selections);

struct FusionCombo {
  FusionMethod fusion;
  ReweightMethod reweight;

  std::string label() const;
};

/// The six residual fusion methods with one reweight method. Weight uses
/// (0.5, 0.5) and dropout a rate of 0.1.
std::vector<FusionCombo> default_fusion_combos(const ReweightMethod& reweight);
std::vector<FusionCombo> load_fusion_combos(const nlohmann::json& j);

SweepTable sweep_fusion(const HarnessConfig& cfg, const BackendRegistry& registry,
                        const std::vector<FusionCombo>& combos);

nlohmann::json to_json(const SweepTable& t);
SweepTable sweep_from_json(const nlohmann::json& j);
std::string render_sweep_csv(const SweepTable& t);
std::string render_sweep_text(const SweepTable& t);

/// Per row: (Facesim, Posediv yaw/pitch/roll) minus the baseline's values.
struct TradeoffPoint {
  std::string label;
  std::optional<Real> d_facesim, d_yaw, d_pitch, d_roll;
};

std::vector<TradeoffPoint> plot_tradeoff(const MetricReport& baseline, const SweepTable& sweep);
std::string render_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& baseline_hash);

}  // namespace editid
