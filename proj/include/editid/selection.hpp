#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace editid {

inline constexpr int kSlotCount = 5;

/// Layer indices are 1-based, matching the encoder's layer numbering.
inline constexpr std::array<int, kSlotCount> kOriginalMappingLayers{4, 8, 12, 16, 20};
inline constexpr std::array<int, kSlotCount> kDefaultSelectionLayers{4, 14, 16, 18, 20};

struct SlotPick {
  enum class Kind { Layer, Zero, Synthesized };
  Kind kind = Kind::Zero;
  int layer = 0;  // Kind::Layer only

  static SlotPick of_layer(int layer) { return {Kind::Layer, layer}; }
  static SlotPick zero() { return {Kind::Zero, 0}; }
  static SlotPick synthesized() { return {Kind::Synthesized, 0}; }

  friend bool operator==(const SlotPick&, const SlotPick&) = default;
};

enum class ShiftStrategy { Padding, Interpolate, Average, Max };

std::string_view to_string(ShiftStrategy strategy);
ShiftStrategy parse_shift_strategy(std::string_view text);

/// Five ordered slots feeding the five mapping networks. A slot holding the
/// original mapping layer for its position is a mapping pick; any other
/// layer is a shift pick.
struct LayerSelection {
  std::array<SlotPick, kSlotCount> slots{};
  std::vector<int> raw_picks;  // the list the selection was built from, if any
  std::optional<ShiftStrategy> strategy;
  std::string label;  // display form, e.g. "[4,14,16,18,20]"

  /// 0-based slot positions holding one of the original five layers, wherever
  /// it sits; shift_set holds the other non-ZERO slots.
  std::vector<int> map_set() const;
  std::vector<int> shift_set() const;
  int nonzero_count() const;

  /// Identity used for deduplication: slots + raw picks + strategy.
  std::string key() const;
};

/// Parses the table notation: "4,14,16,18,20", "[4,8,-,-,-]". "-" and "0"
/// both denote a ZERO slot. Exactly five entries.
LayerSelection parse_selection(std::string_view text);

std::string format_slots(const std::array<SlotPick, kSlotCount>& slots);

LayerSelection default_selection();

}  // namespace editid
