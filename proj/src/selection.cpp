#include "editid/selection.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "editid/core.hpp"

namespace editid {

std::string_view to_string(ShiftStrategy strategy) {
  switch (strategy) {
    case ShiftStrategy::Padding: return "padding";
    case ShiftStrategy::Interpolate: return "interpolate";
    case ShiftStrategy::Average: return "average";
    case ShiftStrategy::Max: return "max";
  }
  return "?";
}

ShiftStrategy parse_shift_strategy(std::string_view text) {
  for (auto s : {ShiftStrategy::Padding, ShiftStrategy::Interpolate, ShiftStrategy::Average,
                 ShiftStrategy::Max})
    if (text == to_string(s)) return s;
  throw Error(ErrorCode::Config, "unknown shift strategy '" + std::string(text) + "'");
}

namespace {

bool is_original_layer(int layer) {
  return std::find(kOriginalMappingLayers.begin(), kOriginalMappingLayers.end(), layer) != kOriginalMappingLayers.end();
}

}  // namespace

std::vector<int> LayerSelection::map_set() const {
  std::vector<int> out;
  for (int i = 0; i < kSlotCount; ++i) {
    const auto& s = slots[static_cast<std::size_t>(i)];
    if (s.kind == SlotPick::Kind::Layer && is_original_layer(s.layer)) out.push_back(i);
  }
  return out;
}

std::vector<int> LayerSelection::shift_set() const {
  std::vector<int> out;
  for (int i = 0; i < kSlotCount; ++i) {
    const auto& s = slots[static_cast<std::size_t>(i)];
    if (s.kind == SlotPick::Kind::Synthesized || (s.kind == SlotPick::Kind::Layer && !is_original_layer(s.layer)))
      out.push_back(i);
  }
  return out;
}

int LayerSelection::nonzero_count() const {
  return static_cast<int>(std::count_if(slots.begin(), slots.end(),
                                        [](const SlotPick& s) { return s.kind != SlotPick::Kind::Zero; }));
}

std::string format_slots(const std::array<SlotPick, kSlotCount>& slots) {
  std::string out = "[";
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i) out += ',';
    switch (slots[i].kind) {
      case SlotPick::Kind::Layer: out += std::to_string(slots[i].layer); break;
      case SlotPick::Kind::Zero: out += '-'; break;
      case SlotPick::Kind::Synthesized: out += '~'; break;
    }
  }
  return out + "]";
}

std::string LayerSelection::key() const {
  std::string k = format_slots(slots);
  if (strategy) {
    k += std::string("|") + std::string(to_string(*strategy)) + "|";
    for (int p : raw_picks) k += std::to_string(p) + ",";
  }
  return k;
}

LayerSelection parse_selection(std::string_view text) {
  std::string cleaned;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) cleaned += c;
  if (!cleaned.empty() && cleaned.front() == '[') cleaned.erase(cleaned.begin());
  if (!cleaned.empty() && cleaned.back() == ']') cleaned.pop_back();

  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = cleaned.find(',', start);
    fields.push_back(cleaned.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (fields.size() != static_cast<std::size_t>(kSlotCount))
    throw Error(ErrorCode::Config, "selection '" + std::string(text) + "' must have exactly 5 entries");

  LayerSelection sel;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (f == "-") {
      sel.slots[i] = SlotPick::zero();
      continue;
    }
    int layer = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), layer);
    if (ec != std::errc{} || ptr != f.data() + f.size() || layer < 0)
      throw Error(ErrorCode::Config, "bad selection entry '" + f + "' in '" + std::string(text) + "'");
    sel.slots[i] = layer == 0 ? SlotPick::zero() : SlotPick::of_layer(layer);
  }
  sel.label = "[" + cleaned + "]";
  return sel;
}

LayerSelection default_selection() {
  LayerSelection sel;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    sel.slots[i] = SlotPick::of_layer(kDefaultSelectionLayers[i]);
    sel.raw_picks.push_back(kDefaultSelectionLayers[i]);
  }
  sel.label = format_slots(sel.slots);
  return sel;
}

}  // namespace editid
