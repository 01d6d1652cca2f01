#include "editid/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace editid {

namespace {

void check_picks(std::span<const int> picks) {
  if (picks.empty()) throw Error(ErrorCode::InvalidInput, "raw picks must be nonempty");
  for (int p : picks)
    if (p < 1) throw Error(ErrorCode::InvalidInput, "layer picks are 1-based; got " + std::to_string(p));
}

bool strategy_fits(ShiftStrategy s, std::size_t n) {
  switch (s) {
    case ShiftStrategy::Padding:
    case ShiftStrategy::Interpolate: return n < kSlotCount;
    case ShiftStrategy::Average:
    case ShiftStrategy::Max: return n > kSlotCount;
  }
  return false;
}

// Fractional layer positions for the interpolate strategy.
std::array<Real, kSlotCount> interpolation_positions(std::span<const int> picks) {
  const auto [lo, hi] = std::minmax_element(picks.begin(), picks.end());
  std::array<Real, kSlotCount> pos{};
  for (int j = 0; j < kSlotCount; ++j) pos[j] = *lo + (*hi - *lo) * static_cast<Real>(j) / (kSlotCount - 1);
  return pos;
}

}  // namespace

LayerSelection build_selection(std::span<const int> raw_picks, std::optional<ShiftStrategy> strategy) {
  check_picks(raw_picks);
  const std::size_t n = raw_picks.size();
  LayerSelection sel;
  sel.raw_picks.assign(raw_picks.begin(), raw_picks.end());
  if (n == kSlotCount) {
    if (strategy)
      throw Error(ErrorCode::InvalidInput, "a five-pick list takes no shift strategy");
    for (std::size_t i = 0; i < n; ++i) sel.slots[i] = SlotPick::of_layer(raw_picks[i]);
    sel.label = format_slots(sel.slots);
    return sel;
  }
  if (!strategy)
    throw Error(ErrorCode::InvalidInput,
                std::to_string(n) + " picks need a shift strategy to reach 5 slots");
  if (!strategy_fits(*strategy, n))
    throw Error(ErrorCode::InvalidInput, std::string(to_string(*strategy)) + " does not apply to " +
                                             std::to_string(n) + " picks");
  sel.strategy = strategy;
  switch (*strategy) {
    case ShiftStrategy::Padding:
      for (std::size_t i = 0; i < kSlotCount; ++i)
        sel.slots[i] = i < n ? SlotPick::of_layer(raw_picks[i]) : SlotPick::zero();
      break;
    case ShiftStrategy::Interpolate: {
      const auto pos = interpolation_positions(raw_picks);
      for (std::size_t i = 0; i < kSlotCount; ++i) {
        const bool on_pick = std::any_of(raw_picks.begin(), raw_picks.end(),
                                         [&](int p) { return static_cast<Real>(p) == pos[i]; });
        sel.slots[i] = on_pick ? SlotPick::of_layer(static_cast<int>(pos[i])) : SlotPick::synthesized();
      }
      break;
    }
    case ShiftStrategy::Average:
    case ShiftStrategy::Max:
      sel.slots.fill(SlotPick::synthesized());
      break;
  }
  sel.label = format_slots(sel.slots) + ":" + std::string(to_string(*strategy));
  return sel;
}

std::array<std::pair<int, int>, kSlotCount> contiguous_groups(int n) {
  std::array<std::pair<int, int>, kSlotCount> groups{};
  int begin = 0;
  for (int g = 0; g < kSlotCount; ++g) {
    const int size = n / kSlotCount + (g < n % kSlotCount ? 1 : 0);
    groups[g] = {begin, size};
    begin += size;
  }
  return groups;
}

LocalFeatureStack materialize_slots(const LayerFeatureSet& layers, const LayerSelection& selection,
                                    std::optional<ShiftStrategy> strategy, std::span<const int> raw_picks) {
  if (!strategy) return select_slots(layers, selection);
  if (selection.strategy != strategy)
    throw Error(ErrorCode::InvalidInput, "strategy does not match the selection it was built with");
  if (!strategy_fits(*strategy, raw_picks.size()))
    throw Error(ErrorCode::InvalidInput, "strategy does not apply to the given picks");

  LocalFeatureStack stack;
  stack.slots = MatrixX::Zero(kSlotCount, layers.dim());
  stack.provenance = selection.slots;
  switch (*strategy) {
    case ShiftStrategy::Padding:
      return select_slots(layers, selection);
    case ShiftStrategy::Interpolate: {
      std::vector<int> sorted(raw_picks.begin(), raw_picks.end());
      std::sort(sorted.begin(), sorted.end());
      const auto pos = interpolation_positions(raw_picks);
      for (int j = 0; j < kSlotCount; ++j) {
        // Bracketing chosen picks a <= pos <= b.
        auto upper = std::lower_bound(sorted.begin(), sorted.end(), pos[j],
                                      [](int p, Real v) { return static_cast<Real>(p) < v; });
        if (upper == sorted.end()) --upper;
        const int b = *upper;
        const int a = upper == sorted.begin() ? b : *(upper - 1);
        const Real w = b == a ? 0.0 : (pos[j] - a) / (b - a);
        stack.slots.row(j) = ((1.0 - w) * layers.layer(a) + w * layers.layer(b)).transpose();
      }
      return stack;
    }
    case ShiftStrategy::Average:
    case ShiftStrategy::Max: {
      const auto groups = contiguous_groups(static_cast<int>(raw_picks.size()));
      for (int g = 0; g < kSlotCount; ++g) {
        const auto [begin, size] = groups[g];
        VectorX acc = layers.layer(raw_picks[begin]);
        for (int k = begin + 1; k < begin + size; ++k) {
          const VectorX v = layers.layer(raw_picks[k]);
          if (*strategy == ShiftStrategy::Average) acc += v;
          else acc = acc.cwiseMax(v);
        }
        if (*strategy == ShiftStrategy::Average) acc /= static_cast<Real>(size);
        stack.slots.row(g) = acc.transpose();
      }
      return stack;
    }
  }
  return stack;
}

LocalFeatureStack materialize_slots(const LayerFeatureSet& layers, const LayerSelection& selection) {
  return materialize_slots(layers, selection, selection.strategy, selection.raw_picks);
}

IDEmbedding embed_id(const GlobalFeature& global, const FusionNetworkSpec& spec) {
  if (global.dim() != spec.global_dim)
    throw Error(ErrorCode::ShapeMismatch, "global feature has " + std::to_string(global.dim()) +
                                              " values, ID network expects " + std::to_string(spec.global_dim));
  return {spec.id_network()(global.concat())};
}

MappedStack map_slots(const LocalFeatureStack& stack, const FusionNetworkSpec& spec) {
  if (stack.slots.rows() != kSlotCount || stack.dim() != spec.local_dim)
    throw Error(ErrorCode::ShapeMismatch, "local stack does not match the mapping networks");
  MappedStack out;
  out.slots.resize(kSlotCount, spec.id_dim);
  for (int i = 0; i < kSlotCount; ++i)
    out.slots.row(i) = spec.mapping_network(i)(stack.slots.row(i).transpose()).transpose();
  return out;
}

FuseResult fuse_with_weights(const IDEmbedding& id, const MappedStack& mapped) {
  if (mapped.slots.cols() != id.values.size())
    throw Error(ErrorCode::ShapeMismatch, "ID embedding and mapped slots differ in width");
  const MatrixX query = id.values.transpose();
  const MatrixX logits = (query * mapped.slots.transpose()) / std::sqrt(static_cast<Real>(id.values.size()));
  const MatrixX weights = softmax_rows<Real>(logits);
  FuseResult r;
  r.weights = weights.row(0).transpose();
  r.feature.values = (weights * mapped.slots).row(0).transpose();
  if (!r.feature.values.allFinite() || !r.weights.allFinite())
    throw Error(ErrorCode::NonFinite, "fusion produced non-finite values");
  return r;
}

EditFeature fuse(const IDEmbedding& id, const MappedStack& mapped) {
  return fuse_with_weights(id, mapped).feature;
}

}  // namespace editid
