#pragma once

// Feature fusion: 5-slot selection building with shift strategies, the
// three-layer ID embedding network, per-slot mapping networks and the
// single-query attention that yields the edit feature.

#include <span>

#include "editid/attention.hpp"
#include "editid/features.hpp"

namespace editid {

/// length 5: passes through (no strategy allowed).
/// length < 5: padding (ZERO tail) or interpolate.
/// length > 5: average or max over 5 contiguous near-equal groups.
LayerSelection build_selection(std::span<const int> raw_picks, std::optional<ShiftStrategy> strategy);

/// Contiguous near-equal partition of n items into 5 groups; the first
/// n % 5 groups get one extra item. Returns (begin, size) pairs.
std::array<std::pair<int, int>, kSlotCount> contiguous_groups(int n);

/// Resolves a selection against the encoder layers, applying its strategy.
LocalFeatureStack materialize_slots(const LayerFeatureSet& layers, const LayerSelection& selection);
LocalFeatureStack materialize_slots(const LayerFeatureSet& layers, const LayerSelection& selection,
                                    std::optional<ShiftStrategy> strategy, std::span<const int> raw_picks);

inline Real silu(Real x) { return x / (1.0 + std::exp(-x)); }

/// Three affine layers with SiLU between them.
template <typename Scalar>
class Mlp3 {
 public:
  Mlp3(std::uint64_t seed, int in, int hidden, int out) {
    if (in < 1 || hidden < 1 || out < 1) throw Error(ErrorCode::InvalidInput, "network widths must be positive");
    const int widths[4] = {in, hidden, hidden, out};
    for (int l = 0; l < 3; ++l) {
      weights_[l] = seeded_gaussian<Scalar>(mix_seed(seed, 2 * l), widths[l + 1], widths[l],
                                            1.0 / std::sqrt(static_cast<Real>(widths[l])));
      biases_[l] = seeded_gaussian<Scalar>(mix_seed(seed, 2 * l + 1), widths[l + 1], 1, 0.1);
    }
  }

  Vec<Scalar> operator()(const Vec<Scalar>& x) const {
    if (x.size() != weights_[0].cols())
      throw Error(ErrorCode::ShapeMismatch, "network input has " + std::to_string(x.size()) +
                                                " values, expected " + std::to_string(weights_[0].cols()));
    Vec<Scalar> h = weights_[0] * x + biases_[0];
    h = h.unaryExpr([](Scalar v) { return static_cast<Scalar>(silu(v)); });
    h = weights_[1] * h + biases_[1];
    h = h.unaryExpr([](Scalar v) { return static_cast<Scalar>(silu(v)); });
    return weights_[2] * h + biases_[2];
  }

  int input_dim() const { return static_cast<int>(weights_[0].cols()); }
  int output_dim() const { return static_cast<int>(weights_[2].rows()); }
  const Mat<Scalar>& weight(int l) const { return weights_[l]; }
  const Vec<Scalar>& bias(int l) const { return biases_[l]; }

 private:
  Mat<Scalar> weights_[3];
  Vec<Scalar> biases_[3];
};

struct FusionNetworkSpec {
  std::uint64_t id_seed = 301;
  std::uint64_t map_seed = 302;
  int global_dim = 32;  // d_g = d_a + d_c
  int local_dim = 16;   // d_l
  int hidden = 64;
  int id_dim = 32;      // d_id

  Mlp3<Real> id_network() const { return {id_seed, global_dim, hidden, id_dim}; }
  /// Mapping network for 0-based slot i.
  Mlp3<Real> mapping_network(int slot) const {
    return {mix_seed(map_seed, static_cast<std::uint64_t>(slot)), local_dim, hidden, id_dim};
  }
};

struct IDEmbedding {
  VectorX values;
};

struct MappedStack {
  MatrixX slots;  // 5 x d_id
};

struct EditFeature {
  VectorX values;
};

IDEmbedding embed_id(const GlobalFeature& global, const FusionNetworkSpec& spec);

/// Slot i goes through mapping network i only; ZERO slots still pick up biases.
MappedStack map_slots(const LocalFeatureStack& stack, const FusionNetworkSpec& spec);

struct FuseResult {
  EditFeature feature;
  VectorX weights;  // softmax over the 5 slots
};

/// Query = ID embedding; keys = values = mapped slots; scaled dot product.
FuseResult fuse_with_weights(const IDEmbedding& id, const MappedStack& mapped);
EditFeature fuse(const IDEmbedding& id, const MappedStack& mapped);

}  // namespace editid
