#pragma once

// ID feature extraction: face crop alignment, the global feature
// [face embedding ; CLS], all-layer pooled local features, slot selection
// and ablation masking.

#include <functional>
#include <set>

#include "editid/backends.hpp"
#include "editid/selection.hpp"

namespace editid {

/// Canonical 5-point template as fractions of the aligned crop side.
/// Inter-eye distance is 38% of the crop width.
Landmarks5 canonical_template_fractions();
inline constexpr int kAlignedCropSize = 64;

/// 2x3 similarity transform [s*R | t] mapping src eyes onto dst eyes exactly.
Eigen::Matrix<Real, 2, 3> similarity_from_eyes(const Eigen::Vector2d& src_left,
                                                const Eigen::Vector2d& src_right,
                                                const Eigen::Vector2d& dst_left,
                                                const Eigen::Vector2d& dst_right);

Landmarks5 apply_similarity(const Eigen::Matrix<Real, 2, 3>& transform, const Landmarks5& points);

/// Optional refinement of an aligned crop (e.g. a face-parsing mask).
using Segmenter = std::function<ImageBuffer(const ImageBuffer&)>;

struct FaceCrop {
  ImageBuffer image;             // aligned (and possibly segmented) crop
  PixelRect box;                 // detection box in source pixels
  Landmarks5 landmarks;          // in source pixels
  Landmarks5 aligned_landmarks;  // in crop pixels
  bool aligned = false;
  bool segmented = false;
};

/// Throws FaceNotFound when the detector returns nothing.
FaceCrop detect_align_segment(const ImageBuffer& image, const FaceDetector& detector,
                              const Segmenter& segmenter = {}, int crop_size = kAlignedCropSize);

struct AblationMask {
  bool zero_face = false;
  bool zero_cls = false;
  bool zero_local = false;
  std::set<int> zero_slots;  // 1-based slot numbers

  /// Every branch input zeroed: the feature branch contributes nothing.
  bool disables_branch() const;
  AblationMask merged(const AblationMask& other) const;
};

struct GlobalFeature {
  VectorX face_part;
  VectorX cls_part;

  VectorX concat() const;
  Eigen::Index dim() const { return face_part.size() + cls_part.size(); }
};

GlobalFeature extract_global(const FaceCrop& crop, const BackendHandle& face_embedder,
                             const BackendHandle& layered_encoder, const AblationMask& mask = {});
GlobalFeature extract_global(const FaceCrop& crop, const BackendHandle& face_embedder,
                             const LayeredEncoding& encoding, const BackendDescriptor& encoder,
                             const AblationMask& mask = {});

struct LayerFeatureSet {
  MatrixX per_layer;  // layer_count x d_l; row l-1 holds layer l

  int layer_count() const { return static_cast<int>(per_layer.rows()); }
  int dim() const { return static_cast<int>(per_layer.cols()); }
  VectorX layer(int one_based) const;
};

LayerFeatureSet extract_all_layers(const FaceCrop& crop, const BackendHandle& layered_encoder);
/// Spatial-mean pooling of each layer's tokens.
LayerFeatureSet pool_layers(const LayeredEncoding& encoding);

struct LocalFeatureStack {
  MatrixX slots;  // 5 x d_l
  std::array<SlotPick, kSlotCount> provenance{};

  int dim() const { return static_cast<int>(slots.cols()); }
};

/// Copies layers[selection[i]] into slot i; ZERO slots get the zero vector.
LocalFeatureStack select_slots(const LayerFeatureSet& layers, const LayerSelection& selection);

LocalFeatureStack apply_ablation(LocalFeatureStack stack, const AblationMask& mask);

}  // namespace editid
