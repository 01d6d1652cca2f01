#include "editid/features.hpp"

#include <complex>

namespace editid {

Landmarks5 canonical_template_fractions() {
  Landmarks5 t;
  t << 0.31, 0.40,   // left eye
       0.69, 0.40,   // right eye
       0.50, 0.55,   // nose tip
       0.35, 0.72,   // left mouth corner
       0.65, 0.72;   // right mouth corner
  return t;
}

Eigen::Matrix<Real, 2, 3> similarity_from_eyes(const Eigen::Vector2d& src_left,
                                                const Eigen::Vector2d& src_right,
                                                const Eigen::Vector2d& dst_left,
                                                const Eigen::Vector2d& dst_right) {
  using C = std::complex<Real>;
  const C sl(src_left.x(), src_left.y()), sr(src_right.x(), src_right.y());
  const C dl(dst_left.x(), dst_left.y()), dr(dst_right.x(), dst_right.y());
  if (std::abs(sr - sl) == 0.0)
    throw Error(ErrorCode::DegenerateLandmarks, "eye landmarks coincide");
  const C a = (dr - dl) / (sr - sl);
  const C b = dl - a * sl;
  Eigen::Matrix<Real, 2, 3> m;
  m << a.real(), -a.imag(), b.real(),
       a.imag(), a.real(), b.imag();
  return m;
}

Landmarks5 apply_similarity(const Eigen::Matrix<Real, 2, 3>& transform, const Landmarks5& points) {
  Landmarks5 out;
  for (int i = 0; i < 5; ++i)
    out.row(i) = (transform.leftCols<2>() * points.row(i).transpose() + transform.col(2)).transpose();
  return out;
}

FaceCrop detect_align_segment(const ImageBuffer& image, const FaceDetector& detector,
                              const Segmenter& segmenter, int crop_size) {
  image.validate();
  const auto detection = detector.detect(image);
  if (!detection) throw Error(ErrorCode::FaceNotFound, "no face found");

  const Landmarks5 dst = canonical_template_fractions() * static_cast<Real>(crop_size);
  const auto& src = detection->landmarks;
  const Eigen::Matrix<Real, 2, 3> fwd =
      similarity_from_eyes(src.row(0).transpose(), src.row(1).transpose(),
                           dst.row(0).transpose(), dst.row(1).transpose());
  const Eigen::Matrix2d lin_inv = fwd.leftCols<2>().inverse();
  const Eigen::Vector2d shift = fwd.col(2);

  FaceCrop out;
  out.image = ImageBuffer(crop_size, crop_size);
  for (int y = 0; y < crop_size; ++y)
    for (int x = 0; x < crop_size; ++x) {
      const Eigen::Vector2d s = lin_inv * (Eigen::Vector2d(x, y) - shift);
      for (int c = 0; c < ImageBuffer::kChannels; ++c)
        out.image.at(y, x, c) = bilinear(image.plane(c), s.y(), s.x());
    }
  out.box = detection->box;
  out.landmarks = src;
  out.aligned_landmarks = apply_similarity(fwd, src);
  out.aligned = true;
  if (segmenter) {
    out.image = segmenter(out.image);
    out.segmented = true;
  }
  return out;
}

bool AblationMask::disables_branch() const {
  const bool all_slots = zero_local || zero_slots.size() == static_cast<std::size_t>(kSlotCount);
  return zero_face && zero_cls && all_slots;
}

AblationMask AblationMask::merged(const AblationMask& other) const {
  AblationMask m = *this;
  m.zero_face |= other.zero_face;
  m.zero_cls |= other.zero_cls;
  m.zero_local |= other.zero_local;
  m.zero_slots.insert(other.zero_slots.begin(), other.zero_slots.end());
  return m;
}

VectorX GlobalFeature::concat() const {
  VectorX v(dim());
  v << face_part, cls_part;
  return v;
}

GlobalFeature extract_global(const FaceCrop& crop, const BackendHandle& face_embedder,
                             const LayeredEncoding& encoding, const BackendDescriptor& encoder,
                             const AblationMask& mask) {
  GlobalFeature g;
  g.face_part = face_embedder.as<FaceEmbedder>()->embed(crop.image);
  const int d_a = face_embedder.descriptor->dim("embedding");
  if (g.face_part.size() != d_a)
    throw Error(ErrorCode::ShapeMismatch, "face embedder returned " + std::to_string(g.face_part.size()) +
                                              " values, descriptor declares " + std::to_string(d_a));
  g.cls_part = encoding.cls;
  const int d_c = encoder.dim("cls");
  if (g.cls_part.size() != d_c)
    throw Error(ErrorCode::ShapeMismatch, "CLS feature has " + std::to_string(g.cls_part.size()) +
                                              " values, descriptor declares " + std::to_string(d_c));
  if (mask.zero_face) g.face_part.setZero();
  if (mask.zero_cls) g.cls_part.setZero();
  return g;
}

GlobalFeature extract_global(const FaceCrop& crop, const BackendHandle& face_embedder,
                             const BackendHandle& layered_encoder, const AblationMask& mask) {
  const auto encoding = layered_encoder.as<LayeredImageEncoder>()->encode(crop.image);
  return extract_global(crop, face_embedder, encoding, *layered_encoder.descriptor, mask);
}

VectorX LayerFeatureSet::layer(int one_based) const {
  if (one_based < 1 || one_based > layer_count())
    throw Error(ErrorCode::InvalidInput, "layer " + std::to_string(one_based) + " outside [1, " +
                                             std::to_string(layer_count()) + "]");
  return per_layer.row(one_based - 1).transpose();
}

LayerFeatureSet pool_layers(const LayeredEncoding& encoding) {
  if (encoding.spatial_tokens.empty())
    throw Error(ErrorCode::InvalidInput, "encoder returned no layers");
  const auto dim = encoding.spatial_tokens.front().cols();
  LayerFeatureSet set;
  set.per_layer.resize(static_cast<Eigen::Index>(encoding.spatial_tokens.size()), dim);
  for (std::size_t l = 0; l < encoding.spatial_tokens.size(); ++l) {
    const auto& tokens = encoding.spatial_tokens[l];
    if (tokens.rows() < 1 || tokens.cols() != dim)
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l + 1) + " has an inconsistent shape");
    set.per_layer.row(static_cast<Eigen::Index>(l)) = tokens.colwise().mean();
  }
  if (!set.per_layer.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite layer features");
  return set;
}

LayerFeatureSet extract_all_layers(const FaceCrop& crop, const BackendHandle& layered_encoder) {
  auto set = pool_layers(layered_encoder.as<LayeredImageEncoder>()->encode(crop.image));
  const auto& desc = *layered_encoder.descriptor;
  if (set.layer_count() != desc.layer_count || set.dim() != desc.dim("layer"))
    throw Error(ErrorCode::ShapeMismatch, "layered encoder output does not match its descriptor");
  return set;
}

LocalFeatureStack select_slots(const LayerFeatureSet& layers, const LayerSelection& selection) {
  LocalFeatureStack stack;
  stack.slots = MatrixX::Zero(kSlotCount, layers.dim());
  for (int i = 0; i < kSlotCount; ++i) {
    const SlotPick& pick = selection.slots[static_cast<std::size_t>(i)];
    switch (pick.kind) {
      case SlotPick::Kind::Layer:
        stack.slots.row(i) = layers.layer(pick.layer).transpose();
        break;
      case SlotPick::Kind::Zero:
        break;
      case SlotPick::Kind::Synthesized:
        throw Error(ErrorCode::InvalidInput,
                    "slot " + std::to_string(i + 1) + " is strategy-synthesized; use materialize_slots");
    }
    stack.provenance[static_cast<std::size_t>(i)] = pick;
  }
  return stack;
}

LocalFeatureStack apply_ablation(LocalFeatureStack stack, const AblationMask& mask) {
  for (int slot : mask.zero_slots)
    if (slot < 1 || slot > kSlotCount)
      throw Error(ErrorCode::InvalidInput, "ablation slot " + std::to_string(slot) + " outside 1..5");
  for (int i = 0; i < kSlotCount; ++i) {
    if (mask.zero_local || mask.zero_slots.count(i + 1)) {
      stack.slots.row(i).setZero();
      stack.provenance[static_cast<std::size_t>(i)] = SlotPick::zero();
    }
  }
  return stack;
}

}  // namespace editid
