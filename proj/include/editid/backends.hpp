#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "editid/image.hpp"

namespace editid {

enum class BackendKind {
  FaceDetector,
  FaceEmbedder,
  LayeredImageEncoder,
  TextEncoder,
  GenericImageEncoder,
  FineImageEncoder,
  HeadPose,
  LandmarkDetector,
  ExpressionClassifier,
  StatisticFeatureExtractor,
  AestheticScorer,
  QualityScorer,
  Generator,
};

inline constexpr std::array kAllBackendKinds = {
    BackendKind::FaceDetector,          BackendKind::FaceEmbedder,
    BackendKind::LayeredImageEncoder,   BackendKind::TextEncoder,
    BackendKind::GenericImageEncoder,   BackendKind::FineImageEncoder,
    BackendKind::HeadPose,              BackendKind::LandmarkDetector,
    BackendKind::ExpressionClassifier,  BackendKind::StatisticFeatureExtractor,
    BackendKind::AestheticScorer,       BackendKind::QualityScorer,
    BackendKind::Generator,
};

std::string_view to_string(BackendKind kind);
/// Throws InvalidKind for unknown spellings.
BackendKind parse_backend_kind(std::string_view text);

/// Output names a descriptor must declare for its kind.
std::vector<std::string> required_outputs(BackendKind kind);

struct BackendDescriptor {
  BackendKind kind = BackendKind::FaceDetector;
  std::string name;
  std::map<std::string, int> output_dims;
  int layer_count = 0;  // layered encoders only
  bool deterministic = true;
  std::optional<std::uint64_t> seed;
  int max_concurrency = 0;  // 0 = unlimited

  int dim(const std::string& output) const;
};

using Landmarks5 = Eigen::Matrix<Real, 5, 2>;

struct FaceDetection {
  PixelRect box;
  Landmarks5 landmarks;  // left eye, right eye, nose, left mouth, right mouth (x, y)
};

struct PoseAngles {
  Real yaw = 0, pitch = 0, roll = 0;  // degrees
};

enum class ExpressionLabel { Angry, Disgust, Fear, Happy, Sad, Surprise, Neutral };
inline constexpr int kExpressionClasses = 7;
std::string_view to_string(ExpressionLabel label);

/// Per-layer spatial tokens (CLS excluded) plus the final layer's CLS token.
struct LayeredEncoding {
  std::vector<MatrixX> spatial_tokens;  // layer_count entries, each tokens x d_l
  VectorX cls;
};

class Backend {
 public:
  virtual ~Backend() = default;
};

class FaceDetector : public virtual Backend {
 public:
  /// Empty optional when no face is found; callers must handle it.
  virtual std::optional<FaceDetection> detect(const ImageBuffer& image) const = 0;
};

class FaceEmbedder : public virtual Backend {
 public:
  virtual VectorX embed(const ImageBuffer& face) const = 0;
};

class LayeredImageEncoder : public virtual Backend {
 public:
  virtual LayeredEncoding encode(const ImageBuffer& image) const = 0;
};

class TextEncoder : public virtual Backend {
 public:
  virtual VectorX encode(const std::string& text) const = 0;
};

/// Shared by generic-image-encoder, fine-image-encoder and
/// statistic-feature-extractor kinds.
class ImageEncoder : public virtual Backend {
 public:
  virtual VectorX encode(const ImageBuffer& image) const = 0;
};

class HeadPoseEstimator : public virtual Backend {
 public:
  virtual PoseAngles estimate(const ImageBuffer& face) const = 0;
};

class ExpressionClassifier : public virtual Backend {
 public:
  virtual ExpressionLabel classify(const ImageBuffer& face) const = 0;
};

class Scorer : public virtual Backend {
 public:
  virtual Real score(const ImageBuffer& image) const = 0;
  virtual Real max_score() const = 0;
};

class ImageGenerator;  // generator.hpp

struct BackendHandle {
  std::shared_ptr<const BackendDescriptor> descriptor;
  std::shared_ptr<const Backend> impl;

  template <typename Interface>
  std::shared_ptr<const Interface> as() const {
    auto p = std::dynamic_pointer_cast<const Interface>(impl);
    if (!p)
      throw Error(ErrorCode::InvalidKind,
                  "backend '" + descriptor->name + "' does not implement the requested interface");
    return p;
  }

  explicit operator bool() const { return impl != nullptr; }
};

/// Read-mostly map of (kind, name) -> backend. Registration replaces an
/// existing entry atomically with respect to resolve().
class BackendRegistry {
 public:
  BackendHandle add(BackendDescriptor descriptor, std::shared_ptr<const Backend> implementation);
  BackendHandle resolve(BackendKind kind, const std::string& name) const;
  bool contains(BackendKind kind, const std::string& name) const;
  std::vector<std::string> names(BackendKind kind) const;

  template <typename Interface>
  std::shared_ptr<const Interface> resolve_as(BackendKind kind, const std::string& name) const {
    return resolve(kind, name).template as<Interface>();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<BackendKind, std::string>, BackendHandle> entries_;
};

/// Checks descriptor/kind consistency (required outputs, encoder depth,
/// interface implemented). Throws InvalidKind or MissingOutput.
void validate_descriptor(const BackendDescriptor& descriptor, const Backend* implementation = nullptr);

}  // namespace editid
