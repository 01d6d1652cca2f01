#include "editid/backends.hpp"

#include <mutex>

#include "editid/generator.hpp"

namespace editid {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::FaceDetector: return "face-detector";
    case BackendKind::FaceEmbedder: return "face-embedder";
    case BackendKind::LayeredImageEncoder: return "layered-image-encoder";
    case BackendKind::TextEncoder: return "text-encoder";
    case BackendKind::GenericImageEncoder: return "generic-image-encoder";
    case BackendKind::FineImageEncoder: return "fine-image-encoder";
    case BackendKind::HeadPose: return "head-pose";
    case BackendKind::LandmarkDetector: return "landmark-detector";
    case BackendKind::ExpressionClassifier: return "expression-classifier";
    case BackendKind::StatisticFeatureExtractor: return "statistic-feature-extractor";
    case BackendKind::AestheticScorer: return "aesthetic-scorer";
    case BackendKind::QualityScorer: return "quality-scorer";
    case BackendKind::Generator: return "generator";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
  for (auto kind : kAllBackendKinds)
    if (text == to_string(kind)) return kind;
  throw Error(ErrorCode::InvalidKind, "unknown backend kind '" + std::string(text) + "'");
}

std::string_view to_string(ExpressionLabel label) {
  switch (label) {
    case ExpressionLabel::Angry: return "Angry";
    case ExpressionLabel::Disgust: return "Disgust";
    case ExpressionLabel::Fear: return "Fear";
    case ExpressionLabel::Happy: return "Happy";
    case ExpressionLabel::Sad: return "Sad";
    case ExpressionLabel::Surprise: return "Surprise";
    case ExpressionLabel::Neutral: return "Neutral";
  }
  return "?";
}

std::vector<std::string> required_outputs(BackendKind kind) {
  switch (kind) {
    case BackendKind::FaceDetector:
    case BackendKind::LandmarkDetector: return {"landmarks"};
    case BackendKind::FaceEmbedder:
    case BackendKind::TextEncoder:
    case BackendKind::GenericImageEncoder:
    case BackendKind::FineImageEncoder: return {"embedding"};
    case BackendKind::LayeredImageEncoder: return {"layer", "cls"};
    case BackendKind::HeadPose: return {"angles"};
    case BackendKind::ExpressionClassifier: return {"classes"};
    case BackendKind::StatisticFeatureExtractor: return {"features"};
    case BackendKind::AestheticScorer:
    case BackendKind::QualityScorer: return {"score"};
    case BackendKind::Generator: return {"image"};
  }
  return {};
}

int BackendDescriptor::dim(const std::string& output) const {
  const auto it = output_dims.find(output);
  if (it == output_dims.end())
    throw Error(ErrorCode::MissingOutput, "backend '" + name + "' declares no output '" + output + "'");
  return it->second;
}

namespace {

bool implements_kind(BackendKind kind, const Backend* impl) {
  switch (kind) {
    case BackendKind::FaceDetector:
    case BackendKind::LandmarkDetector: return dynamic_cast<const FaceDetector*>(impl);
    case BackendKind::FaceEmbedder: return dynamic_cast<const FaceEmbedder*>(impl);
    case BackendKind::LayeredImageEncoder: return dynamic_cast<const LayeredImageEncoder*>(impl);
    case BackendKind::TextEncoder: return dynamic_cast<const TextEncoder*>(impl);
    case BackendKind::GenericImageEncoder:
    case BackendKind::FineImageEncoder:
    case BackendKind::StatisticFeatureExtractor: return dynamic_cast<const ImageEncoder*>(impl);
    case BackendKind::HeadPose: return dynamic_cast<const HeadPoseEstimator*>(impl);
    case BackendKind::ExpressionClassifier: return dynamic_cast<const ExpressionClassifier*>(impl);
    case BackendKind::AestheticScorer:
    case BackendKind::QualityScorer: return dynamic_cast<const Scorer*>(impl);
    case BackendKind::Generator: return dynamic_cast<const ImageGenerator*>(impl);
  }
  return false;
}

}  // namespace

void validate_descriptor(const BackendDescriptor& d, const Backend* impl) {
  bool known = false;
  for (auto k : kAllBackendKinds) known |= (k == d.kind);
  if (!known) throw Error(ErrorCode::InvalidKind, "invalid backend kind");
  if (d.name.empty()) throw Error(ErrorCode::InvalidInput, "backend name must be nonempty");
  if (d.output_dims.empty())
    throw Error(ErrorCode::MissingOutput, "backend '" + d.name + "' declares no outputs");
  for (const auto& out : required_outputs(d.kind)) {
    const auto it = d.output_dims.find(out);
    if (it == d.output_dims.end() || it->second < 1)
      throw Error(ErrorCode::MissingOutput, std::string(to_string(d.kind)) + " '" + d.name +
                                                "' must declare a positive '" + out + "' dimension");
  }
  if (d.kind == BackendKind::LayeredImageEncoder && d.layer_count < 5)
    throw Error(ErrorCode::InvalidInput, "layered encoder '" + d.name + "' needs layer_count >= 5");
  if (impl && !implements_kind(d.kind, impl))
    throw Error(ErrorCode::InvalidKind, "implementation of '" + d.name + "' does not provide the " +
                                            std::string(to_string(d.kind)) + " interface");
}

BackendHandle BackendRegistry::add(BackendDescriptor descriptor, std::shared_ptr<const Backend> implementation) {
  if (!implementation) throw Error(ErrorCode::InvalidInput, "null backend implementation");
  validate_descriptor(descriptor, implementation.get());
  BackendHandle handle{std::make_shared<const BackendDescriptor>(std::move(descriptor)),
                       std::move(implementation)};
  std::unique_lock lock(mutex_);
  entries_[{handle.descriptor->kind, handle.descriptor->name}] = handle;
  return handle;
}

BackendHandle BackendRegistry::resolve(BackendKind kind, const std::string& name) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({kind, name});
  if (it != entries_.end()) return it->second;
  std::string known;
  for (const auto& [key, _] : entries_)
    if (key.first == kind) known += (known.empty() ? "" : ", ") + key.second;
  throw Error(ErrorCode::NotFound, std::string(to_string(kind)) + " '" + name +
                                       "' is not registered (registered: " +
                                       (known.empty() ? "none" : known) + ")");
}

bool BackendRegistry::contains(BackendKind kind, const std::string& name) const {
  std::shared_lock lock(mutex_);
  return entries_.count({kind, name}) > 0;
}

std::vector<std::string> BackendRegistry::names(BackendKind kind) const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, _] : entries_)
    if (key.first == kind) out.push_back(key.second);
  return out;
}

}  // namespace editid
