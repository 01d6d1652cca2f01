#pragma once

// Deterministic stand-ins for every backend kind. Each is a pure function of
// (input, seed) built from seeded Gaussian projections of small image
// downsamples; none carries learned weights.

#include "editid/generator.hpp"

namespace editid {

struct ToyDims {
  int face_embed = 16;   // d_a
  int cls = 16;          // d_c
  int layer = 16;        // d_l
  int layer_count = 23;
  int id = 32;           // d_id
  int token = 32;        // latent token width
  int clip = 16;         // shared CLIP text/image width
  int dino = 16;
  int statistics = 8;
};

/// layer_count x dim; row l is a seeded projection of the 8x8 grayscale
/// downsample, with the layer index folded into the projection seed.
MatrixX toy_layered_encode(const ImageBuffer& image, int layer_count, int dim, std::uint64_t seed);

/// Lower-cased alphanumeric words.
std::vector<std::string> toy_tokenize(const std::string& text);

class ToyFaceDetector : public FaceDetector {
 public:
  /// Centered square box of side min(H,W)/2; landmarks at the canonical
  /// template fractions inside the box.
  std::optional<FaceDetection> detect(const ImageBuffer& image) const override;
};

class ToyFaceEmbedder : public FaceEmbedder {
 public:
  ToyFaceEmbedder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {}
  VectorX embed(const ImageBuffer& face) const override;

 private:
  std::uint64_t seed_;
  int dim_;
};

class ToyLayeredEncoder : public LayeredImageEncoder {
 public:
  ToyLayeredEncoder(std::uint64_t seed, int layer_count, int dim, int cls_dim)
      : seed_(seed), layer_count_(layer_count), dim_(dim), cls_dim_(cls_dim) {}

  /// Four quadrant tokens per layer whose spatial mean equals the
  /// toy_layered_encode row for that layer.
  LayeredEncoding encode(const ImageBuffer& image) const override;

 private:
  std::uint64_t seed_;
  int layer_count_, dim_, cls_dim_;
};

class ToyTextEncoder : public TextEncoder {
 public:
  ToyTextEncoder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {}
  VectorX encode(const std::string& text) const override;

 private:
  std::uint64_t seed_;
  int dim_;
};

class ToyImageEncoder : public ImageEncoder {
 public:
  ToyImageEncoder(std::uint64_t seed, int dim, int side, bool color)
      : seed_(seed), dim_(dim), side_(side), color_(color) {}
  VectorX encode(const ImageBuffer& image) const override;

 private:
  std::uint64_t seed_;
  int dim_, side_;
  bool color_;
};

class ToyHeadPose : public HeadPoseEstimator {
 public:
  PoseAngles estimate(const ImageBuffer& face) const override;
};

class ToyExpressionClassifier : public ExpressionClassifier {
 public:
  explicit ToyExpressionClassifier(std::uint64_t seed) : seed_(seed) {}
  ExpressionLabel classify(const ImageBuffer& face) const override;

 private:
  std::uint64_t seed_;
};

class ToyAestheticScorer : public Scorer {
 public:
  explicit ToyAestheticScorer(std::uint64_t seed) : seed_(seed) {}
  Real score(const ImageBuffer& image) const override;
  Real max_score() const override { return 10.0; }

 private:
  std::uint64_t seed_;
};

class ToyQualityScorer : public Scorer {
 public:
  Real score(const ImageBuffer& image) const override;
  Real max_score() const override { return 100.0; }
};

class ToyGenerator : public ImageGenerator {
 public:
  ToyGenerator(ToyGeneratorSpec spec, std::uint64_t text_seed) : spec_(spec), text_seed_(text_seed) {}

  /// One condition token per prompt word (a fixed token for empty prompts).
  MatrixX condition_tokens(const std::string& prompt) const;
  ImageBuffer generate(const GenerationRequest& request) const override;
  const ToyGeneratorSpec& spec() const { return spec_; }

 private:
  ToyGeneratorSpec spec_;
  std::uint64_t text_seed_;
};

/// Builds a toy backend for the given kind from its descriptor (seed and
/// output_dims are honoured). Throws InvalidKind for unknown entries.
std::shared_ptr<const Backend> make_toy_backend(const BackendDescriptor& descriptor);

/// Descriptor with the toy defaults for `kind`.
BackendDescriptor toy_descriptor(BackendKind kind, const std::string& name = "toy",
                                 std::uint64_t seed = 0, const ToyDims& dims = {});

/// Registers one toy backend of every kind under `name`.
void register_toy_backends(BackendRegistry& registry, const std::string& name = "toy",
                           std::uint64_t seed = 0, const ToyDims& dims = {});

}  // namespace editid
