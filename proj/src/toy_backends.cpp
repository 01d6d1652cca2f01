#include "editid/toy_backends.hpp"

#include <cctype>

#include "editid/features.hpp"

namespace editid {

namespace {

constexpr int kToySide = 8;
constexpr int kToyPixels = kToySide * kToySide;

MatrixX layer_projection(std::uint64_t seed, int layer, int dim) {
  return seeded_gaussian(mix_seed(seed, static_cast<std::uint64_t>(layer)), dim, kToyPixels,
                         1.0 / kToySide);
}

std::uint64_t kind_seed(std::uint64_t seed, BackendKind kind) {
  return mix_seed(seed, 0x70790000ULL + static_cast<std::uint64_t>(kind));
}

}  // namespace

MatrixX toy_layered_encode(const ImageBuffer& image, int layer_count, int dim, std::uint64_t seed) {
  if (layer_count < 1 || dim < 1) throw Error(ErrorCode::InvalidInput, "layer_count and dim must be >= 1");
  image.validate();
  const VectorX x = gray_downsample(image, kToySide);
  MatrixX out(layer_count, dim);
  for (int l = 0; l < layer_count; ++l) out.row(l) = (layer_projection(seed, l, dim) * x).transpose();
  return out;
}

std::vector<std::string> toy_tokenize(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::optional<FaceDetection> ToyFaceDetector::detect(const ImageBuffer& image) const {
  image.validate();
  const Real side = std::min(image.height(), image.width()) / 2.0;
  FaceDetection d;
  d.box.x0 = (image.width() - side) / 2.0;
  d.box.y0 = (image.height() - side) / 2.0;
  d.box.x1 = d.box.x0 + side;
  d.box.y1 = d.box.y0 + side;
  const Landmarks5 frac = canonical_template_fractions();
  for (int i = 0; i < 5; ++i) {
    d.landmarks(i, 0) = d.box.x0 + frac(i, 0) * side;
    d.landmarks(i, 1) = d.box.y0 + frac(i, 1) * side;
  }
  return d;
}

VectorX ToyFaceEmbedder::embed(const ImageBuffer& face) const {
  VectorX x = gray_downsample(face, kToySide);
  x.array() -= x.mean();
  return seeded_gaussian(seed_, dim_, kToyPixels, 1.0 / kToySide) * x;
}

LayeredEncoding ToyLayeredEncoder::encode(const ImageBuffer& image) const {
  image.validate();
  const VectorX x = gray_downsample(image, kToySide);
  LayeredEncoding enc;
  enc.spatial_tokens.reserve(static_cast<std::size_t>(layer_count_));
  for (int l = 0; l < layer_count_; ++l) {
    const MatrixX proj = layer_projection(seed_, l, dim_);
    MatrixX tokens(4, dim_);
    for (int q = 0; q < 4; ++q) {
      VectorX part = VectorX::Zero(kToyPixels);
      const int qy = (q / 2) * (kToySide / 2), qx = (q % 2) * (kToySide / 2);
      for (int y = 0; y < kToySide / 2; ++y)
        for (int xx = 0; xx < kToySide / 2; ++xx) {
          const int idx = (qy + y) * kToySide + qx + xx;
          part(idx) = 4.0 * x(idx);
        }
      tokens.row(q) = (proj * part).transpose();
    }
    enc.spatial_tokens.push_back(std::move(tokens));
  }
  enc.cls = seeded_gaussian(mix_seed(seed_, 0xC15), cls_dim_, kToyPixels, 1.0 / kToySide) * x;
  return enc;
}

VectorX ToyTextEncoder::encode(const std::string& text) const {
  VectorX v = VectorX::Zero(dim_);
  for (const auto& w : toy_tokenize(text)) v += seeded_gaussian(mix_seed(seed_, fnv1a64(w)), dim_, 1);
  return v;
}

VectorX ToyImageEncoder::encode(const ImageBuffer& image) const {
  image.validate();
  const VectorX x = color_ ? color_downsample(image, side_) : gray_downsample(image, side_);
  return seeded_gaussian(seed_, dim_, x.size(), 1.0 / std::sqrt(static_cast<Real>(x.size()))) * x;
}

PoseAngles ToyHeadPose::estimate(const ImageBuffer& face) const {
  const Eigen::ArrayXXd g = area_resize(face.grayscale(), kToySide, kToySide);
  const int h = kToySide / 2;
  PoseAngles p;
  p.yaw = 90.0 * (g.rightCols(h).mean() - g.leftCols(h).mean());
  p.pitch = 90.0 * (g.topRows(h).mean() - g.bottomRows(h).mean());
  p.roll = 90.0 * (g.topLeftCorner(h, h).mean() + g.bottomRightCorner(h, h).mean() -
                   g.topRightCorner(h, h).mean() - g.bottomLeftCorner(h, h).mean()) / 2.0;
  return p;
}

ExpressionLabel ToyExpressionClassifier::classify(const ImageBuffer& face) const {
  VectorX x = gray_downsample(face, kToySide);
  x.array() -= x.mean();
  const VectorX logits = seeded_gaussian(seed_, kExpressionClasses, kToyPixels) * x;
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<ExpressionLabel>(best);
}

Real ToyAestheticScorer::score(const ImageBuffer& image) const {
  VectorX x = color_downsample(image, kToySide);
  x.array() -= 0.5;
  const Real z = (seeded_gaussian(seed_, 1, x.size(), 1.0 / std::sqrt(static_cast<Real>(x.size()))) * x)(0);
  return 10.0 / (1.0 + std::exp(-z));
}

Real ToyQualityScorer::score(const ImageBuffer& image) const {
  const Eigen::ArrayXXd g = image.grayscale();
  const Real gx = (g.rightCols(g.cols() - 1) - g.leftCols(g.cols() - 1)).abs().mean();
  const Real gy = (g.bottomRows(g.rows() - 1) - g.topRows(g.rows() - 1)).abs().mean();
  const Real energy = gx + gy;
  return 100.0 * energy / (energy + 0.1);
}

MatrixX ToyGenerator::condition_tokens(const std::string& prompt) const {
  auto words = toy_tokenize(prompt);
  if (words.empty()) words.emplace_back();
  const int dim = spec_.field.cond_dim;
  MatrixX c(static_cast<Eigen::Index>(words.size()), dim);
  for (std::size_t i = 0; i < words.size(); ++i)
    c.row(static_cast<Eigen::Index>(i)) =
        seeded_gaussian(mix_seed(text_seed_, fnv1a64(words[i])), 1, dim);
  return c;
}

ImageBuffer ToyGenerator::generate(const GenerationRequest& request) const {
  if (request.sampler.name != "euler")
    throw Error(ErrorCode::Config, "toy generator only supports the euler sampler");
  const MatrixX cond = condition_tokens(request.prompt);
  if (!request.id) return toy_generate(spec_, cond, request.seed, request.sampler.steps);
  const IdIntegrator<Real> integrator(request.id->integration, request.id->edit.values, spec_.field.dim);
  const std::vector<StepHook<Real>> hooks{integrator.hook(request.sampler.steps)};
  return toy_generate(spec_, cond, request.seed, request.sampler.steps, hooks);
}

BackendDescriptor toy_descriptor(BackendKind kind, const std::string& name, std::uint64_t seed,
                                 const ToyDims& dims) {
  BackendDescriptor d;
  d.kind = kind;
  d.name = name;
  d.seed = seed;
  switch (kind) {
    case BackendKind::FaceDetector:
    case BackendKind::LandmarkDetector: d.output_dims = {{"landmarks", 5}}; break;
    case BackendKind::FaceEmbedder: d.output_dims = {{"embedding", dims.face_embed}}; break;
    case BackendKind::LayeredImageEncoder:
      d.output_dims = {{"layer", dims.layer}, {"cls", dims.cls}};
      d.layer_count = dims.layer_count;
      break;
    case BackendKind::TextEncoder:
    case BackendKind::GenericImageEncoder: d.output_dims = {{"embedding", dims.clip}}; break;
    case BackendKind::FineImageEncoder: d.output_dims = {{"embedding", dims.dino}}; break;
    case BackendKind::HeadPose: d.output_dims = {{"angles", 3}}; break;
    case BackendKind::ExpressionClassifier: d.output_dims = {{"classes", kExpressionClasses}}; break;
    case BackendKind::StatisticFeatureExtractor: d.output_dims = {{"features", dims.statistics}}; break;
    case BackendKind::AestheticScorer:
    case BackendKind::QualityScorer: d.output_dims = {{"score", 1}}; break;
    case BackendKind::Generator: d.output_dims = {{"image", 64}, {"token", dims.token}}; break;
  }
  return d;
}

std::shared_ptr<const Backend> make_toy_backend(const BackendDescriptor& d) {
  const std::uint64_t seed = kind_seed(d.seed.value_or(0), d.kind);
  const auto dim = [&](const char* out) { return d.dim(out); };
  switch (d.kind) {
    case BackendKind::FaceDetector:
    case BackendKind::LandmarkDetector: return std::make_shared<ToyFaceDetector>();
    case BackendKind::FaceEmbedder: return std::make_shared<ToyFaceEmbedder>(seed, dim("embedding"));
    case BackendKind::LayeredImageEncoder:
      return std::make_shared<ToyLayeredEncoder>(seed, d.layer_count, dim("layer"), dim("cls"));
    case BackendKind::TextEncoder:
    case BackendKind::GenericImageEncoder:
      // CLIP text and image towers share one embedding space width; the seeds
      // differ per kind.
      if (d.kind == BackendKind::TextEncoder) return std::make_shared<ToyTextEncoder>(seed, dim("embedding"));
      return std::make_shared<ToyImageEncoder>(seed, dim("embedding"), 8, true);
    case BackendKind::FineImageEncoder: return std::make_shared<ToyImageEncoder>(seed, dim("embedding"), 16, false);
    case BackendKind::StatisticFeatureExtractor:
      return std::make_shared<ToyImageEncoder>(seed, dim("features"), 8, true);
    case BackendKind::HeadPose: return std::make_shared<ToyHeadPose>();
    case BackendKind::ExpressionClassifier: return std::make_shared<ToyExpressionClassifier>(seed);
    case BackendKind::AestheticScorer: return std::make_shared<ToyAestheticScorer>(seed);
    case BackendKind::QualityScorer: return std::make_shared<ToyQualityScorer>();
    case BackendKind::Generator: {
      ToyGeneratorSpec spec;
      const auto tok = d.output_dims.find("token");
      if (tok != d.output_dims.end()) spec.field.dim = spec.field.cond_dim = tok->second;
      spec.field.seed_q = mix_seed(seed, 1);
      spec.field.seed_k = mix_seed(seed, 2);
      spec.field.seed_v = mix_seed(seed, 3);
      spec.field.seed_out = mix_seed(seed, 4);
      spec.decode_seed = mix_seed(seed, 5);
      const int side = dim("image");
      if (side % spec.grid != 0) throw Error(ErrorCode::Config, "toy generator image side must be a multiple of 4");
      spec.patch = side / spec.grid;
      return std::make_shared<ToyGenerator>(spec, mix_seed(seed, 6));
    }
  }
  throw Error(ErrorCode::InvalidKind, "no toy backend for this kind");
}

void register_toy_backends(BackendRegistry& registry, const std::string& name, std::uint64_t seed,
                           const ToyDims& dims) {
  for (auto kind : kAllBackendKinds) {
    auto d = toy_descriptor(kind, name, seed, dims);
    auto impl = make_toy_backend(d);
    registry.add(std::move(d), std::move(impl));
  }
}

}  // namespace editid
