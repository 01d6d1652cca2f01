#include "editid/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace editid {

Real cosine(const VectorX& u, const VectorX& v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::ShapeMismatch, "cosine of vectors with different dims (" +
                                              std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  const Real nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::UndefinedSimilarity, "cosine of a zero-norm vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

namespace {

FaceCrop face_of(const ImageBuffer& image, const FaceDetector& detector, const char* which) {
  try {
    return detect_align_segment(image, detector);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FaceNotFound)
      throw Error(ErrorCode::FaceNotFound, std::string("no face found in ") + which);
    throw;
  }
}

FaceDetection detection_of(const ImageBuffer& image, const FaceDetector& detector, const char* which) {
  auto d = detector.detect(image);
  if (!d) throw Error(ErrorCode::FaceNotFound, std::string("no face found in ") + which);
  return *d;
}

}  // namespace

Real facesim(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
             const FaceEmbedder& embedder) {
  const auto a = face_of(id_image, detector, "id image");
  const auto b = face_of(gen_image, detector, "generated image");
  return cosine(embedder.embed(a.image), embedder.embed(b.image));
}

Real clip_t(const std::string& prompt, const ImageBuffer& gen_image, const TextEncoder& text_encoder,
            const ImageEncoder& image_encoder) {
  return cosine(text_encoder.encode(prompt), image_encoder.encode(gen_image));
}

Real clip_i(const ImageBuffer& image_with_id, const ImageBuffer& image_without_id,
            const ImageEncoder& image_encoder) {
  return cosine(image_encoder.encode(image_with_id), image_encoder.encode(image_without_id));
}

Real dino_sim(const ImageBuffer& id_image, const ImageBuffer& gen_image, const ImageEncoder& fine_encoder) {
  return cosine(fine_encoder.encode(id_image), fine_encoder.encode(gen_image));
}

Real fgis(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
          const ImageEncoder& fine_encoder) {
  const auto a = face_of(id_image, detector, "id image");
  const auto b = face_of(gen_image, detector, "generated image");
  return cosine(fine_encoder.encode(a.image), fine_encoder.encode(b.image));
}

PoseAngles posediv(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
                   const HeadPoseEstimator& pose) {
  const auto a = pose.estimate(face_of(id_image, detector, "id image").image);
  const auto b = pose.estimate(face_of(gen_image, detector, "generated image").image);
  PoseAngles d{std::abs(a.yaw - b.yaw), std::abs(a.pitch - b.pitch), std::abs(a.roll - b.roll)};
  if (!std::isfinite(d.yaw) || !std::isfinite(d.pitch) || !std::isfinite(d.roll))
    throw Error(ErrorCode::NonFinite, "pose backend returned non-finite angles");
  return d;
}

namespace {

Real rect_diagonal(const Landmarks5& p) {
  const Eigen::RowVector2d extent = p.colwise().maxCoeff() - p.colwise().minCoeff();
  return extent.norm();
}

}  // namespace

Real landmark_distance(const Landmarks5& a, const Landmarks5& b, LandmarkNormalization norm) {
  Real da = rect_diagonal(a), db = rect_diagonal(b);
  if (da == 0.0 || db == 0.0) throw Error(ErrorCode::DegenerateLandmarks, "all five landmarks coincide");
  if (norm == LandmarkNormalization::SharedMax) da = db = std::max(da, db);
  const Landmarks5 na = (a.rowwise() - a.colwise().mean()) / da;
  const Landmarks5 nb = (b.rowwise() - b.colwise().mean()) / db;
  return (na - nb).rowwise().norm().mean();
}

Real landmarkdiff(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
                  LandmarkNormalization norm) {
  const auto a = detection_of(id_image, detector, "id image");
  const auto b = detection_of(gen_image, detector, "generated image");
  return landmark_distance(a.landmarks, b.landmarks, norm);
}

Real exprdiv(std::span<const std::pair<ExpressionLabel, ExpressionLabel>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "exprdiv needs at least one pair");
  const auto changed = std::count_if(pairs.begin(), pairs.end(),
                                     [](const auto& p) { return p.first != p.second; });
  return static_cast<Real>(changed) / static_cast<Real>(pairs.size());
}

ExpressionPair expression_pair(const ImageBuffer& id_image, const ImageBuffer& gen_image,
                               const FaceDetector& detector, const ExpressionClassifier& classifier) {
  const auto a = face_of(id_image, detector, "id image");
  const auto b = face_of(gen_image, detector, "generated image");
  return {classifier.classify(a.image), classifier.classify(b.image)};
}

GaussianStats gaussian_stats(std::span<const VectorX> features) {
  if (features.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 samples for statistics");
  const auto dim = features.front().size();
  MatrixX x(static_cast<Eigen::Index>(features.size()), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) throw Error(ErrorCode::ShapeMismatch, "feature dims differ within a set");
    x.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
  }
  GaussianStats s;
  s.count = x.rows();
  s.mean = x.colwise().mean().transpose();
  const MatrixX centered = x.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<Real>(s.count - 1);
  return s;
}

MatrixX psd_sqrt(const MatrixX& m) {
  const MatrixX sym = (m + m.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<MatrixX> es(sym);
  const VectorX roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

bool rank_deficient(const MatrixX& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixX> es(cov, Eigen::EigenvaluesOnly);
  const Real scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() <= 1e-12 * scale;
}

}  // namespace

FidResult frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size()) throw Error(ErrorCode::ShapeMismatch, "feature sets differ in dim");
  FidResult r;
  MatrixX sa = a.covariance, sb = b.covariance;
  if (rank_deficient(sa) || rank_deficient(sb)) {
    r.regularized = true;
    r.epsilon = kFidEpsilon;
    sa += MatrixX::Identity(sa.rows(), sa.cols()) * kFidEpsilon;
    sb += MatrixX::Identity(sb.rows(), sb.cols()) * kFidEpsilon;
  }
  // tr((Sa Sb)^{1/2}) = tr((Sa^{1/2} Sb Sa^{1/2})^{1/2}); the inner product is symmetric PSD.
  const MatrixX root_a = psd_sqrt(sa);
  const Real cross = psd_sqrt(root_a * sb * root_a).trace();
  r.value = (a.mean - b.mean).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross;
  r.value = std::max(r.value, 0.0);
  if (!std::isfinite(r.value)) throw Error(ErrorCode::NonFinite, "FID is not finite");
  return r;
}

FidResult fid(std::span<const VectorX> features_a, std::span<const VectorX> features_b) {
  return frechet_distance(gaussian_stats(features_a), gaussian_stats(features_b));
}

namespace {

ScoreResult normalise(Real raw, Real max_score) {
  if (!(max_score > 0.0)) throw Error(ErrorCode::InvalidInput, "scorer must declare a positive max score");
  if (!std::isfinite(raw)) throw Error(ErrorCode::NonFinite, "scorer returned a non-finite score");
  return {raw / max_score, raw};
}

}  // namespace

ScoreResult aesthetic(const ImageBuffer& gen_image, const Scorer& scorer) {
  return normalise(scorer.score(gen_image), scorer.max_score());
}

ScoreResult imaging_quality(const ImageBuffer& gen_image, const Scorer& scorer) {
  return normalise(scorer.score(gen_image), scorer.max_score());
}

}  // namespace editid
