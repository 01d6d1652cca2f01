#pragma once

// The eleven evaluation metrics. Every function is pure given its backends;
// face-dependent metrics throw Error(FaceNotFound) naming the image, which the
// harness records as a null value.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "editid/backends.hpp"
#include "editid/features.hpp"

namespace editid {

/// u.v / (|u||v|). Zero-norm input -> UndefinedSimilarity.
Real cosine(const VectorX& u, const VectorX& v);

Real facesim(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
             const FaceEmbedder& embedder);

Real clip_t(const std::string& prompt, const ImageBuffer& gen_image, const TextEncoder& text_encoder,
            const ImageEncoder& image_encoder);

Real clip_i(const ImageBuffer& image_with_id, const ImageBuffer& image_without_id,
            const ImageEncoder& image_encoder);

Real dino_sim(const ImageBuffer& id_image, const ImageBuffer& gen_image, const ImageEncoder& fine_encoder);

/// DINO similarity of the detected face crops.
Real fgis(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
          const ImageEncoder& fine_encoder);

/// Per-axis absolute differences in degrees.
PoseAngles posediv(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
                   const HeadPoseEstimator& pose);

enum class LandmarkNormalization {
  PerImage,   // each set divided by its own bounding-rectangle diagonal
  SharedMax,  // both sets divided by the larger of the two diagonals
};

/// Centroid-centred, diagonal-normalised mean point distance.
Real landmark_distance(const Landmarks5& a, const Landmarks5& b,
                       LandmarkNormalization norm = LandmarkNormalization::PerImage);

Real landmarkdiff(const ImageBuffer& id_image, const ImageBuffer& gen_image, const FaceDetector& detector,
                  LandmarkNormalization norm = LandmarkNormalization::PerImage);

/// Fraction of pairs whose labels differ.
Real exprdiv(std::span<const std::pair<ExpressionLabel, ExpressionLabel>> pairs);

struct ExpressionPair {
  ExpressionLabel id;
  ExpressionLabel generated;
};
ExpressionPair expression_pair(const ImageBuffer& id_image, const ImageBuffer& gen_image,
                               const FaceDetector& detector, const ExpressionClassifier& classifier);

struct GaussianStats {
  VectorX mean;
  MatrixX covariance;  // unbiased (n - 1)
  Eigen::Index count = 0;
};

GaussianStats gaussian_stats(std::span<const VectorX> features);

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues
/// clamped to zero.
MatrixX psd_sqrt(const MatrixX& m);

struct FidResult {
  Real value = 0;
  bool regularized = false;
  Real epsilon = 0;
};

inline constexpr Real kFidEpsilon = 1e-6;

/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}). Adds eps*I to both
/// covariances when either is rank deficient.
FidResult frechet_distance(const GaussianStats& a, const GaussianStats& b);
FidResult fid(std::span<const VectorX> features_a, std::span<const VectorX> features_b);

struct ScoreResult {
  Real value;  // normalised to [0,1]
  Real raw;
};

ScoreResult aesthetic(const ImageBuffer& gen_image, const Scorer& scorer);
ScoreResult imaging_quality(const ImageBuffer& gen_image, const Scorer& scorer);

}  // namespace editid
