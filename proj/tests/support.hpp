#pragma once

// Shared test helpers: brute-force oracles written with plain loops, stub
// backends and a small on-disk corpus.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "editid/config.hpp"
#include "editid/fixtures.hpp"
#include "editid/toy_backends.hpp"

namespace tsupport {

using editid::MatrixX;
using editid::Real;
using editid::VectorX;

inline MatrixX random_matrix(std::mt19937_64& g, int rows, int cols, Real scale = 1.0) {
  std::normal_distribution<Real> n(0.0, scale);
  MatrixX m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(g);
  return m;
}

inline VectorX random_vector(std::mt19937_64& g, int n, Real scale = 1.0) {
  return random_matrix(g, n, 1, scale).col(0);
}

inline std::vector<Real> bf_softmax(const std::vector<Real>& logits) {
  Real m = logits[0];
  for (Real l : logits) m = std::max(m, l);
  std::vector<Real> w(logits.size());
  Real z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (w[i] = std::exp(logits[i] - m));
  for (auto& x : w) x /= z;
  return w;
}

// softmax(q k^T / sqrt(d)) v, one row at a time with explicit loops.
inline MatrixX bf_attention(const MatrixX& q, const MatrixX& k, const MatrixX& v) {
  MatrixX out = MatrixX::Zero(q.rows(), v.cols());
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(q.cols()));
  for (int i = 0; i < q.rows(); ++i) {
    std::vector<Real> logits(static_cast<std::size_t>(k.rows()));
    for (int j = 0; j < k.rows(); ++j) {
      Real dot = 0;
      for (int c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      logits[static_cast<std::size_t>(j)] = dot * scale;
    }
    const auto w = bf_softmax(logits);
    for (int j = 0; j < k.rows(); ++j)
      for (int c = 0; c < v.cols(); ++c) out(i, c) += w[static_cast<std::size_t>(j)] * v(j, c);
  }
  return out;
}

inline MatrixX bf_matmul(const MatrixX& a, const MatrixX& b) {
  MatrixX out = MatrixX::Zero(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j)
      for (int k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

// Attention field evaluated head by head from the field's own weights.
inline MatrixX bf_field(const editid::AttentionField<Real>& f, const MatrixX& x, const MatrixX& c) {
  const MatrixX q = bf_matmul(x, f.w_q()), k = bf_matmul(c, f.w_k()), v = bf_matmul(c, f.w_v());
  const int heads = f.heads();
  const int hd = static_cast<int>(q.cols()) / heads;
  MatrixX joined(x.rows(), v.cols());
  for (int h = 0; h < heads; ++h)
    joined.middleCols(h * hd, hd) =
        bf_attention(q.middleCols(h * hd, hd), k.middleCols(h * hd, hd), v.middleCols(h * hd, hd));
  return bf_matmul(joined, f.w_out());
}

inline Real max_abs(const MatrixX& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("editid-tests-" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A small run: `images` faces in one group paired with a two-prompt file.
inline editid::HarnessConfig small_config(const std::filesystem::path& root, int images = 3,
                                          std::uint64_t seed = 11) {
  for (int i = 0; i < images; ++i)
    editid::write_ppm(editid::draw_face(seed * 100 + static_cast<std::uint64_t>(i)),
                      root / "faces" / ("face_0" + std::to_string(i + 1) + ".ppm"));
  write_text(root / "prompts.txt",
             "# two prompts\nPortrait, a [person] wearing a spacesuit, smiling\nA watercolor landscape with a red barn\n");
  nlohmann::json j = {
      {"seed", seed},
      {"workers", 1},
      {"output_dir", "out"},
      {"sampler", {{"steps", 8}}},
      {"datasets", {{{"name", "faces"}, {"dir", "faces"}, {"genders", {{"face_01.ppm", "woman"}}}}}},
      {"prompts", {{{"name", "two"}, {"file", "prompts.txt"}}}},
      {"pairing", {{{"dataset", "faces"}, {"prompts", "two"}}}},
  };
  return editid::parse_config(j, root);
}

// Detector that finds nothing in images of a given width and otherwise
// behaves like the toy detector.
class BlindDetector : public editid::FaceDetector {
 public:
  explicit BlindDetector(int blind_width) : blind_width_(blind_width) {}
  std::optional<editid::FaceDetection> detect(const editid::ImageBuffer& image) const override {
    if (image.width() == blind_width_) return std::nullopt;
    return editid::ToyFaceDetector().detect(image);
  }

 private:
  int blind_width_;
};

class NoFaceDetector : public editid::FaceDetector {
 public:
  std::optional<editid::FaceDetection> detect(const editid::ImageBuffer&) const override { return std::nullopt; }
};

class FixedEmbedder : public editid::FaceEmbedder, public editid::ImageEncoder, public editid::TextEncoder {
 public:
  // Returns `a` for images whose top-left red value is below 0.5, else `b`.
  FixedEmbedder(VectorX a, VectorX b) : a_(std::move(a)), b_(std::move(b)) {}
  VectorX embed(const editid::ImageBuffer& face) const override { return pick(face); }
  VectorX encode(const editid::ImageBuffer& image) const override { return pick(image); }
  VectorX encode(const std::string& text) const override { return text.empty() ? a_ : b_; }

 private:
  VectorX pick(const editid::ImageBuffer& im) const { return im.at(0, 0, 0) < 0.5 ? a_ : b_; }
  VectorX a_, b_;
};

}  // namespace tsupport
