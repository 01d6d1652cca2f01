#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace editid {

using Real = double;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixX = Mat<Real>;
using VectorX = Vec<Real>;

enum class ErrorCode {
  InvalidInput,
  InvalidKind,
  MissingOutput,
  NotFound,
  ShapeMismatch,
  Divergence,
  NonFinite,
  FaceNotFound,
  UndefinedSimilarity,
  DegenerateLandmarks,
  EmptyInput,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// splitmix64 finalizer; used to fold indices into seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// The one generator used wherever a seed appears: mt19937_64 with the
/// standard normal distribution. Deterministic per platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Real normal() { return normal_(engine_); }
  Real uniform() { return uniform_(engine_); }

  template <typename Scalar = Real>
  Mat<Scalar> gaussian(Eigen::Index rows, Eigen::Index cols, Real scale = 1.0) {
    Mat<Scalar> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        m(i, j) = static_cast<Scalar>(scale * normal());
    return m;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<Real> normal_{0.0, 1.0};
  std::uniform_real_distribution<Real> uniform_{0.0, 1.0};
};

/// Seeded Gaussian matrix; the single construction path for all toy weights.
template <typename Scalar = Real>
Mat<Scalar> seeded_gaussian(std::uint64_t seed, Eigen::Index rows,
                            Eigen::Index cols, Real scale = 1.0) {
  Rng rng(seed);
  return rng.gaussian<Scalar>(rows, cols, scale);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace editid
