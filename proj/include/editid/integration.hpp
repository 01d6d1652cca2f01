#pragma once

// Dynamic ID integration: which transformer blocks receive the ID, the
// perceiver-style cross-attention (latent tokens query the ID feature), the
// query reweighting transforms, the residual fusion rules, and the per-step
// strength schedule.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "editid/attention.hpp"
#include "editid/flow.hpp"

namespace editid {

struct BlockId {
  enum class Stream { Dual, Single };
  Stream stream = Stream::Dual;
  int index = 0;

  /// Position in the concatenated dual-then-single sequence.
  int flat() const;
  static BlockId from_flat(int flat);
  friend bool operator==(const BlockId&, const BlockId&) = default;
};

std::string to_string(const BlockId& id);
/// "dual:3", "single:10" or a bare flat index "24".
BlockId parse_block_id(std::string_view text);

struct BlockSet {
  static constexpr int kDualStream = 19;
  static constexpr int kSingleStream = 38;
  static constexpr int kTotal = kDualStream + kSingleStream;
  static constexpr int kDefaultCount = 10;

  std::vector<BlockId> selected;

  bool contains(const BlockId& id) const {
    return std::find(selected.begin(), selected.end(), id) != selected.end();
  }
};

/// k blocks spaced evenly over the 57-block sequence: floor(i * 56 / (k - 1)).
BlockSet select_blocks(int k);
BlockSet select_blocks(std::vector<BlockId> explicit_list);

struct ReweightMethod {
  enum class Kind { SeededGaussianLinear, Dct, PartialFourier };
  Kind kind = Kind::SeededGaussianLinear;
  std::uint64_t seed = 101;
  int target_dim = 32;
};

std::string_view to_string(ReweightMethod::Kind kind);
ReweightMethod::Kind parse_reweight_kind(std::string_view text);

/// Orthonormal type-II DCT basis, first `rows` rows of the n x n matrix.
template <typename Scalar>
Mat<Scalar> dct_rows(int rows, int n) {
  Mat<Scalar> m(rows, n);
  for (int k = 0; k < rows; ++k) {
    const Real scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int j = 0; j < n; ++j)
      m(k, j) = static_cast<Scalar>(scale * std::cos(std::numbers::pi * (j + 0.5) * k / n));
  }
  return m;
}

/// Rows of the unitary DFT split into real and imaginary parts, in the order
/// Re(f0), Re(f1), Im(f1), Re(f2), Im(f2), ... Each emitted row is rescaled to
/// unit norm; the resulting set is orthonormal for any prefix length.
template <typename Scalar>
Mat<Scalar> partial_fourier_rows(int rows, int n) {
  Mat<Scalar> m(rows, n);
  int r = 0;
  for (int f = 0; r < rows; ++f) {
    for (int part = 0; part < 2 && r < rows; ++part) {
      if (part == 1 && (f == 0 || 2 * f == n)) continue;  // identically zero rows
      Vec<Real> row(n);
      for (int j = 0; j < n; ++j) {
        const Real angle = 2 * std::numbers::pi * f * j / n;
        row(j) = part == 0 ? std::cos(angle) : -std::sin(angle);
      }
      row /= row.norm();
      m.row(r++) = row.cast<Scalar>().transpose();
    }
  }
  return m;
}

/// target_dim x source_dim matrix applied to each token as a row vector.
template <typename Scalar>
Mat<Scalar> reweight_matrix(const ReweightMethod& method, int source_dim) {
  if (method.target_dim < 1 || source_dim < 1)
    throw Error(ErrorCode::InvalidInput, "reweight dims must be positive");
  switch (method.kind) {
    case ReweightMethod::Kind::SeededGaussianLinear:
      return seeded_gaussian<Scalar>(method.seed, method.target_dim, source_dim,
                                     1.0 / std::sqrt(static_cast<Real>(source_dim)));
    case ReweightMethod::Kind::Dct:
    case ReweightMethod::Kind::PartialFourier:
      if (method.target_dim > source_dim)
        throw Error(ErrorCode::InvalidInput,
                    "dct/partial-fourier reweight needs target_dim <= source_dim");
      return method.kind == ReweightMethod::Kind::Dct
                 ? dct_rows<Scalar>(method.target_dim, source_dim)
                 : partial_fourier_rows<Scalar>(method.target_dim, source_dim);
  }
  throw Error(ErrorCode::InvalidInput, "unknown reweight method");
}

template <typename Scalar>
Mat<Scalar> reweight(const Mat<Scalar>& tokens, const ReweightMethod& method) {
  return tokens * reweight_matrix<Scalar>(method, static_cast<int>(tokens.cols())).transpose();
}

struct FusionMethod {
  enum class Kind { Weight, Dropout, Concat, Sum, Multiply, Max };
  Kind kind = Kind::Concat;
  std::optional<std::pair<Real, Real>> weights;  // Weight only
  Real drop_rate = 0.0;                          // Dropout only, in [0,1)
  std::uint64_t seed = 0;                        // Dropout mask seed

  void validate() const;
};

std::string_view to_string(FusionMethod::Kind kind);
FusionMethod::Kind parse_fusion_kind(std::string_view text);

/// Combines the reweighted query `a` with the aligned ID response `b`.
/// Concat is concatenate-then-mean, i.e. (a + b) / 2. Dropout zeroes
/// round(drop_rate * size) coordinates of `a` chosen by a mask seeded from
/// (method.seed, mask_salt), then sums.
template <typename Scalar>
Mat<Scalar> residual_fuse(const Mat<Scalar>& a, const Mat<Scalar>& b, const FusionMethod& method,
                          std::uint64_t mask_salt = 0) {
  detail::require_same_shape(a, b, "residual_fuse");
  method.validate();
  using K = FusionMethod::Kind;
  switch (method.kind) {
    case K::Weight:
      return static_cast<Scalar>(method.weights->first) * a +
             static_cast<Scalar>(method.weights->second) * b;
    case K::Dropout: {
      Mat<Scalar> masked = a;
      const auto n = static_cast<std::size_t>(a.size());
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 engine(mix_seed(method.seed, mask_salt));
      std::shuffle(order.begin(), order.end(), engine);
      const auto drop = static_cast<std::size_t>(std::lround(method.drop_rate * n));
      for (std::size_t i = 0; i < drop; ++i) masked.data()[order[i]] = Scalar(0);
      return masked + b;
    }
    case K::Concat:
      return (a + b) / Scalar(2);
    case K::Sum:
      return a + b;
    case K::Multiply:
      return a.cwiseProduct(b);
    case K::Max:
      return a.cwiseMax(b);
  }
  throw Error(ErrorCode::InvalidInput, "unknown fusion method");
}

struct StrengthSchedule {
  enum class Kind { Constant, EarlyBoost };
  Kind kind = Kind::Constant;
  Real base = 1.0;
  Real boost = 0.0;
  Real boost_until_fraction = 0.0;

  void validate() const;
};

Real strength_at(int step, int total_steps, const StrengthSchedule& schedule);

/// Cross-attention where latent tokens are queries and the ID feature is a
/// single key/value token.
struct PerceiverSpec {
  std::uint64_t seed = 201;
  int inner_dim = 32;
  bool output_bias = false;
};

template <typename Scalar>
class PerceiverAttention {
 public:
  PerceiverAttention(const PerceiverSpec& spec, int token_dim, int id_dim) {
    if (token_dim < 1 || id_dim < 1 || spec.inner_dim < 1)
      throw Error(ErrorCode::InvalidInput, "perceiver dims must be positive");
    const Real st = 1.0 / std::sqrt(static_cast<Real>(token_dim));
    const Real si = 1.0 / std::sqrt(static_cast<Real>(id_dim));
    const Real sn = 1.0 / std::sqrt(static_cast<Real>(spec.inner_dim));
    w_q_ = seeded_gaussian<Scalar>(mix_seed(spec.seed, 0), token_dim, spec.inner_dim, st);
    w_k_ = seeded_gaussian<Scalar>(mix_seed(spec.seed, 1), id_dim, spec.inner_dim, si);
    w_v_ = seeded_gaussian<Scalar>(mix_seed(spec.seed, 2), id_dim, spec.inner_dim, si);
    w_out_ = seeded_gaussian<Scalar>(mix_seed(spec.seed, 3), spec.inner_dim, token_dim, sn);
    bias_ = spec.output_bias
                ? RowVec<Scalar>(seeded_gaussian<Scalar>(mix_seed(spec.seed, 4), 1, token_dim, 0.1))
                : RowVec<Scalar>::Zero(token_dim);
  }

  /// `id_tokens` is (n_id x id_dim); the edit feature is the 1-token case.
  Mat<Scalar> operator()(const Mat<Scalar>& noise_tokens, const Mat<Scalar>& id_tokens) const {
    if (noise_tokens.cols() != w_q_.rows() || id_tokens.cols() != w_k_.rows())
      throw Error(ErrorCode::ShapeMismatch, "perceiver input widths do not match");
    Mat<Scalar> out = scaled_dot_attention<Scalar>(noise_tokens * w_q_, id_tokens * w_k_,
                                                   id_tokens * w_v_) * w_out_;
    out.rowwise() += bias_;
    if (!out.allFinite()) throw Error(ErrorCode::NonFinite, "perceiver produced non-finite output");
    return out;
  }

  const Mat<Scalar>& w_v() const { return w_v_; }
  const Mat<Scalar>& w_out() const { return w_out_; }
  const RowVec<Scalar>& bias() const { return bias_; }

 private:
  Mat<Scalar> w_q_, w_k_, w_v_, w_out_;
  RowVec<Scalar> bias_;
};

template <typename Scalar>
Mat<Scalar> perceiver_attend(const Mat<Scalar>& noise_tokens, const Vec<Scalar>& edit,
                             const PerceiverSpec& spec) {
  PerceiverAttention<Scalar> attn(spec, static_cast<int>(noise_tokens.cols()),
                                  static_cast<int>(edit.size()));
  return attn(noise_tokens, Mat<Scalar>(edit.transpose()));
}

struct IntegrationConfig {
  BlockSet blocks = select_blocks(BlockSet::kDefaultCount);
  ReweightMethod reweight{};
  FusionMethod fusion{};
  StrengthSchedule schedule{};
  PerceiverSpec perceiver{};

  void validate(int token_dim) const;
};

/// Precomputes the reweight matrix, its pseudo-inverse (the map back to
/// token width) and the perceiver weights for one edit feature.
template <typename Scalar>
class IdIntegrator {
 public:
  IdIntegrator(const IntegrationConfig& cfg, const Vec<Scalar>& edit, int token_dim)
      : cfg_(cfg),
        edit_(edit.transpose()),
        perceiver_(cfg.perceiver, token_dim, static_cast<int>(edit.size())) {
    cfg.validate(token_dim);
    if (!edit.allFinite()) throw Error(ErrorCode::NonFinite, "edit feature is not finite");
    reweight_ = reweight_matrix<Scalar>(cfg.reweight, token_dim);
    project_back_ = reweight_.completeOrthogonalDecomposition().pseudoInverse();
  }

  /// Unselected blocks pass the state through untouched. Selected blocks add
  /// strength * project_back(fused - reweighted_query).
  Mat<Scalar> integrate_step(const Mat<Scalar>& state, const BlockId& block, int step,
                             int total_steps) const {
    const Real strength = strength_at(step, total_steps, cfg_.schedule);
    if (!cfg_.blocks.contains(block)) return state;
    const Mat<Scalar> response = perceiver_(state, edit_);
    const Mat<Scalar> query = state * reweight_.transpose();
    const Mat<Scalar> aligned = response * reweight_.transpose();
    const std::uint64_t salt = mix_seed(static_cast<std::uint64_t>(step),
                                        static_cast<std::uint64_t>(block.flat()));
    const Mat<Scalar> fused = residual_fuse<Scalar>(query, aligned, cfg_.fusion, salt);
    Mat<Scalar> out = state + static_cast<Scalar>(strength) * ((fused - query) * project_back_.transpose());
    if (!out.allFinite()) throw Error(ErrorCode::NonFinite, "integration produced non-finite state");
    return out;
  }

  /// Sweeps every block in sequence order at each sampler step.
  StepHook<Scalar> hook(int total_steps) const {
    return [this, total_steps](int step, Mat<Scalar>& state) {
      for (int b = 0; b < BlockSet::kTotal; ++b) {
        const BlockId id = BlockId::from_flat(b);
        if (cfg_.blocks.contains(id)) state = integrate_step(state, id, step, total_steps);
      }
    };
  }

  const Mat<Scalar>& reweight_weights() const { return reweight_; }
  const Mat<Scalar>& project_back() const { return project_back_; }

 private:
  IntegrationConfig cfg_;
  Mat<Scalar> edit_;
  PerceiverAttention<Scalar> perceiver_;
  Mat<Scalar> reweight_;
  Mat<Scalar> project_back_;
};

template <typename Scalar>
Mat<Scalar> integrate_step(const Mat<Scalar>& state, const Vec<Scalar>& edit,
                           const IntegrationConfig& cfg, const BlockId& block, int step,
                           int total_steps) {
  if (!cfg.blocks.contains(block)) {
    strength_at(step, total_steps, cfg.schedule);  // still range-check the step
    return state;
  }
  return IdIntegrator<Scalar>(cfg, edit, static_cast<int>(state.cols()))
      .integrate_step(state, block, step, total_steps);
}

}  // namespace editid
