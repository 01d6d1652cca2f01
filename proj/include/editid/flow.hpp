#pragma once

// Flow-matching math at toy scale: the cos^2/sin^2 noise schedule, the
// reparameterised forward sample, the linear interpolation path and its
// regression target, an attention vector field, and a fixed-step Euler
// sampler with per-step hooks.
//
// Time runs 0 -> 1 from noise to data: x(0) is the seeded Gaussian latent,
// x(1) is decoded to pixels.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "editid/attention.hpp"
#include "editid/image.hpp"

namespace editid {

inline constexpr int kDefaultSamplingSteps = 20;

class TimePoint {
 public:
  explicit TimePoint(Real t) : t_(t) {
    if (!(t >= 0.0 && t <= 1.0))
      throw Error(ErrorCode::InvalidInput, "time point must lie in [0,1]");
  }
  Real value() const { return t_; }

 private:
  Real t_;
};

struct ScheduleValue {
  Real alpha;
  Real sigma;
};

inline ScheduleValue noise_schedule(TimePoint t) {
  const Real c = std::cos(std::numbers::pi * t.value() / 2);
  const Real s = std::sin(std::numbers::pi * t.value() / 2);
  return {c * c, s * s};
}

namespace detail {
template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shape mismatch");
}
}  // namespace detail

/// alpha_t * x0 + sigma_t * noise, with caller-supplied noise.
template <typename Scalar>
Mat<Scalar> forward_diffuse(const Mat<Scalar>& x0, TimePoint t, const Mat<Scalar>& noise) {
  detail::require_same_shape(x0, noise, "forward_diffuse");
  const auto [alpha, sigma] = noise_schedule(t);
  return static_cast<Scalar>(alpha) * x0 + static_cast<Scalar>(sigma) * noise;
}

template <typename Scalar>
Mat<Scalar> interpolate_path(const Mat<Scalar>& x0, const Mat<Scalar>& x1, TimePoint t) {
  detail::require_same_shape(x0, x1, "interpolate_path");
  const auto tt = static_cast<Scalar>(t.value());
  return (Scalar(1) - tt) * x0 + tt * x1;
}

/// Flow-matching regression target x1 - x0.
template <typename Scalar>
Mat<Scalar> fm_residual(const Mat<Scalar>& x0, const Mat<Scalar>& x1) {
  detail::require_same_shape(x0, x1, "fm_residual");
  return x1 - x0;
}

struct VectorFieldSpec {
  std::uint64_t seed_q = 11;
  std::uint64_t seed_k = 12;
  std::uint64_t seed_v = 13;
  std::uint64_t seed_out = 14;
  int heads = 4;
  int dim = 32;       // latent token width
  int cond_dim = 32;  // condition token width
};

/// Proj(Attn(x W_Q, c W_K, c W_V)) with seeded projections.
template <typename Scalar>
class AttentionField {
 public:
  explicit AttentionField(const VectorFieldSpec& spec) : heads_(spec.heads) {
    if (spec.dim <= 0 || spec.cond_dim <= 0)
      throw Error(ErrorCode::InvalidInput, "vector field dims must be positive");
    if (spec.heads <= 0 || spec.dim % spec.heads != 0)
      throw Error(ErrorCode::ShapeMismatch, "head count must divide dim");
    const Real sx = 1.0 / std::sqrt(static_cast<Real>(spec.dim));
    const Real sc = 1.0 / std::sqrt(static_cast<Real>(spec.cond_dim));
    w_q_ = seeded_gaussian<Scalar>(spec.seed_q, spec.dim, spec.dim, sx);
    w_k_ = seeded_gaussian<Scalar>(spec.seed_k, spec.cond_dim, spec.dim, sc);
    w_v_ = seeded_gaussian<Scalar>(spec.seed_v, spec.cond_dim, spec.dim, sc);
    w_out_ = seeded_gaussian<Scalar>(spec.seed_out, spec.dim, spec.dim, sx);
  }

  Mat<Scalar> operator()(const Mat<Scalar>& x, TimePoint /*t*/, const Mat<Scalar>& c) const {
    if (x.cols() != w_q_.rows())
      throw Error(ErrorCode::ShapeMismatch, "latent width does not match the vector field");
    if (c.cols() != w_k_.rows() || c.rows() < 1)
      throw Error(ErrorCode::ShapeMismatch, "condition width does not match the vector field");
    const Mat<Scalar> q = x * w_q_;
    const Mat<Scalar> k = c * w_k_;
    const Mat<Scalar> v = c * w_v_;
    return multi_head_attention<Scalar>(q, k, v, heads_) * w_out_;
  }

  const Mat<Scalar>& w_q() const { return w_q_; }
  const Mat<Scalar>& w_k() const { return w_k_; }
  const Mat<Scalar>& w_v() const { return w_v_; }
  const Mat<Scalar>& w_out() const { return w_out_; }
  int heads() const { return heads_; }

 private:
  int heads_;
  Mat<Scalar> w_q_, w_k_, w_v_, w_out_;
};

template <typename Scalar>
Mat<Scalar> attention_vector_field(const VectorFieldSpec& spec, const Mat<Scalar>& x, TimePoint t,
                                   const Mat<Scalar>& c) {
  return AttentionField<Scalar>(spec)(x, t, c);
}

/// Called after each field evaluation with (step index, field output); may
/// overwrite the field output before the Euler update consumes it.
template <typename Scalar>
using StepHook = std::function<void(int, Mat<Scalar>&)>;

/// Explicit Euler over t in [0,1] with dt = 1/steps. `field(x, t)` returns dx/dt.
template <typename Scalar, typename Field>
Mat<Scalar> euler_integrate(Field&& field, Mat<Scalar> x, int steps,
                            std::span<const StepHook<Scalar>> hooks = {}) {
  if (steps < 1) throw Error(ErrorCode::InvalidInput, "euler_integrate needs steps >= 1");
  const Real dt = 1.0 / steps;
  for (int n = 0; n < steps; ++n) {
    Mat<Scalar> v = field(std::as_const(x), TimePoint(n * dt));
    for (const auto& hook : hooks) hook(n, v);
    x += static_cast<Scalar>(dt) * v;
    if (!x.allFinite())
      throw Error(ErrorCode::Divergence, "non-finite state at step " + std::to_string(n));
  }
  return x;
}

struct SamplerSettings {
  int steps = kDefaultSamplingSteps;
  std::uint64_t seed = 0;
  Real guidance = 3.5;   // passed through to real generators only
  Real cfg_scale = 1.0;  // passed through to real generators only
  std::string name = "euler";
};

/// Toy latent layout and decoder: grid x grid tokens, each decoded to a
/// patch x patch RGB tile by one shared seeded linear map.
struct ToyGeneratorSpec {
  VectorFieldSpec field;
  int grid = 4;
  int patch = 16;
  std::uint64_t decode_seed = 15;

  int tokens() const { return grid * grid; }
  int image_side() const { return grid * patch; }
};

MatrixX toy_initial_latent(const ToyGeneratorSpec& spec, std::uint64_t seed);
ImageBuffer toy_decode(const ToyGeneratorSpec& spec, const MatrixX& latent);

/// Seeded latent -> Euler integration of the attention field -> linear decode.
ImageBuffer toy_generate(const ToyGeneratorSpec& spec, const MatrixX& prompt_embedding,
                         std::uint64_t seed, int steps,
                         std::span<const StepHook<Real>> hooks = {});

}  // namespace editid
