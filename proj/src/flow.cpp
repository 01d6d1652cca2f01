#include "editid/flow.hpp"

#include <algorithm>

namespace editid {

MatrixX toy_initial_latent(const ToyGeneratorSpec& spec, std::uint64_t seed) {
  return seeded_gaussian(mix_seed(seed, 0x1a7e), spec.tokens(), spec.field.dim);
}

ImageBuffer toy_decode(const ToyGeneratorSpec& spec, const MatrixX& latent) {
  if (latent.rows() != spec.tokens() || latent.cols() != spec.field.dim)
    throw Error(ErrorCode::ShapeMismatch, "latent does not match the toy decoder layout");
  const int tile = spec.patch * spec.patch;
  // One decode row per (channel, pixel) of a tile.
  const MatrixX decoder = seeded_gaussian(spec.decode_seed, 3 * tile, spec.field.dim,
                                          0.15 / std::sqrt(static_cast<Real>(spec.field.dim)));
  const int side = spec.image_side();
  ImageBuffer image(side, side);
  for (int token = 0; token < spec.tokens(); ++token) {
    const VectorX pixels = decoder * latent.row(token).transpose();
    const int ty = token / spec.grid, tx = token % spec.grid;
    for (int c = 0; c < 3; ++c)
      for (int py = 0; py < spec.patch; ++py)
        for (int px = 0; px < spec.patch; ++px) {
          const Real value = 0.5 + pixels(c * tile + py * spec.patch + px);
          image.at(ty * spec.patch + py, tx * spec.patch + px, c) = std::clamp(value, 0.0, 1.0);
        }
  }
  return image;
}

ImageBuffer toy_generate(const ToyGeneratorSpec& spec, const MatrixX& prompt_embedding,
                         std::uint64_t seed, int steps, std::span<const StepHook<Real>> hooks) {
  const AttentionField<Real> field(spec.field);
  if (prompt_embedding.cols() != spec.field.cond_dim || prompt_embedding.rows() < 1)
    throw Error(ErrorCode::ShapeMismatch, "prompt embedding does not match the vector field");
  auto velocity = [&](const MatrixX& x, TimePoint t) { return field(x, t, prompt_embedding); };
  const MatrixX final_state =
      euler_integrate<Real>(velocity, toy_initial_latent(spec, seed), steps, hooks);
  return toy_decode(spec, final_state);
}

}  // namespace editid
