#include "editid/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace editid {

namespace {

struct Rgb {
  Real r, g, b;
};

void blend(ImageBuffer& img, int y, int x, const Rgb& c, Real a) {
  img.at(y, x, 0) = (1 - a) * img.at(y, x, 0) + a * c.r;
  img.at(y, x, 1) = (1 - a) * img.at(y, x, 1) + a * c.g;
  img.at(y, x, 2) = (1 - a) * img.at(y, x, 2) + a * c.b;
}

// Anti-aliased filled ellipse, coverage from the signed radial distance.
void ellipse(ImageBuffer& img, Real cx, Real cy, Real rx, Real ry, const Rgb& c) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Real dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const Real d = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
      const Real a = std::clamp(0.5 - d, 0.0, 1.0);
      if (a > 0) blend(img, y, x, c, a);
    }
}

}  // namespace

ImageBuffer draw_face(std::uint64_t seed, int side) {
  if (side < ImageBuffer::kMinSide) throw Error(ErrorCode::InvalidInput, "fixture side too small");
  Rng rng(mix_seed(seed, 0xFACE));
  const auto u = [&](Real lo, Real hi) { return lo + (hi - lo) * rng.uniform(); };
  const Real s = side;

  ImageBuffer img(side, side);
  const Rgb bg_top{u(0.2, 0.9), u(0.2, 0.9), u(0.2, 0.9)};
  const Rgb bg_bot{u(0.1, 0.6), u(0.1, 0.6), u(0.1, 0.6)};
  for (int y = 0; y < side; ++y) {
    const Real t = (y + 0.5) / s;
    for (int x = 0; x < side; ++x) {
      img.at(y, x, 0) = (1 - t) * bg_top.r + t * bg_bot.r;
      img.at(y, x, 1) = (1 - t) * bg_top.g + t * bg_bot.g;
      img.at(y, x, 2) = (1 - t) * bg_top.b + t * bg_bot.b;
    }
  }

  const Real tone = u(0.35, 0.95);
  const Rgb skin{tone, tone * u(0.7, 0.85), tone * u(0.55, 0.7)};
  const Rgb hair{u(0.02, 0.5), u(0.02, 0.35), u(0.02, 0.25)};
  const Real cx = s / 2 + u(-0.04, 0.04) * s, cy = s / 2 + u(-0.03, 0.03) * s;
  const Real rx = u(0.2, 0.26) * s, ry = u(0.26, 0.32) * s;

  ellipse(img, cx, cy - 0.12 * s, rx * 1.08, ry * 0.8, hair);
  ellipse(img, cx, cy + 0.02 * s, rx, ry, skin);

  // Features sit near the positions the toy detector reports for a centred
  // face box, so alignment lands them close to the canonical template.
  const Real eye_dx = u(0.08, 0.11) * s, eye_y = cy - u(0.04, 0.07) * s;
  const Real eye_r = u(0.018, 0.03) * s;
  const Rgb iris{u(0.0, 0.3), u(0.0, 0.4), u(0.0, 0.5)};
  for (int side_sign : {-1, 1}) {
    ellipse(img, cx + side_sign * eye_dx, eye_y, eye_r * 1.8, eye_r * 1.1, Rgb{0.95, 0.95, 0.95});
    ellipse(img, cx + side_sign * eye_dx + u(-0.3, 0.3) * eye_r, eye_y, eye_r * 0.8, eye_r * 0.8, iris);
  }
  ellipse(img, cx + u(-0.01, 0.01) * s, cy + 0.04 * s, 0.02 * s, 0.045 * s,
          Rgb{skin.r * 0.8, skin.g * 0.75, skin.b * 0.75});
  const Real mouth_w = u(0.06, 0.1) * s, mouth_h = u(0.012, 0.035) * s;
  ellipse(img, cx, cy + u(0.13, 0.16) * s, mouth_w, mouth_h, Rgb{u(0.5, 0.8), 0.15, 0.2});
  return img;
}

void write_fixture_corpus(const std::filesystem::path& root, const FixtureCorpusSpec& spec) {
  const std::pair<const char*, int> groups[] = {
      {"unsplash", spec.unsplash}, {"chineseid", spec.chineseid}, {"generateid", spec.generateid}};
  std::uint64_t k = 0;
  for (const auto& [name, count] : groups) {
    for (int i = 0; i < count; ++i) {
      char file[32];
      std::snprintf(file, sizeof file, "face_%02d.ppm", i + 1);
      write_ppm(draw_face(mix_seed(spec.seed, k++), spec.side), root / name / file);
    }
  }
  std::filesystem::create_directories(root / "prompts");
  const std::pair<const char*, const char*> prompts[] = {
      {"short.txt",
       "# short prompts\n"
       "a [person] smiling\n"
       "a [person] wearing sunglasses\n"
       "a [person] in a garden\n"},
      {"editable-long.txt",
       "# long prompts that ask for pose and expression changes\n"
       "Portrait, a [person] wearing a spacesuit, looking up to the left, surprised expression\n"
       "A [person] laughing on a windy beach at sunset, head turned to the side, hair blowing\n"},
      {"manual.txt",
       "# hand-written prompts\n"
       "a watercolor painting of a [person] reading in a cafe\n"
       "a close-up photo of a [person] with a stern face under neon light\n"},
  };
  for (const auto& [file, text] : prompts) {
    std::ofstream out(root / "prompts" / file);
    if (!out) throw Error(ErrorCode::Io, "cannot write prompt file " + (root / "prompts" / file).string());
    out << text;
  }
}

}  // namespace editid
