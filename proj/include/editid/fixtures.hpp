#pragma once

// Procedurally drawn face images and a small on-disk corpus for the three
// dataset groups. Used by tests, the CLI `fixtures` command and data/.

#include <filesystem>

#include "editid/image.hpp"

namespace editid {

/// A cartoon face (skin ellipse, hair, eyes, nose, mouth) on a shaded
/// background. Every geometric and colour parameter is jittered by `seed`.
ImageBuffer draw_face(std::uint64_t seed, int side = 64);

struct FixtureCorpusSpec {
  int unsplash = 4;
  int chineseid = 3;
  int generateid = 3;
  int side = 64;
  std::uint64_t seed = 7;
};

/// Writes <root>/{unsplash,chineseid,generateid}/face_NN.ppm and
/// <root>/prompts/{short,editable-long,manual}.txt.
void write_fixture_corpus(const std::filesystem::path& root, const FixtureCorpusSpec& spec = {});

}  // namespace editid
