#include <doctest.h>

#include "editid/image.hpp"
#include "support.hpp"

using namespace editid;

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("seeded_gaussian is reproducible and seed sensitive") {
  CHECK(seeded_gaussian(5, 4, 3) == seeded_gaussian(5, 4, 3));
  CHECK(seeded_gaussian(5, 4, 3) != seeded_gaussian(6, 4, 3));
}

TEST_CASE("image validation") {
  CHECK_NOTHROW(ImageBuffer(8, 8, 0.5).validate());
  SUBCASE("too small") {
    try {
      ImageBuffer(7, 64).validate();
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidInput);
    }
  }
  SUBCASE("out of range value") {
    ImageBuffer im(8, 8, 0.5);
    im.at(3, 3, 1) = 1.5;
    CHECK_THROWS_AS(im.validate(), Error);
  }
  SUBCASE("non-finite value") {
    ImageBuffer im(8, 8, 0.5);
    im.at(0, 0, 2) = std::nan("");
    CHECK_THROWS_AS(im.validate(), Error);
  }
}

TEST_CASE("ppm round trip keeps 8-bit values") {
  const auto dir = tsupport::scratch_dir("ppm");
  ImageBuffer im(9, 13);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 13; ++x) im.at(y, x, c) = ((y * 13 + x) * 7 + c * 31) % 256 / 255.0;
  write_ppm(im, dir / "a.ppm");
  const ImageBuffer back = read_ppm(dir / "a.ppm");
  CHECK(back.height() == 9);
  CHECK(back.width() == 13);
  CHECK(max_abs_diff(im, back) < 1e-12);
  CHECK_THROWS_AS(read_ppm(dir / "missing.ppm"), Error);
  tsupport::write_text(dir / "bad.ppm", "P3\n1 1\n255\n0 0 0\n");
  CHECK_THROWS_AS(read_ppm(dir / "bad.ppm"), Error);
}

TEST_CASE("area_resize preserves the mean of a plane") {
  std::mt19937_64 g(3);
  const Eigen::ArrayXXd p = tsupport::random_matrix(g, 64, 48).array();
  const Eigen::ArrayXXd r = area_resize(p, 8, 8);
  CHECK(r.rows() == 8);
  CHECK(r.cols() == 8);
  CHECK(r.mean() == doctest::Approx(p.mean()).epsilon(1e-12));
}

TEST_CASE("crop extracts the requested rectangle") {
  ImageBuffer im(16, 16);
  im.at(5, 6, 0) = 1.0;
  const ImageBuffer c = crop(im, PixelRect{4, 4, 12, 12});
  CHECK(c.height() == 8);
  CHECK(c.width() == 8);
  CHECK(c.at(1, 2, 0) == 1.0);
}
