#pragma once

#include <array>
#include <filesystem>

#include "editid/core.hpp"

namespace editid {

/// RGB image with planar channels, values in [0,1].
/// Planes are (height x width) arrays; pixel (y, x) lives at plane(y, x).
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kMinSide = 8;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, Real fill = 0.0);

  int height() const { return static_cast<int>(planes_[0].rows()); }
  int width() const { return static_cast<int>(planes_[0].cols()); }
  bool empty() const { return planes_[0].size() == 0; }

  Eigen::ArrayXXd& plane(int c) { return planes_[c]; }
  const Eigen::ArrayXXd& plane(int c) const { return planes_[c]; }

  Real& at(int y, int x, int c) { return planes_[c](y, x); }
  Real at(int y, int x, int c) const { return planes_[c](y, x); }

  /// Throws InvalidInput unless sides >= 8 and every value is finite and in [0,1].
  void validate() const;

  Eigen::ArrayXXd grayscale() const;

  friend bool operator==(const ImageBuffer& a, const ImageBuffer& b);

 private:
  std::array<Eigen::ArrayXXd, kChannels> planes_;
};

struct PixelRect {
  Real x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  Real width() const { return x1 - x0; }
  Real height() const { return y1 - y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Box-filter resample of a single plane to (rows, cols).
Eigen::ArrayXXd area_resize(const Eigen::ArrayXXd& plane, int rows, int cols);

/// Flattened (row-major) 8x8 grayscale downsample, the toy encoders' input.
VectorX gray_downsample(const ImageBuffer& image, int side = 8);

/// Flattened colour downsample, channel-major.
VectorX color_downsample(const ImageBuffer& image, int side = 8);

Real bilinear(const Eigen::ArrayXXd& plane, Real y, Real x);

ImageBuffer crop(const ImageBuffer& image, const PixelRect& rect);

Real max_abs_diff(const ImageBuffer& a, const ImageBuffer& b);

// Binary PPM (P6, maxval 255).
ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace editid
