#include "editid/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace editid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::InvalidKind: return "invalid-kind";
    case ErrorCode::MissingOutput: return "missing-output";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::FaceNotFound: return "face-not-found";
    case ErrorCode::UndefinedSimilarity: return "undefined-similarity";
    case ErrorCode::DegenerateLandmarks: return "degenerate-landmarks";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

ImageBuffer::ImageBuffer(int height, int width, Real fill) {
  for (auto& p : planes_) p = Eigen::ArrayXXd::Constant(height, width, fill);
}

void ImageBuffer::validate() const {
  if (height() < kMinSide || width() < kMinSide) {
    std::ostringstream os;
    os << "image " << height() << "x" << width() << " is smaller than "
       << kMinSide << "x" << kMinSide;
    throw Error(ErrorCode::InvalidInput, os.str());
  }
  for (const auto& p : planes_) {
    if (!p.allFinite() || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0)
      throw Error(ErrorCode::InvalidInput, "image values must be finite and in [0,1]");
  }
}

Eigen::ArrayXXd ImageBuffer::grayscale() const {
  return 0.299 * planes_[0] + 0.587 * planes_[1] + 0.114 * planes_[2];
}

bool operator==(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.height() != b.height() || a.width() != b.width()) return false;
  for (int c = 0; c < ImageBuffer::kChannels; ++c)
    if ((a.planes_[c] != b.planes_[c]).any()) return false;
  return true;
}

Eigen::ArrayXXd area_resize(const Eigen::ArrayXXd& plane, int rows, int cols) {
  const Eigen::Index in_rows = plane.rows();
  const Eigen::Index in_cols = plane.cols();
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(rows, cols);
  const Real sy = static_cast<Real>(in_rows) / rows;
  const Real sx = static_cast<Real>(in_cols) / cols;
  // Exact box integration: each output cell averages the fractional
  // coverage of the input pixels under it.
  for (int oy = 0; oy < rows; ++oy) {
    const Real y0 = oy * sy, y1 = (oy + 1) * sy;
    for (int ox = 0; ox < cols; ++ox) {
      const Real x0 = ox * sx, x1 = (ox + 1) * sx;
      Real acc = 0.0;
      for (auto iy = static_cast<Eigen::Index>(std::floor(y0));
           iy < std::min<Eigen::Index>(in_rows, static_cast<Eigen::Index>(std::ceil(y1))); ++iy) {
        const Real wy = std::min<Real>(y1, iy + 1) - std::max<Real>(y0, iy);
        if (wy <= 0) continue;
        for (auto ix = static_cast<Eigen::Index>(std::floor(x0));
             ix < std::min<Eigen::Index>(in_cols, static_cast<Eigen::Index>(std::ceil(x1))); ++ix) {
          const Real wx = std::min<Real>(x1, ix + 1) - std::max<Real>(x0, ix);
          if (wx <= 0) continue;
          acc += wy * wx * plane(iy, ix);
        }
      }
      out(oy, ox) = acc / (sy * sx);
    }
  }
  return out;
}

VectorX gray_downsample(const ImageBuffer& image, int side) {
  const Eigen::ArrayXXd small = area_resize(image.grayscale(), side, side);
  VectorX v(side * side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) v(y * side + x) = small(y, x);
  return v;
}

VectorX color_downsample(const ImageBuffer& image, int side) {
  VectorX v(3 * side * side);
  for (int c = 0; c < ImageBuffer::kChannels; ++c) {
    const Eigen::ArrayXXd small = area_resize(image.plane(c), side, side);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) v(c * side * side + y * side + x) = small(y, x);
  }
  return v;
}

Real bilinear(const Eigen::ArrayXXd& plane, Real y, Real x) {
  const auto rows = plane.rows(), cols = plane.cols();
  y = std::clamp<Real>(y, 0.0, static_cast<Real>(rows - 1));
  x = std::clamp<Real>(x, 0.0, static_cast<Real>(cols - 1));
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const auto y1 = std::min(y0 + 1, rows - 1);
  const auto x1 = std::min(x0 + 1, cols - 1);
  const Real fy = y - y0, fx = x - x0;
  return (1 - fy) * ((1 - fx) * plane(y0, x0) + fx * plane(y0, x1)) +
         fy * ((1 - fx) * plane(y1, x0) + fx * plane(y1, x1));
}

ImageBuffer crop(const ImageBuffer& image, const PixelRect& rect) {
  const int x0 = std::max(0, static_cast<int>(std::lround(rect.x0)));
  const int y0 = std::max(0, static_cast<int>(std::lround(rect.y0)));
  const int x1 = std::min(image.width(), static_cast<int>(std::lround(rect.x1)));
  const int y1 = std::min(image.height(), static_cast<int>(std::lround(rect.y1)));
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCode::InvalidInput, "empty crop rectangle");
  ImageBuffer out(y1 - y0, x1 - x0);
  for (int c = 0; c < ImageBuffer::kChannels; ++c)
    out.plane(c) = image.plane(c).block(y0, x0, y1 - y0, x1 - x0);
  return out;
}

Real max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw Error(ErrorCode::ShapeMismatch, "image sizes differ");
  Real m = 0.0;
  for (int c = 0; c < ImageBuffer::kChannels; ++c)
    m = std::max(m, (a.plane(c) - b.plane(c)).abs().maxCoeff());
  return m;
}

namespace {

void skip_ws_and_comments(std::istream& in) {
  while (true) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw Error(ErrorCode::Io, path.string() + ": not a binary PPM (P6)");
  int width = 0, height = 0, maxval = 0;
  skip_ws_and_comments(in);
  in >> width;
  skip_ws_and_comments(in);
  in >> height;
  skip_ws_and_comments(in);
  in >> maxval;
  if (!in || width <= 0 || height <= 0 || maxval != 255)
    throw Error(ErrorCode::Io, path.string() + ": unsupported PPM header");
  in.get();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw Error(ErrorCode::Io, path.string() + ": truncated pixel data");
  ImageBuffer img(height, width);
  std::size_t k = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bytes[k++] / 255.0;
  return img;
}

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(image.width()) * image.height() * 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c)
        bytes.push_back(static_cast<unsigned char>(
            std::lround(std::clamp(image.at(y, x, c), 0.0, 1.0) * 255.0)));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace editid
