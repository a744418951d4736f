#include "eac/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include <png.h>

#include "eac/error.hpp"

namespace eac {

Image8 read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw Error(Errc::IoFailure, "cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(Errc::IoFailure, "cannot decode PNG " + path.string() + ": " + img.message);
  }
  const Eigen::Index h = img.height, w = img.width;
  Image8 out(h, w, 3);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out[c](y, x) = buf[(y * w + x) * 3 + c];
  return out;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
  if (image.num_channels() != 3)
    throw Error(Errc::InvalidArgument, "write_png expects 3 channels");
  const Eigen::Index h = image.height(), w = image.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h * w * 3));
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) buf[(y * w + x) * 3 + c] = image[c](y, x);

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw Error(Errc::IoFailure, "cannot write PNG " + path.string() + ": " + img.message);
}

ImageF resize_bilinear(const ImageF& image, Eigen::Index height, Eigen::Index width) {
  if (image.height() == height && image.width() == width) return image;
  const Eigen::Index in_h = image.height(), in_w = image.width();
  const double sy = static_cast<double>(in_h) / height;
  const double sx = static_cast<double>(in_w) / width;

  auto taps = [](Eigen::Index out, double scale, Eigen::Index in_size) {
    std::vector<std::pair<std::array<Eigen::Index, 2>, float>> t(out);
    for (Eigen::Index i = 0; i < out; ++i) {
      double src = (i + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
      const auto lo = static_cast<Eigen::Index>(std::floor(src));
      const Eigen::Index hi = std::min(lo + 1, in_size - 1);
      t[i] = {{lo, hi}, static_cast<float>(src - lo)};
    }
    return t;
  };
  const auto ty = taps(height, sy, in_h);
  const auto tx = taps(width, sx, in_w);

  ImageF out(height, width, image.num_channels());
  for (int c = 0; c < image.num_channels(); ++c) {
    const auto& src = image[c];
    auto& dst = out[c];
    for (Eigen::Index x = 0; x < width; ++x) {
      const auto [xi, fx] = tx[x];
      for (Eigen::Index y = 0; y < height; ++y) {
        const auto [yi, fy] = ty[y];
        const float top = src(yi[0], xi[0]) * (1 - fx) + src(yi[0], xi[1]) * fx;
        const float bot = src(yi[1], xi[0]) * (1 - fx) + src(yi[1], xi[1]) * fx;
        dst(y, x) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Image8 box_blur(const Image8& image, int radius) {
  if (radius < 1) throw Error(Errc::InvalidArgument, "blur radius must be >= 1");
  const Eigen::Index h = image.height(), w = image.width();
  const std::int64_t denom = static_cast<std::int64_t>(2 * radius + 1) * (2 * radius + 1);
  Image8 out(h, w, image.num_channels());
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> rows(h, w);
  for (int c = 0; c < image.num_channels(); ++c) {
    const auto& src = image[c];
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x) {
        std::int64_t s = 0;
        for (int d = -radius; d <= radius; ++d)
          s += src(y, std::clamp<Eigen::Index>(x + d, 0, w - 1));
        rows(y, x) = s;
      }
    for (Eigen::Index x = 0; x < w; ++x)
      for (Eigen::Index y = 0; y < h; ++y) {
        std::int64_t s = 0;
        for (int d = -radius; d <= radius; ++d) s += rows(std::clamp<Eigen::Index>(y + d, 0, h - 1), x);
        out[c](y, x) = static_cast<std::uint8_t>((s + denom / 2) / denom);
      }
  }
  return out;
}

}  // namespace eac
