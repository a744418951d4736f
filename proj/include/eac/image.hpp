#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace eac {

/// One image channel, rows = height, cols = width (column-major storage).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Pixel membership grid. Column-major, so data() walks pixels in the same
/// order as COCO run-length encoding.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct ImageT {
  std::vector<Plane<Scalar>> channels;

  ImageT() = default;
  ImageT(Eigen::Index height, Eigen::Index width, int num_channels = 3)
      : channels(num_channels, Plane<Scalar>::Zero(height, width)) {}

  Eigen::Index height() const { return channels.empty() ? 0 : channels.front().rows(); }
  Eigen::Index width() const { return channels.empty() ? 0 : channels.front().cols(); }
  int num_channels() const { return static_cast<int>(channels.size()); }

  Plane<Scalar>& operator[](int c) { return channels[c]; }
  const Plane<Scalar>& operator[](int c) const { return channels[c]; }

  template <typename Other>
  ImageT<Other> cast() const {
    ImageT<Other> out;
    out.channels.reserve(channels.size());
    for (const auto& ch : channels) out.channels.push_back(ch.template cast<Other>());
    return out;
  }

  friend bool operator==(const ImageT& a, const ImageT& b) {
    if (a.channels.size() != b.channels.size()) return false;
    for (std::size_t c = 0; c < a.channels.size(); ++c) {
      if (a.channels[c].rows() != b.channels[c].rows() ||
          a.channels[c].cols() != b.channels[c].cols() ||
          !(a.channels[c] == b.channels[c]).all())
        return false;
    }
    return true;
  }
};

using Image8 = ImageT<std::uint8_t>;
using ImageF = ImageT<float>;

/// Builds an image where every pixel has the given color.
template <typename Scalar>
ImageT<Scalar> constant_image(Eigen::Index height, Eigen::Index width,
                              const std::vector<Scalar>& color) {
  ImageT<Scalar> img;
  for (Scalar v : color) img.channels.push_back(Plane<Scalar>::Constant(height, width, v));
  return img;
}

/// 8-bit RGB PNG. Grayscale/alpha inputs are converted to RGB on read.
Image8 read_png(const std::filesystem::path& path);
void write_png(const Image8& image, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centers and edge clamping (the
/// align_corners=false convention, no antialiasing). Identity when the size
/// already matches.
ImageF resize_bilinear(const ImageF& image, Eigen::Index height, Eigen::Index width);

/// Separable box blur of the given radius with edge clamping, rounded back to
/// 8 bits.
Image8 box_blur(const Image8& image, int radius);

}  // namespace eac
