#include "eac/masking.hpp"

#include <cmath>

#include "eac/error.hpp"

namespace eac {

std::string to_string(BaselineFill fill) {
  switch (fill.mode) {
    case BaselineFill::Mode::zero: return "zero";
    case BaselineFill::Mode::channel_mean: return "mean";
    case BaselineFill::Mode::blur: return "blur:" + std::to_string(fill.blur_radius);
  }
  return "mean";
}

BaselineFill parse_fill(const std::string& text) {
  if (text == "zero") return BaselineFill::zero();
  if (text == "mean" || text == "channel_mean") return BaselineFill::channel_mean();
  if (text == "blur") return BaselineFill::blur(8);
  if (text.rfind("blur:", 0) == 0) {
    int radius = 0;
    try {
      radius = std::stoi(text.substr(5));
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad blur radius in '" + text + "'");
    }
    if (radius < 1) throw Error(Errc::InvalidArgument, "blur radius must be >= 1");
    return BaselineFill::blur(radius);
  }
  throw Error(Errc::InvalidArgument, "unknown fill '" + text + "'");
}

Image8 fill_image(const Image8& image, BaselineFill fill) {
  switch (fill.mode) {
    case BaselineFill::Mode::zero:
      return Image8(image.height(), image.width(), image.num_channels());
    case BaselineFill::Mode::channel_mean: {
      Image8 out;
      for (const auto& ch : image.channels) {
        const double mean = ch.cast<double>().mean();
        out.channels.push_back(
            Plane<std::uint8_t>::Constant(ch.rows(), ch.cols(), static_cast<std::uint8_t>(std::lround(mean))));
      }
      return out;
    }
    case BaselineFill::Mode::blur:
      return box_blur(image, fill.blur_radius);
  }
  throw Error(Errc::InvalidArgument, "unknown fill mode");
}

CoalitionRenderer::CoalitionRenderer(const Image8& image, const ConceptSet& cs, BaselineFill fill)
    : image_(image), cs_(cs), fill_(fill_image(image, fill)) {
  if (image.height() != cs.image_height || image.width() != cs.image_width)
    throw Error(Errc::DimensionMismatch, "image is " + std::to_string(image.height()) + "x" +
                                             std::to_string(image.width()) + ", concepts are " +
                                             std::to_string(cs.image_height) + "x" + std::to_string(cs.image_width));
}

Mask CoalitionRenderer::visible(const Coalition& s) const {
  if (s.n() != cs_.n())
    throw Error(Errc::CoalitionSizeMismatch,
                "coalition over " + std::to_string(s.n()) + " concepts, set has " + std::to_string(cs_.n()));
  Mask vis = Mask::Zero(cs_.image_height, cs_.image_width);
  for (int i = 0; i < cs_.n(); ++i)
    if (s.test(i)) vis = vis || cs_.concepts[static_cast<std::size_t>(i)].bitmap;
  return vis;
}

Image8 CoalitionRenderer::operator()(const Coalition& s) const {
  const Mask vis = visible(s);
  Image8 out;
  out.channels.reserve(image_.channels.size());
  for (int c = 0; c < image_.num_channels(); ++c) out.channels.push_back(vis.select(image_[c], fill_[c]));
  return out;
}

Image8 apply_coalition(const Image8& image, const ConceptSet& cs, const Coalition& s, BaselineFill fill) {
  return CoalitionRenderer(image, cs, fill)(s);
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& p) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<int>(best);
}

double utility_direct(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, const Coalition& s,
                      int target_class, BaselineFill fill) {
  return DirectUtility(bundle, image, cs, target_class, fill)(s);
}

DirectUtility::DirectUtility(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, int target_class,
                             BaselineFill fill)
    : bundle_(bundle), renderer_(image, cs, fill), target_(target_class) {
  if (target_class < 0 || target_class >= bundle.num_classes())
    throw Error(Errc::InvalidArgument, "target class " + std::to_string(target_class) + " out of range");
}

ProbVec DirectUtility::distribution(const Coalition& s) const { return predict(bundle_, renderer_(s)); }

double DirectUtility::operator()(const Coalition& s) const { return distribution(s)[target_]; }

}  // namespace eac
