#pragma once

#include <string>

#include "eac/coalition.hpp"
#include "eac/concept_store.hpp"
#include "eac/image.hpp"
#include "eac/model_oracle.hpp"

namespace eac {

/// Value given to pixels that no visible concept covers.
struct BaselineFill {
  enum class Mode { zero, channel_mean, blur };
  Mode mode = Mode::channel_mean;
  int blur_radius = 0;  // blur mode only, >= 1

  static BaselineFill zero() { return {Mode::zero, 0}; }
  static BaselineFill channel_mean() { return {Mode::channel_mean, 0}; }
  static BaselineFill blur(int radius) { return {Mode::blur, radius}; }
};

std::string to_string(BaselineFill fill);
/// Parses "zero", "mean" / "channel_mean", or "blur" / "blur:<radius>".
BaselineFill parse_fill(const std::string& text);

/// The all-masked image: zeros, the per-channel mean of `image` (rounded to
/// nearest), or a box blur of `image`.
Image8 fill_image(const Image8& image, BaselineFill fill);

/// Renders coalitions of one image. Precomputes the fill so repeated renders
/// only pay for the mask union and the per-pixel select.
class CoalitionRenderer {
 public:
  CoalitionRenderer(const Image8& image, const ConceptSet& cs, BaselineFill fill);

  /// Pixel p keeps its value iff some concept in s covers it (OR over kept
  /// masks); all other pixels take the fill value.
  Image8 operator()(const Coalition& s) const;

  Mask visible(const Coalition& s) const;
  const Image8& image() const { return image_; }
  const ConceptSet& concepts() const { return cs_; }

 private:
  Image8 image_;
  ConceptSet cs_;
  Image8 fill_;
};

Image8 apply_coalition(const Image8& image, const ConceptSet& cs, const Coalition& s, BaselineFill fill);

/// Index of the largest probability, lowest index on ties.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& p);

/// u(S): probability of `target_class` on the coalition-masked image.
double utility_direct(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, const Coalition& s,
                      int target_class, BaselineFill fill);

/// utility_direct as a game, reusing one renderer across calls.
class DirectUtility final : public UtilityFn, public CoalitionModel {
 public:
  DirectUtility(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, int target_class,
                BaselineFill fill);

  int n() const override { return renderer_.concepts().n(); }
  double operator()(const Coalition& s) const override;
  /// Full distribution on the masked image.
  ProbVec distribution(const Coalition& s) const override;
  int target_class() const { return target_; }

 private:
  const ModelBundle& bundle_;
  CoalitionRenderer renderer_;
  int target_;
};

}  // namespace eac
