#ifndef BOREX_SYNTHETIC_HPP
#define BOREX_SYNTHETIC_HPP

#include <vector>

#include "borex/classifier.hpp"
#include "borex/types.hpp"

namespace borex {

/// Inclusive box bounds inside a volume.
struct RegionBox {
  std::size_t t0 = 0, t1 = 0;
  std::size_t y0 = 0, y1 = 0;
  std::size_t x0 = 0, x1 = 0;
};

SaliencyVolume region_indicator(const RegionBox& box, VolumeShape shape);

enum class SyntheticKind { kConstant, kRegionFraction, kMultiRegionMax };

/// Deterministic stand-in for a trained model with analytically known
/// saliency.
///
/// region_fraction: confidence = (visible / |region|)^gamma, where a region
/// cell counts as visible iff every channel still equals the reference
/// image (occlusion overwrites cells with the fill value, so any deviation
/// from the reference is treated as occluded).
/// multi_region_max: max of the per-region fractions, each raised to gamma.
/// constant: a fixed confidence c.
class SyntheticClassifier : public ClassifierPort {
 public:
  static SyntheticClassifier constant(double c, Label label);
  static SyntheticClassifier region_fraction(ImageVolume reference, SaliencyVolume region,
                                             double gamma, Label label);
  static SyntheticClassifier multi_region_max(ImageVolume reference,
                                              std::vector<SaliencyVolume> regions, double gamma,
                                              Label label);

  std::vector<double> evaluate(std::span<const ImageVolume> batch, const Label& label) override;
  std::vector<Label> label_set() const override { return {label_}; }

 private:
  SyntheticClassifier() = default;

  double evaluate_single(const ImageVolume& image) const;
  double region_fraction_visible(const ImageVolume& image, const SaliencyVolume& region) const;

  SyntheticKind kind_ = SyntheticKind::kConstant;
  double constant_ = 0.0;
  double gamma_ = 1.0;
  Label label_;
  ImageVolume reference_;
  std::vector<SaliencyVolume> regions_;
};

}  // namespace borex

#endif  // BOREX_SYNTHETIC_HPP
