#include "borex/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace borex {

SaliencyVolume region_indicator(const RegionBox& box, VolumeShape shape) {
  if (box.t1 >= shape.frames || box.y1 >= shape.height || box.x1 >= shape.width ||
      box.t0 > box.t1 || box.y0 > box.y1 || box.x0 > box.x1) {
    throw ShapeError("region_indicator: box outside volume bounds");
  }
  SaliencyVolume region = SaliencyVolume::zeros(shape);
  for (std::size_t t = box.t0; t <= box.t1; ++t) {
    for (std::size_t y = box.y0; y <= box.y1; ++y) {
      for (std::size_t x = box.x0; x <= box.x1; ++x) {
        region.at(t, y, x) = 1.0;
      }
    }
  }
  return region;
}

SyntheticClassifier SyntheticClassifier::constant(double c, Label label) {
  SyntheticClassifier sc;
  sc.kind_ = SyntheticKind::kConstant;
  sc.constant_ = c;
  sc.label_ = std::move(label);
  return sc;
}

SyntheticClassifier SyntheticClassifier::region_fraction(ImageVolume reference,
                                                         SaliencyVolume region, double gamma,
                                                         Label label) {
  if (region.shape() != reference.shape()) {
    throw ShapeError("region_fraction: region shape mismatch");
  }
  SyntheticClassifier sc;
  sc.kind_ = SyntheticKind::kRegionFraction;
  sc.gamma_ = gamma;
  sc.label_ = std::move(label);
  sc.reference_ = std::move(reference);
  sc.regions_.push_back(std::move(region));
  return sc;
}

SyntheticClassifier SyntheticClassifier::multi_region_max(ImageVolume reference,
                                                          std::vector<SaliencyVolume> regions,
                                                          double gamma, Label label) {
  for (const auto& r : regions) {
    if (r.shape() != reference.shape()) {
      throw ShapeError("multi_region_max: region shape mismatch");
    }
  }
  SyntheticClassifier sc;
  sc.kind_ = SyntheticKind::kMultiRegionMax;
  sc.gamma_ = gamma;
  sc.label_ = std::move(label);
  sc.reference_ = std::move(reference);
  sc.regions_ = std::move(regions);
  return sc;
}

double SyntheticClassifier::region_fraction_visible(const ImageVolume& image,
                                                    const SaliencyVolume& region) const {
  const std::size_t channels = reference_.channels();
  std::size_t total = 0;
  std::size_t visible = 0;
  for (std::size_t cell = 0; cell < region.size(); ++cell) {
    if (region.values()[cell] != 1.0) continue;
    ++total;
    bool intact = true;
    for (std::size_t c = 0; c < channels; ++c) {
      if (image.data()[cell * channels + c] != reference_.data()[cell * channels + c]) {
        intact = false;
        break;
      }
    }
    if (intact) ++visible;
  }
  return total > 0 ? static_cast<double>(visible) / static_cast<double>(total) : 0.0;
}

double SyntheticClassifier::evaluate_single(const ImageVolume& image) const {
  switch (kind_) {
    case SyntheticKind::kConstant:
      return constant_;
    case SyntheticKind::kRegionFraction:
    case SyntheticKind::kMultiRegionMax: {
      if (image.shape() != reference_.shape() || image.channels() != reference_.channels()) {
        throw ShapeError("synthetic classifier: image shape mismatch");
      }
      double best = 0.0;
      for (const auto& region : regions_) {
        best = std::max(best, region_fraction_visible(image, region));
      }
      return std::clamp(std::pow(best, gamma_), 0.0, 1.0);
    }
  }
  return 0.0;
}

std::vector<double> SyntheticClassifier::evaluate(std::span<const ImageVolume> batch,
                                                  const Label& /*label*/) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& image : batch) {
    out.push_back(evaluate_single(image));
  }
  return out;
}

}  // namespace borex
