#ifndef BOREX_MC_EXPLAINER_HPP
#define BOREX_MC_EXPLAINER_HPP

#include "borex/classifier.hpp"
#include "borex/mask.hpp"
#include "borex/types.hpp"

namespace borex {

enum class McVariant { kRise, kPnRise };

struct McConfig {
  std::size_t n_masks = 1000;
  MaskDistributionParams dist;
  McVariant variant = McVariant::kRise;
  std::size_t batch = 16;
  // Enumerates every cell-grid bit pattern, weighted by its Bernoulli
  // probability, instead of sampling. Turns the estimator into an exactly
  // checkable quantity; testing only.
  bool exhaustive = false;
  float fill = 0.0f;
};

/// Monte-Carlo positive saliency: mean over masks of (m(l)/p) * M(i (.) m, l).
SaliencyVolume estimate_rise(ClassifierPort& model, const ImageVolume& image, const Label& label,
                             const McConfig& cfg);

/// Positive-minus-negative estimator with weights (m(l)-p)/(p(1-p)).
SaliencyVolume estimate_pn_rise(ClassifierPort& model, const ImageVolume& image,
                                const Label& label, const McConfig& cfg);

}  // namespace borex

#endif  // BOREX_MC_EXPLAINER_HPP
