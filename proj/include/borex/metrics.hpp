#ifndef BOREX_METRICS_HPP
#define BOREX_METRICS_HPP

#include <string>
#include <utility>
#include <vector>

#include "borex/classifier.hpp"
#include "borex/types.hpp"

namespace borex {

struct CurveResult {
  std::vector<double> fractions;
  std::vector<double> values;
  double score = 0.0;  // arithmetic mean of values
};

struct WilcoxonResult {
  std::size_t n_effective = 0;
  double statistic = 0.0;  // W: sum of positive-difference ranks
  double p_value = 1.0;    // one-sided, alternative "a > b"
  std::string method;      // "exact" or "normal_approx"
};

/// Cell indices of `map` in descending saliency order; ties break row-major
/// (frame-major first for video). All three curve metrics share this ranking.
std::vector<std::size_t> saliency_ranking(const SaliencyVolume& map);

/// Confidence curve as the top-k cells are revealed onto a fill canvas,
/// k swept over `steps` equal pixel-count fractions. Higher is better.
CurveResult insertion(ClassifierPort& model, const ImageVolume& image, const Label& label,
                      const SaliencyVolume& map, std::size_t steps, float fill);

/// Mirror of insertion: the top-k cells are hidden. Lower is better.
CurveResult deletion(ClassifierPort& model, const ImageVolume& image, const Label& label,
                     const SaliencyVolume& map, std::size_t steps, float fill);

/// F-measure of the top-k cell set against a binary ground-truth region.
CurveResult f_measure(const SaliencyVolume& map, const SaliencyVolume& region,
                      std::size_t steps);

/// One-sided Wilcoxon signed-rank test of "a stochastically greater than b".
/// Exact tie-adjusted enumeration for n <= 25, else normal approximation
/// with tie-corrected variance and continuity correction.
WilcoxonResult wilcoxon_one_sided(const std::vector<std::pair<double, double>>& pairs);

}  // namespace borex

#endif  // BOREX_METRICS_HPP
