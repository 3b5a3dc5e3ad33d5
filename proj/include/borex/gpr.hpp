#ifndef BOREX_GPR_HPP
#define BOREX_GPR_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "borex/classifier.hpp"
#include "borex/mask.hpp"
#include "borex/types.hpp"

namespace borex {

struct KernelParams {
  double nu = 1.5;           // smoothness; closed forms for 0.5, 1.5, 2.5
  double length_scale = 12.0;
  double signal_var = 1.0;
  double noise_var = 1e-4;
  double frame_scale = 1.0;  // converts frame distance to pixel-equivalent units
};

/// A point in the search space: mask center (frame,row,col), side length,
/// frame span. Stills fix frame=0, span=1.
struct IndexPoint {
  std::size_t frame = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t side = 1;
  std::size_t span = 1;

  auto operator<=>(const IndexPoint&) const = default;
};

double matern_kernel(const IndexPoint& a, const IndexPoint& b, const KernelParams& params);

struct RefineConfig {
  std::size_t n_iters = 50;
  std::vector<std::size_t> sizes = {5, 9, 13};
  std::vector<std::size_t> spans = {1};
  double kappa = 2.0;
  std::size_t candidate_stride = 0;  // 0 = auto: 2 for H,W <= 64, else 4
  bool use_flip = true;
  bool weighted_avg = true;
  bool use_prior = true;
};

/// GP posterior over (point, saliency) observations with an incrementally
/// extended Cholesky factor of K + noise*I.
class GpState {
 public:
  using PriorMean = std::function<double(const IndexPoint&)>;

  explicit GpState(KernelParams kernel, PriorMean prior_mean = nullptr);

  /// Appends (x, s) to D; rank-1 extension of the lower-triangular factor.
  void observe(const IndexPoint& x, double s);

  /// Posterior (mean, variance) at q. Empty D gives (prior_mean(q), k(q,q)).
  std::pair<double, double> posterior(const IndexPoint& q) const;

  /// UCB-style score: |posterior mean| + kappa * posterior stddev.
  double acquisition(const IndexPoint& q, double kappa) const;

  double prior_mean(const IndexPoint& q) const;
  std::size_t size() const { return points_.size(); }
  const std::vector<IndexPoint>& points() const { return points_; }
  const KernelParams& kernel() const { return kernel_; }

 private:
  KernelParams kernel_;
  PriorMean prior_;
  std::vector<IndexPoint> points_;
  std::vector<double> residuals_;  // s - prior_mean(x)
  Eigen::MatrixXd factor_;         // lower-triangular, grown by one row per observation
  Eigen::VectorXd alpha_;          // (K + noise*I)^{-1} residuals
};

/// Candidate coordinates along one axis: 0, stride, 2*stride, ... with the
/// last index appended so interpolation covers the full extent.
std::vector<std::size_t> candidate_coords(std::size_t extent, std::size_t stride);

std::size_t effective_stride(const RefineConfig& cfg, VolumeShape shape);

/// Argmax of the acquisition over the candidate grid x sizes x spans.
/// Ties break to the lexicographically smallest (frame,row,col,side,span).
IndexPoint select_next(const GpState& state, const RefineConfig& cfg, VolumeShape shape);

/// One saliency observation at x: M(i (.) flip(m)) - M(i (.) m) when
/// use_flip, else base - M(i (.) m) with base = M(i, l) (cached by callers).
double observe_saliency(ClassifierPort& model, const ImageVolume& image, const Label& label,
                        const IndexPoint& x, const RefineConfig& cfg, float fill,
                        std::optional<double> cached_base = std::nullopt);

/// Averages posterior means over sizes and spans per cell; weighted mode
/// scales each term by 1/(r^2 * t). Means are evaluated on the candidate
/// grid and bilinearly interpolated to off-grid cells.
SaliencyVolume extract_map(const GpState& state, const RefineConfig& cfg, VolumeShape shape);

/// The full refinement loop: prior injection, acquisition-driven
/// observations, inverse-area weighted map extraction.
SaliencyVolume refine(ClassifierPort& model, const ImageVolume& image,
                      const std::optional<SaliencyVolume>& prior, const Label& label,
                      const RefineConfig& cfg, const KernelParams& kernel, float fill = 0.0f);

}  // namespace borex

#endif  // BOREX_GPR_HPP
