#ifndef BOREX_MASK_HPP
#define BOREX_MASK_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "borex/types.hpp"

namespace borex {

/// Parametric occluder: a square of side `side` centered at (row, col),
/// spanning `span` frames starting at `frame`.
struct MaskSpec {
  std::size_t frame = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t side = 1;
  std::size_t span = 1;
};

/// Binary keep/occlude grid over (T,H,W). 1 = keep, 0 = occlude.
class Mask {
 public:
  Mask() = default;
  Mask(VolumeShape shape, std::vector<std::uint8_t> grid);

  static Mask ones(VolumeShape shape);

  const VolumeShape& shape() const { return shape_; }
  std::uint8_t at(std::size_t t, std::size_t y, std::size_t x) const {
    return grid_[(t * shape_.height + y) * shape_.width + x];
  }
  std::uint8_t& at(std::size_t t, std::size_t y, std::size_t x) {
    return grid_[(t * shape_.height + y) * shape_.width + x];
  }
  const std::vector<std::uint8_t>& grid() const { return grid_; }

  std::size_t zero_count() const;

 private:
  VolumeShape shape_{};
  std::vector<std::uint8_t> grid_;
};

/// RISE-style lumpy mask distribution: a gh x gw Bernoulli(keep_prob) cell
/// grid, bilinearly upsampled, randomly shifted, thresholded at 0.5.
struct MaskDistributionParams {
  std::size_t grid_h = 7;
  std::size_t grid_w = 7;
  double keep_prob = 0.5;
  std::uint64_t seed = 0;
};

/// Rasterizes the spec. Even sides extend ceil(r/2) up/left and floor(r/2)
/// down/right; the box clips at image borders.
Mask render(const MaskSpec& spec, VolumeShape shape);

/// Pixel-wise complement: result = 1 - m. Involution.
Mask flip(const Mask& m);

/// Keeps image values where m=1, writes `fill` into all channels where m=0.
ImageVolume apply(const ImageVolume& image, const Mask& m, float fill = 0.0f);

Mask sample_rise_mask(const MaskDistributionParams& params, VolumeShape shape,
                      std::mt19937_64& rng);

/// Deterministic block-upsampled mask for a fixed cell-grid bit pattern.
/// Cell (gy,gx) covers pixels [gy*ceil(H/gh), ...) x [gx*ceil(W/gw), ...).
/// Used by the exhaustive-enumeration test mode of the MC estimators.
Mask cell_pattern_mask(std::size_t grid_h, std::size_t grid_w, std::uint64_t pattern,
                       VolumeShape shape);

}  // namespace borex

#endif  // BOREX_MASK_HPP
