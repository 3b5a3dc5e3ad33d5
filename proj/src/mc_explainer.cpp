#include "borex/mc_explainer.hpp"

#include <bit>
#include <cmath>

namespace borex {
namespace {

struct WeightedMask {
  Mask mask;
  double weight;  // probability weight; 1/N for sampled masks
};

std::vector<WeightedMask> build_mask_set(const McConfig& cfg, VolumeShape shape) {
  std::vector<WeightedMask> out;
  if (cfg.exhaustive) {
    const std::size_t bits = cfg.dist.grid_h * cfg.dist.grid_w;
    if (bits > 20) {
      throw ClassifierError("exhaustive mask enumeration limited to 20 cells");
    }
    const double p = cfg.dist.keep_prob;
    for (std::uint64_t pattern = 0; pattern < (1ull << bits); ++pattern) {
      const int ones = std::popcount(pattern);
      const double weight = std::pow(p, ones) * std::pow(1.0 - p, static_cast<int>(bits) - ones);
      out.push_back({cell_pattern_mask(cfg.dist.grid_h, cfg.dist.grid_w, pattern, shape), weight});
    }
  } else {
    std::mt19937_64 rng(cfg.dist.seed);
    const double weight = 1.0 / static_cast<double>(cfg.n_masks);
    for (std::size_t n = 0; n < cfg.n_masks; ++n) {
      out.push_back({sample_rise_mask(cfg.dist, shape, rng), weight});
    }
  }
  return out;
}

template <typename WeightFn>
SaliencyVolume accumulate(ClassifierPort& model, const ImageVolume& image, const Label& label,
                          const McConfig& cfg, WeightFn cell_weight) {
  const VolumeShape shape = image.shape();
  const auto masks = build_mask_set(cfg, shape);

  SaliencyVolume result = SaliencyVolume::zeros(shape);
  std::vector<ImageVolume> batch;
  std::vector<std::size_t> batch_index;
  batch.reserve(cfg.batch);

  auto run_batch = [&]() {
    if (batch.empty()) return;
    std::vector<double> confidences;
    try {
      confidences = model.evaluate(batch, label);
    } catch (const std::exception& e) {
      throw ClassifierError("classifier failed at mask " + std::to_string(batch_index.front()) +
                            ": " + e.what());
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& wm = masks[batch_index[b]];
      const double scaled = confidences[b] * wm.weight;
      auto& values = result.values();
      const auto& grid = wm.mask.grid();
      for (std::size_t cell = 0; cell < values.size(); ++cell) {
        values[cell] += scaled * cell_weight(grid[cell]);
      }
    }
    batch.clear();
    batch_index.clear();
  };

  for (std::size_t n = 0; n < masks.size(); ++n) {
    batch.push_back(apply(image, masks[n].mask, cfg.fill));
    batch_index.push_back(n);
    if (batch.size() >= cfg.batch) run_batch();
  }
  run_batch();
  return result;
}

}  // namespace

SaliencyVolume estimate_rise(ClassifierPort& model, const ImageVolume& image, const Label& label,
                             const McConfig& cfg) {
  const double p = cfg.dist.keep_prob;
  return accumulate(model, image, label, cfg,
                    [p](std::uint8_t kept) { return kept ? 1.0 / p : 0.0; });
}

SaliencyVolume estimate_pn_rise(ClassifierPort& model, const ImageVolume& image,
                                const Label& label, const McConfig& cfg) {
  const double p = cfg.dist.keep_prob;
  const double denom = p * (1.0 - p);
  return accumulate(model, image, label, cfg, [p, denom](std::uint8_t kept) {
    return (static_cast<double>(kept) - p) / denom;
  });
}

}  // namespace borex
