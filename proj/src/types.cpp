#include "borex/types.hpp"

#include <algorithm>
#include <cmath>

namespace borex {

ImageVolume::ImageVolume(VolumeShape shape, std::size_t channels, std::vector<float> data)
    : shape_(shape), channels_(channels), data_(std::move(data)) {
  if (shape_.frames < 1 || shape_.height < 1 || shape_.width < 1) {
    throw ShapeError("ImageVolume: degenerate shape");
  }
  if (channels_ != 1 && channels_ != 3) {
    throw ShapeError("ImageVolume: channels must be 1 or 3");
  }
  if (data_.size() != shape_.cells() * channels_) {
    throw ShapeError("ImageVolume: data length does not match shape");
  }
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ShapeError("ImageVolume: values must be finite and in [0,1]");
    }
  }
}

ImageVolume ImageVolume::filled(VolumeShape shape, std::size_t channels, float value) {
  return ImageVolume(shape, channels, std::vector<float>(shape.cells() * channels, value));
}

SaliencyVolume::SaliencyVolume(VolumeShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.cells()) {
    throw ShapeError("SaliencyVolume: value count does not match shape");
  }
}

SaliencyVolume SaliencyVolume::zeros(VolumeShape shape) {
  return SaliencyVolume(shape, std::vector<double>(shape.cells(), 0.0));
}

SaliencyVolume normalize_saliency(const SaliencyVolume& map) {
  if (map.size() == 0) {
    throw InvalidSaliency("normalize_saliency: empty map");
  }
  double max_abs = 0.0;
  for (double v : map.values()) {
    if (!std::isfinite(v)) {
      throw InvalidSaliency("normalize_saliency: non-finite value");
    }
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (max_abs == 0.0) {
    return map;
  }
  std::vector<double> scaled(map.values());
  for (double& v : scaled) {
    v /= max_abs;
  }
  return SaliencyVolume(map.shape(), std::move(scaled));
}

}  // namespace borex
