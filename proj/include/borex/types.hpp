#ifndef BOREX_TYPES_HPP
#define BOREX_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace borex {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidSaliency : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfBounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ClassifierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyRegion : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSample : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TimeoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonZeroExit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RunFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spatial extent shared by image and saliency volumes. T=1 means a still image.
struct VolumeShape {
  std::size_t frames = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t cells() const { return frames * height * width; }
  bool operator==(const VolumeShape&) const = default;
};

/// Dense T x H x W x C tensor with values in [0,1], row-major.
class ImageVolume {
 public:
  ImageVolume() = default;
  ImageVolume(VolumeShape shape, std::size_t channels, std::vector<float> data);

  static ImageVolume filled(VolumeShape shape, std::size_t channels, float value);

  const VolumeShape& shape() const { return shape_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  float at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((t * shape_.height + y) * shape_.width + x) * channels_ + c];
  }
  float& at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) {
    return data_[((t * shape_.height + y) * shape_.width + x) * channels_ + c];
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const ImageVolume&) const = default;

 private:
  VolumeShape shape_{};
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

struct Label {
  std::string id;
  bool operator==(const Label&) const = default;
};

/// Signed per-cell saliency values aligned with an ImageVolume's (T,H,W).
class SaliencyVolume {
 public:
  SaliencyVolume() = default;
  SaliencyVolume(VolumeShape shape, std::vector<double> values);

  static SaliencyVolume zeros(VolumeShape shape);

  const VolumeShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  double at(std::size_t t, std::size_t y, std::size_t x) const {
    return values_[(t * shape_.height + y) * shape_.width + x];
  }
  double& at(std::size_t t, std::size_t y, std::size_t x) {
    return values_[(t * shape_.height + y) * shape_.width + x];
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  VolumeShape shape_{};
  std::vector<double> values_;
};

/// Scales a map by 1/max|v| so values lie in [-1,1]. All-zero maps pass through.
/// Cell ranking is preserved; the operation is idempotent up to that scale.
SaliencyVolume normalize_saliency(const SaliencyVolume& map);

}  // namespace borex

#endif  // BOREX_TYPES_HPP
