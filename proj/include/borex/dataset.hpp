#ifndef BOREX_DATASET_HPP
#define BOREX_DATASET_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include "borex/types.hpp"

namespace borex {

/// One evaluation unit: an image/clip, the label to explain, and optional
/// ground-truth region and prior saliency map.
struct DatasetItem {
  std::string name;
  ImageVolume image;
  Label target;
  std::optional<SaliencyVolume> region;
  std::optional<SaliencyVolume> prior;
};

// Raw tensor file: magic "BXT1", u32 T,H,W,C little-endian, then T*H*W*C
// float32 little-endian row-major values.
void write_tensor(const std::filesystem::path& path, const ImageVolume& volume);
void write_tensor(const std::filesystem::path& path, const SaliencyVolume& volume);
ImageVolume read_image_tensor(const std::filesystem::path& path);
SaliencyVolume read_saliency_tensor(const std::filesystem::path& path);

/// Loads the JSON manifest {"items":[{"image":..,"label":..,"region":..,"prior":..}]}.
/// Relative paths resolve against the manifest's directory.
std::vector<DatasetItem> dataset_load(const std::filesystem::path& manifest_path);

}  // namespace borex

#endif  // BOREX_DATASET_HPP
