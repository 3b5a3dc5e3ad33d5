#ifndef BOREX_HEATMAP_HPP
#define BOREX_HEATMAP_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "borex/types.hpp"

namespace borex {

using Rgb = std::array<std::uint8_t, 3>;

/// Symmetric diverging colormap over [-1,1]: blue for negative, white at
/// zero, red for positive.
Rgb diverging_color(double v);

/// One frame of the overlay: grayscale base blended 50/50 with the
/// colormapped saliency (max-abs normalized over the whole volume).
std::vector<std::uint8_t> render_overlay(const SaliencyVolume& map, const ImageVolume& base,
                                         std::size_t frame);

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb);

/// Writes one PNG per frame as <prefix>_<frame>.png.
void emit_heatmap(const SaliencyVolume& map, const ImageVolume& base,
                  const std::filesystem::path& prefix);

}  // namespace borex

#endif  // BOREX_HEATMAP_HPP
