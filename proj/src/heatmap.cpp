#include "borex/heatmap.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace borex {
namespace {

void append_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
  append_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  append_u32_be(out, crc);
}

}  // namespace

Rgb diverging_color(double v) {
  const double c = std::clamp(v, -1.0, 1.0);
  if (c >= 0.0) {
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - c)));
    return {255, fade, fade};
  }
  const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 + c)));
  return {fade, fade, 255};
}

std::vector<std::uint8_t> render_overlay(const SaliencyVolume& map, const ImageVolume& base,
                                         std::size_t frame) {
  if (map.shape() != base.shape()) {
    throw ShapeError("render_overlay: map and base shapes differ");
  }
  double max_abs = 0.0;
  for (double v : map.values()) {
    max_abs = std::max(max_abs, std::abs(v));
  }

  const std::size_t h = base.shape().height;
  const std::size_t w = base.shape().width;
  const std::size_t channels = base.channels();
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double gray = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        gray += base.at(frame, y, x, c);
      }
      gray = gray / static_cast<double>(channels) * 255.0;
      const double v = max_abs > 0.0 ? map.at(frame, y, x) / max_abs : 0.0;
      const Rgb color = diverging_color(v);
      for (std::size_t c = 0; c < 3; ++c) {
        rgb[(y * w + x) * 3 + c] = static_cast<std::uint8_t>(
            std::lround(0.5 * gray + 0.5 * static_cast<double>(color[c])));
      }
    }
  }
  return rgb;
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != width * height * 3) {
    throw ShapeError("write_png: buffer size does not match dimensions");
  }
  // Raw image: per scanline one filter byte (0 = none) then RGB triples.
  std::vector<unsigned char> raw((width * 3 + 1) * height);
  for (std::size_t y = 0; y < height; ++y) {
    raw[y * (width * 3 + 1)] = 0;
    std::memcpy(raw.data() + y * (width * 3 + 1) + 1, rgb.data() + y * width * 3, width * 3);
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                9) != Z_OK) {
    throw std::runtime_error("write_png: deflate failed");
  }
  compressed.resize(compressed_size);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  append_u32_be(ihdr, static_cast<std::uint32_t>(width));
  append_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});

  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("write_png: cannot open " + path.string());
  }
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) {
    throw std::runtime_error("write_png: write failed for " + path.string());
  }
}

void emit_heatmap(const SaliencyVolume& map, const ImageVolume& base,
                  const std::filesystem::path& prefix) {
  for (std::size_t t = 0; t < base.shape().frames; ++t) {
    const auto rgb = render_overlay(map, base, t);
    auto path = prefix;
    path += "_" + std::to_string(t) + ".png";
    write_png(path, base.shape().width, base.shape().height, rgb);
  }
}

}  // namespace borex
