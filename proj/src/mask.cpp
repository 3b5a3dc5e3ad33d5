#include "borex/mask.hpp"

#include <algorithm>
#include <cmath>

namespace borex {
namespace {

double unit_double(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids distribution objects so streams are
  // reproducible independent of the standard library.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Mask::Mask(VolumeShape shape, std::vector<std::uint8_t> grid)
    : shape_(shape), grid_(std::move(grid)) {
  if (grid_.size() != shape_.cells()) {
    throw ShapeError("Mask: grid size does not match shape");
  }
  for (std::uint8_t v : grid_) {
    if (v > 1) {
      throw ShapeError("Mask: values must be 0 or 1");
    }
  }
}

Mask Mask::ones(VolumeShape shape) {
  return Mask(shape, std::vector<std::uint8_t>(shape.cells(), 1));
}

std::size_t Mask::zero_count() const {
  return static_cast<std::size_t>(std::count(grid_.begin(), grid_.end(), 0));
}

Mask render(const MaskSpec& spec, VolumeShape shape) {
  if (spec.frame >= shape.frames || spec.row >= shape.height || spec.col >= shape.width) {
    throw OutOfBounds("render: mask center outside volume");
  }
  const std::size_t r = spec.side;
  // Side r covers ceil((r-1)/2) cells above/left of the center and
  // floor((r-1)/2) below/right, so even sides lean up/left.
  const std::size_t up = r / 2;
  const std::size_t down = (r - 1) / 2;

  const std::size_t y0 = spec.row >= up ? spec.row - up : 0;
  const std::size_t y1 = std::min(spec.row + down, shape.height - 1);
  const std::size_t x0 = spec.col >= up ? spec.col - up : 0;
  const std::size_t x1 = std::min(spec.col + down, shape.width - 1);
  const std::size_t t0 = spec.frame;
  const std::size_t t1 = std::min(spec.frame + spec.span - 1, shape.frames - 1);

  Mask m = Mask::ones(shape);
  for (std::size_t t = t0; t <= t1; ++t) {
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        m.at(t, y, x) = 0;
      }
    }
  }
  return m;
}

Mask flip(const Mask& m) {
  std::vector<std::uint8_t> grid(m.grid());
  for (std::uint8_t& v : grid) {
    v = static_cast<std::uint8_t>(1 - v);
  }
  return Mask(m.shape(), std::move(grid));
}

ImageVolume apply(const ImageVolume& image, const Mask& m, float fill) {
  if (image.shape() != m.shape()) {
    throw ShapeError("apply: image and mask shapes differ");
  }
  ImageVolume out = image;
  const std::size_t channels = image.channels();
  for (std::size_t t = 0; t < m.shape().frames; ++t) {
    for (std::size_t y = 0; y < m.shape().height; ++y) {
      for (std::size_t x = 0; x < m.shape().width; ++x) {
        if (m.at(t, y, x) == 0) {
          for (std::size_t c = 0; c < channels; ++c) {
            out.at(t, y, x, c) = fill;
          }
        }
      }
    }
  }
  return out;
}

Mask sample_rise_mask(const MaskDistributionParams& params, VolumeShape shape,
                      std::mt19937_64& rng) {
  const std::size_t gh = params.grid_h;
  const std::size_t gw = params.grid_w;
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  const std::size_t cell_h = (h + gh - 1) / gh;
  const std::size_t cell_w = (w + gw - 1) / gw;

  std::vector<double> cells(gh * gw);
  for (double& c : cells) {
    c = unit_double(rng) < params.keep_prob ? 1.0 : 0.0;
  }
  const std::size_t off_y = static_cast<std::size_t>(unit_double(rng) * static_cast<double>(cell_h));
  const std::size_t off_x = static_cast<std::size_t>(unit_double(rng) * static_cast<double>(cell_w));

  const std::size_t up_h = h + cell_h;
  const std::size_t up_w = w + cell_w;

  auto sample = [&](std::size_t y, std::size_t x) {
    const double sy = (static_cast<double>(y) + 0.5) * static_cast<double>(gh) /
                          static_cast<double>(up_h) - 0.5;
    const double sx = (static_cast<double>(x) + 0.5) * static_cast<double>(gw) /
                          static_cast<double>(up_w) - 0.5;
    const double fy = std::clamp(sy, 0.0, static_cast<double>(gh - 1));
    const double fx = std::clamp(sx, 0.0, static_cast<double>(gw - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t x0 = static_cast<std::size_t>(fx);
    const std::size_t y1 = std::min(y0 + 1, gh - 1);
    const std::size_t x1 = std::min(x0 + 1, gw - 1);
    const double ty = fy - static_cast<double>(y0);
    const double tx = fx - static_cast<double>(x0);
    const double a = cells[y0 * gw + x0] * (1 - ty) * (1 - tx);
    const double b = cells[y0 * gw + x1] * (1 - ty) * tx;
    const double c = cells[y1 * gw + x0] * ty * (1 - tx);
    const double d = cells[y1 * gw + x1] * ty * tx;
    return a + b + c + d;
  };

  std::vector<std::uint8_t> frame(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      frame[y * w + x] = sample(y + off_y, x + off_x) >= 0.5 ? 1 : 0;
    }
  }

  std::vector<std::uint8_t> grid(shape.cells());
  for (std::size_t t = 0; t < shape.frames; ++t) {
    std::copy(frame.begin(), frame.end(), grid.begin() + static_cast<std::ptrdiff_t>(t * h * w));
  }
  return Mask(shape, std::move(grid));
}

Mask cell_pattern_mask(std::size_t grid_h, std::size_t grid_w, std::uint64_t pattern,
                       VolumeShape shape) {
  const std::size_t cell_h = (shape.height + grid_h - 1) / grid_h;
  const std::size_t cell_w = (shape.width + grid_w - 1) / grid_w;
  std::vector<std::uint8_t> grid(shape.cells());
  for (std::size_t t = 0; t < shape.frames; ++t) {
    for (std::size_t y = 0; y < shape.height; ++y) {
      for (std::size_t x = 0; x < shape.width; ++x) {
        const std::size_t gy = std::min(y / cell_h, grid_h - 1);
        const std::size_t gx = std::min(x / cell_w, grid_w - 1);
        const std::size_t bit = gy * grid_w + gx;
        grid[(t * shape.height + y) * shape.width + x] =
            static_cast<std::uint8_t>((pattern >> bit) & 1u);
      }
    }
  }
  return Mask(shape, std::move(grid));
}

}  // namespace borex
