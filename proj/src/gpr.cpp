#include "borex/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace borex {
namespace {

Eigen::VectorXd kernel_vector(const std::vector<IndexPoint>& points, const IndexPoint& q,
                              const KernelParams& params) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    k[static_cast<Eigen::Index>(i)] = matern_kernel(points[i], q, params);
  }
  return k;
}

}  // namespace

double matern_kernel(const IndexPoint& a, const IndexPoint& b, const KernelParams& params) {
  const double fs = params.frame_scale;
  const double dn = (static_cast<double>(a.frame) - static_cast<double>(b.frame)) * fs;
  const double dy = static_cast<double>(a.row) - static_cast<double>(b.row);
  const double dx = static_cast<double>(a.col) - static_cast<double>(b.col);
  const double dr = static_cast<double>(a.side) - static_cast<double>(b.side);
  const double dt = (static_cast<double>(a.span) - static_cast<double>(b.span)) * fs;
  const double d = std::sqrt(dn * dn + dy * dy + dx * dx + dr * dr + dt * dt);
  const double s = d / params.length_scale;

  if (params.nu == 0.5) {
    return params.signal_var * std::exp(-s);
  }
  if (params.nu == 1.5) {
    const double z = std::sqrt(3.0) * s;
    return params.signal_var * (1.0 + z) * std::exp(-z);
  }
  if (params.nu == 2.5) {
    const double z = std::sqrt(5.0) * s;
    return params.signal_var * (1.0 + z + z * z / 3.0) * std::exp(-z);
  }
  throw NumericalError("matern_kernel: nu must be 0.5, 1.5 or 2.5");
}

GpState::GpState(KernelParams kernel, PriorMean prior_mean)
    : kernel_(kernel), prior_(std::move(prior_mean)) {}

double GpState::prior_mean(const IndexPoint& q) const { return prior_ ? prior_(q) : 0.0; }

void GpState::observe(const IndexPoint& x, double s) {
  if (!std::isfinite(s)) {
    throw NumericalError("observe: non-finite saliency value");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(points_.size());

  Eigen::MatrixXd grown(n + 1, n + 1);
  grown.setZero();
  if (n > 0) {
    grown.topLeftCorner(n, n) = factor_;
  }

  const Eigen::VectorXd k_vec = kernel_vector(points_, x, kernel_);
  Eigen::VectorXd row(n);
  if (n > 0) {
    row = factor_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k_vec);
  }
  const double diag = matern_kernel(x, x, kernel_) + kernel_.noise_var;
  double pivot = diag - row.squaredNorm();

  // Near-duplicate rows can push the Schur pivot to zero; escalate jitter
  // before giving up.
  if (pivot <= 0.0) {
    double jitter = 1e-10 * kernel_.signal_var;
    const double cap = 1e-4 * kernel_.signal_var;
    while (pivot + jitter <= 0.0 && jitter <= cap) {
      jitter *= 10.0;
    }
    if (pivot + jitter <= 0.0 || jitter > cap) {
      throw NumericalError("observe: Gram matrix not positive definite");
    }
    pivot += jitter;
  }

  grown.block(n, 0, 1, n) = row.transpose();
  grown(n, n) = std::sqrt(pivot);
  factor_ = std::move(grown);
  points_.push_back(x);
  residuals_.push_back(s - prior_mean(x));

  const Eigen::Index m = n + 1;
  Eigen::VectorXd r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    r[i] = residuals_[static_cast<std::size_t>(i)];
  }
  alpha_ = factor_.triangularView<Eigen::Lower>().solve(r);
  factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

std::pair<double, double> GpState::posterior(const IndexPoint& q) const {
  const double prior = prior_mean(q);
  const double k_qq = matern_kernel(q, q, kernel_);
  if (points_.empty()) {
    return {prior, k_qq};
  }
  const Eigen::VectorXd k_star = kernel_vector(points_, q, kernel_);
  const double mean = prior + k_star.dot(alpha_);
  const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>().solve(k_star);
  const double var = k_qq - v.squaredNorm();
  return {mean, var};
}

double GpState::acquisition(const IndexPoint& q, double kappa) const {
  const auto [mean, var] = posterior(q);
  return std::abs(mean) + kappa * std::sqrt(std::max(var, 0.0));
}

std::vector<std::size_t> candidate_coords(std::size_t extent, std::size_t stride) {
  std::vector<std::size_t> coords;
  for (std::size_t c = 0; c < extent; c += stride) {
    coords.push_back(c);
  }
  if (coords.back() != extent - 1) {
    coords.push_back(extent - 1);
  }
  return coords;
}

std::size_t effective_stride(const RefineConfig& cfg, VolumeShape shape) {
  if (cfg.candidate_stride > 0) {
    return cfg.candidate_stride;
  }
  return (shape.height <= 64 && shape.width <= 64) ? 2 : 4;
}

IndexPoint select_next(const GpState& state, const RefineConfig& cfg, VolumeShape shape) {
  const std::size_t stride = effective_stride(cfg, shape);
  const auto rows = candidate_coords(shape.height, stride);
  const auto cols = candidate_coords(shape.width, stride);
  std::vector<std::size_t> sizes = cfg.sizes;
  std::vector<std::size_t> spans = cfg.spans;
  std::sort(sizes.begin(), sizes.end());
  std::sort(spans.begin(), spans.end());

  IndexPoint best{};
  double best_score = -1.0;
  bool first = true;
  for (std::size_t n = 0; n < shape.frames; ++n) {
    for (std::size_t y : rows) {
      for (std::size_t x : cols) {
        for (std::size_t r : sizes) {
          for (std::size_t t : spans) {
            const IndexPoint q{n, y, x, r, t};
            const double score = state.acquisition(q, cfg.kappa);
            if (first || score > best_score) {
              best = q;
              best_score = score;
              first = false;
            }
          }
        }
      }
    }
  }
  return best;
}

double observe_saliency(ClassifierPort& model, const ImageVolume& image, const Label& label,
                        const IndexPoint& x, const RefineConfig& cfg, float fill,
                        std::optional<double> cached_base) {
  const MaskSpec spec{x.frame, x.row, x.col, x.side, x.span};
  const Mask m = render(spec, image.shape());
  if (cfg.use_flip) {
    std::vector<ImageVolume> batch;
    batch.push_back(apply(image, flip(m), fill));
    batch.push_back(apply(image, m, fill));
    const auto conf = model.evaluate(batch, label);
    return conf[0] - conf[1];
  }
  const double base = cached_base ? *cached_base : model.evaluate_one(image, label);
  return base - model.evaluate_one(apply(image, m, fill), label);
}

SaliencyVolume extract_map(const GpState& state, const RefineConfig& cfg, VolumeShape shape) {
  const std::size_t stride = effective_stride(cfg, shape);
  const auto rows = candidate_coords(shape.height, stride);
  const auto cols = candidate_coords(shape.width, stride);
  const double norm = 1.0 / static_cast<double>(cfg.sizes.size() * cfg.spans.size());

  // Averaged posterior means on the candidate grid, one slice per frame.
  std::vector<std::vector<double>> grid(shape.frames,
                                        std::vector<double>(rows.size() * cols.size(), 0.0));
  for (std::size_t n = 0; n < shape.frames; ++n) {
    for (std::size_t yi = 0; yi < rows.size(); ++yi) {
      for (std::size_t xi = 0; xi < cols.size(); ++xi) {
        double acc = 0.0;
        for (std::size_t r : cfg.sizes) {
          for (std::size_t t : cfg.spans) {
            const auto [mean, var] = state.posterior(IndexPoint{n, rows[yi], cols[xi], r, t});
            const double weight =
                cfg.weighted_avg
                    ? 1.0 / (static_cast<double>(r) * static_cast<double>(r) *
                             static_cast<double>(t))
                    : 1.0;
            acc += weight * mean;
          }
        }
        grid[n][yi * cols.size() + xi] = acc * norm;
      }
    }
  }

  auto segment = [](const std::vector<std::size_t>& coords, std::size_t q) {
    std::size_t i = 0;
    while (i + 1 < coords.size() && coords[i + 1] <= q) ++i;
    if (i + 1 == coords.size()) --i;
    return i;
  };

  SaliencyVolume out = SaliencyVolume::zeros(shape);
  for (std::size_t n = 0; n < shape.frames; ++n) {
    for (std::size_t y = 0; y < shape.height; ++y) {
      const std::size_t yi = rows.size() > 1 ? segment(rows, y) : 0;
      const std::size_t y0 = rows[yi];
      const std::size_t y1 = rows.size() > 1 ? rows[yi + 1] : y0;
      const double ty = y1 > y0 ? (static_cast<double>(y) - static_cast<double>(y0)) /
                                      (static_cast<double>(y1) - static_cast<double>(y0))
                                : 0.0;
      for (std::size_t x = 0; x < shape.width; ++x) {
        const std::size_t xi = cols.size() > 1 ? segment(cols, x) : 0;
        const std::size_t x0 = cols[xi];
        const std::size_t x1 = cols.size() > 1 ? cols[xi + 1] : x0;
        const double tx = x1 > x0 ? (static_cast<double>(x) - static_cast<double>(x0)) /
                                        (static_cast<double>(x1) - static_cast<double>(x0))
                                  : 0.0;
        const std::size_t xi1 = cols.size() > 1 ? xi + 1 : xi;
        const std::size_t yi1 = rows.size() > 1 ? yi + 1 : yi;
        const double g00 = grid[n][yi * cols.size() + xi];
        const double g01 = grid[n][yi * cols.size() + xi1];
        const double g10 = grid[n][yi1 * cols.size() + xi];
        const double g11 = grid[n][yi1 * cols.size() + xi1];
        out.at(n, y, x) = g00 * (1 - ty) * (1 - tx) + g01 * (1 - ty) * tx + g10 * ty * (1 - tx) +
                          g11 * ty * tx;
      }
    }
  }
  return out;
}

SaliencyVolume refine(ClassifierPort& model, const ImageVolume& image,
                      const std::optional<SaliencyVolume>& prior, const Label& label,
                      const RefineConfig& cfg, const KernelParams& kernel, float fill) {
  GpState::PriorMean prior_fn;
  if (cfg.use_prior && prior) {
    if (prior->shape() != image.shape()) {
      throw ShapeError("refine: prior shape does not match image");
    }
    // The prior broadcasts across sizes and spans; observations then
    // differentiate them.
    auto normalized = std::make_shared<SaliencyVolume>(normalize_saliency(*prior));
    prior_fn = [normalized](const IndexPoint& q) {
      return normalized->at(q.frame, q.row, q.col);
    };
  }

  GpState state(kernel, prior_fn);
  std::optional<double> base;
  if (!cfg.use_flip && cfg.n_iters > 0) {
    base = model.evaluate_one(image, label);
  }
  for (std::size_t j = 0; j < cfg.n_iters; ++j) {
    const IndexPoint x = select_next(state, cfg, image.shape());
    const double s = observe_saliency(model, image, label, x, cfg, fill, base);
    state.observe(x, s);
  }
  return extract_map(state, cfg, image.shape());
}

}  // namespace borex
