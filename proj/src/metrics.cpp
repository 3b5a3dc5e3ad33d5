#include "borex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace borex {
namespace {

std::vector<std::size_t> step_counts(std::size_t total, std::size_t steps) {
  std::vector<std::size_t> counts(steps);
  for (std::size_t j = 1; j <= steps; ++j) {
    counts[j - 1] = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(total) /
                     static_cast<double>(steps)));
  }
  counts[steps - 1] = total;
  return counts;
}

CurveResult confidence_curve(ClassifierPort& model, const ImageVolume& image, const Label& label,
                             const SaliencyVolume& map, std::size_t steps, float fill,
                             bool reveal) {
  if (map.shape() != image.shape()) {
    throw ShapeError("metric: map and image shapes differ");
  }
  const auto ranking = saliency_ranking(map);
  const std::size_t total = ranking.size();
  const auto counts = step_counts(total, steps);
  const std::size_t channels = image.channels();

  std::vector<ImageVolume> batch;
  batch.reserve(steps);
  // Revealed (or hidden) sets are nested, so build each step's image by
  // extending the previous one.
  ImageVolume canvas = reveal ? ImageVolume::filled(image.shape(), channels, fill) : image;
  std::size_t done = 0;
  for (std::size_t k : counts) {
    for (; done < k; ++done) {
      const std::size_t cell = ranking[done];
      for (std::size_t c = 0; c < channels; ++c) {
        canvas.data()[cell * channels + c] = reveal ? image.data()[cell * channels + c] : fill;
      }
    }
    batch.push_back(canvas);
  }

  CurveResult result;
  result.values = model.evaluate(batch, label);
  for (std::size_t j = 1; j <= steps; ++j) {
    result.fractions.push_back(static_cast<double>(j) / static_cast<double>(steps));
  }
  result.score = std::accumulate(result.values.begin(), result.values.end(), 0.0) /
                 static_cast<double>(steps);
  return result;
}

}  // namespace

std::vector<std::size_t> saliency_ranking(const SaliencyVolume& map) {
  std::vector<std::size_t> order(map.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.values()[a] > map.values()[b];
  });
  return order;
}

CurveResult insertion(ClassifierPort& model, const ImageVolume& image, const Label& label,
                      const SaliencyVolume& map, std::size_t steps, float fill) {
  return confidence_curve(model, image, label, map, steps, fill, /*reveal=*/true);
}

CurveResult deletion(ClassifierPort& model, const ImageVolume& image, const Label& label,
                     const SaliencyVolume& map, std::size_t steps, float fill) {
  return confidence_curve(model, image, label, map, steps, fill, /*reveal=*/false);
}

CurveResult f_measure(const SaliencyVolume& map, const SaliencyVolume& region,
                      std::size_t steps) {
  if (map.shape() != region.shape()) {
    throw ShapeError("f_measure: map and region shapes differ");
  }
  std::size_t region_size = 0;
  for (double v : region.values()) {
    if (v == 1.0) ++region_size;
  }
  if (region_size == 0) {
    throw EmptyRegion("f_measure: region has no true cell");
  }

  const auto ranking = saliency_ranking(map);
  const auto counts = step_counts(ranking.size(), steps);

  CurveResult result;
  std::size_t done = 0;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < steps; ++j) {
    const std::size_t k = counts[j];
    for (; done < k; ++done) {
      if (region.values()[ranking[done]] == 1.0) ++hits;
    }
    double f = 0.0;
    if (k > 0) {
      const double precision = static_cast<double>(hits) / static_cast<double>(k);
      const double recall = static_cast<double>(hits) / static_cast<double>(region_size);
      if (precision + recall > 0.0) {
        f = 2.0 * precision * recall / (precision + recall);
      }
    }
    result.fractions.push_back(static_cast<double>(j + 1) / static_cast<double>(steps));
    result.values.push_back(f);
  }
  result.score = std::accumulate(result.values.begin(), result.values.end(), 0.0) /
                 static_cast<double>(steps);
  return result;
}

WilcoxonResult wilcoxon_one_sided(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) {
    throw DegenerateSample("wilcoxon: no pairs");
  }
  std::vector<double> diffs;
  for (const auto& [a, b] : pairs) {
    const double d = a - b;
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) {
    throw DegenerateSample("wilcoxon: all differences are zero");
  }
  const std::size_t n = diffs.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });

  // Doubled ranks stay integral under tie averaging: a tie group spanning
  // ranks f..l gets average (f+l)/2, doubled f+l.
  std::vector<long long> doubled_rank(n);
  std::vector<std::size_t> tie_sizes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const long long doubled = static_cast<long long>(i + 1) + static_cast<long long>(j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      doubled_rank[order[k]] = doubled;
    }
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  long long w_doubled = 0;
  long long total_doubled = 0;
  for (std::size_t k = 0; k < n; ++k) {
    total_doubled += doubled_rank[k];
    if (diffs[k] > 0.0) w_doubled += doubled_rank[k];
  }

  WilcoxonResult result;
  result.n_effective = n;
  result.statistic = static_cast<double>(w_doubled) / 2.0;

  if (n <= 25) {
    // Exact tail by dynamic programming over the signed-rank distribution.
    std::vector<double> counts(static_cast<std::size_t>(total_doubled) + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t dr = static_cast<std::size_t>(doubled_rank[k]);
      for (std::size_t s = counts.size(); s-- > dr;) {
        counts[s] += counts[s - dr];
      }
    }
    double tail = 0.0;
    for (std::size_t s = static_cast<std::size_t>(w_doubled); s < counts.size(); ++s) {
      tail += counts[s];
    }
    result.p_value = tail / std::pow(2.0, static_cast<double>(n));
    result.method = "exact";
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
    for (std::size_t t : tie_sizes) {
      const double td = static_cast<double>(t);
      var -= (td * td * td - td) / 48.0;
    }
    const double z = (result.statistic - mean - 0.5) / std::sqrt(var);
    result.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
    result.method = "normal_approx";
  }
  return result;
}

}  // namespace borex
