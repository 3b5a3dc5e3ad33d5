#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "borex/gpr.hpp"
#include "borex/synthetic.hpp"

using namespace borex;

namespace {

IndexPoint random_point(std::mt19937_64& rng, VolumeShape shape,
                        const std::vector<std::size_t>& sizes,
                        const std::vector<std::size_t>& spans) {
  return IndexPoint{rng() % shape.frames, rng() % shape.height, rng() % shape.width,
                    sizes[rng() % sizes.size()], spans[rng() % spans.size()]};
}

// From-scratch dense posterior using an explicit matrix inverse; shares no
// code with GpState's incremental factorization.
std::pair<double, double> dense_posterior(const std::vector<IndexPoint>& points,
                                          const std::vector<double>& observations,
                                          const KernelParams& params, const IndexPoint& q,
                                          const GpState::PriorMean& prior) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = matern_kernel(points[static_cast<std::size_t>(i)],
                                 points[static_cast<std::size_t>(j)], params);
    }
    gram(i, i) += params.noise_var;
  }
  const Eigen::MatrixXd inv = gram.inverse();

  Eigen::VectorXd k_star(n), residual(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_star[i] = matern_kernel(points[static_cast<std::size_t>(i)], q, params);
    residual[i] = observations[static_cast<std::size_t>(i)] -
                  (prior ? prior(points[static_cast<std::size_t>(i)]) : 0.0);
  }
  const double prior_q = prior ? prior(q) : 0.0;
  const double mean = prior_q + k_star.dot(inv * residual);
  const double var = matern_kernel(q, q, params) - k_star.dot(inv * k_star);
  return {mean, var};
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

TEST_CASE("matern kernel closed-form values") {
  KernelParams params;  // nu=1.5, l=12, signal 1
  const IndexPoint a{0, 0, 0, 1, 1};

  SUBCASE("k(a,a) is exactly the signal variance") {
    CHECK(matern_kernel(a, a, params) == 1.0);
    params.signal_var = 2.5;
    CHECK(matern_kernel(a, a, params) == 2.5);
  }

  SUBCASE("value at d = length_scale matches the closed form") {
    const IndexPoint b{0, 12, 0, 1, 1};
    const double expected = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
    CHECK(matern_kernel(a, b, params) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.48336).epsilon(1e-4));
  }

  SUBCASE("symmetry on random points") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
      const IndexPoint p{0, rng() % 32, rng() % 32, 1 + rng() % 15, 1 + rng() % 3};
      const IndexPoint q{0, rng() % 32, rng() % 32, 1 + rng() % 15, 1 + rng() % 3};
      CHECK(matern_kernel(p, q, params) == matern_kernel(q, p, params));
    }
  }

  SUBCASE("nu 0.5 and 2.5 closed forms at distance l") {
    const IndexPoint b{0, 12, 0, 1, 1};
    params.nu = 0.5;
    CHECK(matern_kernel(a, b, params) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    params.nu = 2.5;
    const double z = std::sqrt(5.0);
    CHECK(matern_kernel(a, b, params) ==
          doctest::Approx((1.0 + z + z * z / 3.0) * std::exp(-z)).epsilon(1e-12));
  }
}

TEST_CASE("posterior: empty state returns the prior predictive") {
  KernelParams params;
  GpState state(params, [](const IndexPoint& q) { return 0.25 * static_cast<double>(q.row); });
  const auto [mean, var] = state.posterior(IndexPoint{0, 4, 7, 3, 1});
  CHECK(mean == 1.0);
  CHECK(var == params.signal_var);
}

TEST_CASE("posterior interpolates observations as noise vanishes") {
  KernelParams params;
  params.noise_var = 1e-12;
  GpState state(params);
  const IndexPoint x{0, 5, 5, 3, 1};
  state.observe(x, 0.8);
  state.observe(IndexPoint{0, 20, 20, 5, 1}, -0.3);
  const auto [mean, var] = state.posterior(x);
  CHECK(mean == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(var == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("incremental posterior matches a dense explicit-inverse solve") {
  const VolumeShape shape{2, 24, 24};
  const std::vector<std::size_t> sizes{3, 5, 9};
  const std::vector<std::size_t> spans{1, 2};
  std::mt19937_64 rng(2024);

  KernelParams params;
  GpState::PriorMean prior = [](const IndexPoint& q) {
    return 0.01 * static_cast<double>(q.row) - 0.02 * static_cast<double>(q.col);
  };

  GpState state(params, prior);
  std::vector<IndexPoint> points;
  std::vector<double> observations;
  for (int i = 0; i < 50; ++i) {
    const auto x = random_point(rng, shape, sizes, spans);
    const double s = unit(rng) * 2.0 - 1.0;
    state.observe(x, s);
    points.push_back(x);
    observations.push_back(s);
  }

  for (int i = 0; i < 20; ++i) {
    const auto q = random_point(rng, shape, sizes, spans);
    const auto [mean, var] = state.posterior(q);
    const auto [dmean, dvar] = dense_posterior(points, observations, params, q, prior);
    CHECK(mean == doctest::Approx(dmean).epsilon(1e-8));
    CHECK(var == doctest::Approx(dvar).epsilon(1e-8));
  }
}

TEST_CASE("posterior variance never increases as observations accumulate") {
  const VolumeShape shape{1, 16, 16};
  std::mt19937_64 rng(7);
  KernelParams params;
  GpState state(params);
  const IndexPoint probe{0, 8, 8, 3, 1};
  double last_var = state.posterior(probe).second;
  for (int i = 0; i < 40; ++i) {
    state.observe(random_point(rng, shape, {3, 5}, {1}), unit(rng) - 0.5);
    const double var = state.posterior(probe).second;
    CHECK(var <= last_var + 1e-9);
    last_var = var;
  }
}

TEST_CASE("observing the prior mean leaves the posterior mean unchanged there") {
  KernelParams params;
  GpState::PriorMean prior = [](const IndexPoint&) { return 0.42; };
  GpState state(params, prior);
  const IndexPoint x{0, 3, 3, 3, 1};
  state.observe(x, 0.42);
  CHECK(state.posterior(x).first == doctest::Approx(0.42).epsilon(1e-9));
}

TEST_CASE("repeated observations at one point stay numerically sound") {
  KernelParams params;
  GpState state(params);
  const IndexPoint x{0, 2, 2, 3, 1};
  for (int i = 0; i < 10; ++i) {
    state.observe(x, 0.5);
  }
  const auto [mean, var] = state.posterior(x);
  CHECK(std::isfinite(mean));
  CHECK(var >= -1e-9);
}

TEST_CASE("acquisition") {
  KernelParams params;

  SUBCASE("kappa 0 equals |posterior mean|") {
    GpState state(params, [](const IndexPoint&) { return -0.6; });
    CHECK(state.acquisition(IndexPoint{0, 1, 1, 3, 1}, 0.0) == doctest::Approx(0.6));
  }

  SUBCASE("empty state with zero prior is kappa times sigma everywhere") {
    GpState state(params);
    const double kappa = 2.0;
    CHECK(state.acquisition(IndexPoint{0, 0, 0, 3, 1}, kappa) ==
          doctest::Approx(kappa * std::sqrt(params.signal_var)));
    CHECK(state.acquisition(IndexPoint{0, 9, 4, 5, 1}, kappa) ==
          doctest::Approx(kappa * std::sqrt(params.signal_var)));
  }

  SUBCASE("strictly increasing in variance at fixed mean") {
    // Far-away observations shrink variance without moving the zero mean.
    GpState near(params);
    GpState far(params);
    const IndexPoint probe{0, 0, 0, 1, 1};
    near.observe(IndexPoint{0, 6, 0, 1, 1}, 0.0);
    far.observe(IndexPoint{0, 60, 0, 1, 1}, 0.0);
    const double u_near = near.acquisition(probe, 1.5);
    const double u_far = far.acquisition(probe, 1.5);
    CHECK(near.posterior(probe).second < far.posterior(probe).second);
    CHECK(u_near < u_far);
  }
}

TEST_CASE("select_next") {
  KernelParams params;
  RefineConfig cfg;
  cfg.sizes = {3, 5};
  cfg.spans = {1};
  cfg.candidate_stride = 1;
  const VolumeShape shape{1, 8, 8};

  SUBCASE("tie-break picks the lexicographically first candidate") {
    GpState state(params);
    const auto pick = select_next(state, cfg, shape);
    CHECK(pick == IndexPoint{0, 0, 0, 3, 1});
  }

  SUBCASE("kappa 0 picks the largest |mean| cell") {
    cfg.kappa = 0.0;
    GpState state(params, [](const IndexPoint& q) {
      return (q.row == 5 && q.col == 6) ? -3.0 : 0.0;
    });
    const auto pick = select_next(state, cfg, shape);
    CHECK(pick.row == 5);
    CHECK(pick.col == 6);
  }

  SUBCASE("matches an exhaustive argmax over all candidates") {
    cfg.kappa = 1.7;
    std::mt19937_64 rng(5);
    GpState state(params);
    for (int i = 0; i < 12; ++i) {
      state.observe(random_point(rng, shape, cfg.sizes, cfg.spans), unit(rng) - 0.5);
    }
    const auto pick = select_next(state, cfg, shape);

    IndexPoint best{};
    double best_score = -1.0;
    for (std::size_t y = 0; y < 8; ++y) {
      for (std::size_t x = 0; x < 8; ++x) {
        for (std::size_t r : cfg.sizes) {
          const IndexPoint q{0, y, x, r, 1};
          const double score = state.acquisition(q, cfg.kappa);
          if (score > best_score) {
            best = q;
            best_score = score;
          }
        }
      }
    }
    CHECK(pick == best);
  }
}

TEST_CASE("observe_saliency variants on synthetic classifiers") {
  const VolumeShape shape{1, 8, 8};
  ImageVolume img = ImageVolume::filled(shape, 1, 0.0f);
  SaliencyVolume region = SaliencyVolume::zeros(shape);
  for (std::size_t y = 2; y <= 4; ++y) {
    for (std::size_t x = 2; x <= 4; ++x) {
      region.at(0, y, x) = 1.0;
      img.at(0, y, x, 0) = 1.0;
    }
  }
  auto model = SyntheticClassifier::region_fraction(img, region, 1.0, Label{"obj"});
  RefineConfig cfg;
  const IndexPoint covering{0, 3, 3, 3, 1};  // exactly covers the region

  SUBCASE("flip variant: covered region vs hidden region") {
    cfg.use_flip = true;
    CHECK(observe_saliency(model, img, Label{"obj"}, covering, cfg, 0.5f) ==
          doctest::Approx(1.0));
  }
  SUBCASE("baseline variant") {
    cfg.use_flip = false;
    CHECK(observe_saliency(model, img, Label{"obj"}, covering, cfg, 0.5f) ==
          doctest::Approx(1.0));
  }
  SUBCASE("constant classifier observes zero in both variants") {
    auto flat = SyntheticClassifier::constant(0.5, Label{"any"});
    cfg.use_flip = true;
    CHECK(observe_saliency(flat, img, Label{"any"}, covering, cfg, 0.5f) == doctest::Approx(0.0));
    cfg.use_flip = false;
    CHECK(observe_saliency(flat, img, Label{"any"}, covering, cfg, 0.5f) == doctest::Approx(0.0));
  }
}

TEST_CASE("extract_map weighted and simple averages") {
  KernelParams params;
  const VolumeShape shape{1, 6, 6};
  RefineConfig cfg;
  cfg.sizes = {2, 4};
  cfg.spans = {1};
  cfg.candidate_stride = 1;
  const double c = 0.8;
  GpState state(params, [c](const IndexPoint&) { return c; });

  SUBCASE("weighted: constant mean scales by the mean inverse area") {
    cfg.weighted_avg = true;
    const auto map = extract_map(state, cfg, shape);
    const double expected = c * 0.5 * (1.0 / 4.0 + 1.0 / 16.0);
    CHECK(expected == doctest::Approx(0.15625 * c).epsilon(1e-12));
    for (double v : map.values()) {
      CHECK(v == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("simple: constant mean passes through") {
    cfg.weighted_avg = false;
    const auto map = extract_map(state, cfg, shape);
    for (double v : map.values()) {
      CHECK(v == doctest::Approx(c).epsilon(1e-12));
    }
  }
  SUBCASE("single size: weighted equals simple scaled by 1/r^2") {
    cfg.sizes = {3};
    std::mt19937_64 rng(9);
    GpState observed(params);
    for (int i = 0; i < 8; ++i) {
      observed.observe(random_point(rng, shape, cfg.sizes, cfg.spans), unit(rng) - 0.5);
    }
    cfg.weighted_avg = true;
    const auto weighted = extract_map(observed, cfg, shape);
    cfg.weighted_avg = false;
    const auto simple = extract_map(observed, cfg, shape);
    for (std::size_t cell = 0; cell < weighted.size(); ++cell) {
      CHECK(weighted.values()[cell] ==
            doctest::Approx(simple.values()[cell] / 9.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("extract_map at stride 1 matches a direct summation oracle") {
  KernelParams params;
  const VolumeShape shape{1, 7, 7};
  RefineConfig cfg;
  cfg.sizes = {2, 5};
  cfg.spans = {1};
  cfg.candidate_stride = 1;
  cfg.weighted_avg = true;

  std::mt19937_64 rng(13);
  GpState state(params);
  for (int i = 0; i < 10; ++i) {
    state.observe(random_point(rng, shape, cfg.sizes, cfg.spans), unit(rng) - 0.5);
  }

  const auto map = extract_map(state, cfg, shape);
  for (std::size_t y = 0; y < shape.height; ++y) {
    for (std::size_t x = 0; x < shape.width; ++x) {
      double acc = 0.0;
      for (std::size_t r : cfg.sizes) {
        acc += state.posterior(IndexPoint{0, y, x, r, 1}).first /
               (static_cast<double>(r) * static_cast<double>(r));
      }
      acc /= static_cast<double>(cfg.sizes.size());
      REQUIRE(map.at(0, y, x) == doctest::Approx(acc).epsilon(1e-9));
    }
  }
}

TEST_CASE("refine") {
  const VolumeShape shape{1, 32, 32};
  ImageVolume img = ImageVolume::filled(shape, 1, 0.1f);
  SaliencyVolume region = SaliencyVolume::zeros(shape);
  for (std::size_t y = 12; y < 20; ++y) {
    for (std::size_t x = 12; x < 20; ++x) {
      region.at(0, y, x) = 1.0;
      img.at(0, y, x, 0) = 0.9f;
    }
  }
  auto model = SyntheticClassifier::region_fraction(img, region, 1.0, Label{"obj"});
  KernelParams params;
  RefineConfig cfg;
  cfg.sizes = {5, 9, 13};
  cfg.kappa = 2.0;

  SUBCASE("N=0 with a prior returns the prior-derived map") {
    cfg.n_iters = 0;
    cfg.candidate_stride = 1;  // no grid interpolation in the oracle below
    std::mt19937_64 rng(3);
    SaliencyVolume prior = SaliencyVolume::zeros(shape);
    for (double& v : prior.values()) {
      v = unit(rng) * 2.0 - 1.0;
    }
    CountingClassifier counted(model);
    const auto map = refine(counted, img, prior, Label{"obj"}, cfg, params, 0.0f);
    CHECK(counted.count() == 0);
    const auto normalized = normalize_saliency(prior);
    const double weight_mean =
        (1.0 / 25.0 + 1.0 / 81.0 + 1.0 / 169.0) / 3.0;
    for (std::size_t cell = 0; cell < map.size(); ++cell) {
      REQUIRE(map.values()[cell] ==
              doctest::Approx(normalized.values()[cell] * weight_mean).epsilon(1e-9));
    }
  }

  SUBCASE("zero prior run localizes the true region") {
    cfg.n_iters = 50;
    const auto map = refine(model, img, std::nullopt, Label{"obj"}, cfg, params, 0.0f);
    std::size_t best = 0;
    for (std::size_t cell = 1; cell < map.size(); ++cell) {
      if (map.values()[cell] > map.values()[best]) best = cell;
    }
    CHECK(region.values()[best] == 1.0);
  }

  SUBCASE("classifier call counts match the contract") {
    CountingClassifier counted(model);
    cfg.n_iters = 50;
    cfg.use_flip = true;
    refine(counted, img, std::nullopt, Label{"obj"}, cfg, params, 0.0f);
    CHECK(counted.count() == 100);

    counted.reset();
    cfg.use_flip = false;
    refine(counted, img, std::nullopt, Label{"obj"}, cfg, params, 0.0f);
    CHECK(counted.count() == 51);
  }

  SUBCASE("deterministic: two serial runs agree bit-for-bit") {
    cfg.n_iters = 20;
    const auto a = refine(model, img, std::nullopt, Label{"obj"}, cfg, params, 0.0f);
    const auto b = refine(model, img, std::nullopt, Label{"obj"}, cfg, params, 0.0f);
    CHECK(a.values() == b.values());
  }

  SUBCASE("a perfect prior keeps the argmax inside the region") {
    cfg.n_iters = 50;
    SaliencyVolume prior = region;  // the analytic saliency of this classifier
    const auto map = refine(model, img, prior, Label{"obj"}, cfg, params, 0.0f);
    std::size_t best = 0;
    for (std::size_t cell = 1; cell < map.size(); ++cell) {
      if (map.values()[cell] > map.values()[best]) best = cell;
    }
    CHECK(region.values()[best] == 1.0);
  }
}
