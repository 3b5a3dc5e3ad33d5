#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "borex/dataset.hpp"
#include "borex/types.hpp"

using namespace borex;

namespace {

SaliencyVolume random_map(VolumeShape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> values(shape.cells());
  for (double& v : values) {
    v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 4.0 - 2.0;
  }
  return SaliencyVolume(shape, std::move(values));
}

std::vector<std::size_t> rank_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

TEST_CASE("normalize_saliency scales by max absolute value") {
  SaliencyVolume map({1, 1, 3}, {2.0, -4.0, 0.0});
  const auto out = normalize_saliency(map);
  CHECK(out.values()[0] == doctest::Approx(0.5));
  CHECK(out.values()[1] == doctest::Approx(-1.0));
  CHECK(out.values()[2] == doctest::Approx(0.0));
}

TEST_CASE("normalize_saliency passes all-zero maps through") {
  const auto map = SaliencyVolume::zeros({1, 3, 3});
  const auto out = normalize_saliency(map);
  for (double v : out.values()) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("normalize_saliency preserves cell ranking") {
  const auto map = random_map({1, 8, 8}, 7);
  const auto out = normalize_saliency(map);
  CHECK(rank_order(map.values()) == rank_order(out.values()));
}

TEST_CASE("normalize_saliency is idempotent") {
  const auto map = random_map({1, 8, 8}, 11);
  const auto once = normalize_saliency(map);
  const auto twice = normalize_saliency(once);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice.values()[i] == doctest::Approx(once.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("normalize_saliency rejects non-finite values") {
  SaliencyVolume map({1, 1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(normalize_saliency(map), InvalidSaliency);
}

TEST_CASE("tensor files round-trip bit-exactly") {
  const auto dir = std::filesystem::temp_directory_path() / "borex_core_test";
  std::filesystem::create_directories(dir);

  std::mt19937_64 rng(3);
  VolumeShape shape{2, 5, 4};
  std::vector<float> data(shape.cells() * 3);
  for (float& v : data) {
    v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  const ImageVolume image(shape, 3, data);
  write_tensor(dir / "img.bxt", image);
  const auto back = read_image_tensor(dir / "img.bxt");
  CHECK(back == image);
}

TEST_CASE("dataset_load handles optional fields and shape mismatches") {
  const auto dir = std::filesystem::temp_directory_path() / "borex_manifest_test";
  std::filesystem::create_directories(dir);

  const ImageVolume image = ImageVolume::filled({1, 32, 32}, 1, 0.5f);
  write_tensor(dir / "a.bxt", image);
  write_tensor(dir / "b.bxt", image);

  SaliencyVolume region = SaliencyVolume::zeros({1, 32, 32});
  region.at(0, 3, 3) = 1.0;
  write_tensor(dir / "region.bxt", region);

  SUBCASE("missing region yields absent optional") {
    std::ofstream m(dir / "manifest.json");
    m << R"({"items":[
      {"image":"a.bxt","label":"cat","region":"region.bxt","prior":null},
      {"image":"b.bxt","label":"dog"}
    ]})";
    m.close();
    const auto items = dataset_load(dir / "manifest.json");
    REQUIRE(items.size() == 2);
    CHECK(items[0].region.has_value());
    CHECK(!items[0].prior.has_value());
    CHECK(!items[1].region.has_value());
    CHECK(items[1].target.id == "dog");
  }

  SUBCASE("prior shape mismatch raises ShapeError") {
    const auto small = SaliencyVolume::zeros({1, 16, 16});
    write_tensor(dir / "small.bxt", small);
    std::ofstream m(dir / "bad.json");
    m << R"({"items":[{"image":"a.bxt","label":"cat","prior":"small.bxt"}]})";
    m.close();
    CHECK_THROWS_AS(dataset_load(dir / "bad.json"), ShapeError);
  }

  SUBCASE("malformed manifest raises ManifestError with a line number") {
    std::ofstream m(dir / "broken.json");
    m << "{\"items\":[\n{\"image\": }\n]}";
    m.close();
    try {
      dataset_load(dir / "broken.json");
      FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }
}
