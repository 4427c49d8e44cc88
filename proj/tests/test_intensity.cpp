#include <catch2/catch_amalgamated.hpp>

#include "perivox/intensity.hpp"
#include "perivox/rng.hpp"
#include "oracles.hpp"

using namespace perivox;

TEST_CASE("log_adjust: zero volume unchanged, extremes preserved") {
  IntensityVolume zeros({4, 4, 4}, {1, 1, 1}, 0.0f);
  CHECK(log_adjust(zeros).data == zeros.data);

  IntensityVolume v({4, 4, 1}, {1, 1, 1}, 0.0f);
  v(0, 0, 0) = 65535.0f;
  const IntensityVolume out = log_adjust(v);
  CHECK(out(0, 0, 0) == Catch::Approx(65535.0f));
  CHECK(out(1, 0, 0) == Catch::Approx(0.0f).margin(1e-3));
}

TEST_CASE("log_adjust preserves ordering") {
  IntensityVolume v({10, 10, 2}, {1, 1, 1}, 0.0f);
  Rng rng(12);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(0, 60000));
  const IntensityVolume out = log_adjust(v);
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v.data[i - 1] < v.data[i]) CHECK(out.data[i - 1] <= out.data[i]);
    if (v.data[i - 1] > v.data[i]) CHECK(out.data[i - 1] >= out.data[i]);
  }
}

TEST_CASE("gaussian: sigma 0 is identity and constants are preserved") {
  IntensityVolume v({6, 6, 6}, {1, 1, 1}, 123.5f);
  CHECK(gaussian_smooth(v, 0.0).data == v.data);
  const IntensityVolume s = gaussian_smooth(v, 2.0);
  for (float x : s.data) CHECK(x == Catch::Approx(123.5f).epsilon(1e-6));
}

TEST_CASE("gaussian impulse matches the dense convolution oracle") {
  IntensityVolume v({15, 15, 15}, {1, 1, 1}, 0.0f);
  v(7, 7, 7) = 10000.0f;
  const IntensityVolume fast = gaussian_smooth(v, 2.0);
  const IntensityVolume slow = oracle::gaussian_bruteforce(v, 2.0);
  CHECK(fast(7, 7, 7) == Catch::Approx(slow(7, 7, 7)).epsilon(1e-3));
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(fast.data[i] == Catch::Approx(slow.data[i]).margin(1e-2));
}

TEST_CASE("gaussian matches the oracle on a random volume") {
  IntensityVolume v({12, 11, 10}, {1, 1, 1}, 0.0f);
  Rng rng(77);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(0, 1000));
  const IntensityVolume fast = gaussian_smooth(v, 1.5, 3);
  const IntensityVolume slow = oracle::gaussian_bruteforce(v, 1.5);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(fast.data[i] == Catch::Approx(slow.data[i]).margin(2e-2));
}

TEST_CASE("otsu separates a two-value volume") {
  IntensityVolume v({10, 10, 2}, {1, 1, 1}, 0.0f);
  for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = i % 2 == 0 ? 10.0f : 200.0f;
  const double t = otsu_threshold(v);
  CHECK(t > 10.0);
  CHECK(t < 200.0);
  const BinaryVolume b = binarize(v, t);
  CHECK(count_true(b) == v.size() / 2);
}

TEST_CASE("otsu throws on a constant volume") {
  IntensityVolume v({4, 4, 4}, {1, 1, 1}, 42.0f);
  CHECK_THROWS_AS(otsu_threshold(v), DegenerateHistogram);
}

TEST_CASE("otsu equals the exhaustive scan oracle on random volumes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    IntensityVolume v({16, 16, 8}, {1, 1, 1}, 0.0f);
    Rng rng(seed * 13 + 1);
    // bimodal mixture quantized to integers
    const double mu0 = rng.uniform(50, 150), mu1 = rng.uniform(400, 900);
    for (auto& x : v.data) {
      const double mu = rng.bernoulli(0.4) ? mu1 : mu0;
      x = static_cast<float>(std::max(0.0, std::floor(mu + 30.0 * rng.normal())));
    }
    REQUIRE(otsu_threshold(v) == oracle::otsu_bruteforce(v));
  }
}
