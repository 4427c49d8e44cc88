#include <catch2/catch_amalgamated.hpp>

#include "perivox/morphology.hpp"
#include "perivox/phantom.hpp"
#include "oracles.hpp"

using namespace perivox;

TEST_CASE("dilate/erode trivial cases") {
  BinaryVolume empty({8, 8, 8}, {1, 1, 1}, 0);
  CHECK(count_true(dilate(empty, {3})) == 0);

  BinaryVolume full({8, 8, 8}, {1, 1, 1}, 1);
  CHECK(erode(full, {0}).data == full.data);
  CHECK(dilate(empty, {0}).data == empty.data);
}

TEST_CASE("a single voxel dilates to the digital ball") {
  BinaryVolume v({16, 16, 16}, {1, 1, 1}, 0);
  v(8, 8, 8) = 1;
  const BinaryVolume d = dilate(v, {3});
  CHECK(count_true(d) == 123);
  for (const auto& off : ball_offsets(3)) CHECK(d(8 + off[0], 8 + off[1], 8 + off[2]) == 1);
}

TEST_CASE("EDT-based morphology equals offset enumeration on random masks") {
  for (int radius : {1, 2, 3, 5}) {
    const BinaryVolume v = oracle::random_mask({18, 15, 12}, 0.12,
                                               static_cast<std::uint64_t>(radius) * 31);
    CHECK(dilate(v, {radius}).data == oracle::dilate_bruteforce(v, radius).data);
    CHECK(erode(v, {radius}).data == oracle::erode_bruteforce(v, radius).data);
  }
}

TEST_CASE("squared EDT is exact against the per-voxel scan") {
  const BinaryVolume seeds = oracle::random_mask({14, 13, 11}, 0.05, 8);
  if (count_true(seeds) > 0) {
    const auto fast = squared_edt_3d(seeds.data.data(), seeds.dims);
    const auto slow = oracle::edt_bruteforce(seeds);
    REQUIRE(fast == slow);
  }
}

TEST_CASE("erosion is the dual of dilation under the background border") {
  const BinaryVolume v = oracle::random_mask({16, 16, 10}, 0.4, 21);
  BinaryVolume comp(v.dims, v.spacing, 0);
  for (std::size_t i = 0; i < v.size(); ++i) comp.data[i] = v.data[i] ? 0 : 1;
  const BinaryVolume lhs = erode(v, {2});
  const BinaryVolume dil = dilate(comp, {2});
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(lhs.data[i] == (dil.data[i] ? 0 : 1));
}

TEST_CASE("dilation is extensive, erosion anti-extensive, both monotone") {
  const BinaryVolume a = oracle::random_mask({14, 14, 14}, 0.2, 3);
  BinaryVolume b = a;
  Rng rng(4);
  for (int k = 0; k < 40; ++k) b.data[rng.uniform_index(b.size())] = 1;

  const BinaryVolume da = dilate(a, {2}), db = dilate(b, {2});
  const BinaryVolume ea = erode(a, {2}), eb = erode(b, {2});
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data[i]) CHECK(da.data[i]);     // extensive
    if (ea.data[i]) CHECK(a.data[i]);     // anti-extensive
    if (da.data[i]) CHECK(db.data[i]);    // monotone
    if (ea.data[i]) CHECK(eb.data[i]);
  }
}

TEST_CASE("closing is idempotent") {
  const BinaryVolume v = oracle::random_mask({32, 32, 32}, 0.08, 55);
  const BinaryVolume once = close(v, {7});
  const BinaryVolume twice = close(once, {7});
  CHECK(once.data == twice.data);
}

TEST_CASE("hole filling: 2D ring becomes a disk") {
  BinaryVolume v({21, 21, 1}, {1, 1, 1}, 0);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x) {
      const int r2 = (x - 10) * (x - 10) + (y - 10) * (y - 10);
      if (r2 <= 64 && r2 >= 36) v(x, y, 0) = 1; // annulus radius 6..8
    }
  const BinaryVolume filled = fill_holes_orthoplanes(v);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x) {
      const int r2 = (x - 10) * (x - 10) + (y - 10) * (y - 10);
      if (r2 <= 64) CHECK(filled(x, y, 0) == 1);
    }
}

TEST_CASE("hole filling: hollow sphere shell becomes a solid ball") {
  BinaryVolume v({25, 25, 25}, {1, 1, 1}, 0);
  for (int z = 0; z < 25; ++z)
    for (int y = 0; y < 25; ++y)
      for (int x = 0; x < 25; ++x) {
        const int r2 = (x - 12) * (x - 12) + (y - 12) * (y - 12) + (z - 12) * (z - 12);
        if (r2 <= 100 && r2 >= 64) v(x, y, z) = 1; // shell radius 8..10
      }
  const BinaryVolume filled = fill_holes_orthoplanes(v);
  for (int z = 0; z < 25; ++z)
    for (int y = 0; y < 25; ++y)
      for (int x = 0; x < 25; ++x) {
        const int r2 = (x - 12) * (x - 12) + (y - 12) * (y - 12) + (z - 12) * (z - 12);
        if (r2 <= 100) CHECK(filled(x, y, z) == 1);
      }
}

TEST_CASE("hole filling: open tube lumen is filled by the XY orientation") {
  BinaryVolume v({21, 21, 9}, {1, 1, 1}, 0);
  for (int z = 0; z < 9; ++z)
    for (int y = 0; y < 21; ++y)
      for (int x = 0; x < 21; ++x) {
        const int r2 = (x - 10) * (x - 10) + (y - 10) * (y - 10);
        if (r2 <= 49 && r2 >= 25) v(x, y, z) = 1; // tube wall, open at both z ends
      }
  const BinaryVolume filled = fill_holes_orthoplanes(v);
  for (int z = 0; z < 9; ++z) CHECK(filled(10, 10, z) == 1); // lumen
  CHECK(filled(0, 0, 4) == 0);
}

TEST_CASE("hole filling is extensive, and idempotent on closed structures") {
  // extensivity holds for any input
  const BinaryVolume noise = oracle::random_mask({18, 18, 8}, 0.3, 67);
  const BinaryVolume filled_noise = fill_holes_orthoplanes(noise);
  for (std::size_t i = 0; i < noise.size(); ++i)
    if (noise.data[i]) CHECK(filled_noise.data[i]);

  // idempotence on structure-like masks (shell + tube composite)
  BinaryVolume v({28, 28, 18}, {1, 1, 1}, 0);
  for (int z = 0; z < 18; ++z)
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 28; ++x) {
        const int s2 = (x - 9) * (x - 9) + (y - 9) * (y - 9) + (z - 9) * (z - 9);
        if (s2 <= 49 && s2 >= 25) v(x, y, z) = 1;
        const int t2 = (x - 20) * (x - 20) + (y - 20) * (y - 20);
        if (t2 <= 16 && t2 >= 4) v(x, y, z) = 1;
      }
  const BinaryVolume once = fill_holes_orthoplanes(v);
  CHECK(fill_holes_orthoplanes(once).data == once.data);
}

TEST_CASE("nerve ground truth recovers a bright tube phantom") {
  const Dims dims{128, 128, 16};
  const Spacing sp{1, 1, 1};
  Tube tube;
  tube.points_um = {{64, 64, 0}, {64, 64, 15}};
  tube.radius_um = 10;
  const IntensityVolume channel = generate_intensity_tube(dims, sp, tube, 10.0, 42);

  const BinaryVolume mask = nerve_ground_truth(channel, {2.0, 7, 3});

  BinaryVolume truth(dims, sp, 0);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x)
        if ((x - 64) * (x - 64) + (y - 64) * (y - 64) <= 100) truth(x, y, z) = 1;

  std::int64_t tube_hit = 0, tube_total = 0, leak = 0, bg_total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (truth.data[i]) {
      ++tube_total;
      tube_hit += mask.data[i] != 0;
    } else {
      ++bg_total;
      leak += mask.data[i] != 0;
    }
  }
  CHECK(static_cast<double>(tube_hit) / tube_total >= 0.95);
  CHECK(static_cast<double>(leak) / bg_total <= 0.05);
}

TEST_CASE("nerve ground truth propagates DegenerateHistogram") {
  IntensityVolume flat({16, 16, 8}, {1, 1, 1}, 5.0f);
  CHECK_THROWS_AS(nerve_ground_truth(flat), DegenerateHistogram);
}

TEST_CASE("ground-truth defaults are dilate 7, erode 3, close 3") {
  GroundTruthConfig cfg;
  CHECK(cfg.dilate_radius == 7);
  CHECK(cfg.erode_radius == 3);
  CHECK(cfg.sigma == 2.0);
}

TEST_CASE("vessel refinement closes a one-voxel break in a tube wall") {
  BinaryVolume v({21, 21, 9}, {1, 1, 1}, 0);
  for (int z = 0; z < 9; ++z) {
    if (z == 4) continue; // one-slice gap splitting the wall along the axis
    for (int y = 0; y < 21; ++y)
      for (int x = 0; x < 21; ++x) {
        const int r2 = (x - 10) * (x - 10) + (y - 10) * (y - 10);
        if (r2 <= 49 && r2 >= 25) v(x, y, z) = 1;
      }
  }
  REQUIRE(oracle::count_components_floodfill(v) == 2);
  const BinaryVolume refined = refine_vessel_annotation(v, 3);
  CHECK(oracle::count_components_floodfill(refined) == 1);
  CHECK(refined(10, 4, 4) == 1); // the gap slice regained its wall

  BinaryVolume empty({8, 8, 8}, {1, 1, 1}, 0);
  CHECK(count_true(refine_vessel_annotation(empty)) == 0);
}
