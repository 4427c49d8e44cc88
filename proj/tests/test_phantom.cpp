#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perivox/features_level.hpp"
#include "perivox/phantom.hpp"

using namespace perivox;

TEST_CASE("voxelized tube volume tracks the analytic cylinder") {
  PhantomSpec spec;
  spec.dims = {40, 40, 50};
  spec.spacing = {1, 1, 1};
  Tube tube;
  tube.points_um = {{20, 20, 0}, {20, 20, 49}};
  tube.radius_um = 8;
  spec.tubes.push_back(tube);
  const PhantomVolumes pv = generate(spec);
  const double analytic = 3.14159265358979 * 64.0 * 50.0;
  const double voxels = static_cast<double>(count_true(pv.structures));
  CHECK(voxels == Catch::Approx(analytic).epsilon(0.10));
  CHECK(pv.truth.tube_diameters_um[0] == 16.0);
}

TEST_CASE("generation is a pure function of spec and seed") {
  PhantomSpec spec;
  spec.dims = {32, 32, 16};
  spec.spacing = {2.1, 2.1, 2.1};
  Tube tube;
  tube.points_um = {{33.6, 33.6, 0}, {33.6, 33.6, 15 * 2.1}};
  tube.radius_um = 10;
  spec.tubes.push_back(tube);
  spec.cancer_mode = CancerMode::uniform;
  spec.uniform_density = 0.05;
  spec.seed = 12345;
  const PhantomVolumes a = generate(spec);
  const PhantomVolumes b = generate(spec);
  CHECK(a.structures.data == b.structures.data);
  CHECK(a.cancer.data == b.cancer.data);
}

TEST_CASE("cancer mode none leaves an empty mask") {
  PhantomSpec spec;
  spec.dims = {16, 16, 8};
  spec.spacing = {1, 1, 1};
  const PhantomVolumes pv = generate(spec);
  CHECK(count_true(pv.cancer) == 0);
  CHECK(pv.truth.cancer_fraction == 0.0);
}

TEST_CASE("sleeve with 30 um thickness loads the adjacent zone only") {
  PhantomSpec spec;
  spec.dims = {128, 128, 6};
  spec.spacing = {2.1, 2.1, 2.1};
  Tube tube;
  const double c = 64 * 2.1;
  tube.points_um = {{c, c, 0}, {c, c, 5 * 2.1}};
  tube.radius_um = 21;
  spec.tubes.push_back(tube);
  spec.cancer_mode = CancerMode::sleeve;
  spec.sleeve_gap_um = 0;
  spec.sleeve_thickness_um = 30;
  const PhantomVolumes pv = generate(spec);

  const LevelResult res = analyze_levels(pv.structures, pv.cancer, LevelConfig{});
  REQUIRE_FALSE(res.insufficient);
  const double adj = res.features.values.at("nerve.level.burden_adjacent.mean");
  const double dist = res.features.values.at("nerve.level.burden_distant.mean");
  CHECK(adj > 0.8);
  CHECK(dist < 0.1);
  CHECK(adj > 8 * dist);
}

TEST_CASE("out-of-bounds geometry is rejected") {
  PhantomSpec spec;
  spec.dims = {16, 16, 8};
  spec.spacing = {1, 1, 1};
  Tube tube;
  tube.points_um = {{100, 8, 4}, {8, 8, 4}};
  tube.radius_um = 2;
  spec.tubes.push_back(tube);
  CHECK_THROWS_AS(generate(spec), DataError);
}

TEST_CASE("gland blobs voxelize as rotated ellipsoids") {
  PhantomSpec spec;
  spec.dims = {40, 40, 20};
  spec.spacing = {1, 1, 1};
  Blob blob;
  blob.center_um = {20, 20, 10};
  blob.radii_um = {10, 5, 4};
  blob.rotation_xy_deg = 45;
  spec.gland_blobs.push_back(blob);
  const PhantomVolumes pv = generate(spec);
  const double analytic = 4.0 / 3.0 * 3.14159265358979 * 10 * 5 * 4;
  CHECK(static_cast<double>(count_true(pv.glands)) == Catch::Approx(analytic).epsilon(0.15));
  CHECK(pv.glands(20, 20, 10) == 1);
}

TEST_CASE("cohort generation is deterministic with balanced labels") {
  CohortConfig cfg;
  cfg.n = 8;
  cfg.dims = {48, 48, 12};
  cfg.seed = 99;
  const auto a = generate_cohort(cfg);
  const auto b = generate_cohort(cfg);
  REQUIRE(a.size() == 8);
  int pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].volumes.structures.data == b[i].volumes.structures.data);
    CHECK(a[i].volumes.cancer.data == b[i].volumes.cancer.data);
    pos += a[i].label;
  }
  CHECK(pos == 4);
  CHECK_THROWS_AS(generate_cohort({.n = 2}), DataError);
}

TEST_CASE("cohort samples always produce defined level scores") {
  CohortConfig cfg;
  cfg.n = 6;
  cfg.dims = {96, 96, 16};
  cfg.seed = 31;
  const auto cohort = generate_cohort(cfg);
  for (const auto& s : cohort) {
    const LevelResult res = analyze_levels(s.volumes.structures, s.volumes.cancer, LevelConfig{});
    REQUIRE_FALSE(res.insufficient);
    CHECK(res.features.values.count("nerve.level.invasion.mean") == 1);
    CHECK(res.features.values.count("nerve.level.gradient.mean") == 1);
  }
}
