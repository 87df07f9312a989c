#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace grasp;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Vec3(g(rng), g(rng), g(rng)).normalized();
}

Vec3 from_angles(double elevation, double azimuth) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

}  // namespace

TEST(SphericalAngles, EquatorAndPoles) {
  auto a = std::get<SphericalAngles>(spherical_angles(Vec3(1, 0, 0)));
  EXPECT_NEAR(a.elevation, 0.0, 1e-15);
  EXPECT_NEAR(a.azimuth, 0.0, 1e-15);
  a = std::get<SphericalAngles>(spherical_angles(Vec3(0, 1, 0)));
  EXPECT_NEAR(a.elevation, 0.0, 1e-15);
  EXPECT_NEAR(a.azimuth, kPi / 2, 1e-15);
  a = std::get<SphericalAngles>(spherical_angles(Vec3(0, -1, 0)));
  EXPECT_NEAR(a.azimuth, 3 * kPi / 2, 1e-15);
  EXPECT_EQ(std::get<Pole>(spherical_angles(Vec3(0, 0, 1))), Pole::North);
  EXPECT_EQ(std::get<Pole>(spherical_angles(Vec3(0, 0, -1))), Pole::South);
}

TEST(SphericalAngles, RejectsNonUnit) {
  try {
    spherical_angles(Vec3(1, 1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotUnitVector);
  }
}

TEST(NormalHistogram, DimensionsFollowBinSize) {
  EXPECT_EQ(NormalHistogram(kPi / 6).azimuth_bins(), 12);
  EXPECT_EQ(NormalHistogram(kPi / 6).elevation_bins(), 6);
  EXPECT_EQ(NormalHistogram(kPi / 7).azimuth_bins(), 14);
  EXPECT_EQ(NormalHistogram(kPi / 7).elevation_bins(), 7);
}

TEST(NormalHistogram, PoleSpreadsOverTopRow) {
  NormalHistogram h(kPi / 4);
  h.insert(Vec3(0, 0, 1));
  ASSERT_EQ(h.azimuth_bins(), 8);
  for (int a = 0; a < 8; ++a) EXPECT_DOUBLE_EQ(h.at(h.elevation_bins() - 1, a), 1.0 / 8.0);
  EXPECT_NEAR(h.total_mass(), 1.0, 1e-12);
}

TEST(NormalHistogram, SingleAndRepeatedInsertion) {
  NormalHistogram h(kPi / 6);
  h.insert(Vec3(1, 0, 0));
  EXPECT_EQ(h.nonzero_bins(), 1u);
  EXPECT_DOUBLE_EQ(h.total_mass(), 1.0);
  h.insert(Vec3(1, 0, 0));
  const BinRef b = h.locate(Vec3(1, 0, 0));
  EXPECT_DOUBLE_EQ(h.at(b.elevation, b.azimuth), 2.0);
}

TEST(NormalHistogram, AgreesWithIndependentBinning) {
  std::mt19937_64 rng(21);
  for (double delta : {kPi / 6, kPi / 7, kPi / 4, kPi / 9}) {
    for (int i = 0; i < 2000; ++i) {
      const Vec3 n = random_unit(rng);
      const BinRef b = NormalHistogram(delta).locate(n);
      const auto o = oracle::bin_of(n, delta);
      EXPECT_EQ(b.elevation, o.first);
      EXPECT_EQ(b.whole_row() ? -1 : b.azimuth, o.second);
    }
  }
}

TEST(NormalHistogram, CubeOccupiesFourEquatorialCellsAndBothPoleRows) {
  SceneSpec s;
  s.objects.push_back({Primitive::Box, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {}});
  s.sample_spacing = 0.1;
  const auto cloud = gen_scene(s);
  const auto h = build_object_histogram(cloud, kPi / 6);
  std::set<std::pair<int, int>> expect;
  for (const Vec3& n : cloud.normals) {
    const auto b = oracle::bin_of(n, kPi / 6);
    if (b.second < 0) {
      for (int a = 0; a < 12; ++a) expect.insert({b.first, a});
    } else {
      expect.insert(b);
    }
  }
  std::set<std::pair<int, int>> got;
  for (int e = 0; e < h.elevation_bins(); ++e)
    for (int a = 0; a < h.azimuth_bins(); ++a)
      if (h.at(e, a) > 0) got.insert({e, a});
  EXPECT_EQ(got, expect);
  int equatorial = 0;
  for (const auto& [e, a] : got) equatorial += (e != 0 && e != 5);
  EXPECT_EQ(equatorial, 4);
  EXPECT_EQ(got.size(), 4u + 2u * 12u);
  EXPECT_NEAR(h.total_mass(), static_cast<double>(cloud.size()), 1e-9);
}

TEST(NormalHistogram, EmptyCloudAndMissingNormals) {
  EXPECT_EQ(build_object_histogram(OrientedCloud{}, kPi / 6).nonzero_bins(), 0u);
  OrientedCloud bare;
  bare.points = {Vec3::Zero()};
  try {
    build_object_histogram(bare, kPi / 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingNormals);
  }
}

TEST(NormalHistogram, PlaneFillsNorthRowEvenly) {
  const auto cloud = fixtures::plane(0.05, 0.01);
  const auto h = build_object_histogram(cloud, kPi / 6);
  const double expect = cloud.size() * (kPi / 6) / kTwoPi;
  for (int a = 0; a < 12; ++a) EXPECT_NEAR(h.at(5, a), expect, 1e-9);
  EXPECT_EQ(h.nonzero_bins(), 12u);
}

TEST(NormalHistogram, PoleConservationAtScale) {
  NormalHistogram h(kPi / 6);
  for (int i = 0; i < 10000; ++i) h.insert(Vec3(0, 0, 1));
  for (int a = 0; a < 12; ++a) EXPECT_NEAR(h.at(5, a) / (10000.0 / 12.0), 1.0, 1e-6);
  EXPECT_NEAR(h.total_mass() / 10000.0, 1.0, 1e-6);
}

TEST(GripperHistogram, ParallelJawInsertsInvertedNormals) {
  const auto h = build_gripper_histogram(fixtures::jaw_along_x(), kPi / 6);
  EXPECT_EQ(h.nonzero_bins(), 2u);
  const int eq = h.elevation_index(0.0);
  EXPECT_DOUBLE_EQ(h.at(eq, 0), 1.0);  // -(-1,0,0) = +x
  EXPECT_DOUBLE_EQ(h.at(eq, 6), 1.0);  // -(+1,0,0) = -x, azimuth pi
}

TEST(GripperHistogram, DownwardContactLandsOnNorthRow) {
  GraspTypeModel m;
  m.name = "single";
  m.finger_contacts = {{Vec3(-0.06, 0, 0.05), Vec3(0, 0, -1), 0.045, 0.015, Vec3(0, 0, -1)}};
  const auto h = build_gripper_histogram(m, kPi / 6);
  EXPECT_NEAR(h.row_mass(h.elevation_bins() - 1), 1.0, 1e-12);
  EXPECT_EQ(h.nonzero_bins(), 12u);
}

TEST(GripperHistogram, MassEqualsContactCount) {
  for (const auto& m : fixtures::builtin_models()) {
    EXPECT_NEAR(build_gripper_histogram(m, kPi / 6).total_mass(), m.contact_count(), 1e-12) << m.name;
  }
  EXPECT_NEAR(build_gripper_histogram(tripodal_model(), kPi / 6).total_mass(), 3.0, 1e-12);
}

TEST(NormalHistogram, TranslationInvariant) {
  auto cloud = gen_scene(fixtures::cylinder_spec());
  const auto before = build_object_histogram(cloud, kPi / 6);
  for (Vec3& p : cloud.points) p += Vec3(1.25, -3.5, 0.75);
  EXPECT_EQ(build_object_histogram(cloud, kPi / 6), before);
}

TEST(NormalHistogram, AzimuthRotationPermutesColumns) {
  const double delta = kPi / 6;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> el(1, 4), az(0, 11);
  OrientedCloud cloud;
  for (int i = 0; i < 300; ++i) {
    cloud.push_back(Vec3::Zero(), from_angles(-kPi / 2 + (el(rng) + 0.5) * delta, (az(rng) + 0.5) * delta));
  }
  const auto h = build_object_histogram(cloud, delta);
  for (int m = 1; m < 12; m += 4) {
    const Mat3 r = Eigen::AngleAxisd(m * delta, Vec3::UnitZ()).toRotationMatrix();
    OrientedCloud rotated = cloud;
    for (Vec3& n : rotated.normals) n = r * n;
    const auto hr = build_object_histogram(rotated, delta);
    for (int e = 0; e < 6; ++e)
      for (int a = 0; a < 12; ++a) EXPECT_DOUBLE_EQ(hr.at(e, (a + m) % 12), h.at(e, a));
  }
}

TEST(NormalHistogram, MassEqualsInsertions) {
  std::mt19937_64 rng(1);
  NormalHistogram h(kPi / 5);
  for (int i = 0; i < 5000; ++i) h.insert(i % 10 == 0 ? Vec3(0, 0, i % 20 == 0 ? 1 : -1) : random_unit(rng));
  EXPECT_NEAR(h.total_mass(), 5000.0, 1e-9);
  for (double c : h.counts()) EXPECT_GE(c, 0.0);
}

TEST(NormalHistogram, DumpIsAMatrix) {
  NormalHistogram h(kPi / 2);
  h.insert(Vec3(1, 0, 0));
  std::ostringstream out;
  h.dump(out);
  EXPECT_EQ(out.str(), "# normal_histogram bin_size 1.5707963267948966 elevation_bins 2 azimuth_bins 4\n0 0 0 0\n1 0 0 0\n");
}
