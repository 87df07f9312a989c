#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace grasp;

TEST(EulerRotation, ComposesZYX) {
  const auto r = EulerRotation::from_angles(0.3, -0.7, 1.9);
  const Mat3 rx = Eigen::AngleAxisd(0.3, Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(-0.7, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(1.9, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_NEAR((r.matrix - rz * ry * rx).norm(), 0.0, 1e-12);
  EXPECT_NEAR((r.matrix.transpose() * r.matrix - Mat3::Identity()).norm(), 0.0, 1e-9);
  EXPECT_NEAR(r.matrix.determinant(), 1.0, 1e-12);
}

TEST(EnumerateOrientations, DefaultSweepCount) {
  EXPECT_EQ(enumerate_orientations(OrientationRanges{}, kPi / 6).size(), 720u);
  EXPECT_EQ(axis_samples(OrientationRanges{}.pitch, kPi / 6).size(), 5u);
}

TEST(EnumerateOrientations, FullTurnDropsDuplicateEndpoint) {
  OrientationRanges r{{0.0, kTwoPi}, {0.0, 0.0}, {0.0, 0.0}};
  EXPECT_EQ(enumerate_orientations(r, kPi / 2).size(), 4u);
}

TEST(EnumerateOrientations, StepLargerThanRange) {
  OrientationRanges r{{0.1, 0.2}, {-0.3, -0.3}, {0.0, 0.5}};
  const auto all = enumerate_orientations(r, 1.0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_DOUBLE_EQ(all[0].roll, 0.1);
  EXPECT_DOUBLE_EQ(all[0].pitch, -0.3);
}

TEST(RankOrientation, SingleContactScoresLogCount) {
  NormalHistogram h(kPi / 6);
  for (int i = 0; i < 10; ++i) h.insert(Vec3(1, 0, 0));
  const std::vector<Vec3> normals{Vec3(-1, 0, 0)};
  EXPECT_NEAR(rank_orientation(h, normals, EulerRotation::identity()), std::log(10.0), 1e-12);
}

TEST(RankOrientation, MissingObjectMassScoresZero) {
  NormalHistogram h(kPi / 6);
  h.insert(Vec3(1, 0, 0));
  // Two contacts into the same bin need mass 2.
  const std::vector<Vec3> normals{Vec3(-1, 0, 0), Vec3(-1, 0, 0)};
  EXPECT_FALSE(match_orientation(h, normals, EulerRotation::identity()).matched);
  EXPECT_EQ(rank_orientation(h, normals, EulerRotation::identity()), 0.0);
}

TEST(RankOrientation, CountOfOneStillMatches) {
  NormalHistogram h(kPi / 6);
  h.insert(Vec3(1, 0, 0));
  const std::vector<Vec3> normals{Vec3(-1, 0, 0)};
  const auto m = match_orientation(h, normals, EulerRotation::identity());
  EXPECT_TRUE(m.matched);
  EXPECT_EQ(m.rank, 0.0);
}

TEST(RankOrientation, BinSizeMismatch) {
  NormalHistogram h(kPi / 6);
  const std::vector<Vec3> normals{Vec3(1, 0, 0)};
  try {
    rank_orientation(h, normals, EulerRotation::identity(), kPi / 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BinSizeMismatch);
  }
}

TEST(RankOrientation, SquareMatchesParallelJawOnlyAtFaceAlignedYaws) {
  const double delta = kPi / 7;
  const auto h = build_object_histogram(fixtures::square_sides(), delta);
  OrientationRanges ranges{{0, 0}, {0, 0}, {0, kPi - delta / 2}};
  const auto hr = build_rank_histogram(h, fixtures::jaw_along_x(), ranges, delta);
  ASSERT_EQ(hr.size(), 7u);
  std::set<std::size_t> nonzero;
  for (std::size_t i = 0; i < hr.size(); ++i)
    if (hr.entry(i).matched && hr.entry(i).rank > 0) nonzero.insert(hr.unflat(i)[2]);
  // Yaw samples are k*pi/7; the bins holding 0 and pi/2 are k = 0 and k = 3.
  EXPECT_EQ(nonzero, (std::set<std::size_t>{0, 3}));
  const auto sel = select_orientations(hr);
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_NEAR(sel[0].rotation.yaw, 0.0, 1e-12);
  EXPECT_NEAR(sel[1].rotation.yaw, 3 * delta, 1e-12);
}

TEST(RankHistogram, MatchesDefinitionOverFullSweep) {
  const std::vector<OrientedCloud> clouds{gen_scene(fixtures::box_spec()), gen_scene(fixtures::cylinder_spec())};
  for (const auto& cloud : clouds) {
    const auto h = build_object_histogram(cloud, kPi / 6);
    for (const auto& model : fixtures::builtin_models()) {
      const auto hr = build_rank_histogram(h, model, OrientationRanges{}, kPi / 6);
      const auto normals = contact_normals(model);
      for (std::size_t i = 0; i < hr.size(); ++i) {
        const double expect = oracle::rank(h, normals, hr.rotation(i).matrix);
        if (expect < 0) {
          EXPECT_FALSE(hr.entry(i).matched) << model.name << " " << i;
        } else {
          EXPECT_TRUE(hr.entry(i).matched) << model.name << " " << i;
          EXPECT_NEAR(hr.entry(i).rank, expect, 1e-9);
        }
      }
    }
  }
}

TEST(RankHistogram, EmptyObjectMatchesNothing) {
  const NormalHistogram h(kPi / 6);
  const auto hr = build_rank_histogram(h, tripodal_model(), OrientationRanges{}, kPi / 6);
  EXPECT_EQ(hr.matched_count(), 0u);
  EXPECT_TRUE(select_orientations(hr).empty());
}

TEST(RankHistogram, UniformObjectMatchesEverySingleContactOrientation) {
  NormalHistogram h(kPi / 6);
  for (int e = 0; e < 6; ++e)
    for (int a = 0; a < 12; ++a) h.add({e, a}, 3.0);
  GraspTypeModel single;
  single.name = "single";
  single.finger_contacts = {lateral_model().finger_contacts[0]};
  const auto hr = build_rank_histogram(h, single, OrientationRanges{}, kPi / 6);
  for (std::size_t i = 0; i < hr.size(); ++i) EXPECT_GT(hr.entry(i).rank, 0.0);
}

TEST(SelectOrientations, OrderingAndTies) {
  NormalHistogram h(kPi / 6);
  for (int i = 0; i < 5; ++i) h.insert(Vec3(1, 0, 0));
  for (int i = 0; i < 9; ++i) h.insert(Vec3(0, 1, 0));
  GraspTypeModel single;
  single.name = "single";
  single.finger_contacts = {{Vec3::Zero(), Vec3(1, 0, 0), 0.045, 0.015, Vec3(1, 0, 0)}};
  // Only yaw varies; -n = -x lands on +y at yaw -pi/2 (3pi/2) and on +x at yaw pi.
  OrientationRanges r{{0, 0}, {0, 0}, {0, kTwoPi}};
  const auto sel = select_orientations(build_rank_histogram(h, single, r, kPi / 2));
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_NEAR(sel[0].rank, std::log(9.0), 1e-12);
  EXPECT_EQ(sel[0].index[2], 3u);
  EXPECT_EQ(sel[1].index[2], 2u);
  EXPECT_TRUE(select_orientations(build_rank_histogram(NormalHistogram(kPi / 2), single, r, kPi / 2)).empty());
}

TEST(SelectOrientations, EqualRanksKeepIndexOrder) {
  const auto h = build_object_histogram(gen_scene(fixtures::cylinder_spec()), kPi / 6);
  const auto hr = build_rank_histogram(h, lateral_model(), OrientationRanges{}, kPi / 6);
  const auto sel = select_orientations(hr);
  for (std::size_t i = 1; i < sel.size(); ++i) {
    ASSERT_GE(sel[i - 1].rank, sel[i].rank);
    if (sel[i - 1].rank == sel[i].rank) EXPECT_LT(sel[i - 1].index, sel[i].index);
  }
}

TEST(RankHistogram, AddingNormalsNeverLowersRank) {
  auto cloud = gen_scene(fixtures::box_spec());
  const auto h1 = build_object_histogram(cloud, kPi / 6);
  cloud = concatenate(cloud, gen_scene(fixtures::cylinder_spec()));
  const auto h2 = build_object_histogram(cloud, kPi / 6);
  for (const auto& m : fixtures::builtin_models()) {
    const auto a = build_rank_histogram(h1, m, OrientationRanges{}, kPi / 6);
    const auto b = build_rank_histogram(h2, m, OrientationRanges{}, kPi / 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.entry(i).matched) {
        EXPECT_TRUE(b.entry(i).matched);
        EXPECT_GE(b.entry(i).rank, a.entry(i).rank - 1e-12);
      }
    }
  }
}

TEST(RankHistogram, DuplicatingTheCloudAddsLogTwoPerContact) {
  const auto cloud = gen_scene(fixtures::cylinder_spec());
  const auto h1 = build_object_histogram(cloud, kPi / 6);
  const auto h2 = build_object_histogram(concatenate(cloud, cloud), kPi / 6);
  for (const auto& m : fixtures::builtin_models()) {
    const auto a = build_rank_histogram(h1, m, OrientationRanges{}, kPi / 6);
    const auto b = build_rank_histogram(h2, m, OrientationRanges{}, kPi / 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(a.entry(i).matched, b.entry(i).matched);
      if (a.entry(i).matched) EXPECT_NEAR(b.entry(i).rank - a.entry(i).rank, m.contact_count() * std::log(2.0), 1e-9);
    }
  }
}

TEST(RankHistogram, DumpListsEveryOrientation) {
  const auto h = build_object_histogram(gen_scene(fixtures::box_spec()), kPi / 6);
  const auto hr = build_rank_histogram(h, lateral_model(), OrientationRanges{}, kPi / 6);
  std::ostringstream out;
  hr.dump(out);
  const std::string s = out.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + hr.size());
}
