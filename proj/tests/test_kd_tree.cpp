#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace grasp;

TEST(NeighborIndex, SinglePointAnswersEverything) {
  OrientedCloud c;
  c.push_back(Vec3(0.1, 0.2, 0.3), Vec3(0, 0, 1));
  const auto idx = build_nn_index(c);
  for (const Vec3& q : {Vec3(0, 0, 0), Vec3(5, -5, 2), Vec3(0.1, 0.2, 0.3)}) EXPECT_EQ(idx.nearest(q).index, 0u);
}

TEST(NeighborIndex, QueryAtStoredPointHasZeroDistance) {
  OrientedCloud c;
  for (int i = 0; i < 50; ++i) c.push_back(Vec3(i * 0.01, (i % 7) * 0.02, (i % 3) * 0.05), Vec3(0, 0, 1));
  const auto idx = build_nn_index(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto nb = idx.nearest(c.points[i]);
    EXPECT_EQ(nb.index, i);
    EXPECT_EQ(nb.squared_distance, 0.0);
  }
}

TEST(NeighborIndex, MatchesLinearScan) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  OrientedCloud c;
  for (int i = 0; i < 1000; ++i) c.push_back(Vec3(u(rng), u(rng), u(rng)), Vec3(0, 0, 1));
  const auto idx = build_nn_index(c);
  for (int q = 0; q < 100; ++q) {
    const Vec3 p(u(rng) * 1.5, u(rng) * 1.5, u(rng) * 1.5);
    EXPECT_EQ(idx.nearest(p).index, oracle::nearest_linear(c.points, p));
  }
}

TEST(NeighborIndex, KnnMatchesSortedScan) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const KdTree tree(pts);
  for (int q = 0; q < 20; ++q) {
    const Vec3 p(u(rng), u(rng), u(rng));
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - p).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    const auto got = tree.knn(p, 12);
    ASSERT_EQ(got.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(got[i].index, all[i].second);
  }
}

TEST(NeighborIndex, EmptyCloudIsAnError) {
  try {
    build_nn_index(OrientedCloud{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCloud);
  }
}
