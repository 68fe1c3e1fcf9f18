#include <gtest/gtest.h>

#include <cmath>

#include "scenegnn/graph_builder.hpp"
#include "support.hpp"

using namespace scenegnn;

TEST(Diagonal, ThreeFourFive) {
  EXPECT_DOUBLE_EQ(diagonal({0, 0, 0, 3, 4}, 3, 4), 1.0);
}

TEST(Diagonal, FullFrameIsOne) {
  EXPECT_DOUBLE_EQ(diagonal({0, 0, 0, 640, 480}, 640, 480), 1.0);
}

TEST(Diagonal, UnitBoxInLargeFrame) {
  EXPECT_NEAR(diagonal({0, 0, 0, 1, 1}, 100, 100), 0.01, 1e-15);
}

TEST(PairwiseDistances, ThreeFourFive) {
  SceneSample s;
  s.image_w = 3;
  s.image_h = 4;
  s.detections = {{0, -1, -1, 2, 2}, {0, 2, 3, 2, 2}};  // centers (0,0) and (3,4)
  const auto d = pairwise_distances(s);
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d(1, 0), 1.0);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, SingleDetection) {
  SceneSample s;
  s.image_w = s.image_h = 10;
  s.detections = {{0, 1, 1, 2, 2}};
  const auto d = pairwise_distances(s);
  EXPECT_EQ(d.rows, 1u);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, CoLocatedBoxes) {
  SceneSample s;
  s.image_w = s.image_h = 10;
  s.detections = {{0, 1, 1, 2, 2}, {1, 1, 1, 2, 2}};
  EXPECT_EQ(pairwise_distances(s)(0, 1), 0.0);
}

TEST(PairwiseDistances, EmptyScene) {
  SceneSample s;
  s.image_w = s.image_h = 10;
  try {
    pairwise_distances(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyScene);
  }
}

TEST(MinDistance, Examples) {
  Matrix d(3, 3);
  d(0, 1) = 1;
  d(0, 2) = 3;
  EXPECT_EQ(min_distance(0, d), 1.0);
  d(0, 1) = 2;
  d(0, 2) = 2;
  EXPECT_EQ(min_distance(0, d), 2.0);
  try {
    min_distance(0, Matrix(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoNeighbor);
  }
}

TEST(BuildGraph, LineAtZeroOneThree) {
  const auto s = test::scene_with_centers({{10, 50}, {20, 50}, {40, 50}});
  const auto g = build_graph(s, 0.1, 4);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.adjacency(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(g.adjacency(1, 2), 20.0 / std::sqrt(20000.0));
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(BuildGraph, SingleNode) {
  const auto g = build_graph(test::scene_with_centers({{5, 5}}), 0.1, 4);
  EXPECT_EQ(g.n, 1u);
  EXPECT_EQ(g.edge_count(), 0u);
  EXPECT_EQ(g.features.cols, 5u);
}

TEST(BuildGraph, SixNodeStructure) {
  // Two clusters plus a pendant: node 5 hangs off node 4 only.
  const auto s = test::scene_with_centers({{10, 10}, {14, 10}, {10, 14}, {60, 60}, {70, 60}, {85, 60}});
  const auto g = build_graph(s, 0.1, 4);
  for (std::size_t i = 0; i < g.n; ++i) {
    EXPECT_EQ(g.adjacency(i, i), 0.0);
    for (std::size_t j = 0; j < g.n; ++j) EXPECT_EQ(g.adjacency(i, j), g.adjacency(j, i));
  }
  EXPECT_TRUE(g.has_edge(4, 5));
  for (std::size_t j = 0; j < 5; ++j)
    if (j != 4) EXPECT_FALSE(g.has_edge(5, j));
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) zeros += (i != j && g.adjacency(i, j) == 0.0);
  EXPECT_GT(zeros, 0u);
}

TEST(BuildGraph, CoLocatedNodesLinkOnlyToEachOther) {
  const auto s = test::scene_with_centers({{10, 10}, {10, 10}, {30, 10}});
  const auto g = build_graph(s, 0.5, 4);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_EQ(g.adjacency(0, 1), 0.0);
  // Node 2's nearest (both at 20) reaches both; the co-located pair only reach each other.
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_TRUE(g.has_edge(2, 1));
}

TEST(BuildGraph, BoundaryTiesAreIncluded) {
  // Node 0's neighbors both at distance 10: beta = 0 keeps both.
  const auto g = build_graph(test::scene_with_centers({{50, 50}, {60, 50}, {40, 50}}), 0.0, 4);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(0, 2));
}

TEST(BuildGraph, NegativeBetaRejected) {
  try {
    build_graph(test::scene_with_centers({{5, 5}, {6, 6}}), -0.1, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
}

TEST(Features, OneHotPlusDiagonal) {
  SceneSample s;
  s.image_w = 6;
  s.image_h = 8;  // diagonal 10
  s.detections = {{2, 0, 0, 3, 4}};
  const auto x = encode_node_features(s, 4);
  ASSERT_EQ(x.cols, 5u);
  const std::vector<double> expected{0, 0, 1, 0, 0.5};
  EXPECT_EQ(x.data, expected);
}

TEST(Features, SameLabelDifferentSize) {
  SceneSample s;
  s.image_w = s.image_h = 100;
  s.detections = {{1, 0, 0, 10, 10}, {1, 50, 50, 30, 20}};
  const auto x = encode_node_features(s, 4);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(x(0, c), x(1, c));
  EXPECT_NE(x(0, 4), x(1, 4));
}

TEST(Features, LabelOutOfRange) {
  SceneSample s;
  s.image_w = s.image_h = 100;
  s.detections = {{4, 0, 0, 10, 10}};
  try {
    encode_node_features(s, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LabelOutOfRange);
  }
}

TEST(GraphProperties, SymmetricZeroDiagonalDegreeAndFeatureRows) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 14)(rng);
    const auto s = test::random_scene(rng, n);
    const double beta = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const auto g = build_graph(s, beta);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(g.adjacency(i, i), 0.0);
      ASSERT_EQ(g.edges(i, i), 0.0);
      std::size_t degree = 0;
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_EQ(g.adjacency(i, j), g.adjacency(j, i));
        ASSERT_EQ(g.edges(i, j), g.edges(j, i));
        ASSERT_GE(g.adjacency(i, j), 0.0);
        degree += g.has_edge(i, j);
      }
      if (n >= 2) ASSERT_GE(degree, 1u);
      double ones = 0;
      for (int c = 0; c < g.vocab_size; ++c) ones += g.features(i, static_cast<std::size_t>(c));
      ASSERT_EQ(ones, 1.0);
      const double d = g.features(i, g.features.cols - 1);
      ASSERT_GT(d, 0.0);
      ASSERT_LE(d, std::sqrt(2.0));
    }
  }
}

TEST(GraphProperties, EdgeSetGrowsWithBeta) {
  std::mt19937_64 rng(2);
  const std::vector<double> betas{0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 3.0};
  for (int t = 0; t < 200; ++t) {
    const auto s = test::random_scene(rng, std::uniform_int_distribution<std::size_t>(2, 12)(rng));
    auto previous = test::edge_set(build_graph(s, betas[0]));
    for (std::size_t b = 1; b < betas.size(); ++b) {
      const auto current = test::edge_set(build_graph(s, betas[b]));
      ASSERT_TRUE(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
      previous = current;
    }
  }
}

TEST(GraphProperties, ScaleInvariance) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto s = test::random_scene(rng, std::uniform_int_distribution<std::size_t>(1, 10)(rng));
    // Powers of two keep the arithmetic exact.
    for (double k : {0.25, 2.0, 8.0}) {
      SceneSample scaled = s;
      scaled.image_w *= k;
      scaled.image_h *= k;
      for (auto& d : scaled.detections) {
        d.x *= k;
        d.y *= k;
        d.w *= k;
        d.h *= k;
      }
      const auto a = build_graph(s);
      const auto b = build_graph(scaled);
      ASSERT_EQ(a.features, b.features);
      ASSERT_EQ(a.adjacency, b.adjacency);
      ASSERT_EQ(a.edges, b.edges);
    }
    // A non-dyadic scale changes rounding only.
    SceneSample scaled = s;
    const double k = 3.7;
    scaled.image_w *= k;
    scaled.image_h *= k;
    for (auto& d : scaled.detections) {
      d.x *= k;
      d.y *= k;
      d.w *= k;
      d.h *= k;
    }
    const auto a = build_graph(s);
    const auto b = build_graph(scaled);
    for (std::size_t i = 0; i < a.adjacency.data.size(); ++i) ASSERT_NEAR(a.adjacency.data[i], b.adjacency.data[i], 1e-12);
    for (std::size_t i = 0; i < a.features.data.size(); ++i) ASSERT_NEAR(a.features.data[i], b.features.data[i], 1e-12);
  }
}

TEST(GraphOracle, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 500; ++t) {
    const auto s = test::random_scene(rng, std::uniform_int_distribution<std::size_t>(1, 10)(rng));
    for (double beta : {0.0, 0.1, 0.37}) {
      const auto g = build_graph(s, beta);
      const auto o = test::oracle_graph(s, beta);
      ASSERT_EQ(test::edge_set(g), o.edges);
      for (const auto& [i, j] : o.edges)
        ASSERT_NEAR(g.adjacency(i, j), static_cast<double>(o.distance[i][j]), 1e-12);
    }
  }
}

TEST(PermuteGraph, RelabelsConsistently) {
  std::mt19937_64 rng(6);
  const auto g = build_graph(test::random_scene(rng, 6));
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  const auto p = permute_graph(g, perm);
  for (std::size_t a = 0; a < 6; ++a) {
    EXPECT_EQ(p.labels[a], g.labels[perm[a]]);
    for (std::size_t b = 0; b < 6; ++b) EXPECT_EQ(p.adjacency(a, b), g.adjacency(perm[a], perm[b]));
  }
}
