#include "epac/graph.hpp"

#include <gtest/gtest.h>

#include "epac/rng.hpp"
#include "test_support.hpp"

using namespace epac;

TEST(GraphBuild, RejectsSelfLoop) {
  EXPECT_THROW(Digraph::build(3, {{1, 1}, {1, 2}, {2, 3}, {3, 1}}), std::invalid_argument);
}

TEST(GraphBuild, RejectsOutOfRangeIds) {
  EXPECT_THROW(Digraph::build(3, {{1, 4}}), std::invalid_argument);
  EXPECT_THROW(Digraph::build(3, {{0, 2}}), std::invalid_argument);
}

TEST(GraphBuild, RejectsDuplicateEdges) {
  EXPECT_THROW(Digraph::build(3, {{1, 2}, {1, 2}, {2, 3}, {3, 1}}), std::invalid_argument);
}

TEST(GraphBuild, RejectsFewerThanThreeAgents) {
  EXPECT_THROW(Digraph::build(2, {{1, 2}, {2, 1}}), std::invalid_argument);
}

TEST(GraphBuild, RingNeighborhoods) {
  const Digraph g = Digraph::ring(3);
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_TRUE(g.has_edge(3, 1));
  EXPECT_FALSE(g.has_edge(2, 1));
  EXPECT_EQ(g.out_neighbors(1), std::vector<int>{2});
  EXPECT_EQ(g.in_neighbors(1), std::vector<int>{3});
}

TEST(GraphValidate, RingIsValid) {
  EXPECT_TRUE(validate(Digraph::ring(3)).ok());
}

TEST(GraphValidate, ExtraEdgeBreaksBalance) {
  // 3-ring plus (1,3): agent 1 gains an out-edge, agent 3 an in-edge.
  const Digraph g = Digraph::build(3, {{1, 2}, {2, 3}, {3, 1}, {1, 3}});
  const auto report = validate(g);
  EXPECT_FALSE(report.ok());
  EXPECT_FALSE(report.balanced);
  EXPECT_EQ(report.unbalanced_agents, (std::vector<int>{1, 3}));
  EXPECT_TRUE(report.strongly_connected);
}

TEST(GraphValidate, DisjointRingsNotStronglyConnected) {
  const Digraph g = Digraph::build(6, {{1, 2}, {2, 3}, {3, 1}, {4, 5}, {5, 6}, {6, 4}});
  const auto report = validate(g);
  EXPECT_FALSE(report.ok());
  EXPECT_TRUE(report.balanced);
  EXPECT_FALSE(report.strongly_connected);
  EXPECT_FALSE(report.unreachable_pairs.empty());
  EXPECT_NE(report.to_string().find("not strongly connected"), std::string::npos);
}

TEST(GraphLaplacian, RingMatchesHandComputation) {
  const Matrix l = laplacian(Digraph::ring(3));
  const double expected[3][3] = {{1, 0, -1}, {-1, 1, 0}, {0, -1, 1}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(l(r, c), expected[r][c]) << r << "," << c;
}

TEST(GraphLaplacian, Demo5RowAndColumnSumsVanish) {
  const Digraph g = Digraph::demo5();
  EXPECT_TRUE(validate(g).ok());
  const Matrix l = laplacian(g);
  for (double s : row_sums(l)) EXPECT_EQ(s, 0.0);
  for (double s : column_sums(l)) EXPECT_EQ(s, 0.0);
}

TEST(GraphLaplacian, Demo5Degrees) {
  const Digraph g = Digraph::demo5();
  const int expected[5] = {1, 1, 2, 2, 2};
  for (int i = 1; i <= 5; ++i) {
    EXPECT_EQ(g.degree(i), expected[i - 1]);
    EXPECT_EQ(g.in_degree(i), g.out_degree(i));
  }
}

TEST(GraphEpsilonBound, KnownGraphs) {
  EXPECT_DOUBLE_EQ(epsilon_bound(Digraph::ring(3)), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_bound(Digraph::demo5()), 0.5);
  // Hub with 4 bidirectional spokes: balanced, hub degree 4.
  const Digraph star = Digraph::build(
      5, {{1, 2}, {2, 1}, {1, 3}, {3, 1}, {1, 4}, {4, 1}, {1, 5}, {5, 1}});
  EXPECT_TRUE(validate(star).ok());
  EXPECT_DOUBLE_EQ(epsilon_bound(star), 0.25);
}

TEST(GraphValidate, MatchesOraclesOnRandomGraphs) {
  SeededRng rng(2024);
  int invalid_seen = 0;
  for (int trial = 0; trial < 1200; ++trial) {
    const int n = rng.integer(3, 8);
    const Digraph g = test::random_arbitrary_graph(rng, n, rng.uniform(0.1, 0.7));
    const auto report = validate(g);
    EXPECT_EQ(report.strongly_connected, test::strongly_connected_bfs(g)) << "trial " << trial;
    EXPECT_EQ(report.unbalanced_agents, test::unbalanced_agents_recount(g)) << "trial " << trial;
    if (!report.ok()) ++invalid_seen;
  }
  EXPECT_GT(invalid_seen, 0);  // the sample must actually exercise failures
}

TEST(GraphLaplacian, ZeroSumsExactOnRandomValidGraphs) {
  SeededRng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const Digraph g = test::random_balanced_graph(rng, rng.integer(3, 10), rng.integer(1, 6));
    ASSERT_TRUE(validate(g).ok());
    const Matrix l = laplacian(g);
    for (double s : row_sums(l)) ASSERT_EQ(s, 0.0);
    for (double s : column_sums(l)) ASSERT_EQ(s, 0.0);
  }
}
