#include <gtest/gtest.h>

#include <random>

#include "qtmt/enumerate.hpp"
#include "qtmt/predictor.hpp"
#include "qtmt/search.hpp"
#include "../support/oracles.hpp"
#include "../support/test_support.hpp"

using namespace qtmt;
using oracle::Brute;
using oracle::brute_force;

TEST(SkipDecision, BoundaryTable) {
  auto uniform = [](double v) { return PredictedDepthMap(2, v); };
  const Region cu{0, 0, 16, 16};
  EXPECT_TRUE(skip_decision(uniform(3.0), 1, 0.1, cu));
  EXPECT_FALSE(skip_decision(uniform(2.0), 2, 0.0, cu));
  EXPECT_TRUE(skip_decision(uniform(2.5), 2, 0.4, cu));
  EXPECT_FALSE(skip_decision(uniform(2.5), 2, 0.5, cu));
}

TEST(FullSearch, FlatCtuStaysWhole) {
  PartitionConfig cfg;
  const CostModel m = CostModel::for_qp(32);
  SearchStats s = full_search(testkit::flat_bundle(128), m, cfg);
  EXPECT_EQ(to_string(s.best_tree), "N");
  EXPECT_EQ(s.best_cost_fixed, oracle::to_fixed(m.lambda * 8.0) + oracle::to_fixed(m.lambda * std::log2(6.0)));
  EXPECT_GT(s.nodes_visited, 1u);
}

TEST(FullSearch, TreeIsValidAndCostConsistent) {
  for (int s : {32, 64, 128}) {
    PartitionConfig cfg{s, 4, 8, 3};
    for (int qp : {22, 37}) {
      auto b = testkit::random_bundle(s, 100 + s + qp, qp);
      const CostModel m = CostModel::for_qp(qp);
      SearchStats st = full_search(b, m, cfg);
      EXPECT_TRUE(is_valid_tree(st.best_tree, cfg));
      EXPECT_EQ(st.best_cost_fixed, oracle::tree_cost(b, st.best_tree, m, cfg));
      EXPECT_EQ(st.best_cost_fixed, tree_cost(st.best_tree, DistortionTable(b), m, cfg));
      EXPECT_DOUBLE_EQ(st.best_cost, st.best_cost_fixed / 65536.0);
    }
  }
}

TEST(FullSearch, MatchesBruteForceCtu16) {
  for (const PartitionConfig& cfg : testkit::all_configs(16)) {
    for (int trial = 0; trial < 3; ++trial) {
      const int qp = 22 + 5 * trial;
      auto b = testkit::random_bundle(16, 1000 + trial, qp, 0, 4 << (trial % 2));
      const CostModel m = CostModel::for_qp(qp);
      const Brute want = brute_force(b, m, cfg);
      SearchStats got = full_search(b, m, cfg);
      ASSERT_EQ(got.best_cost_fixed, want.cost);
      // First optimal tree in enumeration order.
      EXPECT_EQ(to_string(got.best_tree), want.tree);
    }
  }
}

TEST(FullSearch, MatchesBruteForceCtu32) {
  PartitionConfig cfg{32, 8, 8, 2};
  auto b = testkit::random_bundle(32, 5, 27);
  const CostModel m = CostModel::for_qp(27);
  EXPECT_EQ(full_search(b, m, cfg).best_cost_fixed, brute_force(b, m, cfg).cost);
}

TEST(FullSearch, WorkCountersMatchPlainRecursion) {
  PartitionConfig cfg{32, 4, 8, 2};
  // Nodes of a plain recursive search: every legal candidate of every CU is expanded.
  auto count = [&](auto& self, const Region& r, bool qt, int mt, std::uint64_t& nodes, std::uint64_t& checks) -> void {
    ++nodes;
    for (SplitKind k : legal_splits(r, qt, mt, cfg).to_vector()) {
      ++checks;
      if (k == SplitKind::NS) continue;
      for (const Region& c : apply_split(r, k)) self(self, c, qt && !is_mt(k), mt + (is_mt(k) ? 1 : 0), nodes, checks);
    }
  };
  std::uint64_t nodes = 0, checks = 0;
  count(count, {0, 0, 32, 32}, true, 0, nodes, checks);
  SearchStats s = full_search(testkit::random_bundle(32, 8), CostModel::for_qp(32), cfg);
  EXPECT_EQ(s.nodes_visited, nodes);
  EXPECT_EQ(s.splits_checked, checks);
}

TEST(FullSearch, Deterministic) {
  PartitionConfig cfg;
  auto b = testkit::random_bundle(128, 77, 27);
  SearchStats a = full_search(b, CostModel::for_qp(27), cfg);
  SearchStats c = full_search(b, CostModel::for_qp(27), cfg);
  EXPECT_EQ(a.best_cost_fixed, c.best_cost_fixed);
  EXPECT_EQ(to_string(a.best_tree), to_string(c.best_tree));
  EXPECT_EQ(a.splits_checked, c.splits_checked);
}

TEST(FullSearch, HigherQpMeansFewerLeaves) {
  PartitionConfig cfg{64, 4, 8, 3};
  auto b = testkit::random_bundle(64, 31);
  EXPECT_GE(count_leaves(full_search(b, CostModel::for_qp(22), cfg).best_tree),
            count_leaves(full_search(b, CostModel::for_qp(37), cfg).best_tree));
}

TEST(FullSearch, RejectsMismatchedInputs) {
  PartitionConfig cfg{64, 4, 8, 3};
  EXPECT_THROW(full_search(testkit::random_bundle(32, 1), CostModel::for_qp(32), cfg), Error);
  EXPECT_THROW(pruned_search(testkit::random_bundle(64, 1), CostModel::for_qp(32), cfg, PredictedDepthMap(4), 0.0), Error);
  EXPECT_THROW(pruned_search(testkit::random_bundle(64, 1), CostModel::for_qp(32), cfg, PredictedDepthMap(8), -1.0), Error);
}

TEST(Pruned, ZeroMapEqualsFullSearch) {
  PartitionConfig cfg{64, 4, 8, 3};
  auto b = testkit::random_bundle(64, 41);
  const CostModel m = CostModel::for_qp(27);
  SearchStats full = full_search(b, m, cfg);
  SearchStats p = pruned_search(b, m, cfg, ConstantPredictor{0.0}, 0.0);
  EXPECT_EQ(p.best_cost_fixed, full.best_cost_fixed);
  EXPECT_EQ(p.splits_checked, full.splits_checked);
  EXPECT_EQ(p.skips_triggered, 0u);
}

TEST(Pruned, DeepMapForcesQtSkeleton) {
  PartitionConfig cfg{64, 4, 8, 3};
  auto b = testkit::flat_bundle(64);
  const double deep = cfg.max_qt_depth();
  SearchStats p = pruned_search(b, CostModel::for_qp(32), cfg, ConstantPredictor{deep}, 0.0);
  const QtDepthMap m = extract_map(p.best_tree);
  for (auto v : m.cells()) EXPECT_EQ(v, cfg.max_qt_depth());
  EXPECT_EQ(p.skips_triggered, 1u + 4u + 16u);
  EXPECT_EQ(p.skip_fallbacks, 0u);
}

TEST(Pruned, FallbackWhenQtIllegal) {
  PartitionConfig cfg{32, 4, 32, 2};  // QT never legal
  SearchStats p = pruned_search(testkit::random_bundle(32, 2), CostModel::for_qp(32), cfg, ConstantPredictor{3.0}, 0.0);
  SearchStats f = full_search(testkit::random_bundle(32, 2), CostModel::for_qp(32), cfg);
  EXPECT_EQ(p.skips_triggered, 0u);
  EXPECT_EQ(p.skip_fallbacks, 1u);
  EXPECT_EQ(p.best_cost_fixed, f.best_cost_fixed);
}

TEST(Pruned, OracleAtZeroIsExact) {
  std::mt19937_64 rng(99);
  for (int s : {32, 64, 128}) {
    PartitionConfig cfg{s, 4, 8, 3};
    for (int i = 0; i < 4; ++i) {
      const int qp = 22 + static_cast<int>(rng() % 16);
      auto b = testkit::random_bundle(s, rng(), qp);
      const CostModel m = CostModel::for_qp(qp);
      SearchStats full = full_search(b, m, cfg);
      SearchStats p = pruned_search(b, m, cfg, OraclePredictor{}, 0.0);
      EXPECT_EQ(p.best_cost_fixed, full.best_cost_fixed);
      if (contains_qt_split(full.best_tree)) {
        EXPECT_LT(p.splits_checked, full.splits_checked);
      } else {
        EXPECT_EQ(p.splits_checked, full.splits_checked);
      }
    }
  }
}

TEST(Pruned, MonotoneInThreshold) {
  PartitionConfig cfg{64, 4, 8, 3};
  std::mt19937_64 rng(12);
  for (int i = 0; i < 10; ++i) {
    auto b = testkit::random_bundle(64, rng(), 32);
    const CostModel m = CostModel::for_qp(32);
    const SearchStats full = full_search(b, m, cfg);
    PredictedDepthMap map(8);
    std::uniform_real_distribution<double> u(0, 3.5);
    for (double& v : map.cells()) v = u(rng);
    std::uint64_t prev_checks = 0;
    Cost prev_cost = std::numeric_limits<Cost>::max();
    for (double th : {0.0, 0.1, 0.25, 0.4, 0.8, 1.5, 3.0, 10.0}) {
      SearchStats p = pruned_search(b, m, cfg, map, th);
      EXPECT_GE(p.best_cost_fixed, full.best_cost_fixed);
      EXPECT_GE(p.splits_checked, prev_checks);
      EXPECT_LE(p.best_cost_fixed, prev_cost);
      EXPECT_LE(p.splits_checked, full.splits_checked);
      prev_checks = p.splits_checked;
      prev_cost = p.best_cost_fixed;
    }
    EXPECT_EQ(prev_cost, full.best_cost_fixed);  // th beyond any depth never skips
  }
}

TEST(Predictor, ParseAndName) {
  EXPECT_EQ(predictor_name(parse_predictor("oracle")), "oracle");
  EXPECT_EQ(predictor_name(parse_predictor("noisy:0.5")), "noisy:0.5");
  EXPECT_EQ(predictor_name(parse_predictor("const:2")), "const:2");
  EXPECT_THROW(parse_predictor("noisy:-1"), Error);
  EXPECT_THROW(parse_predictor("const:x"), Error);
  EXPECT_THROW(parse_predictor("magic"), Error);
  EXPECT_THROW(parse_predictor("cnn:/nonexistent.mbmp"), Error);
}

TEST(Predictor, NoisyOracleIsSeeded) {
  PartitionConfig cfg{64, 4, 8, 3};
  auto b = testkit::random_bundle(64, 3);
  QtDepthMap truth(8, 2);
  auto p1 = predict(NoisyOraclePredictor{0.3, 7}, b, &truth, 0, cfg);
  auto p2 = predict(NoisyOraclePredictor{0.3, 7}, b, &truth, 0, cfg);
  auto p3 = predict(NoisyOraclePredictor{0.3, 8}, b, &truth, 0, cfg);
  auto p4 = predict(NoisyOraclePredictor{0.3, 7}, b, &truth, 1, cfg);
  EXPECT_EQ(p1, p2);
  EXPECT_NE(p1, p3);
  EXPECT_NE(p1, p4);
  double mean = 0;
  for (double v : p1.cells()) mean += v;
  EXPECT_NEAR(mean / 64, 2.0, 0.2);
  EXPECT_EQ(predict(NoisyOraclePredictor{0.0, 7}, b, &truth, 0, cfg), to_predicted(truth));
}
