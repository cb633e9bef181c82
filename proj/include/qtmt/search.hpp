#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "qtmt/cost.hpp"
#include "qtmt/qtdepth.hpp"

namespace qtmt {

struct SearchStats {
  std::uint64_t nodes_visited = 0;    // CU evaluations
  std::uint64_t splits_checked = 0;   // (CU, split kind) RD checks, NS included
  std::uint64_t skips_triggered = 0;  // CUs where MT and NS were dropped
  std::uint64_t skip_fallbacks = 0;   // skip requested but QT illegal; all options kept
  Cost best_cost_fixed = 0;
  double best_cost = 0.0;
  PartitionTree best_tree;
};

/// Early-skip rule: drop MT and NS when the predicted average depth over the
/// CU exceeds the CU's QT depth by more than `th` (strictly).
template <typename T>
bool skip_decision(const DepthGrid<T>& map, int qt_depth_cur, double th, const Region& cu) {
  return average_depth(map, cu) > static_cast<double>(qt_depth_cur) + th;
}

namespace detail {

/// Depth-first QTMT search over the RD proxy.
///
/// Identical subproblems (same region and depths) are solved once; each
/// memo entry also stores the work counters of its subtree, so the reported
/// counts are those of the plain recursive search an encoder would run.
/// Candidates are tried in canonical order and only a strictly lower
/// (cost, leaf count) replaces the incumbent, which makes the winner the
/// lexicographically first optimal tree.
class Searcher {
 public:
  Searcher(const FeatureBundle& bundle, const CostModel& model, const PartitionConfig& cfg,
           const PredictedDepthMap* map, double th)
      : table_(bundle), model_(model), cfg_(cfg), map_(map), th_(th) {
    cfg_.validate();
    model_.validate();
    QTMT_CHECK(bundle.ctu_size == cfg.ctu_size, ErrorCode::DimMismatch, "bundle ctu_size differs from config");
    if (map_) {
      QTMT_CHECK(map_->dim() == cfg.map_dim(), ErrorCode::DimMismatch, "predicted map dims do not match config");
      QTMT_CHECK(std::isfinite(th_) && th_ >= 0, ErrorCode::InvalidArgument, "threshold must be finite and >= 0");
    }
  }

  SearchStats run() {
    const Region root{0, 0, cfg_.ctu_size, cfg_.ctu_size};
    const Entry& e = solve(root, 0, 0);
    SearchStats s;
    s.nodes_visited = e.nodes;
    s.splits_checked = e.checks;
    s.skips_triggered = e.skips;
    s.skip_fallbacks = e.fallbacks;
    s.best_cost_fixed = e.cost;
    s.best_cost = from_fixed(e.cost);
    s.best_tree = make_root(cfg_);
    build(s.best_tree);
    return s;
  }

 private:
  struct Entry {
    Cost cost = 0;
    std::int64_t leaves = 0;
    SplitKind choice = SplitKind::NS;
    std::uint64_t nodes = 0, checks = 0, skips = 0, fallbacks = 0;
  };

  static std::uint64_t key(const Region& r, int qt_depth, int mt_depth) {
    return (std::uint64_t(mt_depth) << 52) | (std::uint64_t(qt_depth) << 48) | (std::uint64_t(r.x) << 36) |
           (std::uint64_t(r.y) << 24) | (std::uint64_t(r.w) << 12) | std::uint64_t(r.h);
  }

  const Entry& solve(const Region& r, int qt_depth, int mt_depth) {
    const std::uint64_t k = key(r, qt_depth, mt_depth);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;

    const bool qt_phase = mt_depth == 0;
    const SplitSet legal = legal_splits(r, qt_phase, mt_depth, cfg_);
    SplitSet candidates = legal;
    Entry e;
    e.nodes = 1;
    if (map_ && qt_phase && skip_decision(*map_, qt_depth, th_, r)) {
      if (legal.contains(SplitKind::QT)) {
        candidates = SplitSet{SplitKind::QT};
        e.skips = 1;
      } else {
        e.fallbacks = 1;
      }
    }
    const Cost flag = model_.split_flag(legal.size());
    bool have = false;
    for (SplitKind kind : candidates.to_vector()) {
      ++e.checks;
      Cost c = flag;
      std::int64_t leaves = 0;
      if (kind == SplitKind::NS) {
        c += table_.leaf_cost(r, model_);
        leaves = 1;
      } else {
        const int cq = qt_depth + (kind == SplitKind::QT ? 1 : 0);
        const int cm = mt_depth + (is_mt(kind) ? 1 : 0);
        for (const Region& child : apply_split(r, kind)) {
          const Entry& sub = solve(child, cq, cm);
          c += sub.cost;
          leaves += sub.leaves;
          e.nodes += sub.nodes;
          e.checks += sub.checks;
          e.skips += sub.skips;
          e.fallbacks += sub.fallbacks;
        }
      }
      if (!have || c < e.cost || (c == e.cost && leaves < e.leaves)) {
        e.cost = c;
        e.leaves = leaves;
        e.choice = kind;
        have = true;
      }
    }
    return memo_.emplace(k, e).first->second;
  }

  void build(CuNode& node) {
    const Entry& e = memo_.at(key(node.region, node.qt_depth, node.mt_depth));
    if (e.choice == SplitKind::NS) return;
    split_node(node, e.choice);
    for (CuNode& c : node.children) build(c);
  }

  DistortionTable table_;
  CostModel model_;
  PartitionConfig cfg_;
  const PredictedDepthMap* map_;
  double th_;
  std::unordered_map<std::uint64_t, Entry> memo_;
};

}  // namespace detail

/// Exhaustive RD search; returns the minimum-cost legal tree.
inline SearchStats full_search(const FeatureBundle& bundle, const CostModel& model, const PartitionConfig& cfg) {
  return detail::Searcher(bundle, model, cfg, nullptr, 0.0).run();
}

/// Search with MT/NS early skipping in the QT phase, driven by `map`.
inline SearchStats pruned_search(const FeatureBundle& bundle, const CostModel& model, const PartitionConfig& cfg,
                                 const PredictedDepthMap& map, double th) {
  return detail::Searcher(bundle, model, cfg, &map, th).run();
}

}  // namespace qtmt
