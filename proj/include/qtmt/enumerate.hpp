#pragma once

#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "qtmt/partition.hpp"

namespace qtmt {

namespace detail {

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t r = a + b;
  return r < a ? std::numeric_limits<std::uint64_t>::max() : r;
}

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > std::numeric_limits<std::uint64_t>::max() / b) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

// The count only depends on (w, h, qt_allowed, mt_depth), not on position.
class TreeCounter {
 public:
  explicit TreeCounter(const PartitionConfig& cfg) : cfg_(cfg) {}

  std::uint64_t count(int w, int h, bool qt_allowed, int mt_depth) {
    const auto key = std::make_tuple(w, h, qt_allowed, mt_depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::uint64_t total = 0;
    const Region r{0, 0, w, h};
    for (SplitKind k : legal_splits(r, qt_allowed, mt_depth, cfg_).to_vector()) {
      if (k == SplitKind::NS) {
        total = sat_add(total, 1);
        continue;
      }
      std::uint64_t prod = 1;
      for (const Region& c : apply_split(r, k))
        prod = sat_mul(prod, count(c.w, c.h, qt_allowed && !is_mt(k), mt_depth + (is_mt(k) ? 1 : 0)));
      total = sat_add(total, prod);
    }
    memo_.emplace(key, total);
    return total;
  }

 private:
  PartitionConfig cfg_;
  std::map<std::tuple<int, int, bool, int>, std::uint64_t> memo_;
};

}  // namespace detail

/// Number of legal trees for the CTU, saturating at UINT64_MAX.
inline std::uint64_t count_partitions(const PartitionConfig& cfg) {
  cfg.validate();
  detail::TreeCounter counter(cfg);
  return counter.count(cfg.ctu_size, cfg.ctu_size, true, 0);
}

/// Lazily yields every legal tree exactly once, in canonical pre-order
/// lexicographic order (split kinds compared in enum order).
///
/// State is an odometer over per-node split choices: the last child subtree
/// advances fastest, and a node's own choice advances once all its children
/// have wrapped around.
class PartitionEnumerator {
 public:
  explicit PartitionEnumerator(const PartitionConfig& cfg) : cfg_(cfg), root_(make_root(cfg), true, cfg) {}

  /// Next tree, or nullopt once exhausted.
  std::optional<PartitionTree> next() {
    if (done_) return std::nullopt;
    PartitionTree out = root_.materialize();
    done_ = !root_.advance(cfg_);
    return out;
  }

 private:
  struct Cursor {
    CuNode shape;  // region/depths only; children unused
    bool qt_allowed;
    std::vector<SplitKind> options;
    std::size_t choice = 0;
    std::vector<Cursor> children;

    Cursor(CuNode node, bool qt_ok, const PartitionConfig& cfg)
        : shape(std::move(node)),
          qt_allowed(qt_ok),
          options(legal_splits(shape.region, qt_ok, shape.mt_depth, cfg).to_vector()) {
      rebuild(cfg);
    }

    void rebuild(const PartitionConfig& cfg) {
      children.clear();
      const SplitKind k = options[choice];
      if (k == SplitKind::NS) return;
      CuNode tmp = shape;
      split_node(tmp, k);
      for (CuNode& c : tmp.children) children.emplace_back(std::move(c), qt_allowed && !is_mt(k), cfg);
    }

    // Returns false when this subtree wrapped back to its first state.
    bool advance(const PartitionConfig& cfg) {
      for (auto it = children.rbegin(); it != children.rend(); ++it)
        if (it->advance(cfg)) return true;
      if (++choice < options.size()) {
        rebuild(cfg);
        return true;
      }
      choice = 0;
      rebuild(cfg);
      return false;
    }

    CuNode materialize() const {
      CuNode n = shape;
      n.split = options[choice];
      n.children.clear();
      n.children.reserve(children.size());
      for (const Cursor& c : children) n.children.push_back(c.materialize());
      return n;
    }
  };

  PartitionConfig cfg_;
  Cursor root_;
  bool done_ = false;
};

/// Input range over all legal trees. Throws ConfigTooLarge when the tree
/// count exceeds `cap`.
class PartitionRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = PartitionTree;
    using difference_type = std::ptrdiff_t;
    using pointer = const PartitionTree*;
    using reference = const PartitionTree&;

    iterator() = default;
    explicit iterator(PartitionEnumerator* e) : e_(e) { ++*this; }

    reference operator*() const { return *cur_; }
    pointer operator->() const { return &*cur_; }
    iterator& operator++() {
      cur_ = e_->next();
      if (!cur_) e_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& a, const iterator& b) { return a.e_ == b.e_; }

   private:
    PartitionEnumerator* e_ = nullptr;
    std::optional<PartitionTree> cur_;
  };

  PartitionRange(const PartitionConfig& cfg, std::uint64_t cap) : enumerator_(cfg), count_(count_partitions(cfg)) {
    QTMT_CHECK(count_ <= cap, ErrorCode::ConfigTooLarge,
               "config yields " + std::to_string(count_) + " trees, cap is " + std::to_string(cap));
  }

  iterator begin() { return iterator(&enumerator_); }
  iterator end() { return iterator(); }
  std::uint64_t size() const { return count_; }

 private:
  PartitionEnumerator enumerator_;
  std::uint64_t count_;
};

inline PartitionRange enumerate_partitions(const PartitionConfig& cfg, std::uint64_t cap = 1'000'000) {
  return PartitionRange(cfg, cap);
}

}  // namespace qtmt
