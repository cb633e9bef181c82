#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qtmt/error.hpp"

namespace qtmt {

/// CTU-relative rectangle in luma pixels.
struct Region {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int area() const { return w * h; }
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const Region&, const Region&) = default;
};

enum class SplitKind : std::uint8_t { NS = 0, QT, HBT, VBT, HTT, VTT };

inline constexpr std::array<SplitKind, 6> kAllSplits = {SplitKind::NS,  SplitKind::QT,  SplitKind::HBT,
                                                        SplitKind::VBT, SplitKind::HTT, SplitKind::VTT};

inline constexpr bool is_mt(SplitKind k) { return k != SplitKind::NS && k != SplitKind::QT; }

inline constexpr char split_letter(SplitKind k) {
  constexpr char letters[] = {'N', 'Q', 'H', 'V', 'h', 'v'};
  return letters[static_cast<int>(k)];
}

inline bool split_from_letter(char c, SplitKind& out) {
  for (SplitKind k : kAllSplits) {
    if (split_letter(k) == c) {
      out = k;
      return true;
    }
  }
  return false;
}

inline constexpr int child_count(SplitKind k) {
  switch (k) {
    case SplitKind::NS: return 0;
    case SplitKind::QT: return 4;
    case SplitKind::HBT:
    case SplitKind::VBT: return 2;
    case SplitKind::HTT:
    case SplitKind::VTT: return 3;
  }
  return 0;
}

/// Set of split kinds; iteration follows the canonical order NS, QT, HBT, VBT, HTT, VTT.
class SplitSet {
 public:
  constexpr SplitSet() = default;
  constexpr SplitSet(std::initializer_list<SplitKind> kinds) {
    for (SplitKind k : kinds) insert(k);
  }

  constexpr void insert(SplitKind k) { bits_ |= bit(k); }
  constexpr void erase(SplitKind k) { bits_ &= static_cast<std::uint8_t>(~bit(k)); }
  constexpr bool contains(SplitKind k) const { return (bits_ & bit(k)) != 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }

  std::vector<SplitKind> to_vector() const {
    std::vector<SplitKind> out;
    for (SplitKind k : kAllSplits)
      if (contains(k)) out.push_back(k);
    return out;
  }

  friend constexpr bool operator==(SplitSet, SplitSet) = default;

 private:
  static constexpr std::uint8_t bit(SplitKind k) { return static_cast<std::uint8_t>(1u << static_cast<int>(k)); }
  std::uint8_t bits_ = 0;
};

inline constexpr bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }
inline constexpr int ilog2(int v) { return std::bit_width(static_cast<unsigned>(v)) - 1; }

struct PartitionConfig {
  int ctu_size = 128;
  int min_cu_dim = 4;
  int min_qt_leaf = 8;
  int max_mt_depth = 3;

  int max_qt_depth() const { return ilog2(ctu_size) - ilog2(min_qt_leaf); }
  int map_dim() const { return ctu_size / 8; }

  /// Throws InvalidConfig unless every dimension is a power of two and the
  /// QT phase stays on the 8x8 depth-map grid.
  void validate() const {
    QTMT_CHECK(is_pow2(ctu_size) && ctu_size >= 8 && ctu_size <= 256, ErrorCode::InvalidConfig,
               "ctu_size must be a power of two in [8, 256]");
    QTMT_CHECK(is_pow2(min_cu_dim) && min_cu_dim >= 4, ErrorCode::InvalidConfig,
               "min_cu_dim must be a power of two >= 4 (motion grid granularity)");
    QTMT_CHECK(is_pow2(min_qt_leaf) && min_qt_leaf >= 8 && min_qt_leaf <= ctu_size, ErrorCode::InvalidConfig,
               "min_qt_leaf must be a power of two in [8, ctu_size]");
    QTMT_CHECK(max_mt_depth >= 0 && max_mt_depth <= 3, ErrorCode::InvalidConfig, "max_mt_depth must be in 0..3");
  }

  friend bool operator==(const PartitionConfig&, const PartitionConfig&) = default;
};

/// Candidate split types for a CU. NS is always present.
inline SplitSet legal_splits(const Region& r, bool qt_allowed, int mt_depth, const PartitionConfig& cfg) {
  SplitSet s{SplitKind::NS};
  if (qt_allowed && r.w == r.h && r.w / 2 >= cfg.min_qt_leaf) s.insert(SplitKind::QT);
  if (mt_depth < cfg.max_mt_depth) {
    if (r.h / 2 >= cfg.min_cu_dim) s.insert(SplitKind::HBT);
    if (r.w / 2 >= cfg.min_cu_dim) s.insert(SplitKind::VBT);
    if (r.h >= 4 * cfg.min_cu_dim && is_pow2(r.h)) s.insert(SplitKind::HTT);
    if (r.w >= 4 * cfg.min_cu_dim && is_pow2(r.w)) s.insert(SplitKind::VTT);
  }
  return s;
}

/// Child regions in canonical order: QT/BT raster order, TT top-to-bottom or left-to-right.
inline std::vector<Region> apply_split(const Region& r, SplitKind kind) {
  QTMT_CHECK(r.w > 0 && r.h > 0, ErrorCode::InvalidSplit, "empty region");
  switch (kind) {
    case SplitKind::NS:
      throw Error(ErrorCode::InvalidSplit, "NS has no children");
    case SplitKind::QT: {
      QTMT_CHECK(r.w == r.h && r.w % 2 == 0, ErrorCode::InvalidSplit, "QT needs an even square region");
      const int s = r.w / 2;
      return {{r.x, r.y, s, s}, {r.x + s, r.y, s, s}, {r.x, r.y + s, s, s}, {r.x + s, r.y + s, s, s}};
    }
    case SplitKind::HBT: {
      QTMT_CHECK(r.h % 2 == 0, ErrorCode::InvalidSplit, "HBT needs an even height");
      const int s = r.h / 2;
      return {{r.x, r.y, r.w, s}, {r.x, r.y + s, r.w, s}};
    }
    case SplitKind::VBT: {
      QTMT_CHECK(r.w % 2 == 0, ErrorCode::InvalidSplit, "VBT needs an even width");
      const int s = r.w / 2;
      return {{r.x, r.y, s, r.h}, {r.x + s, r.y, s, r.h}};
    }
    case SplitKind::HTT: {
      QTMT_CHECK(r.h % 4 == 0, ErrorCode::InvalidSplit, "HTT needs a height divisible by 4");
      const int q = r.h / 4;
      return {{r.x, r.y, r.w, q}, {r.x, r.y + q, r.w, 2 * q}, {r.x, r.y + 3 * q, r.w, q}};
    }
    case SplitKind::VTT: {
      QTMT_CHECK(r.w % 4 == 0, ErrorCode::InvalidSplit, "VTT needs a width divisible by 4");
      const int q = r.w / 4;
      return {{r.x, r.y, q, r.h}, {r.x + q, r.y, 2 * q, r.h}, {r.x + 3 * q, r.y, q, r.h}};
    }
  }
  throw Error(ErrorCode::InvalidSplit, "unknown split kind");
}

struct CuNode {
  Region region;
  SplitKind split = SplitKind::NS;
  int qt_depth = 0;
  int mt_depth = 0;
  std::vector<CuNode> children;

  bool is_leaf() const { return children.empty(); }
  /// True while no MT split has been taken on the path from the root.
  bool in_qt_phase() const { return mt_depth == 0; }

  friend bool operator==(const CuNode&, const CuNode&) = default;
};

/// A partition tree is its root CU; the root region is the whole CTU.
using PartitionTree = CuNode;

inline CuNode make_leaf(const Region& r, int qt_depth, int mt_depth) {
  return CuNode{r, SplitKind::NS, qt_depth, mt_depth, {}};
}

/// Splits a leaf in place, creating NS children with the right depths.
inline void split_node(CuNode& node, SplitKind kind) {
  node.split = kind;
  node.children.clear();
  const int dq = kind == SplitKind::QT ? 1 : 0;
  const int dm = is_mt(kind) ? 1 : 0;
  for (const Region& c : apply_split(node.region, kind))
    node.children.push_back(make_leaf(c, node.qt_depth + dq, node.mt_depth + dm));
}

inline CuNode make_root(const PartitionConfig& cfg) { return make_leaf({0, 0, cfg.ctu_size, cfg.ctu_size}, 0, 0); }

template <typename Fn>
void for_each_leaf(const CuNode& node, Fn&& fn) {
  if (node.is_leaf()) {
    fn(node);
    return;
  }
  for (const CuNode& c : node.children) for_each_leaf(c, fn);
}

template <typename Fn>
void for_each_node(const CuNode& node, Fn&& fn) {
  fn(node);
  for (const CuNode& c : node.children) for_each_node(c, fn);
}

inline int count_leaves(const CuNode& node) {
  int n = 0;
  for_each_leaf(node, [&](const CuNode&) { ++n; });
  return n;
}

inline bool contains_qt_split(const CuNode& node) {
  bool found = false;
  for_each_node(node, [&](const CuNode& n) { found = found || n.split == SplitKind::QT; });
  return found;
}

/// Pre-order split letters, e.g. "QNNHNNN".
inline std::string to_string(const CuNode& node) {
  std::string out;
  for_each_node(node, [&](const CuNode& n) { out.push_back(split_letter(n.split)); });
  return out;
}

namespace detail {

inline void check_node(const CuNode& n, const PartitionConfig& cfg, bool qt_allowed) {
  const SplitSet legal = legal_splits(n.region, qt_allowed, n.mt_depth, cfg);
  QTMT_CHECK(legal.contains(n.split), ErrorCode::InvalidTree,
             std::string("illegal split '") + split_letter(n.split) + "' at " + std::to_string(n.region.x) + "," +
                 std::to_string(n.region.y) + " " + std::to_string(n.region.w) + "x" + std::to_string(n.region.h));
  QTMT_CHECK(static_cast<int>(n.children.size()) == child_count(n.split), ErrorCode::InvalidTree,
             "child count does not match split kind");
  if (n.split == SplitKind::NS) return;
  const auto expect = apply_split(n.region, n.split);
  for (std::size_t i = 0; i < expect.size(); ++i) {
    const CuNode& c = n.children[i];
    QTMT_CHECK(c.region == expect[i], ErrorCode::InvalidTree, "child regions do not tile the parent");
    QTMT_CHECK(c.qt_depth == n.qt_depth + (n.split == SplitKind::QT ? 1 : 0), ErrorCode::InvalidTree,
               "bad qt_depth");
    QTMT_CHECK(c.mt_depth == n.mt_depth + (is_mt(n.split) ? 1 : 0), ErrorCode::InvalidTree, "bad mt_depth");
    check_node(c, cfg, qt_allowed && !is_mt(n.split));
  }
}

inline void parse_node(std::string_view s, std::size_t& pos, CuNode& node, const PartitionConfig& cfg,
                       bool qt_allowed) {
  QTMT_CHECK(pos < s.size(), ErrorCode::InvalidTree, "serialization ends early");
  SplitKind kind;
  QTMT_CHECK(split_from_letter(s[pos], kind), ErrorCode::InvalidTree, std::string("bad split letter '") + s[pos] + "'");
  ++pos;
  QTMT_CHECK(legal_splits(node.region, qt_allowed, node.mt_depth, cfg).contains(kind), ErrorCode::InvalidTree,
             "serialized split is illegal at its node");
  if (kind == SplitKind::NS) return;
  split_node(node, kind);
  for (CuNode& c : node.children) parse_node(s, pos, c, cfg, qt_allowed && !is_mt(kind));
}

}  // namespace detail

/// Throws InvalidTree on any violated structural invariant or legality rule.
inline void validate_tree(const PartitionTree& root, const PartitionConfig& cfg) {
  QTMT_CHECK(root.region == (Region{0, 0, cfg.ctu_size, cfg.ctu_size}), ErrorCode::InvalidTree,
             "root must cover the CTU");
  QTMT_CHECK(root.qt_depth == 0 && root.mt_depth == 0, ErrorCode::InvalidTree, "root depths must be zero");
  detail::check_node(root, cfg, true);
}

inline bool is_valid_tree(const PartitionTree& root, const PartitionConfig& cfg) {
  try {
    validate_tree(root, cfg);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline PartitionTree parse_tree(std::string_view s, const PartitionConfig& cfg) {
  CuNode root = make_root(cfg);
  std::size_t pos = 0;
  detail::parse_node(s, pos, root, cfg, true);
  QTMT_CHECK(pos == s.size(), ErrorCode::InvalidTree, "trailing characters after tree");
  return root;
}

}  // namespace qtmt
