#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qtmt/partition.hpp"

namespace qtmt {

inline constexpr int kCellSize = 8;

/// Square grid with one value per 8x8 luma cell of a CTU, row-major.
template <typename T>
class DepthGrid {
 public:
  using value_type = T;

  DepthGrid() = default;
  explicit DepthGrid(int dim, T fill = T{}) : dim_(dim), cells_(static_cast<std::size_t>(dim) * dim, fill) {
    QTMT_CHECK(dim > 0, ErrorCode::InvalidArgument, "grid dimension must be positive");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return cells_.size(); }
  T& at(int row, int col) { return cells_[static_cast<std::size_t>(row) * dim_ + col]; }
  const T& at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * dim_ + col]; }
  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }

  friend bool operator==(const DepthGrid&, const DepthGrid&) = default;

 private:
  int dim_ = 0;
  std::vector<T> cells_;
};

/// Ground-truth QT depth per cell.
using QtDepthMap = DepthGrid<std::uint8_t>;
/// Regression output; values are used raw, never rounded.
using PredictedDepthMap = DepthGrid<double>;

inline PredictedDepthMap to_predicted(const QtDepthMap& m) {
  PredictedDepthMap p(m.dim());
  for (std::size_t i = 0; i < m.size(); ++i) p.cells()[i] = m.cells()[i];
  return p;
}

/// Paints each leaf's qt_depth over the cells it covers. Leaves narrower than
/// a cell (MT children of an 8-pixel CU) share the same qt_depth as their
/// siblings, so painting order never matters.
inline QtDepthMap extract_map(const PartitionTree& tree) {
  const int ctu = tree.region.w;
  QTMT_CHECK(ctu % kCellSize == 0 && ctu == tree.region.h, ErrorCode::InvalidTree, "root must be a square CTU");
  QtDepthMap map(ctu / kCellSize);
  for_each_leaf(tree, [&](const CuNode& leaf) {
    const Region& r = leaf.region;
    const int c0 = r.x / kCellSize, c1 = (r.x + r.w - 1) / kCellSize;
    const int r0 = r.y / kCellSize, r1 = (r.y + r.h - 1) / kCellSize;
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col) map.at(row, col) = static_cast<std::uint8_t>(leaf.qt_depth);
  });
  return map;
}

/// Mean of the cells covered by `cu`, summed in raster order at double precision.
template <typename T>
double average_depth(const DepthGrid<T>& map, const Region& cu) {
  QTMT_CHECK(cu.w > 0 && cu.h > 0 && cu.x % kCellSize == 0 && cu.y % kCellSize == 0 && cu.w % kCellSize == 0 &&
                 cu.h % kCellSize == 0,
             ErrorCode::MisalignedCu, "CU is not aligned to the 8x8 cell grid");
  const int c0 = cu.x / kCellSize, r0 = cu.y / kCellSize;
  const int cw = cu.w / kCellSize, ch = cu.h / kCellSize;
  QTMT_CHECK(c0 >= 0 && r0 >= 0 && c0 + cw <= map.dim() && r0 + ch <= map.dim(), ErrorCode::MisalignedCu,
             "CU lies outside the map");
  double sum = 0.0;
  for (int row = r0; row < r0 + ch; ++row)
    for (int col = c0; col < c0 + cw; ++col) sum += static_cast<double>(map.at(row, col));
  return sum / static_cast<double>(cw * ch);
}

template <typename A, typename B>
double map_l1_distance(const DepthGrid<A>& a, const DepthGrid<B>& b) {
  QTMT_CHECK(a.dim() == b.dim(), ErrorCode::DimMismatch, "maps have different dimensions");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += std::abs(static_cast<double>(a.cells()[i]) - static_cast<double>(b.cells()[i]));
  return sum / static_cast<double>(a.size());
}

/// QT-only tree implied by a map: a QT-phase CU splits while any covered cell
/// is deeper than the CU. Inverse of extract_map for trees without MT splits.
inline PartitionTree qt_skeleton_from_map(const QtDepthMap& map, const PartitionConfig& cfg) {
  QTMT_CHECK(map.dim() == cfg.map_dim(), ErrorCode::DimMismatch, "map does not match ctu_size");
  PartitionTree root = make_root(cfg);
  auto grow = [&](auto& self, CuNode& node) -> void {
    bool deeper = false;
    const Region& r = node.region;
    for (int row = r.y / kCellSize; row < (r.y + r.h) / kCellSize; ++row)
      for (int col = r.x / kCellSize; col < (r.x + r.w) / kCellSize; ++col)
        deeper = deeper || map.at(row, col) > node.qt_depth;
    if (!deeper || !legal_splits(r, true, 0, cfg).contains(SplitKind::QT)) return;
    split_node(node, SplitKind::QT);
    for (CuNode& c : node.children) self(self, c);
  };
  grow(grow, root);
  return root;
}

/// Row-major CSV: integers for ground truth, six fractional digits for predictions.
template <typename T>
void write_map_csv(std::ostream& os, const DepthGrid<T>& map) {
  for (int row = 0; row < map.dim(); ++row) {
    for (int col = 0; col < map.dim(); ++col) {
      if (col) os << ',';
      if constexpr (std::is_floating_point_v<T>) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(map.at(row, col)));
        os << buf;
      } else {
        os << static_cast<int>(map.at(row, col));
      }
    }
    os << '\n';
  }
}

template <typename T>
DepthGrid<T> read_map_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    rows.push_back(std::move(row));
  }
  QTMT_CHECK(!rows.empty(), ErrorCode::DimMismatch, "empty map");
  const int dim = static_cast<int>(rows.size());
  DepthGrid<T> map(dim);
  for (int r = 0; r < dim; ++r) {
    QTMT_CHECK(static_cast<int>(rows[r].size()) == dim, ErrorCode::DimMismatch, "map is not square");
    for (int c = 0; c < dim; ++c) map.at(r, c) = static_cast<T>(rows[r][c]);
  }
  return map;
}

}  // namespace qtmt
