#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qtmt/features.hpp"
#include "qtmt/partition.hpp"

namespace qtmt {

/// RD cost in fixed point (units of 2^-16). Every leaf and node term is
/// rounded once, so tree costs are exact integer sums independent of the
/// order in which a search adds them up.
using Cost = std::int64_t;
inline constexpr double kCostScale = 65536.0;

inline Cost to_fixed(double v) { return static_cast<Cost>(std::llround(v * kCostScale)); }
inline double from_fixed(Cost c) { return static_cast<double>(c) / kCostScale; }

/// Rate-distortion proxy standing in for an encoder's RD check.
///
///   cost(tree) = sum over leaves [ D(leaf) + lambda * per_cu_rate_bits ]
///              + sum over nodes  [ lambda * log2(|legal splits at node|) ]
///
/// D(leaf) charges what one CU with a single DC offset and a single motion
/// vector cannot represent: the residual energy around the leaf's mean
/// residual, plus motion_weight times the per-pixel squared deviation of the
/// 4x4 motion vectors from the leaf's mean vector.
struct CostModel {
  double lambda = 1.0;
  double per_cu_rate_bits = 8.0;
  double motion_weight = 4.0;

  static double lambda_for_qp(int qp) { return 0.57 * std::pow(2.0, (qp - 12) / 3.0); }

  static CostModel for_qp(int qp, double per_cu_rate_bits = 8.0, double motion_weight = 4.0) {
    return {lambda_for_qp(qp), per_cu_rate_bits, motion_weight};
  }

  CostModel with_qp(int qp) const {
    CostModel m = *this;
    m.lambda = lambda_for_qp(qp);
    return m;
  }

  void validate() const {
    QTMT_CHECK(lambda > 0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be positive");
    QTMT_CHECK(per_cu_rate_bits >= 0 && motion_weight >= 0, ErrorCode::InvalidArgument,
               "rate bits and motion weight must be non-negative");
  }

  Cost leaf_rate() const { return to_fixed(lambda * per_cu_rate_bits); }
  Cost split_flag(int candidate_count) const {
    return candidate_count > 1 ? to_fixed(lambda * std::log2(static_cast<double>(candidate_count))) : 0;
  }
};

/// Combines exact integer moments into the leaf distortion. Shared by the
/// prefix-sum table and by anything else that gathers the same moments.
struct LeafMoments {
  std::int64_t pixels = 0;
  std::int64_t sum_r = 0;
  std::int64_t sum_r2 = 0;
  std::int64_t subblocks = 0;
  std::int64_t sum_dx = 0, sum_dx2 = 0, sum_dy = 0, sum_dy2 = 0;

  double distortion(double motion_weight) const {
    const double d_res = static_cast<double>(pixels * sum_r2 - sum_r * sum_r) / static_cast<double>(pixels);
    const std::int64_t mv_num = (subblocks * sum_dx2 - sum_dx * sum_dx) + (subblocks * sum_dy2 - sum_dy * sum_dy);
    const double d_mv = 16.0 * static_cast<double>(mv_num) / static_cast<double>(subblocks);
    return d_res + motion_weight * d_mv;
  }
};

/// Summed-area tables over one bundle for O(1) leaf moments. Regions must sit
/// on the 4x4 motion grid.
class DistortionTable {
 public:
  explicit DistortionTable(const FeatureBundle& b) : s_(b.ctu_size), g_(b.ctu_size / kSubblock) {
    const std::size_t pw = static_cast<std::size_t>(s_) + 1;
    r_.assign(pw * pw, 0);
    r2_.assign(pw * pw, 0);
    for (int y = 0; y < s_; ++y)
      for (int x = 0; x < s_; ++x) {
        const std::int64_t v = b.residual_at(x, y);
        r_[idx(x + 1, y + 1, pw)] = v + r_[idx(x, y + 1, pw)] + r_[idx(x + 1, y, pw)] - r_[idx(x, y, pw)];
        r2_[idx(x + 1, y + 1, pw)] = v * v + r2_[idx(x, y + 1, pw)] + r2_[idx(x + 1, y, pw)] - r2_[idx(x, y, pw)];
      }
    const std::size_t gw = static_cast<std::size_t>(g_) + 1;
    for (auto* t : {&dx_, &dx2_, &dy_, &dy2_}) t->assign(gw * gw, 0);
    for (int y = 0; y < g_; ++y)
      for (int x = 0; x < g_; ++x) {
        const MotionVector& mv = b.motion.at(y, x);
        const std::int64_t vals[4] = {mv.dx, std::int64_t(mv.dx) * mv.dx, mv.dy, std::int64_t(mv.dy) * mv.dy};
        std::vector<std::int64_t>* tabs[4] = {&dx_, &dx2_, &dy_, &dy2_};
        for (int t = 0; t < 4; ++t) {
          auto& tab = *tabs[t];
          tab[idx(x + 1, y + 1, gw)] = vals[t] + tab[idx(x, y + 1, gw)] + tab[idx(x + 1, y, gw)] - tab[idx(x, y, gw)];
        }
      }
  }

  LeafMoments moments(const Region& r) const {
    QTMT_CHECK(r.x % kSubblock == 0 && r.y % kSubblock == 0 && r.w % kSubblock == 0 && r.h % kSubblock == 0 &&
                   r.x + r.w <= s_ && r.y + r.h <= s_,
               ErrorCode::InvalidArgument, "region is off the 4x4 motion grid");
    LeafMoments m;
    const std::size_t pw = static_cast<std::size_t>(s_) + 1;
    m.pixels = std::int64_t(r.w) * r.h;
    m.sum_r = box(r_, pw, r.x, r.y, r.w, r.h);
    m.sum_r2 = box(r2_, pw, r.x, r.y, r.w, r.h);
    const std::size_t gw = static_cast<std::size_t>(g_) + 1;
    const int gx = r.x / kSubblock, gy = r.y / kSubblock, gw_ = r.w / kSubblock, gh = r.h / kSubblock;
    m.subblocks = std::int64_t(gw_) * gh;
    m.sum_dx = box(dx_, gw, gx, gy, gw_, gh);
    m.sum_dx2 = box(dx2_, gw, gx, gy, gw_, gh);
    m.sum_dy = box(dy_, gw, gx, gy, gw_, gh);
    m.sum_dy2 = box(dy2_, gw, gx, gy, gw_, gh);
    return m;
  }

  Cost leaf_cost(const Region& r, const CostModel& model) const {
    return to_fixed(moments(r).distortion(model.motion_weight)) + model.leaf_rate();
  }

 private:
  static std::size_t idx(int x, int y, std::size_t stride) { return static_cast<std::size_t>(y) * stride + x; }
  static std::int64_t box(const std::vector<std::int64_t>& t, std::size_t stride, int x, int y, int w, int h) {
    return t[idx(x + w, y + h, stride)] - t[idx(x, y + h, stride)] - t[idx(x + w, y, stride)] + t[idx(x, y, stride)];
  }

  int s_;
  int g_;
  std::vector<std::int64_t> r_, r2_, dx_, dx2_, dy_, dy2_;
};

/// Cost of a given tree, evaluated node by node.
inline Cost tree_cost(const PartitionTree& tree, const DistortionTable& table, const CostModel& model,
                      const PartitionConfig& cfg) {
  Cost total = 0;
  auto walk = [&](auto& self, const CuNode& n) -> void {
    total += model.split_flag(legal_splits(n.region, n.in_qt_phase(), n.mt_depth, cfg).size());
    if (n.is_leaf()) {
      total += table.leaf_cost(n.region, model);
      return;
    }
    for (const CuNode& c : n.children) self(self, c);
  };
  walk(walk, tree);
  return total;
}

}  // namespace qtmt
