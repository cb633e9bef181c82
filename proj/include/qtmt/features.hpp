#pragma once

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "qtmt/error.hpp"
#include "qtmt/io.hpp"
#include "qtmt/partition.hpp"

namespace qtmt {

/// 8-bit luma plane in display order.
struct Frame {
  int width = 0;
  int height = 0;
  int poc = 0;
  std::vector<std::uint8_t> luma;

  Frame() = default;
  Frame(int w, int h, int poc_, std::uint8_t fill = 0)
      : width(w), height(h), poc(poc_), luma(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return luma[static_cast<std::size_t>(y) * width + x]; }
};

inline std::size_t yuv420_frame_bytes(int width, int height) {
  return static_cast<std::size_t>(width) * height * 3 / 2;
}

/// Reads the luma planes of a planar 4:2:0 8-bit file; chroma is skipped.
inline std::vector<Frame> load_yuv(const std::string& path, int width, int height, int frame_count) {
  QTMT_CHECK(width > 0 && height > 0 && width % 2 == 0 && height % 2 == 0 && frame_count > 0,
             ErrorCode::BadDimensions, "width/height must be positive and even, frame_count positive");
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  const std::size_t per_frame = yuv420_frame_bytes(width, height);
  QTMT_CHECK(bytes.size() >= per_frame * frame_count, ErrorCode::TruncatedFile,
             path + " holds " + std::to_string(bytes.size()) + " bytes, need " +
                 std::to_string(per_frame * frame_count));
  std::vector<Frame> frames;
  frames.reserve(frame_count);
  for (int f = 0; f < frame_count; ++f) {
    Frame fr(width, height, f);
    const auto* src = bytes.data() + per_frame * f;
    std::copy(src, src + fr.luma.size(), fr.luma.begin());
    frames.push_back(std::move(fr));
  }
  return frames;
}

/// Writes frames as planar 4:2:0 with neutral (128) chroma.
inline void write_yuv(const std::string& path, const std::vector<Frame>& frames) {
  io::ByteWriter w;
  for (const Frame& f : frames) {
    QTMT_CHECK(f.width % 2 == 0 && f.height % 2 == 0, ErrorCode::BadDimensions, "frame dims must be even");
    for (std::uint8_t v : f.luma) w.u8(v);
    for (std::size_t i = 0; i < static_cast<std::size_t>(f.width) * f.height / 2; ++i) w.u8(128);
  }
  io::write_file(path, w.data());
}

struct MotionVector {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

struct MatchResult {
  MotionVector mv;
  std::uint32_t sad = 0;
};

inline constexpr int kDefaultSearchRange = 8;
inline constexpr int kSubblock = 4;

/// Full-search integer-pel SAD motion estimation. Candidates whose displaced
/// block leaves the reference frame are not considered. Ties go to the
/// smallest |dx|+|dy|, then the smallest dy, then the smallest dx.
inline MatchResult block_match(const Frame& current, const Frame& reference, const Region& block, int search_range) {
  QTMT_CHECK(block.x >= 0 && block.y >= 0 && block.w > 0 && block.h > 0 && block.x + block.w <= current.width &&
                 block.y + block.h <= current.height,
             ErrorCode::CtuOutOfBounds, "block outside the current frame");
  QTMT_CHECK(current.width == reference.width && current.height == reference.height, ErrorCode::DimMismatch,
             "frame sizes differ");
  QTMT_CHECK(search_range >= 0 && search_range <= 127, ErrorCode::InvalidArgument, "search range must be in 0..127");
  MatchResult best;
  auto rank = [](const MotionVector& mv, std::uint32_t sad) {
    return std::make_tuple(sad, std::abs(mv.dx) + std::abs(mv.dy), mv.dy, mv.dx);
  };
  bool have = false;
  for (int dy = -search_range; dy <= search_range; ++dy) {
    if (block.y + dy < 0 || block.y + dy + block.h > reference.height) continue;
    for (int dx = -search_range; dx <= search_range; ++dx) {
      if (block.x + dx < 0 || block.x + dx + block.w > reference.width) continue;
      std::uint32_t sad = 0;
      for (int y = 0; y < block.h; ++y)
        for (int x = 0; x < block.w; ++x)
          sad += static_cast<std::uint32_t>(
              std::abs(int(current.at(block.x + x, block.y + y)) - int(reference.at(block.x + x + dx, block.y + y + dy))));
      const MotionVector mv{dx, dy};
      if (!have || rank(mv, sad) < rank(best.mv, best.sad)) {
        best = {mv, sad};
        have = true;
      }
    }
  }
  return best;
}

/// One vector per 4x4 subblock of a CTU, row-major.
struct MotionField {
  int dim = 0;
  std::vector<MotionVector> mv;

  MotionField() = default;
  explicit MotionField(int d) : dim(d), mv(static_cast<std::size_t>(d) * d) {}
  MotionVector& at(int row, int col) { return mv[static_cast<std::size_t>(row) * dim + col]; }
  const MotionVector& at(int row, int col) const { return mv[static_cast<std::size_t>(row) * dim + col]; }
  friend bool operator==(const MotionField&, const MotionField&) = default;
};

/// Network inputs for one CTU.
struct FeatureBundle {
  int ctu_size = 0;
  std::vector<std::uint8_t> luma;      // S*S
  std::vector<std::int16_t> residual;  // S*S, current minus motion-compensated prediction
  MotionField motion;                  // (S/4)^2
  int qp = 0;
  int temporal_id = 0;

  std::uint8_t luma_at(int x, int y) const { return luma[static_cast<std::size_t>(y) * ctu_size + x]; }
  std::int16_t residual_at(int x, int y) const { return residual[static_cast<std::size_t>(y) * ctu_size + x]; }

  /// Throws unless sizes, ranges and the residual/prediction relation hold.
  void validate() const {
    QTMT_CHECK(ctu_size >= 8 && is_pow2(ctu_size), ErrorCode::InvalidArgument, "ctu_size must be a power of two >= 8");
    const std::size_t n = static_cast<std::size_t>(ctu_size) * ctu_size;
    QTMT_CHECK(luma.size() == n && residual.size() == n, ErrorCode::DimMismatch, "plane sizes do not match ctu_size");
    QTMT_CHECK(motion.dim == ctu_size / kSubblock && motion.mv.size() == n / 16, ErrorCode::DimMismatch,
               "motion field size does not match ctu_size");
    QTMT_CHECK(qp >= 0 && qp <= 63, ErrorCode::InvalidArgument, "qp out of [0,63]");
    QTMT_CHECK(temporal_id >= 0 && temporal_id <= 255, ErrorCode::InvalidArgument, "temporal_id out of range");
    for (std::size_t i = 0; i < n; ++i) {
      const int pred = int(luma[i]) - int(residual[i]);
      QTMT_CHECK(pred >= 0 && pred <= 255, ErrorCode::InvalidArgument, "residual implies an out-of-range prediction");
    }
    for (const MotionVector& v : motion.mv)
      QTMT_CHECK(std::abs(v.dx) <= 127 && std::abs(v.dy) <= 127, ErrorCode::InvalidArgument, "motion vector too long");
  }

  /// Residual is derived as luma - prediction.
  static FeatureBundle from_prediction(int ctu_size, std::vector<std::uint8_t> luma,
                                       const std::vector<std::uint8_t>& prediction, MotionField motion, int qp,
                                       int temporal_id) {
    QTMT_CHECK(prediction.size() == luma.size(), ErrorCode::DimMismatch, "prediction size mismatch");
    FeatureBundle b;
    b.ctu_size = ctu_size;
    b.residual.resize(luma.size());
    for (std::size_t i = 0; i < luma.size(); ++i) b.residual[i] = static_cast<std::int16_t>(int(luma[i]) - int(prediction[i]));
    b.luma = std::move(luma);
    b.motion = std::move(motion);
    b.qp = qp;
    b.temporal_id = temporal_id;
    b.validate();
    return b;
  }

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

/// Hierarchical layer of a frame in a 32-frame random-access GOP (0..5).
inline int temporal_id_for_poc(int poc) {
  const int phase = poc % 32;
  if (phase == 0) return 0;
  return 5 - std::countr_zero(static_cast<unsigned>(phase));
}

/// Per-4x4 motion search against `reference`, then the residual against the
/// displaced prediction. `ctu` is in frame coordinates and must be S x S.
inline FeatureBundle build_bundle(const Frame& current, const Frame& reference, const Region& ctu, int qp,
                                  int temporal_id, const PartitionConfig& cfg,
                                  int search_range = kDefaultSearchRange) {
  const int s = cfg.ctu_size;
  QTMT_CHECK(ctu.w == s && ctu.h == s, ErrorCode::InvalidArgument, "CTU region must match ctu_size");
  QTMT_CHECK(ctu.x >= 0 && ctu.y >= 0 && ctu.x + s <= current.width && ctu.y + s <= current.height,
             ErrorCode::CtuOutOfBounds, "CTU not fully inside the frame");
  std::vector<std::uint8_t> luma(static_cast<std::size_t>(s) * s);
  std::vector<std::uint8_t> pred(luma.size());
  MotionField field(s / kSubblock);
  for (int by = 0; by < s / kSubblock; ++by) {
    for (int bx = 0; bx < s / kSubblock; ++bx) {
      const Region sub{ctu.x + bx * kSubblock, ctu.y + by * kSubblock, kSubblock, kSubblock};
      const MatchResult m = block_match(current, reference, sub, search_range);
      field.at(by, bx) = m.mv;
      for (int y = 0; y < kSubblock; ++y) {
        for (int x = 0; x < kSubblock; ++x) {
          const std::size_t i = static_cast<std::size_t>(by * kSubblock + y) * s + bx * kSubblock + x;
          luma[i] = current.at(sub.x + x, sub.y + y);
          pred[i] = reference.at(sub.x + x + m.mv.dx, sub.y + y + m.mv.dy);
        }
      }
    }
  }
  return FeatureBundle::from_prediction(s, std::move(luma), pred, std::move(field), qp, temporal_id);
}

/// Origins of all CTUs fully inside the frame, raster order.
inline std::vector<Region> ctu_grid(int width, int height, int ctu_size) {
  std::vector<Region> out;
  for (int y = 0; y + ctu_size <= height; y += ctu_size)
    for (int x = 0; x + ctu_size <= width; x += ctu_size) out.push_back({x, y, ctu_size, ctu_size});
  return out;
}

}  // namespace qtmt
