#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "qtmt/features.hpp"
#include "../support/test_support.hpp"

using namespace qtmt;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qtmt_features_" + name)).string();
}

Frame random_frame(int w, int h, std::uint64_t seed, int poc = 0) {
  std::mt19937_64 rng(seed);
  Frame f(w, h, poc);
  for (auto& v : f.luma) v = static_cast<std::uint8_t>(rng() & 0xff);
  return f;
}

Frame shifted(const Frame& src, int sx, int sy) {
  Frame f(src.width, src.height, src.poc + 1);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const int xx = std::clamp(x - sx, 0, f.width - 1), yy = std::clamp(y - sy, 0, f.height - 1);
      f.at(x, y) = src.at(xx, yy);
    }
  return f;
}

// Exhaustive search written independently: collect all in-frame candidates,
// then pick the smallest by (sad, |dx|+|dy|, dy, dx).
MatchResult brute_match(const Frame& cur, const Frame& ref, const Region& b, int range) {
  std::vector<std::tuple<std::uint32_t, int, int, int>> cands;
  for (int dy = -range; dy <= range; ++dy)
    for (int dx = -range; dx <= range; ++dx) {
      if (b.x + dx < 0 || b.y + dy < 0 || b.x + dx + b.w > ref.width || b.y + dy + b.h > ref.height) continue;
      std::uint32_t sad = 0;
      for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x) sad += std::abs(int(cur.at(b.x + x, b.y + y)) - int(ref.at(b.x + x + dx, b.y + y + dy)));
      cands.emplace_back(sad, std::abs(dx) + std::abs(dy), dy, dx);
    }
  auto best = *std::min_element(cands.begin(), cands.end());
  MatchResult r;
  r.sad = std::get<0>(best);
  r.mv = {static_cast<std::int16_t>(std::get<3>(best)), static_cast<std::int16_t>(std::get<2>(best))};
  return r;
}

}  // namespace

TEST(Yuv, TwoFramesFromExactFile) {
  const std::string p = tmp_path("two.yuv");
  std::vector<std::uint8_t> bytes(12288);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 7);
  io::write_file(p, bytes);
  auto frames = load_yuv(p, 64, 64, 2);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[1].poc, 1);
  EXPECT_EQ(frames[0].at(3, 0), static_cast<std::uint8_t>(21));
  EXPECT_EQ(frames[1].at(0, 0), bytes[6144]);
  std::filesystem::remove(p);
}

TEST(Yuv, TruncatedFile) {
  const std::string p = tmp_path("short.yuv");
  io::write_file(p, std::vector<std::uint8_t>(12287));
  try {
    load_yuv(p, 64, 64, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedFile);
  }
  std::filesystem::remove(p);
}

TEST(Yuv, BadDimensionsAndMissingFile) {
  EXPECT_THROW(load_yuv("/nonexistent/clip.yuv", 64, 64, 1), Error);
  try {
    load_yuv("/nonexistent/clip.yuv", 63, 64, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadDimensions);
  }
}

TEST(Yuv, WriteReadRoundTrip) {
  const std::string p = tmp_path("rt.yuv");
  std::vector<Frame> frames = {random_frame(32, 16, 1, 0), random_frame(32, 16, 2, 1)};
  write_yuv(p, frames);
  EXPECT_EQ(std::filesystem::file_size(p), 2 * yuv420_frame_bytes(32, 16));
  auto back = load_yuv(p, 32, 16, 2);
  EXPECT_EQ(back[0].luma, frames[0].luma);
  EXPECT_EQ(back[1].luma, frames[1].luma);
  std::filesystem::remove(p);
}

TEST(BlockMatch, IdentityIsZero) {
  Frame f = random_frame(64, 64, 9);
  MatchResult m = block_match(f, f, {16, 16, 4, 4}, 8);
  EXPECT_EQ(m.mv.dx, 0);
  EXPECT_EQ(m.mv.dy, 0);
  EXPECT_EQ(m.sad, 0u);
}

TEST(BlockMatch, RecoversShift) {
  Frame ref = random_frame(64, 64, 10);
  Frame cur = shifted(ref, 2, 0);  // content moved right by 2
  MatchResult m = block_match(cur, ref, {24, 24, 4, 4}, 8);
  EXPECT_EQ(m.mv.dx, -2);
  EXPECT_EQ(m.mv.dy, 0);
  EXPECT_EQ(m.sad, 0u);
  Frame cur2 = shifted(ref, -3, 1);
  MatchResult m2 = block_match(cur2, ref, {24, 24, 4, 4}, 8);
  EXPECT_EQ(m2.mv.dx, 3);
  EXPECT_EQ(m2.mv.dy, -1);
}

TEST(BlockMatch, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    // Low-entropy frames so that ties are common.
    Frame ref(32, 32, 0), cur(32, 32, 1);
    const int levels = 1 + static_cast<int>(rng() % 3);
    for (auto& v : ref.luma) v = static_cast<std::uint8_t>(rng() % levels);
    for (auto& v : cur.luma) v = static_cast<std::uint8_t>(rng() % levels);
    const Region b{static_cast<int>(rng() % 7) * 4, static_cast<int>(rng() % 7) * 4, 4, 4};
    const int range = 1 + static_cast<int>(rng() % 8);
    MatchResult got = block_match(cur, ref, b, range);
    MatchResult want = brute_match(cur, ref, b, range);
    ASSERT_EQ(got.sad, want.sad);
    ASSERT_EQ(got.mv.dx, want.mv.dx) << t;
    ASSERT_EQ(got.mv.dy, want.mv.dy) << t;
  }
}

TEST(BlockMatch, NeverWorseThanZeroMotion) {
  std::mt19937_64 rng(4);
  Frame ref = random_frame(48, 48, 31), cur = random_frame(48, 48, 32);
  for (int i = 0; i < 50; ++i) {
    const Region b{static_cast<int>(rng() % 11) * 4, static_cast<int>(rng() % 11) * 4, 4, 4};
    EXPECT_LE(block_match(cur, ref, b, 8).sad, brute_match(cur, ref, b, 0).sad);
  }
}

TEST(TemporalId, Gop32) {
  EXPECT_EQ(temporal_id_for_poc(0), 0);
  EXPECT_EQ(temporal_id_for_poc(32), 0);
  EXPECT_EQ(temporal_id_for_poc(16), 1);
  EXPECT_EQ(temporal_id_for_poc(8), 2);
  EXPECT_EQ(temporal_id_for_poc(24), 2);
  EXPECT_EQ(temporal_id_for_poc(4), 3);
  EXPECT_EQ(temporal_id_for_poc(2), 4);
  EXPECT_EQ(temporal_id_for_poc(1), 5);
  EXPECT_EQ(temporal_id_for_poc(33), 5);
}

TEST(Bundle, ResidualAndMotionOracle) {
  PartitionConfig cfg{32, 4, 8, 3};
  Frame ref = random_frame(96, 64, 40, 0);
  Frame cur = shifted(ref, 1, 2);
  const Region ctu{32, 32, 32, 32};
  FeatureBundle b = build_bundle(cur, ref, ctu, 27, 4, cfg);
  EXPECT_EQ(b.qp, 27);
  EXPECT_EQ(b.temporal_id, 4);
  ASSERT_EQ(b.motion.dim, 8);
  for (int by = 0; by < 8; ++by)
    for (int bx = 0; bx < 8; ++bx) {
      const Region sub{32 + bx * 4, 32 + by * 4, 4, 4};
      MatchResult want = brute_match(cur, ref, sub, kDefaultSearchRange);
      const MotionVector mv = b.motion.at(by, bx);
      ASSERT_EQ(mv.dx, want.mv.dx);
      ASSERT_EQ(mv.dy, want.mv.dy);
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          const int px = bx * 4 + x, py = by * 4 + y;
          EXPECT_EQ(b.luma_at(px, py), cur.at(32 + px, 32 + py));
          EXPECT_EQ(b.residual_at(px, py), int(cur.at(32 + px, 32 + py)) - int(ref.at(32 + px + mv.dx, 32 + py + mv.dy)));
        }
    }
  // Pure translation inside the frame: everything is predicted exactly.
  for (auto r : b.residual) EXPECT_EQ(r, 0);
}

TEST(Bundle, DeterministicAndBounds) {
  PartitionConfig cfg{32, 4, 8, 3};
  Frame ref = random_frame(64, 64, 50), cur = random_frame(64, 64, 51, 1);
  EXPECT_EQ(build_bundle(cur, ref, {0, 32, 32, 32}, 32, 5, cfg), build_bundle(cur, ref, {0, 32, 32, 32}, 32, 5, cfg));
  try {
    build_bundle(cur, ref, {48, 0, 32, 32}, 32, 5, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CtuOutOfBounds);
  }
}

TEST(Bundle, CtuGrid) {
  auto g = ctu_grid(100, 70, 32);
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g[4], (Region{32, 32, 32, 32}));
}
