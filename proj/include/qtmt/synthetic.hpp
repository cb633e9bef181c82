#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qtmt/features.hpp"

namespace qtmt {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic test clip: a panning textured background with a few
/// rectangles moving on their own trajectories plus mild sensor noise. The
/// mix of global and local motion gives the partition search real work.
inline std::vector<Frame> synthetic_clip(int width, int height, int frames, std::uint64_t seed) {
  struct Mover {
    int x, y, w, h, vx, vy, shade;
  };
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ull + 1;
  auto rnd = [&](int lo, int hi) {
    state += 0x9e3779b97f4a7c15ull;
    return lo + static_cast<int>(detail::mix64(state) % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int pan_x = rnd(-2, 2), pan_y = rnd(-1, 1);
  const double fx = rnd(3, 9) / 100.0, fy = rnd(3, 9) / 100.0;
  std::vector<Mover> movers;
  const int count = 2 + width * height / 4096;
  for (int i = 0; i < count; ++i)
    movers.push_back({rnd(0, width - 1), rnd(0, height - 1), rnd(6, width / 3 + 6), rnd(6, height / 3 + 6), rnd(-4, 4),
                      rnd(-4, 4), rnd(20, 235)});
  std::vector<Frame> out;
  for (int f = 0; f < frames; ++f) {
    Frame fr(width, height, f);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double bx = x + pan_x * f, by = y + pan_y * f;
        double v = 128 + 50 * std::sin(bx * fx) * std::cos(by * fy) + 30 * std::sin((bx + 2 * by) * 0.21);
        for (const Mover& m : movers) {
          const int mx = m.x + m.vx * f, my = m.y + m.vy * f;
          if (x >= mx && x < mx + m.w && y >= my && y < my + m.h)
            v = m.shade + 25 * std::sin((x - mx) * 0.5) * std::sin((y - my) * 0.4);
        }
        const std::uint64_t h = detail::mix64(seed ^ (static_cast<std::uint64_t>(f) << 40) ^
                                              (static_cast<std::uint64_t>(y) << 20) ^ static_cast<std::uint64_t>(x));
        v += static_cast<double>(h % 7) - 3.0;
        fr.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    out.push_back(std::move(fr));
  }
  return out;
}

}  // namespace qtmt
