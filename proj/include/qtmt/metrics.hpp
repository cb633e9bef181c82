#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtmt/error.hpp"
#include "qtmt/search.hpp"

namespace qtmt {

inline constexpr std::array<int, 4> kTestQps = {22, 27, 32, 37};

struct TimingPair {
  double t_ref = 0;
  double t_test = 0;
};

/// Anchor/test encoding times at QP 22, 27, 32 and 37, in that order.
using TimingQuad = std::array<TimingPair, 4>;

/// Mean relative time reduction over the four QPs; negative when the test
/// encoder is slower.
inline double time_saving(const TimingQuad& q) {
  double sum = 0.0;
  for (const TimingPair& p : q) {
    QTMT_CHECK(p.t_ref > 0 && p.t_test > 0 && std::isfinite(p.t_ref) && std::isfinite(p.t_test),
               ErrorCode::NonPositiveTime, "times must be positive and finite");
    sum += (p.t_ref - p.t_test) / p.t_ref;
  }
  return sum / 4.0;
}

/// Node-count stand-in for time saving: relative reduction of RD checks.
inline double ts_proxy(std::uint64_t checks_full, std::uint64_t checks_pruned) {
  QTMT_CHECK(checks_full > 0, ErrorCode::ZeroWork, "reference search did no work");
  return (static_cast<double>(checks_full) - static_cast<double>(checks_pruned)) / static_cast<double>(checks_full);
}

inline double ts_proxy(const SearchStats& full, const SearchStats& pruned) {
  return ts_proxy(full.splits_checked, pruned.splits_checked);
}

/// Per-QP RD-check totals fed through the time-saving formula.
inline TimingQuad timing_from_counts(const std::array<std::uint64_t, 4>& full, const std::array<std::uint64_t, 4>& pruned) {
  TimingQuad q;
  for (int i = 0; i < 4; ++i) q[i] = {static_cast<double>(full[i]), static_cast<double>(pruned[i])};
  return q;
}

struct RdPoint {
  double rate = 0;     // bits or proxy bits
  double quality = 0;  // PSNR dB or proxy
};

namespace detail {

struct CubicFit {
  double center = 0;  // fit runs in (quality - center) for conditioning
  std::array<double, 4> c{};
};

/// Least-squares cubic log10(rate) = c0 + c1 t + c2 t^2 + c3 t^3, t = q - center.
inline CubicFit fit_log_rate(const std::vector<RdPoint>& pts) {
  QTMT_CHECK(pts.size() >= 4, ErrorCode::DegenerateFit, "need at least 4 RD points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    QTMT_CHECK(pts[i].rate > 0 && std::isfinite(pts[i].rate) && std::isfinite(pts[i].quality), ErrorCode::DegenerateFit,
               "rates must be positive and finite");
    if (i) QTMT_CHECK(pts[i].quality > pts[i - 1].quality, ErrorCode::DegenerateFit, "quality must strictly increase");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  double center = 0;
  for (const RdPoint& p : pts) center += p.quality;
  center /= static_cast<double>(pts.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = pts[i].quality - center;
    a(i, 0) = 1.0;
    a(i, 1) = q;
    a(i, 2) = q * q;
    a(i, 3) = q * q * q;
    b(i) = std::log10(pts[i].rate);
  }
  const auto qr = a.colPivHouseholderQr();
  QTMT_CHECK(qr.rank() == 4, ErrorCode::DegenerateFit, "RD points do not determine a cubic");
  const Eigen::VectorXd c = qr.solve(b);
  return {center, {c(0), c(1), c(2), c(3)}};
}

inline double eval(const CubicFit& f, double q) {
  const double t = q - f.center;
  return ((f.c[3] * t + f.c[2]) * t + f.c[1]) * t + f.c[0];
}

}  // namespace detail

inline constexpr int kBdIntegrationSamples = 1000;

/// Bjontegaard delta rate in percent: cubic fit of log10(rate) against
/// quality per curve, mean log-rate gap over the shared quality interval
/// (1000-point composite trapezoid), converted to a relative rate change.
inline double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test) {
  const auto ca = detail::fit_log_rate(anchor);
  const auto ct = detail::fit_log_rate(test);
  const double lo = std::max(anchor.front().quality, test.front().quality);
  const double hi = std::min(anchor.back().quality, test.back().quality);
  QTMT_CHECK(hi > lo, ErrorCode::NonOverlappingCurves, "quality ranges do not overlap");
  const double step = (hi - lo) / kBdIntegrationSamples;
  double integral = 0.0;
  for (int i = 0; i <= kBdIntegrationSamples; ++i) {
    const double q = i == kBdIntegrationSamples ? hi : lo + step * i;
    const double weight = (i == 0 || i == kBdIntegrationSamples) ? 0.5 : 1.0;
    integral += weight * (detail::eval(ct, q) - detail::eval(ca, q));
  }
  const double mean_gap = integral * step / (hi - lo);
  return (std::pow(10.0, mean_gap) - 1.0) * 100.0;
}

/// "rate,quality" lines; a non-numeric first line is treated as a header.
inline std::vector<RdPoint> read_rd_csv(std::istream& is) {
  std::vector<RdPoint> pts;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    try {
      pts.push_back({std::stod(a), std::stod(b)});
    } catch (const std::exception&) {
      QTMT_CHECK(first, ErrorCode::InvalidArgument, "bad RD line: " + line);
    }
    first = false;
  }
  return pts;
}

inline void write_rd_csv(std::ostream& os, const std::vector<RdPoint>& pts) {
  os << "rate,quality\n";
  for (const RdPoint& p : pts) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", p.rate, p.quality);
    os << buf;
  }
}

}  // namespace qtmt
