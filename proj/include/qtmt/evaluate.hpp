#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtmt/metrics.hpp"
#include "qtmt/parallel.hpp"
#include "qtmt/predictor.hpp"
#include "qtmt/search.hpp"

namespace qtmt {

/// Corpus totals for one predictor at one threshold.
struct EvalRow {
  std::string predictor;
  double th = 0;
  std::size_t ctus = 0;
  std::uint64_t nodes_full = 0;
  std::uint64_t nodes_pruned = 0;
  std::uint64_t splits_full = 0;
  std::uint64_t splits_pruned = 0;
  std::uint64_t skips = 0;
  double ts_proxy = 0;        // relative reduction of RD checks
  std::optional<double> ts_per_qp;  // four-QP averaged form, when the corpus covers QP 22/27/32/37
  double cost_full = 0;
  double cost_pruned = 0;
  double cost_inflation = 0;  // (cost_pruned - cost_full) / cost_full
  double map_l1 = 0;          // mean L1 between predicted and ground-truth maps
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

namespace detail {

struct BundleResult {
  SearchStats full;
  std::vector<double> l1;                      // per predictor
  std::vector<std::vector<SearchStats>> pruned;  // [predictor][th]
};

inline int qp_slot(int qp) {
  for (int i = 0; i < 4; ++i)
    if (kTestQps[i] == qp) return i;
  return -1;
}

}  // namespace detail

/// Runs the full search once per CTU and the pruned search for every
/// predictor x threshold. The lambda of `base` is replaced by the one for
/// each bundle's QP.
inline EvalReport evaluate(const std::vector<FeatureBundle>& corpus, const CostModel& base, const PartitionConfig& cfg,
                           const std::vector<Predictor>& predictors, const std::vector<double>& thresholds,
                           unsigned jobs = 1) {
  QTMT_CHECK(!corpus.empty(), ErrorCode::EmptyCorpus, "corpus has no CTUs");
  QTMT_CHECK(!predictors.empty() && !thresholds.empty(), ErrorCode::InvalidArgument, "need predictors and thresholds");
  std::vector<detail::BundleResult> results(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const FeatureBundle& b = corpus[i];
    const CostModel model = base.with_qp(b.qp);
    detail::BundleResult& r = results[i];
    r.full = full_search(b, model, cfg);
    const QtDepthMap truth = extract_map(r.full.best_tree);
    for (const Predictor& p : predictors) {
      const PredictedDepthMap map = predict(p, b, &truth, i, cfg);
      r.l1.push_back(map_l1_distance(map, truth));
      std::vector<SearchStats> per_th;
      for (double th : thresholds) {
        SearchStats s = pruned_search(b, model, cfg, map, th);
        s.best_tree = {};  // trees are not needed for totals
        per_th.push_back(std::move(s));
      }
      r.pruned.push_back(std::move(per_th));
    }
    r.full.best_tree = {};
  });

  EvalReport report;
  for (std::size_t p = 0; p < predictors.size(); ++p) {
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      EvalRow row;
      row.predictor = predictor_name(predictors[p]);
      row.th = thresholds[t];
      row.ctus = corpus.size();
      Cost cf = 0, cp = 0;
      double l1 = 0;
      std::array<std::uint64_t, 4> qf{}, qpr{};
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& r = results[i];
        const SearchStats& s = r.pruned[p][t];
        row.nodes_full += r.full.nodes_visited;
        row.nodes_pruned += s.nodes_visited;
        row.splits_full += r.full.splits_checked;
        row.splits_pruned += s.splits_checked;
        row.skips += s.skips_triggered;
        cf += r.full.best_cost_fixed;
        cp += s.best_cost_fixed;
        l1 += r.l1[p];
        if (const int slot = detail::qp_slot(corpus[i].qp); slot >= 0) {
          qf[slot] += r.full.splits_checked;
          qpr[slot] += s.splits_checked;
        }
      }
      row.ts_proxy = ts_proxy(row.splits_full, row.splits_pruned);
      if (std::all_of(qf.begin(), qf.end(), [](std::uint64_t v) { return v > 0; }))
        row.ts_per_qp = time_saving(timing_from_counts(qf, qpr));
      row.cost_full = from_fixed(cf);
      row.cost_pruned = from_fixed(cp);
      row.cost_inflation = cf > 0 ? static_cast<double>(cp - cf) / static_cast<double>(cf) : 0.0;
      row.map_l1 = l1 / static_cast<double>(corpus.size());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

inline std::string format_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "predictor,th,ctus,nodes_full,nodes_pruned,splits_full,splits_pruned,skips,ts_proxy,ts_per_qp,"
        "cost_full,cost_pruned,cost_inflation,map_l1\n";
  for (const EvalRow& r : report.rows) {
    os << r.predictor << ',' << format_double(r.th, "%g") << ',' << r.ctus << ',' << r.nodes_full << ','
       << r.nodes_pruned << ',' << r.splits_full << ',' << r.splits_pruned << ',' << r.skips << ','
       << format_double(r.ts_proxy) << ',' << (r.ts_per_qp ? format_double(*r.ts_per_qp) : "") << ','
       << format_double(r.cost_full, "%.4f") << ',' << format_double(r.cost_pruned, "%.4f") << ','
       << format_double(r.cost_inflation, "%.8f") << ',' << format_double(r.map_l1) << '\n';
  }
}

/// Trade-off points: complexity reduction against quality loss.
inline void write_tradeoff_csv(std::ostream& os, const EvalReport& report) {
  os << "predictor,th,ts_proxy_percent,cost_inflation_percent\n";
  for (const EvalRow& r : report.rows)
    os << r.predictor << ',' << format_double(r.th, "%g") << ',' << format_double(100.0 * r.ts_proxy, "%.4f") << ','
       << format_double(100.0 * r.cost_inflation, "%.6f") << '\n';
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const EvalRow& r : report.rows) {
    rows.push_back({{"predictor", r.predictor},
                    {"th", r.th},
                    {"ctus", r.ctus},
                    {"nodes_full", r.nodes_full},
                    {"nodes_pruned", r.nodes_pruned},
                    {"splits_full", r.splits_full},
                    {"splits_pruned", r.splits_pruned},
                    {"skips", r.skips},
                    {"ts_proxy", r.ts_proxy},
                    {"ts_per_qp", r.ts_per_qp ? nlohmann::json(*r.ts_per_qp) : nlohmann::json(nullptr)},
                    {"cost_full", r.cost_full},
                    {"cost_pruned", r.cost_pruned},
                    {"cost_inflation", r.cost_inflation},
                    {"map_l1", r.map_l1}});
  }
  return {{"rows", std::move(rows)}};
}

}  // namespace qtmt
