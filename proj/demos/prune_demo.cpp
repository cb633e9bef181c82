// Full vs map-pruned partition search on a synthetic clip.
//
//   prune_demo [--width 128] [--height 128] [--frames 3] [--ctu-size 64] [--seed 1]

#include <cstdio>

#include <CLI11.hpp>

#include "qtmt/qtmt.hpp"

int main(int argc, char** argv) {
  using namespace qtmt;
  CLI::App app{"prune demo"};
  int width = 128, height = 128, frames = 3, ctu = 64;
  std::uint64_t seed = 1;
  app.add_option("--width", width)->capture_default_str();
  app.add_option("--height", height)->capture_default_str();
  app.add_option("--frames", frames)->capture_default_str();
  app.add_option("--ctu-size", ctu)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    PartitionConfig cfg;
    cfg.ctu_size = ctu;
    cfg.validate();
    const auto clip = synthetic_clip(width, height, frames, seed);
    std::vector<FeatureBundle> corpus;
    for (int f = 1; f < frames; ++f)
      for (const Region& r : ctu_grid(width, height, ctu))
        corpus.push_back(build_bundle(clip[f], clip[f - 1], r, kTestQps[corpus.size() % 4], temporal_id_for_poc(f), cfg));

    // One CTU in detail.
    const CostModel m = CostModel::for_qp(corpus[0].qp);
    const SearchStats full = full_search(corpus[0], m, cfg);
    const QtDepthMap truth = extract_map(full.best_tree);
    std::printf("CTU 0 at QP %d: best tree %s\n", corpus[0].qp, to_string(full.best_tree).c_str());
    std::printf("QT depth map (%dx%d):\n", truth.dim(), truth.dim());
    for (int r = 0; r < truth.dim(); ++r) {
      for (int c = 0; c < truth.dim(); ++c) std::printf(" %d", truth.at(r, c));
      std::printf("\n");
    }
    const SearchStats pr = pruned_search(corpus[0], m, cfg, to_predicted(truth), 0.0);
    std::printf("full search: %llu checks, pruned with its own map: %llu checks, same cost: %s\n\n",
                (unsigned long long)full.splits_checked, (unsigned long long)pr.splits_checked,
                pr.best_cost_fixed == full.best_cost_fixed ? "yes" : "no");

    const std::vector<Predictor> preds = {OraclePredictor{}, NoisyOraclePredictor{0.5, seed}, NoisyOraclePredictor{1.0, seed},
                                          ConstantPredictor{1.0}};
    const EvalReport rep = evaluate(corpus, CostModel{}, cfg, preds, {0.0, 0.1, 0.4});
    std::printf("%zu CTUs, ctu %d\n%-12s %5s %10s %12s %10s\n", corpus.size(), ctu, "predictor", "th", "ts_proxy",
                "inflation%", "map_l1");
    for (const EvalRow& r : rep.rows)
      std::printf("%-12s %5.2f %10.4f %12.4f %10.4f\n", r.predictor.c_str(), r.th, r.ts_proxy, 100 * r.cost_inflation,
                  r.map_l1);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
