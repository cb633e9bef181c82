// qtmt_cli: partition search, CNN inference, evaluation and dataset export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtmt/qtmt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qtmt;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInvariant = 4 };

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ConfigTooLarge:
      return kUsage;
    case ErrorCode::InvalidSplit:
    case ErrorCode::InvalidTree:
      return kInvariant;
    default:
      return kData;
  }
}

/// Raised when a built-in cross-check fails.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const std::string& path) {
  const auto bytes = io::read_file(path);
  return hex64(io::fnv1a64(bytes.data(), bytes.size()));
}

struct Common {
  int ctu_size = 128;
  int min_cu = 4;
  int min_qt = 8;
  int max_mt_depth = 3;
  std::vector<int> qps{32};
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  unsigned jobs = 1;
  double rate_bits = 8.0;
  double motion_weight = 4.0;

  PartitionConfig partition() const {
    PartitionConfig c{ctu_size, min_cu, min_qt, max_mt_depth};
    c.validate();
    return c;
  }
  CostModel cost() const { return {1.0, rate_bits, motion_weight}; }
};

void add_partition_flags(CLI::App* app, Common& c) {
  app->add_option("--ctu-size", c.ctu_size, "CTU edge in pixels")->capture_default_str();
  app->add_option("--min-cu", c.min_cu, "smallest CU edge")->capture_default_str();
  app->add_option("--min-qt", c.min_qt, "smallest QT leaf edge")->capture_default_str();
  app->add_option("--max-mt-depth", c.max_mt_depth, "multi-type tree depth limit")->capture_default_str();
  app->add_option("--rate-bits", c.rate_bits, "per-CU rate term in bits")->capture_default_str();
  app->add_option("--motion-weight", c.motion_weight, "weight of the motion-deviation distortion")->capture_default_str();
  app->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
}

struct YuvInput {
  std::vector<std::string> paths;
  int width = 0;
  int height = 0;
  int frames = 2;
  int search_range = kDefaultSearchRange;
};

void add_yuv_flags(CLI::App* app, YuvInput& y, bool required) {
  auto* opt = app->add_option("--yuv", y.paths, "planar 4:2:0 8-bit input(s)");
  if (required) opt->required();
  app->add_option("--width", y.width, "frame width");
  app->add_option("--height", y.height, "frame height");
  app->add_option("--frames", y.frames, "frames to read per file")->capture_default_str();
  app->add_option("--search-range", y.search_range, "motion search range in pixels")->capture_default_str();
}

/// One CTU of one inter frame at one QP.
struct CtuRef {
  std::size_t file = 0;
  int frame = 0;
  int index = 0;  // raster index inside the frame
  Region region;
  int qp = 0;
};

struct Corpus {
  std::vector<CtuRef> refs;
  std::vector<FeatureBundle> bundles;
};

/// Frames 1..n-1, each predicted from its predecessor, every full CTU, every QP.
std::vector<CtuRef> list_ctus(const YuvInput& y, const Common& c, int first_ctu = 0, int last_ctu = -1) {
  for (const std::string& p : y.paths) QTMT_CHECK(fs::is_regular_file(p), ErrorCode::IoError, "cannot open " + p);
  QTMT_CHECK(y.width > 0 && y.height > 0, ErrorCode::InvalidArgument, "--width and --height are required with --yuv");
  QTMT_CHECK(y.frames >= 2, ErrorCode::InvalidArgument, "need at least 2 frames (frame 0 is the first reference)");
  const auto grid = ctu_grid(y.width, y.height, c.ctu_size);
  QTMT_CHECK(!grid.empty(), ErrorCode::BadDimensions, "frame smaller than one CTU");
  std::vector<CtuRef> out;
  for (std::size_t f = 0; f < y.paths.size(); ++f)
    for (int fr = 1; fr < y.frames; ++fr)
      for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
        if (i < first_ctu || (last_ctu >= 0 && i > last_ctu)) continue;
        for (int qp : c.qps) out.push_back({f, fr, i, grid[i], qp});
      }
  return out;
}

Corpus build_corpus(const YuvInput& y, const Common& c, std::vector<CtuRef> refs) {
  std::vector<std::vector<Frame>> clips;
  for (const std::string& p : y.paths) clips.push_back(load_yuv(p, y.width, y.height, y.frames));
  const PartitionConfig cfg = c.partition();
  Corpus corpus;
  corpus.bundles.resize(refs.size());
  parallel_for(refs.size(), c.jobs, [&](std::size_t i) {
    const CtuRef& r = refs[i];
    const auto& clip = clips[r.file];
    corpus.bundles[i] = build_bundle(clip[r.frame], clip[r.frame - 1], r.region, r.qp,
                                     temporal_id_for_poc(clip[r.frame].poc), cfg, y.search_range);
  });
  corpus.refs = std::move(refs);
  return corpus;
}

std::vector<FeatureBundle> bundles_from_dataset(const std::string& path, int ctu_size) {
  Dataset ds = read_dataset(path);
  QTMT_CHECK(ds.ctu_size == ctu_size, ErrorCode::ManifestMismatch,
             "dataset ctu_size " + std::to_string(ds.ctu_size) + " but --ctu-size is " + std::to_string(ctu_size));
  std::vector<FeatureBundle> out;
  for (auto& s : ds.samples) out.push_back(std::move(s.bundle));
  return out;
}

json config_echo(const Common& c) {
  return {{"partition",
           {{"ctu_size", c.ctu_size}, {"min_cu_dim", c.min_cu}, {"min_qt_leaf", c.min_qt}, {"max_mt_depth", c.max_mt_depth}}},
          {"cost_model", {{"lambda", "0.57*2^((qp-12)/3)"}, {"per_cu_rate_bits", c.rate_bits}, {"motion_weight", c.motion_weight}}},
          {"qps", c.qps},
          {"seed", c.seed}};
}

class RunWriter {
 public:
  RunWriter(const std::string& command, const Common& c) : dir_(c.out_dir) {
    fs::create_directories(dir_);
    manifest_ = {{"tool", "qtmt_cli"}, {"version", kToolVersion}, {"command", command}, {"config", config_echo(c)}};
    manifest_["inputs"] = json::array();
    manifest_["outputs"] = json::array();
  }

  json& manifest() { return manifest_; }

  void input(const std::string& path) { manifest_["inputs"].push_back({{"path", path}, {"fnv1a64", file_hash(path)}}); }

  void text(const std::string& name, const std::string& body) {
    const std::string path = (fs::path(dir_) / name).string();
    io::write_file(path, std::vector<std::uint8_t>(body.begin(), body.end()));
    manifest_["outputs"].push_back({{"file", name}, {"fnv1a64", hex64(io::fnv1a64(body))}});
  }

  void finish() { text("manifest.json", manifest_.dump(2) + "\n"); }

 private:
  std::string dir_;
  json manifest_;
};

// ---------------------------------------------------------------- commands

int cmd_synth(const Common& c, const YuvInput& y, const std::string& out) {
  QTMT_CHECK(y.width > 0 && y.height > 0 && y.frames > 0, ErrorCode::InvalidArgument, "--width/--height/--frames required");
  write_yuv(out, synthetic_clip(y.width, y.height, y.frames, c.seed));
  std::cout << "wrote " << y.frames << " frames to " << out << "\n";
  return kOk;
}

int cmd_search(const Common& c, const YuvInput& y, const std::string& range, bool enumerate_check,
               const std::string& predictor_spec, double th) {
  int first = 0, last = -1;
  if (!range.empty()) {
    const auto colon = range.find(':');
    QTMT_CHECK(colon != std::string::npos, ErrorCode::InvalidArgument, "--ctu-range expects first:last");
    try {
      first = std::stoi(range.substr(0, colon));
      last = std::stoi(range.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--ctu-range expects integers");
    }
    QTMT_CHECK(first >= 0 && last >= first, ErrorCode::InvalidArgument, "bad --ctu-range");
  }
  const PartitionConfig cfg = c.partition();
  if (enumerate_check)
    QTMT_CHECK(count_partitions(cfg) <= 1'000'000, ErrorCode::ConfigTooLarge,
               "--enumerate-check needs a config with at most 1e6 trees");
  std::optional<Predictor> predictor;
  if (!predictor_spec.empty()) predictor = parse_predictor(predictor_spec, c.seed);
  Corpus corpus = build_corpus(y, c, list_ctus(y, c, first, last));
  QTMT_CHECK(!corpus.bundles.empty(), ErrorCode::EmptyCorpus, "no CTUs selected");

  struct Row {
    SearchStats stats;
    std::string tree;
    bool checked = false;
    bool agree = true;
  };
  std::vector<Row> rows(corpus.bundles.size());
  parallel_for(rows.size(), c.jobs, [&](std::size_t i) {
    const FeatureBundle& b = corpus.bundles[i];
    const CostModel model = c.cost().with_qp(b.qp);
    Row& r = rows[i];
    r.stats = predictor ? pruned_search(b, model, cfg, *predictor, th, i) : full_search(b, model, cfg);
    r.tree = to_string(r.stats.best_tree);
    if (enumerate_check) {
      const DistortionTable table(b);
      Cost best = std::numeric_limits<Cost>::max();
      for (const PartitionTree& t : enumerate_partitions(cfg)) best = std::min(best, tree_cost(t, table, model, cfg));
      r.checked = true;
      r.agree = predictor ? r.stats.best_cost_fixed >= best : r.stats.best_cost_fixed == best;
    }
  });

  std::ostringstream trees, stats;
  trees << "# file frame ctu x y qp tree\n";
  stats << "file,frame,ctu,x,y,qp,tid,nodes_visited,splits_checked,skips_triggered,skip_fallbacks,best_cost,leaves\n";
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CtuRef& ref = corpus.refs[i];
    const Row& r = rows[i];
    trees << ref.file << ' ' << ref.frame << ' ' << ref.index << ' ' << ref.region.x << ' ' << ref.region.y << ' '
          << ref.qp << ' ' << r.tree << '\n';
    stats << ref.file << ',' << ref.frame << ',' << ref.index << ',' << ref.region.x << ',' << ref.region.y << ','
          << ref.qp << ',' << corpus.bundles[i].temporal_id << ',' << r.stats.nodes_visited << ','
          << r.stats.splits_checked << ',' << r.stats.skips_triggered << ',' << r.stats.skip_fallbacks << ','
          << format_double(r.stats.best_cost, "%.6f") << ',' << count_leaves(r.stats.best_tree) << '\n';
    if (r.checked && !r.agree) ++mismatches;
  }
  RunWriter out("search", c);
  for (const auto& p : y.paths) out.input(p);
  out.manifest()["predictor"] = predictor ? json(predictor_name(*predictor)) : json("full");
  out.manifest()["th"] = th;
  out.manifest()["ctu_range"] = range;
  out.manifest()["frames"] = y.frames;
  out.manifest()["search_range"] = y.search_range;
  out.text("trees.txt", trees.str());
  out.text("stats.csv", stats.str());
  if (enumerate_check) out.manifest()["enumerate_check"] = {{"ctus", rows.size()}, {"mismatches", mismatches}};
  out.finish();
  std::cout << "searched " << rows.size() << " CTUs\n";
  if (mismatches) throw InvariantViolation(std::to_string(mismatches) + " CTUs disagree with brute force");
  if (enumerate_check) std::cout << "enumerate-check: all " << rows.size() << " CTUs match brute force\n";
  return kOk;
}

int cmd_predict(const Common& c, const YuvInput& y, const std::string& dataset, const std::string& weights_path) {
  const nn::WeightStore weights = nn::load_weights(weights_path);
  std::vector<FeatureBundle> bundles;
  if (!dataset.empty()) {
    Dataset ds = read_dataset(dataset);
    for (auto& s : ds.samples) bundles.push_back(std::move(s.bundle));
  } else {
    QTMT_CHECK(!y.paths.empty(), ErrorCode::InvalidArgument, "need --dataset or --yuv");
    bundles = build_corpus(y, c, list_ctus(y, c)).bundles;
  }
  std::vector<PredictedDepthMap> maps(bundles.size());
  parallel_for(bundles.size(), c.jobs, [&](std::size_t i) { maps[i] = nn::forward(bundles[i], weights); });
  std::ostringstream os;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    os << "# sample " << i << '\n';
    write_map_csv(os, maps[i]);
  }
  RunWriter out("predict", c);
  out.input(weights_path);
  if (!dataset.empty()) out.input(dataset);
  for (const auto& p : y.paths) out.input(p);
  out.manifest()["weights"] = {{"variant", weights.manifest.value("variant", "")}, {"manifest_fnv1a64", hex64(weights.manifest_hash)}};
  out.text("maps.csv", os.str());
  out.finish();
  std::cout << "predicted " << maps.size() << " maps\n";
  return kOk;
}

int cmd_eval(const Common& c, const YuvInput& y, const std::string& dataset, const std::vector<std::string>& specs,
             const std::vector<double>& ths) {
  QTMT_CHECK(!specs.empty(), ErrorCode::InvalidArgument, "at least one --predictor is required");
  QTMT_CHECK(!ths.empty(), ErrorCode::InvalidArgument, "--th list is empty");
  const PartitionConfig cfg = c.partition();
  std::vector<FeatureBundle> corpus;
  if (!dataset.empty()) corpus = bundles_from_dataset(dataset, c.ctu_size);
  else corpus = build_corpus(y, c, list_ctus(y, c)).bundles;
  std::vector<Predictor> predictors;
  for (const auto& s : specs) predictors.push_back(parse_predictor(s, c.seed));
  const EvalReport report = evaluate(corpus, c.cost(), cfg, predictors, ths, c.jobs);

  std::ostringstream csv, trade;
  write_report_csv(csv, report);
  write_tradeoff_csv(trade, report);
  RunWriter out("eval", c);
  for (const auto& p : y.paths) out.input(p);
  if (!dataset.empty()) out.input(dataset);
  for (const auto& s : specs)
    if (s.rfind("cnn:", 0) == 0) out.input(s.substr(4));
  out.manifest()["predictors"] = specs;
  out.manifest()["th"] = ths;
  out.manifest()["ctus"] = corpus.size();
  out.text("report.csv", csv.str());
  out.text("report.json", report_to_json(report).dump(2) + "\n");
  out.text("tradeoff.csv", trade.str());
  out.finish();
  std::cout << csv.str();
  return kOk;
}

int cmd_dataset(const Common& c, const YuvInput& y, const std::string& out_path, std::size_t samples) {
  std::vector<CtuRef> all = list_ctus(y, c);
  // Seeded Fisher-Yates with an explicit modulo draw: identical on every platform.
  std::mt19937_64 rng(c.seed);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng() % i]);
  if (samples > 0 && samples < all.size()) all.resize(samples);
  std::stable_sort(all.begin(), all.end(), [](const CtuRef& a, const CtuRef& b) {
    return std::tie(a.file, a.frame, a.index, a.qp) < std::tie(b.file, b.frame, b.index, b.qp);
  });
  Corpus corpus = build_corpus(y, c, all);
  const PartitionConfig cfg = c.partition();
  std::vector<QtDepthMap> labels(corpus.bundles.size());
  parallel_for(labels.size(), c.jobs, [&](std::size_t i) {
    const FeatureBundle& b = corpus.bundles[i];
    labels[i] = extract_map(full_search(b, c.cost().with_qp(b.qp), cfg).best_tree);
  });
  const std::string target = (fs::path(c.out_dir) / out_path).string();
  fs::create_directories(c.out_dir);
  const std::size_t n = emit_dataset(corpus.bundles, labels, target, c.ctu_size);
  RunWriter out("dataset", c);
  for (const auto& p : y.paths) out.input(p);
  out.manifest()["samples_requested"] = samples;
  out.manifest()["records"] = n;
  out.manifest()["dataset"] = {{"file", out_path}, {"fnv1a64", file_hash(target)}};
  out.finish();
  std::cout << "wrote " << n << " records to " << target << "\n";
  return kOk;
}

int cmd_init_weights(const Common& c, const std::string& out, bool zero, bool no_resi, bool no_mv, bool no_tid) {
  const auto cfg = nn::MbmpConfig::standard(c.ctu_size).ablated(no_resi, no_mv, no_tid);
  nn::save_weights(nn::make_weights(cfg, zero ? nn::WeightInit::Zero : nn::WeightInit::Random, c.seed), out);
  std::cout << "wrote " << cfg.variant << " weights (" << nn::plan_architecture(cfg).macs << " MACs/CTU) to " << out << "\n";
  return kOk;
}

int cmd_bd(const std::string& anchor, const std::string& test) {
  auto load = [](const std::string& p) {
    std::ifstream in(p);
    QTMT_CHECK(in.good(), ErrorCode::IoError, "cannot open " + p);
    return read_rd_csv(in);
  };
  std::cout << format_double(bd_rate(load(anchor), load(test)), "%.4f") << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QTMT partition search with CNN-driven early skipping"};
  app.require_subcommand(1);
  Common c;
  YuvInput y;

  auto* synth = app.add_subcommand("synth", "write a deterministic synthetic 4:2:0 clip");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output .yuv path")->required();
  synth->add_option("--width", y.width)->required();
  synth->add_option("--height", y.height)->required();
  synth->add_option("--frames", y.frames)->required();
  synth->add_option("--seed", c.seed)->capture_default_str();

  auto* search = app.add_subcommand("search", "RD search per CTU; writes trees.txt, stats.csv, manifest.json");
  std::string range, search_pred;
  bool enum_check = false;
  double search_th = 0.0;
  add_yuv_flags(search, y, true);
  add_partition_flags(search, c);
  search->add_option("--qp", c.qps, "QP list")->delimiter(',')->capture_default_str();
  search->add_option("--ctu-range", range, "first:last raster CTU index within each frame");
  search->add_option("--predictor", search_pred, "oracle | noisy:<sigma> | const:<depth> | cnn:<weights>; omit for full search");
  search->add_option("--th", search_th, "skip threshold for --predictor")->capture_default_str();
  search->add_flag("--enumerate-check", enum_check, "cross-check every CTU against brute-force enumeration");
  search->add_option("--seed", c.seed)->capture_default_str();
  search->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* predict = app.add_subcommand("predict", "run the CNN; writes maps.csv, manifest.json");
  std::string pred_dataset, pred_weights;
  add_yuv_flags(predict, y, false);
  add_partition_flags(predict, c);
  predict->add_option("--dataset", pred_dataset, "dataset file to read bundles from");
  predict->add_option("--weights", pred_weights, "MBMP weight file")->required();
  predict->add_option("--qp", c.qps, "QP list for --yuv input")->delimiter(',');
  predict->add_option("--seed", c.seed)->capture_default_str();
  predict->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* eval = app.add_subcommand("eval", "full vs pruned search; writes report.csv/json, tradeoff.csv");
  std::string eval_dataset;
  std::vector<std::string> eval_preds;
  std::vector<double> eval_ths{0.0, 0.1, 0.4};
  add_yuv_flags(eval, y, false);
  add_partition_flags(eval, c);
  eval->add_option("--dataset", eval_dataset, "dataset file to read bundles from");
  eval->add_option("--predictor", eval_preds, "repeatable: oracle | noisy:<sigma> | const:<depth> | cnn:<weights>")->required();
  eval->add_option("--th", eval_ths, "threshold list")->delimiter(',')->capture_default_str();
  eval->add_option("--qp", c.qps, "QP list for --yuv input")->delimiter(',')->capture_default_str();
  eval->add_option("--seed", c.seed)->capture_default_str();
  eval->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* dataset = app.add_subcommand("dataset", "sample CTUs and write a training dataset");
  std::string ds_out = "dataset.qtds";
  std::size_t ds_samples = 0;
  add_yuv_flags(dataset, y, true);
  add_partition_flags(dataset, c);
  dataset->add_option("--qp", c.qps, "QP list")->delimiter(',')->capture_default_str();
  dataset->add_option("--out", ds_out, "file name inside --out-dir")->capture_default_str();
  dataset->add_option("--samples", ds_samples, "number of CTUs to draw (0 = all)")->capture_default_str();
  dataset->add_option("--seed", c.seed)->capture_default_str();
  dataset->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* init = app.add_subcommand("init-weights", "write zero or seeded random MBMP weights");
  std::string init_out;
  bool zero = false, no_resi = false, no_mv = false, no_tid = false;
  init->add_option("--out", init_out)->required();
  init->add_option("--ctu-size", c.ctu_size)->capture_default_str();
  init->add_option("--seed", c.seed)->capture_default_str();
  init->add_flag("--zero", zero, "all-zero parameters");
  init->add_flag("--no-resi", no_resi, "drop the residual input");
  init->add_flag("--no-mvfield", no_mv, "drop the motion-field input");
  init->add_flag("--no-tempid", no_tid, "drop the temporal-ID input");

  auto* bd = app.add_subcommand("bd", "BD-rate of a test RD curve against an anchor (rate,quality CSVs)");
  std::string anchor, test;
  bd->add_option("--anchor", anchor)->required();
  bd->add_option("--test", test)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(c, y, synth_out);
    if (*search) return cmd_search(c, y, range, enum_check, search_pred, search_th);
    if (*predict) return cmd_predict(c, y, pred_dataset, pred_weights);
    if (*eval) return cmd_eval(c, y, eval_dataset, eval_preds, eval_ths);
    if (*dataset) return cmd_dataset(c, y, ds_out, ds_samples);
    if (*init) return cmd_init_weights(c, init_out, zero, no_resi, no_mv, no_tid);
    if (*bd) return cmd_bd(anchor, test);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
