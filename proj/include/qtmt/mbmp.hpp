#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qtmt/features.hpp"
#include "qtmt/layers.hpp"
#include "qtmt/qtdepth.hpp"
#include "qtmt/weights.hpp"

namespace qtmt::nn {

/// One entry of the architecture manifest.
struct LayerSpec {
  std::string name;
  std::string kind;  // conv2d | fusion | resblock | maxpool | multipool
  int kernel = 0;
  int filters = 0;
  int stride = 1;
  std::vector<int> pool;
  std::string activation;  // relu | linear (conv2d only)

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Which input features feed the network. A disabled feature is zeroed, so
/// ablated variants keep the full architecture.
struct InputFlags {
  bool luma = true;
  bool residual = true;
  bool mvfield = true;
  bool qp = true;
  bool tempid = true;
  friend bool operator==(const InputFlags&, const InputFlags&) = default;
};

/// Divisors applied to raw features before inference.
struct Normalization {
  int luma = 255;
  int residual = 255;
  int mv = kDefaultSearchRange;
  int qp = 63;
  int tempid = 5;
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Multi-branch multi-pooling network description.
///
/// Layers run in order. Layers before the `fusion` entry act on the pixel
/// branch (luma and residual planes, S x S x 2). `fusion` resamples the 4x4
/// motion field to the pixel branch's grid by nearest neighbour, broadcasts
/// QP and temporal ID as two constant planes, and concatenates
/// [pixel, mv_x, mv_y, qp, tid] along channels. The last layer must produce
/// an (S/8) x (S/8) x 1 map.
struct MbmpConfig {
  int ctu_size = 128;
  std::string variant = "full";
  InputFlags inputs;
  Normalization norm;
  std::vector<LayerSpec> layers;

  /// Default architecture: 4x4/4 stem, three 3x3x16 residual blocks, 2x2 max
  /// pool down to the 8x8-cell grid, multi-pooling over {1,2,4,8} cells
  /// (CU sizes 8..64 px; sizes that do not divide the grid are dropped), and
  /// a 32 -> 16 -> 1 head of 3x3 convolutions with a linear output.
  static MbmpConfig standard(int ctu_size) {
    QTMT_CHECK(ctu_size >= 32 && is_pow2(ctu_size), ErrorCode::InvalidArgument, "network needs ctu_size >= 32");
    MbmpConfig c;
    c.ctu_size = ctu_size;
    std::vector<int> pools;
    for (int k : {1, 2, 4, 8})
      if ((ctu_size / kCellSize) % k == 0) pools.push_back(k);
    c.layers = {
        {"stem", "conv2d", 4, 8, 4, {}, "relu"},
        {"fusion", "fusion", 0, 0, 1, {}, ""},
        {"res1", "resblock", 3, 16, 1, {}, ""},
        {"res2", "resblock", 3, 16, 1, {}, ""},
        {"res3", "resblock", 3, 16, 1, {}, ""},
        {"down", "maxpool", 0, 0, 1, {2}, ""},
        {"multipool", "multipool", 0, 0, 1, pools, ""},
        {"head1", "conv2d", 3, 32, 1, {}, "relu"},
        {"head2", "conv2d", 3, 16, 1, {}, "relu"},
        {"head3", "conv2d", 3, 1, 1, {}, "linear"},
    };
    return c;
  }

  /// Same architecture with some inputs zeroed (ablation variants).
  MbmpConfig ablated(bool no_resi, bool no_mvfield, bool no_tempid) const {
    MbmpConfig c = *this;
    std::string v;
    if (no_resi) c.inputs.residual = false, v += "no_resi";
    if (no_mvfield) c.inputs.mvfield = false, v += std::string(v.empty() ? "" : "+") + "no_mvfield";
    if (no_tempid) c.inputs.tempid = false, v += std::string(v.empty() ? "" : "+") + "no_tempid";
    if (!v.empty()) c.variant = v;
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json layers_json = nlohmann::json::array();
    for (const LayerSpec& l : layers) {
      nlohmann::json j = {{"name", l.name}, {"kind", l.kind}, {"kernel", l.kernel}, {"filters", l.filters},
                          {"stride", l.stride}, {"pool", l.pool}};
      if (!l.activation.empty()) j["activation"] = l.activation;
      layers_json.push_back(std::move(j));
    }
    return {{"format", "mbmp"},
            {"ctu_size", ctu_size},
            {"variant", variant},
            {"inputs",
             {{"luma", inputs.luma},
              {"residual", inputs.residual},
              {"mvfield", inputs.mvfield},
              {"qp", inputs.qp},
              {"tempid", inputs.tempid}}},
            {"normalization",
             {{"luma", norm.luma}, {"residual", norm.residual}, {"mv", norm.mv}, {"qp", norm.qp}, {"tempid", norm.tempid}}},
            {"layers", std::move(layers_json)}};
  }

  static MbmpConfig from_json(const nlohmann::json& j) {
    try {
      QTMT_CHECK(j.at("format").get<std::string>() == "mbmp", ErrorCode::ManifestMismatch, "manifest format is not mbmp");
      MbmpConfig c;
      c.ctu_size = j.at("ctu_size").get<int>();
      c.variant = j.at("variant").get<std::string>();
      const auto& in = j.at("inputs");
      c.inputs = {in.at("luma").get<bool>(), in.at("residual").get<bool>(), in.at("mvfield").get<bool>(),
                  in.at("qp").get<bool>(), in.at("tempid").get<bool>()};
      const auto& nm = j.at("normalization");
      c.norm = {nm.at("luma").get<int>(), nm.at("residual").get<int>(), nm.at("mv").get<int>(), nm.at("qp").get<int>(),
                nm.at("tempid").get<int>()};
      for (const auto& lj : j.at("layers")) {
        LayerSpec l;
        l.name = lj.at("name").get<std::string>();
        l.kind = lj.at("kind").get<std::string>();
        l.kernel = lj.at("kernel").get<int>();
        l.filters = lj.at("filters").get<int>();
        l.stride = lj.at("stride").get<int>();
        l.pool = lj.at("pool").get<std::vector<int>>();
        l.activation = lj.value("activation", "");
        c.layers.push_back(std::move(l));
      }
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ManifestMismatch, std::string("malformed manifest: ") + e.what());
    }
  }

  friend bool operator==(const MbmpConfig&, const MbmpConfig&) = default;
};

struct ParamShape {
  std::string name;
  std::vector<int> shape;
};

/// Result of walking the manifest without data: required parameters and
/// multiply-accumulate count of one forward pass.
struct ArchitecturePlan {
  std::vector<ParamShape> params;
  std::uint64_t macs = 0;
};

inline ArchitecturePlan plan_architecture(const MbmpConfig& cfg) {
  QTMT_CHECK(cfg.ctu_size >= 8 && is_pow2(cfg.ctu_size), ErrorCode::ManifestMismatch, "bad ctu_size in manifest");
  QTMT_CHECK(cfg.norm.luma > 0 && cfg.norm.residual > 0 && cfg.norm.mv > 0 && cfg.norm.qp > 0 && cfg.norm.tempid > 0,
             ErrorCode::ManifestMismatch, "normalization divisors must be positive");
  ArchitecturePlan plan;
  int h = cfg.ctu_size, w = cfg.ctu_size, c = 2;
  bool fused = false;
  auto conv = [&](const std::string& prefix, int k, int cin, int cout, int stride) {
    QTMT_CHECK(k > 0 && cout > 0, ErrorCode::ManifestMismatch, prefix + ": kernel and filters must be positive");
    const ConvGeometry g = conv_geometry(h, w, k, k, stride, Padding::Same);
    plan.params.push_back({prefix + "/kernel", {k, k, cin, cout}});
    plan.params.push_back({prefix + "/bias", {1, 1, cout}});
    plan.macs += conv2d_macs(g.out_h, g.out_w, k, k, cin, cout);
    return g;
  };
  for (const LayerSpec& l : cfg.layers) {
    if (l.kind == "conv2d") {
      QTMT_CHECK(l.activation == "relu" || l.activation == "linear", ErrorCode::ManifestMismatch,
                 l.name + ": activation must be relu or linear");
      const ConvGeometry g = conv(l.name, l.kernel, c, l.filters, l.stride);
      h = g.out_h, w = g.out_w, c = l.filters;
    } else if (l.kind == "fusion") {
      QTMT_CHECK(!fused, ErrorCode::ManifestMismatch, "more than one fusion layer");
      fused = true;
      c += 4;
    } else if (l.kind == "resblock") {
      QTMT_CHECK(fused, ErrorCode::ManifestMismatch, l.name + ": residual blocks must follow fusion");
      QTMT_CHECK(l.stride == 1, ErrorCode::ManifestMismatch, l.name + ": residual blocks use stride 1");
      conv(l.name + "/conv1", l.kernel, c, l.filters, 1);
      conv(l.name + "/conv2", l.kernel, l.filters, l.filters, 1);
      if (c != l.filters) conv(l.name + "/proj", 1, c, l.filters, 1);
      c = l.filters;
    } else if (l.kind == "maxpool") {
      QTMT_CHECK(l.pool.size() == 1 && l.pool[0] > 0 && h % l.pool[0] == 0 && w % l.pool[0] == 0,
                 ErrorCode::ManifestMismatch, l.name + ": pool size must divide the grid");
      h /= l.pool[0], w /= l.pool[0];
    } else if (l.kind == "multipool") {
      QTMT_CHECK(!l.pool.empty(), ErrorCode::ManifestMismatch, l.name + ": empty pool set");
      for (int k : l.pool)
        QTMT_CHECK(k > 0 && h % k == 0 && w % k == 0, ErrorCode::ManifestMismatch,
                   l.name + ": pool size " + std::to_string(k) + " does not divide the grid");
      c *= static_cast<int>(l.pool.size());
    } else {
      throw Error(ErrorCode::ManifestMismatch, "unknown layer kind '" + l.kind + "'");
    }
  }
  QTMT_CHECK(fused, ErrorCode::ManifestMismatch, "manifest has no fusion layer");
  QTMT_CHECK(h == cfg.ctu_size / kCellSize && w == h && c == 1, ErrorCode::ManifestMismatch,
             "network output is " + shape_string({h, w, c}) + ", expected " +
                 shape_string({cfg.ctu_size / kCellSize, cfg.ctu_size / kCellSize, 1}));
  return plan;
}

/// Checks that `store` carries exactly the parameters its manifest needs.
inline MbmpConfig validate_weights(const WeightStore& store) {
  const MbmpConfig cfg = MbmpConfig::from_json(store.manifest);
  const ArchitecturePlan plan = plan_architecture(cfg);
  QTMT_CHECK(plan.params.size() == store.params.size(), ErrorCode::ShapeMismatch,
             "expected " + std::to_string(plan.params.size()) + " tensors, file has " +
                 std::to_string(store.params.size()));
  for (const ParamShape& p : plan.params) {
    auto it = store.params.find(p.name);
    QTMT_CHECK(it != store.params.end(), ErrorCode::ShapeMismatch, "missing tensor " + p.name);
    QTMT_CHECK(it->second.shape() == p.shape, ErrorCode::ShapeMismatch,
               p.name + " has shape " + shape_string(it->second.shape()) + ", expected " + shape_string(p.shape));
  }
  return cfg;
}

inline WeightStore load_weights(const std::string& path) {
  WeightStore store = read_weight_file(path);
  validate_weights(store);
  return store;
}

enum class WeightInit { Zero, Random };

/// Zero or seeded He-uniform parameters for `cfg`. Uses its own uniform
/// mapping so values are identical across standard libraries.
inline WeightStore make_weights(const MbmpConfig& cfg, WeightInit init, std::uint64_t seed = 0) {
  const ArchitecturePlan plan = plan_architecture(cfg);
  WeightStore store;
  store.manifest = cfg.to_json();
  store.manifest_hash = io::fnv1a64(manifest_text(store.manifest));
  std::mt19937_64 rng(seed);
  auto uniform = [&](double limit) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return static_cast<float>((2.0 * u - 1.0) * limit);
  };
  for (const ParamShape& p : plan.params) {
    Tensor t(p.shape);
    if (init == WeightInit::Random) {
      const bool is_kernel = p.shape.size() == 4;
      const double fan_in = is_kernel ? double(p.shape[0]) * p.shape[1] * p.shape[2] : 1.0;
      const double limit = is_kernel ? std::sqrt(6.0 / fan_in) : 0.05;
      for (float& v : t.data()) v = uniform(limit);
    }
    store.params.emplace(p.name, std::move(t));
  }
  return store;
}

/// Network input planes after normalization and input masking.
struct NetworkInputs {
  Tensor pixels;   // S x S x 2: luma, residual
  Tensor motion;   // S/4 x S/4 x 2: dx, dy
  float qp = 0;
  float tempid = 0;
};

inline NetworkInputs prepare_inputs(const FeatureBundle& b, const MbmpConfig& cfg) {
  const int s = b.ctu_size;
  NetworkInputs in{Tensor(s, s, 2), Tensor(s / kSubblock, s / kSubblock, 2)};
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      if (cfg.inputs.luma) in.pixels.at(y, x, 0) = static_cast<float>(b.luma_at(x, y)) / static_cast<float>(cfg.norm.luma);
      if (cfg.inputs.residual)
        in.pixels.at(y, x, 1) = static_cast<float>(b.residual_at(x, y)) / static_cast<float>(cfg.norm.residual);
    }
  if (cfg.inputs.mvfield)
    for (int r = 0; r < b.motion.dim; ++r)
      for (int c = 0; c < b.motion.dim; ++c) {
        in.motion.at(r, c, 0) = static_cast<float>(b.motion.at(r, c).dx) / static_cast<float>(cfg.norm.mv);
        in.motion.at(r, c, 1) = static_cast<float>(b.motion.at(r, c).dy) / static_cast<float>(cfg.norm.mv);
      }
  if (cfg.inputs.qp) in.qp = static_cast<float>(b.qp) / static_cast<float>(cfg.norm.qp);
  if (cfg.inputs.tempid) in.tempid = static_cast<float>(b.temporal_id) / static_cast<float>(cfg.norm.tempid);
  return in;
}

inline std::span<const float> bias_of(const WeightStore& w, const std::string& prefix) {
  return w.param(prefix + "/bias").data();
}

inline ResBlockParams resblock_params(const WeightStore& w, const std::string& name) {
  ResBlockParams p{w.param(name + "/conv1/kernel"), w.param(name + "/conv1/bias").data(),
                   w.param(name + "/conv2/kernel"), w.param(name + "/conv2/bias").data(),
                   std::nullopt, {}};
  if (auto it = w.params.find(name + "/proj/kernel"); it != w.params.end()) {
    p.proj_kernel = it->second;
    p.proj_bias = w.param(name + "/proj/bias").data();
  }
  return p;
}

/// Predicted QT-depth map for one CTU. The weights' own manifest defines the
/// network; `bundle.ctu_size` must match it.
inline PredictedDepthMap forward(const FeatureBundle& bundle, const WeightStore& weights) {
  const MbmpConfig cfg = MbmpConfig::from_json(weights.manifest);
  QTMT_CHECK(bundle.ctu_size == cfg.ctu_size, ErrorCode::ManifestMismatch,
             "bundle ctu_size " + std::to_string(bundle.ctu_size) + " but network expects " +
                 std::to_string(cfg.ctu_size));
  const NetworkInputs in = prepare_inputs(bundle, cfg);
  Tensor x = in.pixels;
  for (const LayerSpec& l : cfg.layers) {
    if (l.kind == "conv2d") {
      x = conv2d(x, weights.param(l.name + "/kernel"), bias_of(weights, l.name), l.stride, Padding::Same);
      if (l.activation == "relu") x = relu(std::move(x));
    } else if (l.kind == "fusion") {
      const Tensor mv = resize_nearest(in.motion, x.height(), x.width());
      Tensor scalars(x.height(), x.width(), 2);
      for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx) {
          scalars.at(y, xx, 0) = in.qp;
          scalars.at(y, xx, 1) = in.tempid;
        }
      x = concat_channels({&x, &mv, &scalars});
    } else if (l.kind == "resblock") {
      x = resblock(x, resblock_params(weights, l.name));
    } else if (l.kind == "maxpool") {
      x = maxpool(x, l.pool.at(0));
    } else if (l.kind == "multipool") {
      x = multi_pool(x, l.pool);
    } else {
      throw Error(ErrorCode::ManifestMismatch, "unknown layer kind '" + l.kind + "'");
    }
  }
  const int dim = cfg.ctu_size / kCellSize;
  QTMT_CHECK(x.height() == dim && x.width() == dim && x.channels() == 1, ErrorCode::ManifestMismatch,
             "network produced " + shape_string(x.shape()));
  QTMT_CHECK(x.all_finite(), ErrorCode::ShapeMismatch, "non-finite network output");
  PredictedDepthMap out(dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) out.at(r, c) = static_cast<double>(x.at(r, c, 0));
  return out;
}

/// As above, additionally requiring the weights to describe exactly `cfg`.
inline PredictedDepthMap forward(const FeatureBundle& bundle, const WeightStore& weights, const MbmpConfig& cfg) {
  QTMT_CHECK(MbmpConfig::from_json(weights.manifest) == cfg, ErrorCode::ManifestMismatch,
             "weights manifest does not match the requested architecture");
  return forward(bundle, weights);
}

/// Per-CTU multiply-accumulate budget for the shipped 128x128 architecture.
inline constexpr std::uint64_t kMacBudgetPerCtu128 = 50'000'000;

}  // namespace qtmt::nn
