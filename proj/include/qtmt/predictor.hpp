#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>

#include "qtmt/mbmp.hpp"
#include "qtmt/qtdepth.hpp"
#include "qtmt/search.hpp"

namespace qtmt {

/// Ground-truth map of the full-search winner.
struct OraclePredictor {};

/// Ground truth plus i.i.d. Gaussian noise of standard deviation `sigma`.
struct NoisyOraclePredictor {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct ConstantPredictor {
  double depth = 0.0;
};

struct CnnPredictor {
  std::shared_ptr<const nn::WeightStore> weights;
  std::string label;
};

using Predictor = std::variant<OraclePredictor, NoisyOraclePredictor, ConstantPredictor, CnnPredictor>;

inline bool needs_ground_truth(const Predictor& p) {
  return std::holds_alternative<OraclePredictor>(p) || std::holds_alternative<NoisyOraclePredictor>(p);
}

inline std::string predictor_name(const Predictor& p) {
  struct Namer {
    std::string operator()(const OraclePredictor&) const { return "oracle"; }
    std::string operator()(const NoisyOraclePredictor& n) const {
      char buf[64];
      std::snprintf(buf, sizeof buf, "noisy:%g", n.sigma);
      return buf;
    }
    std::string operator()(const ConstantPredictor& c) const {
      char buf[64];
      std::snprintf(buf, sizeof buf, "const:%g", c.depth);
      return buf;
    }
    std::string operator()(const CnnPredictor& c) const { return "cnn:" + (c.label.empty() ? "?" : c.label); }
  };
  return std::visit(Namer{}, p);
}

/// Parses "oracle", "noisy:<sigma>", "const:<depth>" or "cnn:<weights path>".
/// `seed` feeds the noisy oracle.
inline Predictor parse_predictor(const std::string& spec, std::uint64_t seed = 0) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto number = [&](const char* what) {
    QTMT_CHECK(!arg.empty(), ErrorCode::InvalidArgument, std::string(what) + " needs a value");
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    QTMT_CHECK(used == arg.size() && std::isfinite(v), ErrorCode::InvalidArgument, "bad number in predictor '" + spec + "'");
    return v;
  };
  if (kind == "oracle" && arg.empty()) return OraclePredictor{};
  if (kind == "noisy") {
    const double sigma = number("noisy");
    QTMT_CHECK(sigma >= 0, ErrorCode::InvalidArgument, "noise sigma must be >= 0");
    return NoisyOraclePredictor{sigma, seed};
  }
  if (kind == "const") return ConstantPredictor{number("const")};
  if (kind == "cnn") {
    QTMT_CHECK(!arg.empty(), ErrorCode::InvalidArgument, "cnn predictor needs a weight file");
    auto w = std::make_shared<nn::WeightStore>(nn::load_weights(arg));
    const std::string variant = w->manifest.value("variant", std::string("full"));
    return CnnPredictor{std::move(w), variant};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown predictor '" + spec + "'");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Box-Muller on splitmix output; identical on every platform.
inline double gaussian(std::uint64_t& state) {
  const double u1 = (static_cast<double>(splitmix64(state) >> 11) + 1.0) * (1.0 / 9007199254740993.0);
  const double u2 = static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace detail

/// Map for one CTU. `truth` is only read by the oracle variants; `sample`
/// decorrelates noise between CTUs.
inline PredictedDepthMap predict(const Predictor& p, const FeatureBundle& bundle, const QtDepthMap* truth,
                                 std::uint64_t sample, const PartitionConfig& cfg) {
  const int dim = cfg.map_dim();
  if (needs_ground_truth(p)) QTMT_CHECK(truth != nullptr, ErrorCode::InvalidArgument, "oracle predictor needs a truth map");
  if (std::holds_alternative<OraclePredictor>(p)) return to_predicted(*truth);
  if (const auto* n = std::get_if<NoisyOraclePredictor>(&p)) {
    PredictedDepthMap m = to_predicted(*truth);
    std::uint64_t state = n->seed ^ (0xd1b54a32d192ed03ull * (sample + 1));
    for (double& v : m.cells()) v += n->sigma * detail::gaussian(state);
    return m;
  }
  if (const auto* c = std::get_if<ConstantPredictor>(&p)) return PredictedDepthMap(dim, c->depth);
  const auto& cnn = std::get<CnnPredictor>(p);
  QTMT_CHECK(cnn.weights != nullptr, ErrorCode::InvalidArgument, "cnn predictor without weights");
  PredictedDepthMap m = nn::forward(bundle, *cnn.weights);
  QTMT_CHECK(m.dim() == dim, ErrorCode::ManifestMismatch, "network map dims do not match config");
  return m;
}

/// Convenience form: runs the full search first when the predictor needs
/// ground truth.
inline SearchStats pruned_search(const FeatureBundle& bundle, const CostModel& model, const PartitionConfig& cfg,
                                 const Predictor& predictor, double th, std::uint64_t sample = 0) {
  std::optional<QtDepthMap> truth;
  if (needs_ground_truth(predictor)) truth = extract_map(full_search(bundle, model, cfg).best_tree);
  const PredictedDepthMap map = predict(predictor, bundle, truth ? &*truth : nullptr, sample, cfg);
  return pruned_search(bundle, model, cfg, map, th);
}

}  // namespace qtmt
