#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "qtmt/io.hpp"
#include "qtmt/tensor.hpp"

namespace qtmt::nn {

// "MBMP" weight file, little-endian:
//   magic[4] version:u16
//   manifest_len:u32 manifest:utf8-json[manifest_len] manifest_hash:u64 (FNV-1a of the manifest bytes)
//   tensor_count:u32
//   tensor_count x { name_len:u16 name[name_len] rank:u8 (3|4) dims:u32[rank] data:f32[prod(dims)] }
// Tensors are written in name order.
inline constexpr char kWeightMagic[4] = {'M', 'B', 'M', 'P'};
inline constexpr std::uint16_t kWeightVersion = 1;

/// Named parameters plus the architecture manifest they belong to.
struct WeightStore {
  nlohmann::json manifest;
  std::uint64_t manifest_hash = 0;
  std::map<std::string, Tensor> params;

  const Tensor& param(const std::string& name) const {
    auto it = params.find(name);
    QTMT_CHECK(it != params.end(), ErrorCode::ShapeMismatch, "missing parameter " + name);
    return it->second;
  }

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.manifest == b.manifest && a.manifest_hash == b.manifest_hash && a.params == b.params;
  }
};

inline std::string manifest_text(const nlohmann::json& manifest) { return manifest.dump(); }

inline std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  const std::string text = manifest_text(store.manifest);
  io::ByteWriter w;
  w.bytes(std::string_view(kWeightMagic, 4));
  w.u16(kWeightVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  w.u64(io::fnv1a64(text));
  w.u32(static_cast<std::uint32_t>(store.params.size()));
  for (const auto& [name, t] : store.params) {
    QTMT_CHECK(name.size() < 65536, ErrorCode::InvalidArgument, "parameter name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) w.f32(v);
  }
  return w.data();
}

inline void save_weights(const WeightStore& store, const std::string& path) {
  io::write_file(path, encode_weights(store));
}

/// Format and hash checks only; architecture checks live with the model.
inline WeightStore decode_weights(const std::vector<std::uint8_t>& bytes) {
  QTMT_CHECK(bytes.size() >= 6 && std::equal(kWeightMagic, kWeightMagic + 4, bytes.begin()), ErrorCode::BadMagic,
             "not an MBMP weight file");
  io::ByteReader r(bytes, ErrorCode::ShapeMismatch);
  r.bytes(4);
  const std::uint16_t version = r.u16();
  QTMT_CHECK(version == kWeightVersion, ErrorCode::BadMagic, "unsupported weight file version " + std::to_string(version));
  const std::uint32_t len = r.u32();
  const std::string text = r.bytes(len);
  const std::uint64_t stored = r.u64();
  QTMT_CHECK(stored == io::fnv1a64(text), ErrorCode::HashMismatch, "manifest hash does not match its contents");
  WeightStore store;
  store.manifest_hash = stored;
  try {
    store.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u16());
    const int rank = r.u8();
    QTMT_CHECK(rank == 3 || rank == 4, ErrorCode::ShapeMismatch, "tensor " + name + " has rank " + std::to_string(rank));
    std::vector<int> shape(rank);
    for (int& d : shape) {
      const std::uint32_t v = r.u32();
      QTMT_CHECK(v > 0 && v < (1u << 24), ErrorCode::ShapeMismatch, "tensor " + name + " has a bad dimension");
      d = static_cast<int>(v);
    }
    QTMT_CHECK(r.remaining() >= Tensor::element_count(shape) * 4, ErrorCode::ShapeMismatch,
               "tensor " + name + " data is truncated");
    Tensor t(shape);
    for (float& v : t.data()) v = r.f32();
    QTMT_CHECK(store.params.emplace(name, std::move(t)).second, ErrorCode::ShapeMismatch, "duplicate tensor " + name);
  }
  QTMT_CHECK(r.remaining() == 0, ErrorCode::ShapeMismatch, "trailing bytes after last tensor");
  return store;
}

inline WeightStore read_weight_file(const std::string& path) { return decode_weights(io::read_file(path)); }

}  // namespace qtmt::nn
