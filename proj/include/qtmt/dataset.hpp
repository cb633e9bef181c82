#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtmt/features.hpp"
#include "qtmt/io.hpp"
#include "qtmt/qtdepth.hpp"

namespace qtmt {

// "QTDS" sample file, little-endian:
//   magic[4] version:u16 ctu_size:u16 count:u32
//   count x { luma u8[S*S], residual i16[S*S], mv (i8 dx, i8 dy)[(S/4)^2],
//             qp u8, temporal_id u8, label u8[(S/8)^2] }
inline constexpr char kDatasetMagic[4] = {'Q', 'T', 'D', 'S'};
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 12;

inline std::size_t dataset_record_bytes(int ctu_size) {
  const std::size_t s = static_cast<std::size_t>(ctu_size);
  return s * s + 2 * s * s + 2 * (s / 4) * (s / 4) + 2 + (s / 8) * (s / 8);
}

struct DatasetSample {
  FeatureBundle bundle;
  QtDepthMap label;
  friend bool operator==(const DatasetSample&, const DatasetSample&) = default;
};

struct Dataset {
  int ctu_size = 0;
  std::vector<DatasetSample> samples;
};

inline std::vector<std::uint8_t> encode_dataset(const std::vector<FeatureBundle>& bundles,
                                                const std::vector<QtDepthMap>& labels, int ctu_size) {
  QTMT_CHECK(bundles.size() == labels.size(), ErrorCode::InvalidArgument, "bundle and label counts differ");
  QTMT_CHECK(ctu_size >= 8 && ctu_size <= 65535 && is_pow2(ctu_size), ErrorCode::InvalidArgument, "bad ctu_size");
  io::ByteWriter w;
  w.bytes(std::string_view(kDatasetMagic, 4));
  w.u16(kDatasetVersion);
  w.u16(static_cast<std::uint16_t>(ctu_size));
  w.u32(static_cast<std::uint32_t>(bundles.size()));
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const FeatureBundle& b = bundles[i];
    b.validate();
    QTMT_CHECK(b.ctu_size == ctu_size, ErrorCode::DimMismatch, "bundle ctu_size differs from dataset ctu_size");
    QTMT_CHECK(labels[i].dim() == ctu_size / kCellSize, ErrorCode::DimMismatch, "label dims do not match ctu_size");
    for (std::uint8_t v : b.luma) w.u8(v);
    for (std::int16_t v : b.residual) w.i16(v);
    for (const MotionVector& mv : b.motion.mv) {
      w.i8(static_cast<std::int8_t>(mv.dx));
      w.i8(static_cast<std::int8_t>(mv.dy));
    }
    w.u8(static_cast<std::uint8_t>(b.qp));
    w.u8(static_cast<std::uint8_t>(b.temporal_id));
    for (std::uint8_t v : labels[i].cells()) w.u8(v);
  }
  return w.data();
}

/// Writes the sample file and returns the number of records.
inline std::size_t emit_dataset(const std::vector<FeatureBundle>& bundles, const std::vector<QtDepthMap>& labels,
                                const std::string& path, int ctu_size) {
  io::write_file(path, encode_dataset(bundles, labels, ctu_size));
  return bundles.size();
}

inline Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, ErrorCode::TruncatedFile);
  QTMT_CHECK(bytes.size() >= 4 && r.bytes(4) == std::string(kDatasetMagic, 4), ErrorCode::BadMagic,
             "not a QTDS file");
  const std::uint16_t version = r.u16();
  QTMT_CHECK(version == kDatasetVersion, ErrorCode::BadMagic, "unsupported dataset version " + std::to_string(version));
  Dataset ds;
  ds.ctu_size = r.u16();
  QTMT_CHECK(ds.ctu_size >= 8 && is_pow2(ds.ctu_size), ErrorCode::BadDimensions, "bad ctu_size in header");
  const std::uint32_t count = r.u32();
  QTMT_CHECK(r.remaining() == dataset_record_bytes(ds.ctu_size) * count, ErrorCode::TruncatedFile,
             "payload size does not match record count");
  const int s = ds.ctu_size;
  ds.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DatasetSample smp;
    FeatureBundle& b = smp.bundle;
    b.ctu_size = s;
    b.luma.resize(static_cast<std::size_t>(s) * s);
    b.residual.resize(b.luma.size());
    for (auto& v : b.luma) v = r.u8();
    for (auto& v : b.residual) v = r.i16();
    b.motion = MotionField(s / kSubblock);
    for (auto& mv : b.motion.mv) {
      mv.dx = r.i8();
      mv.dy = r.i8();
    }
    b.qp = r.u8();
    b.temporal_id = r.u8();
    smp.label = QtDepthMap(s / kCellSize);
    for (auto& v : smp.label.cells()) v = r.u8();
    try {
      b.validate();
    } catch (const Error& e) {
      throw Error(e.code(), "record " + std::to_string(i) + ": " + e.what());
    }
    ds.samples.push_back(std::move(smp));
  }
  return ds;
}

inline Dataset read_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

}  // namespace qtmt
