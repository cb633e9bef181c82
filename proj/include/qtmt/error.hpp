#pragma once

#include <stdexcept>
#include <string>

namespace qtmt {

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  InvalidSplit,
  InvalidTree,
  ConfigTooLarge,
  MisalignedCu,
  DimMismatch,
  TruncatedFile,
  BadDimensions,
  CtuOutOfBounds,
  IoError,
  ShapeMismatch,
  IndivisibleShape,
  ManifestMismatch,
  BadMagic,
  HashMismatch,
  EmptyCorpus,
  NonPositiveTime,
  NonOverlappingCurves,
  DegenerateFit,
  ZeroWork,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::ConfigTooLarge: return "ConfigTooLarge";
    case ErrorCode::MisalignedCu: return "MisalignedCu";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::CtuOutOfBounds: return "CtuOutOfBounds";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndivisibleShape: return "IndivisibleShape";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::NonOverlappingCurves: return "NonOverlappingCurves";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::ZeroWork: return "ZeroWork";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code; every library failure goes through it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define QTMT_CHECK(cond, code, msg)          \
  do {                                       \
    if (!(cond)) {                           \
      throw ::qtmt::Error((code), (msg));    \
    }                                        \
  } while (0)

}  // namespace qtmt
