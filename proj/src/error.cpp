#include "pcn/error.hpp"

namespace pcn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::MalformedBlock: return "MalformedBlock";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::DimOverflow: return "DimOverflow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace pcn
