#include "qprobe/error.hpp"

namespace qprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadSubsystem: return "BadSubsystem";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::TruncationLeak: return "TruncationLeak";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::BadSpace: return "BadSpace";
    case ErrorCode::NotProjector: return "NotProjector";
    case ErrorCode::LeakageAlarm: return "LeakageAlarm";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::StepNotConverged: return "StepNotConverged";
    case ErrorCode::BadProvenance: return "BadProvenance";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::IllConditionedFit: return "IllConditionedFit";
    case ErrorCode::AsymmetricGrid: return "AsymmetricGrid";
    case ErrorCode::RequiresEvaluable: return "RequiresEvaluable";
    case ErrorCode::NonRealResult: return "NonRealResult";
    case ErrorCode::MissingComponent: return "MissingComponent";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace qprobe
