#include "gridsynth/error.hpp"

namespace gridsynth {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::EmptyExtract: return "EmptyExtract";
    case Errc::NetworkError: return "NetworkError";
    case Errc::GeocodeUnavailable: return "GeocodeUnavailable";
    case Errc::NoStreets: return "NoStreets";
    case Errc::NoSubstations: return "NoSubstations";
    case Errc::EmptyFeeder: return "EmptyFeeder";
    case Errc::MissingImpedances: return "MissingImpedances";
    case Errc::NonFiniteInit: return "NonFiniteInit";
    case Errc::DegenerateTarget: return "DegenerateTarget";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::AllZeroPower: return "AllZeroPower";
    case Errc::EmptyAllowedSet: return "EmptyAllowedSet";
    case Errc::MissingFile: return "MissingFile";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::ModelKindMismatch: return "ModelKindMismatch";
    case Errc::IoError: return "IoError";
    case Errc::NonRadialTopology: return "NonRadialTopology";
    case Errc::ZoneCountMismatch: return "ZoneCountMismatch";
    case Errc::InvalidPowerFactor: return "InvalidPowerFactor";
    case Errc::HashMismatch: return "HashMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BaseCaseViolation: return "BaseCaseViolation";
    case Errc::EmptyEnsemble: return "EmptyEnsemble";
    case Errc::UnsupportedStatement: return "UnsupportedStatement";
    case Errc::MalformedStatement: return "MalformedStatement";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace gridsynth
