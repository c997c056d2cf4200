#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridsynth {

enum class Errc {
  InvalidArgument,
  MalformedDocument,
  EmptyExtract,
  NetworkError,
  GeocodeUnavailable,
  NoStreets,
  NoSubstations,
  EmptyFeeder,
  MissingImpedances,
  NonFiniteInit,
  DegenerateTarget,
  TooFewSamples,
  EmptyDataset,
  AllZeroPower,
  EmptyAllowedSet,
  MissingFile,
  SchemaMismatch,
  ModelKindMismatch,
  IoError,
  NonRadialTopology,
  ZoneCountMismatch,
  InvalidPowerFactor,
  HashMismatch,
  EmptyInput,
  BaseCaseViolation,
  EmptyEnsemble,
  UnsupportedStatement,
  MalformedStatement,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace gridsynth
