#include "gridsynth/phase.hpp"

#include <string>

#include "gridsynth/error.hpp"

namespace gridsynth {

namespace {
constexpr std::array<std::string_view, kPhaseCategories> kNames = {"A", "B", "C", "AB", "BC", "AC", "ABC"};
}

Phase phase_from_mask(std::uint8_t mask) {
  for (auto p : kAllPhases) {
    if (conductor_mask(p) == mask) return p;
  }
  fail(Errc::InvalidArgument, "no phase configuration for conductor mask " + std::to_string(mask));
}

std::string_view to_string(Phase p) noexcept { return kNames[index_of(p)]; }

Phase parse_phase(std::string_view text) {
  for (auto p : kAllPhases) {
    if (kNames[index_of(p)] == text) return p;
  }
  // CA and BA style orderings show up in utility exports.
  std::uint8_t mask = 0;
  for (char c : text) {
    switch (c) {
      case 'A': case 'a': mask |= 1; break;
      case 'B': case 'b': mask |= 2; break;
      case 'C': case 'c': mask |= 4; break;
      default: fail(Errc::SchemaMismatch, "unknown phase configuration '" + std::string(text) + "'");
    }
  }
  if (mask == 0) fail(Errc::SchemaMismatch, "empty phase configuration");
  return phase_from_mask(mask);
}

}  // namespace gridsynth
