#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gridsynth {

/// Phase configurations in the fixed category order used by every model and
/// document: A, B, C, AB, BC, AC, ABC.
enum class Phase : std::uint8_t { A = 0, B, C, AB, BC, AC, ABC };

inline constexpr std::size_t kPhaseCategories = 7;
inline constexpr std::array<Phase, kPhaseCategories> kAllPhases = {
    Phase::A, Phase::B, Phase::C, Phase::AB, Phase::BC, Phase::AC, Phase::ABC};

// Conductor bitmask per category: bit 0 = A, bit 1 = B, bit 2 = C.
inline constexpr std::array<std::uint8_t, kPhaseCategories> kPhaseMask = {1, 2, 4, 3, 6, 5, 7};

constexpr std::size_t index_of(Phase p) noexcept { return static_cast<std::size_t>(p); }
constexpr std::uint8_t conductor_mask(Phase p) noexcept { return kPhaseMask[index_of(p)]; }
constexpr bool has_conductor(Phase p, int conductor) noexcept {
  return (conductor_mask(p) >> conductor) & 1u;
}
constexpr int conductor_count(Phase p) noexcept {
  const auto m = conductor_mask(p);
  return (m & 1) + ((m >> 1) & 1) + ((m >> 2) & 1);
}
constexpr bool is_subset(Phase child, Phase parent) noexcept {
  return (conductor_mask(child) & ~conductor_mask(parent)) == 0;
}

Phase phase_from_mask(std::uint8_t mask);
std::string_view to_string(Phase p) noexcept;
Phase parse_phase(std::string_view text);

/// A subset of the seven categories, one bit per category index.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;
  static constexpr PhaseSet all() noexcept { return PhaseSet(0x7f); }
  static constexpr PhaseSet only(Phase p) noexcept {
    return PhaseSet(static_cast<std::uint8_t>(1u << index_of(p)));
  }
  /// Every non-empty conductor subset of `parent`.
  static constexpr PhaseSet subsets_of(Phase parent) noexcept {
    PhaseSet s;
    for (auto p : kAllPhases) {
      if (is_subset(p, parent)) s.insert(p);
    }
    return s;
  }

  constexpr void insert(Phase p) noexcept { bits_ |= static_cast<std::uint8_t>(1u << index_of(p)); }
  constexpr bool contains(Phase p) const noexcept { return (bits_ >> index_of(p)) & 1u; }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr std::uint8_t bits() const noexcept { return bits_; }
  constexpr int size() const noexcept {
    int n = 0;
    for (auto p : kAllPhases) n += contains(p) ? 1 : 0;
    return n;
  }

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits) {}
  std::uint8_t bits_ = 0;
};

}  // namespace gridsynth
