#pragma once

#include <compare>
#include <cstdlib>
#include <ostream>

namespace chiralrot {

/// Symmetric-top label |J K M>: K is the projection on the molecule-fixed
/// symmetry axis, M on the space-fixed z axis.
struct RotState {
  int J = 0;
  int K = 0;
  int M = 0;

  constexpr bool valid() const {
    return J >= 0 && std::abs(K) <= J && std::abs(M) <= J;
  }

  friend constexpr auto operator<=>(const RotState&, const RotState&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const RotState& s) {
  return os << '|' << s.J << ' ' << s.K << ' ' << s.M << '>';
}

}  // namespace chiralrot
