#pragma once

#include <cstddef>
#include <vector>

#include "ctag/ring.hpp"

namespace ctag {

/// Party identifier in [1, n].
using PartyId = std::size_t;

/// One party's additive share of the global MAC key (width s).
struct MacKeyShare {
  RElem delta;
};

/// One party's share of an authenticated scalar: value and MAC, both width k+s.
struct AuthShare {
  RElem val;
  RElem mac;
};

/// One party's share of an authenticated matrix.
struct AuthMatrixShare {
  RMatrix vals;
  RMatrix macs;

  std::size_t rows() const noexcept { return vals.rows(); }
  std::size_t cols() const noexcept { return vals.cols(); }
  /// Throws unless vals and macs agree in shape and width.
  void check_consistent() const;

  friend bool operator==(const AuthMatrixShare&, const AuthMatrixShare&) = default;
};

/// All parties' shares of one authenticated matrix, indexed by PartyId - 1.
/// Used by the simulator to hold the n local views side by side.
using PartyShares = std::vector<AuthMatrixShare>;

/// Local linear combination sum_j coeffs[j] * inputs[j] on value and MAC
/// shares. Coefficients narrower than the share width are lifted.
AuthMatrixShare lin_combine(const std::vector<RElem>& coeffs,
                            const std::vector<AuthMatrixShare>& inputs);

/// Adds a public matrix: party 1 adds C to its value share and every party
/// adds delta_i * C to its MAC share.
AuthMatrixShare add_public(const AuthMatrixShare& x, const RMatrix& c, PartyId me,
                           const MacKeyShare& key);

}  // namespace ctag
