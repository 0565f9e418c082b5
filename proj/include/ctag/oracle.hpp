#pragma once

// Whole-system views that no real party could compute. Built only into the
// ctag_oracle target, which tests and the `verify` subcommand link; the
// protocol libraries never depend on it.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctag/ring.hpp"
#include "ctag/sharing.hpp"

namespace ctag::oracle {

/// Signed plaintext matrix recovered from all value shares mod 2^k.
struct PlainView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> data;

  std::int64_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Throws InvariantViolation("missing_party") unless exactly `parties` shares are given.
PlainView reconstruct_all(const PartyShares& shares, const RingParams& params, std::size_t parties);
/// Share sum mod 2^{k+s}.
RMatrix reconstruct_lifted(const PartyShares& shares);
std::int64_t reconstruct_scalar(const std::vector<AuthShare>& shares, const RingParams& params);

/// Integer sum of the key shares in Z_{2^{k+s}}.
RElem effective_key(const std::vector<MacKeyShare>& keys, const RingParams& params);

bool mac_invariant_holds(const PartyShares& shares, const std::vector<MacKeyShare>& keys,
                         const RingParams& params);
bool mac_invariant_holds(const std::vector<AuthShare>& shares, const std::vector<MacKeyShare>& keys,
                         const RingParams& params);
/// Throws InvariantViolation("mac_invariant") naming `what` and the first bad entry.
void require_mac_invariant(const PartyShares& shares, const std::vector<MacKeyShare>& keys,
                           const RingParams& params, const std::string& what);

/// A flawed MAC update for a public addend where only party 1 adds
/// delta_1 * C. Kept to show that it breaks the MAC relation whenever another
/// key share is nonzero.
AuthMatrixShare add_public_party1_only(const AuthMatrixShare& x, const RMatrix& c, PartyId me,
                                       const MacKeyShare& key);

/// Plaintext helpers for reference computations.
RMatrix plain_matrix(const std::vector<std::int64_t>& values, std::size_t rows, std::size_t cols, unsigned width);
PlainView to_plain(const RMatrix& m);

}  // namespace ctag::oracle
