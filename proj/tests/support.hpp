#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <memory>
#include <string>

#include "ctag/dealer.hpp"
#include "ctag/oracle.hpp"
#include "ctag/protocol.hpp"
#include "ctag/transport.hpp"

namespace ctag::test {

using Big = boost::multiprecision::cpp_int;

Big to_big(const RElem& e);
/// x mod 2^width, also for negative x.
RElem from_big(const Big& x, unsigned width);
Big mod_pow2(const Big& x, unsigned width);
Big pow2(unsigned e);

/// Seed bytes for a Prg from an integer.
std::array<std::uint8_t, 8> seed_bytes(std::uint64_t seed);

/// One dealer, network and engine for a fixed parameter set. Inputs are
/// dealt before the material, which is generated from `plan` on start().
struct Session {
  Session(RingParams params, std::size_t parties, std::uint64_t seed, AdversarySpec adversary = {});

  PartyShares input(const RMatrix& plain) { return dealer.share_input(plain); }
  Engine& start(const MaterialPlan& plan, EngineOptions options = {});
  /// Full reconstruction (test oracle) of a shared matrix, signed mod 2^k.
  oracle::PlainView plain(const PartyShares& m) const;
  bool mac_ok(const PartyShares& m) const;

  RingParams params;
  std::size_t parties;
  Dealer dealer;
  Network net;
  std::unique_ptr<Engine> engine;
};

/// Random signed matrix with |v| < 2^bits, width k.
RMatrix random_plain(Prg& prg, std::size_t rows, std::size_t cols, unsigned bits, unsigned k);

/// Plaintext X . Y over the integers from signed width-k entries.
std::vector<Big> plain_product(const RMatrix& x, const RMatrix& y);

/// Arithmetic right shift (floor division by 2^f) of a signed big integer.
Big floor_shift(const Big& v, unsigned f);

/// Reads an environment variable, empty when unset.
std::string env_or_empty(const char* name);

}  // namespace ctag::test
