#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctag/crypto.hpp"
#include "ctag/ring.hpp"
#include "ctag/sharing.hpp"

namespace ctag {

enum class MaterialKind : std::uint8_t {
  triple = 1,       // (A: d1 x d2, B: d2 x d3, C: d1 x d3)
  trunc_pair = 2,   // (R, R^f), both d1 x d2
  zero_mask = 3,    // Q: d1 x d2 with Q = 0 mod 2^k
  open_mask = 4,    // r in Z_{2^s}, stored as 1 x 1
  random_auth = 5,  // R: d1 x d2 uniform
};

const char* to_string(MaterialKind kind);

struct MaterialRequest {
  MaterialKind kind = MaterialKind::triple;
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t d3 = 0;

  static MaterialRequest triple(std::size_t t1, std::size_t t2, std::size_t t3) {
    return {MaterialKind::triple, t1, t2, t3};
  }
  static MaterialRequest trunc_pair(std::size_t rows, std::size_t cols) {
    return {MaterialKind::trunc_pair, rows, cols, 0};
  }
  static MaterialRequest zero_mask(std::size_t rows, std::size_t cols) {
    return {MaterialKind::zero_mask, rows, cols, 0};
  }
  static MaterialRequest open_mask() { return {MaterialKind::open_mask, 1, 1, 0}; }
  static MaterialRequest random_auth(std::size_t rows, std::size_t cols) {
    return {MaterialKind::random_auth, rows, cols, 0};
  }

  std::string describe() const;
  friend auto operator<=>(const MaterialRequest&, const MaterialRequest&) = default;
};

using MaterialPlan = std::vector<MaterialRequest>;

/// One preprocessed item; parts[p - 1] holds party p's matrices in the order
/// documented on MaterialKind.
struct MaterialItem {
  MaterialRequest request;
  std::vector<std::vector<AuthMatrixShare>> parts;

  friend bool operator==(const MaterialItem&, const MaterialItem&) = default;
};

struct DealerMaterial {
  RingParams params;
  std::size_t parties = 0;
  std::vector<MacKeyShare> key_shares;
  std::vector<MaterialItem> items;

  friend bool operator==(const DealerMaterial& a, const DealerMaterial& b);
};

class MissingMaterial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MaterialFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container: "CTDM" magic, u32 version, then length-prefixed sections
/// with little-endian limbs.
inline constexpr std::uint32_t kMaterialFormatVersion = 1;
void write_material(const DealerMaterial& m, std::ostream& os);
DealerMaterial read_material(std::istream& is);
void save_material(const DealerMaterial& m, const std::string& path);
DealerMaterial load_material(const std::string& path);

using DealerSeed = std::array<std::uint8_t, 64>;
DealerSeed dealer_seed_from(std::uint64_t seed);

/// Deterministic randomness for the dealer.
class DealerRng {
 public:
  explicit DealerRng(const DealerSeed& seed) : prg_(seed, "ctag.dealer") {}
  RElem uniform(unsigned width) { return prg_.uniform(width); }
  RMatrix uniform_matrix(std::size_t r, std::size_t c, unsigned w) { return prg_.uniform_matrix(r, c, w); }

 private:
  Prg prg_;
};

/// Trusted dealer standing in for the offline phase.
class Dealer {
 public:
  Dealer(RingParams params, std::size_t parties, const DealerSeed& seed);

  /// Samples fresh key shares. Must run before any authentication.
  const std::vector<MacKeyShare>& init_keys();
  bool keys_ready() const noexcept { return !keys_.empty(); }
  const std::vector<MacKeyShare>& key_shares() const;
  /// Sum of key shares mod 2^s, as recorded by the dealer.
  RElem global_key() const;
  /// Sum of key shares as an integer in Z_{2^{k+s}}; this is the key MACs use.
  RElem mac_key() const;

  std::vector<AuthShare> auth_shares(const RElem& value);
  /// Authenticates given per-party value shares (width k+s).
  std::vector<AuthShare> auth_shares(const std::vector<RElem>& value_shares);
  PartyShares auth_matrix(const RMatrix& value);
  /// Shares a width-k plaintext after sign extension into Z_{2^{k+s}}.
  PartyShares share_input(const RMatrix& plain);

  std::vector<PartyShares> beaver_triple(std::size_t t1, std::size_t t2, std::size_t t3);
  std::vector<PartyShares> trunc_pair(std::size_t rows, std::size_t cols, unsigned f);
  PartyShares zero_mask(std::size_t rows, std::size_t cols);
  PartyShares random_auth(std::size_t rows, std::size_t cols);
  PartyShares open_mask();

  /// Runs the plan in order; the result carries the key shares.
  DealerMaterial generate(const MaterialPlan& plan);

  const RingParams& params() const noexcept { return params_; }
  std::size_t parties() const noexcept { return n_; }

 private:
  void require_keys() const;
  std::vector<RMatrix> split(const RMatrix& value);
  MaterialItem make_item(const MaterialRequest& req);

  RingParams params_;
  std::size_t n_;
  DealerRng rng_;
  std::vector<MacKeyShare> keys_;
};

/// Record of consumed material, in consumption order.
class ConsumptionLog {
 public:
  void record(const MaterialRequest& r) { entries_.push_back(r); }
  const std::vector<MaterialRequest>& entries() const noexcept { return entries_; }
  std::vector<MaterialRequest> as_multiset() const;
  bool same_multiset(const ConsumptionLog& other) const { return as_multiset() == other.as_multiset(); }

 private:
  std::vector<MaterialRequest> entries_;
};

/// Serves items of a DealerMaterial to the online phase, oldest first per kind.
class MaterialPool {
 public:
  explicit MaterialPool(DealerMaterial material);

  const RingParams& params() const noexcept { return material_.params; }
  std::size_t parties() const noexcept { return material_.parties; }
  const std::vector<MacKeyShare>& key_shares() const noexcept { return material_.key_shares; }

  /// Removes the next item of the requested kind; throws MissingMaterial if
  /// none is left or if its shape differs from the request.
  MaterialItem take(const MaterialRequest& req);
  std::size_t remaining() const;
  const ConsumptionLog& consumption() const noexcept { return log_; }

 private:
  DealerMaterial material_;
  std::vector<bool> used_;
  ConsumptionLog log_;
};

}  // namespace ctag
