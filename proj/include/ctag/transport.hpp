#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctag/crypto.hpp"
#include "ctag/ring.hpp"
#include "ctag/sharing.hpp"

namespace ctag {

// ---- commitments -----------------------------------------------------------

struct Commitment {
  Digest digest{};
  friend bool operator==(const Commitment&, const Commitment&) = default;
};

struct Opening {
  Bytes payload;
  std::array<std::uint8_t, 16> randomness{};
};

Commitment commit(const Opening& o, const Hasher& h = default_hasher());
bool verify_opening(const Commitment& c, const Opening& o, const Hasher& h = default_hasher());

// ---- protocol aborts -------------------------------------------------------

class Abort : public std::runtime_error {
 public:
  enum class Reason { tag_mismatch, equivocation };

  Abort(Reason reason, std::string step, std::optional<PartyId> culprit = std::nullopt);

  Reason reason() const noexcept { return reason_; }
  const std::string& step() const noexcept { return step_; }
  std::optional<PartyId> culprit() const noexcept { return culprit_; }

 private:
  Reason reason_;
  std::string step_;
  std::optional<PartyId> culprit_;
};

/// Misuse of the round structure (for example opening before committing).
class RoundError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---- adversary -------------------------------------------------------------

enum class TamperKind {
  additive,        // add the given error matrix (or scalar to every entry)
  random_nonzero,  // uniform entries, at least one nonzero mod 2^k
  single_entry,    // one random position, nonzero mod 2^k
  column_top,      // 2^{k-1} in every entry of one random column
  top_bits,        // entries 2^k * t, t uniform in Z_{2^s}, not all zero
  equivocate,      // open a commitment to a different payload
  fixed_seed,      // contribute an all-zero coin-toss seed
};

const char* to_string(TamperKind kind);
TamperKind tamper_kind_from_string(std::string_view name);

/// Step kinds that tamper rules may target: the last component of a message
/// label such as "conv1/compact_matmul/D".
const std::vector<std::string>& known_step_kinds();
std::string_view step_kind(std::string_view label);

struct TamperRule {
  std::string step;
  PartyId party = 0;
  TamperKind kind = TamperKind::random_nonzero;
  /// For additive rules: a matrix matching the payload, or 1x1 applied to every entry.
  std::optional<RMatrix> error;
};

struct AdversarySpec {
  std::set<PartyId> corrupt;
  std::vector<TamperRule> rules;
  std::uint64_t seed = 0;

  bool empty() const noexcept { return rules.empty(); }
  /// Throws std::invalid_argument on unknown steps, uncorrupted rule parties,
  /// out-of-range ids or a corrupt set without an honest party.
  void validate(std::size_t parties) const;
  /// Parses the JSON adversary file format; additive error literals are read
  /// at width k+s.
  static AdversarySpec from_json(std::string_view text, const RingParams& params);
};

// ---- communication log -----------------------------------------------------

struct CommCounters {
  std::uint64_t elements = 0;
  std::uint64_t bytes = 0;
  std::uint64_t messages = 0;
};

class CommLog {
 public:
  void record(const std::string& label, PartyId party, std::uint64_t elements, std::uint64_t bytes,
              std::uint64_t messages = 1);
  /// Keyed by (label, party).
  const std::map<std::pair<std::string, PartyId>, CommCounters>& entries() const noexcept {
    return entries_;
  }
  /// Totals for one party over labels whose step kind is in `kinds` (all when empty).
  CommCounters totals(PartyId party, const std::set<std::string>& kinds = {}) const;
  /// Totals for one party over labels starting with `prefix`.
  CommCounters totals_with_prefix(PartyId party, std::string_view prefix) const;
  void write_csv(std::ostream& os) const;

 private:
  std::map<std::pair<std::string, PartyId>, CommCounters> entries_;
};

// ---- network ---------------------------------------------------------------

/// Public randomness with the network round at which it became known.
struct PublicCoins {
  RMatrix values;
  std::uint64_t round = 0;
};

/// In-process lockstep broadcast fabric for n parties. Each call is one round
/// in which every party sends; payloads from corrupt parties pass through the
/// adversary's tamper rules before delivery.
class Network {
 public:
  Network(std::size_t parties, const RingParams& params, std::uint64_t seed,
          AdversarySpec adversary = {});

  std::size_t parties() const noexcept { return n_; }
  std::uint64_t round() const noexcept { return round_; }
  const CommLog& log() const noexcept { return log_; }
  const AdversarySpec& adversary() const noexcept { return adversary_; }

  /// sent[p - 1] is party p's matrix. Returns what every party receives.
  std::vector<RMatrix> broadcast_shares(const std::string& label, std::vector<RMatrix> sent);

  /// First half of a commit-reveal round: every party commits to its payload.
  void commit_round(const std::string& label, std::vector<RMatrix> payloads);
  /// Second half: openings are broadcast and checked against the digests.
  std::vector<RMatrix> open_round(const std::string& label);

  /// Commit-reveal of per-party seeds, XOR-combined, expanded into a
  /// rows x cols matrix of uniform width-`width` elements.
  PublicCoins coin_toss(const std::string& label, std::size_t rows, std::size_t cols, unsigned width);

 private:
  struct Pending {
    std::vector<Commitment> commitments;
    std::vector<Opening> openings;
  };

  void check_party_count(std::size_t got, const std::string& label) const;
  void apply_tamper(const std::string& label, PartyId p, RMatrix& payload);
  RMatrix make_error(const TamperRule& rule, const RMatrix& payload, const std::string& label);
  Prg& party_prg(PartyId p) { return party_prgs_[p - 1]; }
  void commit_bytes(const std::string& label, std::vector<Bytes> payloads);
  std::vector<Bytes> open_bytes(const std::string& label);

  std::size_t n_;
  RingParams params_;
  AdversarySpec adversary_;
  std::vector<Prg> party_prgs_;
  Prg adversary_prg_;
  std::uint64_t round_ = 0;
  CommLog log_;
  std::map<std::string, Pending> pending_;
};

}  // namespace ctag
