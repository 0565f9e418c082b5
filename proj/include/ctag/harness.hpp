#pragma once

// End-to-end drivers: one seeded multiply-then-truncate run per call, plus
// the statistical attack trials. Shared by the command-line tool and tests.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctag/conv.hpp"
#include "ctag/metrics.hpp"
#include "ctag/protocol.hpp"

namespace ctag {

enum class Pipeline { baseline, compact };

const char* to_string(Pipeline p);
/// Accepts "baseline" and "compacttag".
Pipeline pipeline_from_string(std::string_view name);

/// Plaintext operands, width k, two's complement.
struct WorkloadInputs {
  RMatrix x;
  RMatrix y;
};

/// Uniform signed integers with |v| < 2^magnitude_bits.
WorkloadInputs random_inputs(const RingParams& params, const MatmulShape& shape, unsigned magnitude_bits,
                             std::uint64_t seed);

struct RunOptions {
  std::size_t parties = 2;
  /// Drives the dealer and the network.
  std::uint64_t seed = 0;
  AdversarySpec adversary;
  /// Open the result (flushing every pending check first).
  bool reveal = true;
  EngineOptions engine;
};

struct PipelineRun {
  PartyShares result;
  std::optional<RMatrix> output;
  std::vector<MacKeyShare> keys;
  std::vector<CostLedger> ledgers;
  CommLog comm;
  ConsumptionLog consumption;
  /// Set when a check rejected; `result` is then whatever was computed before.
  std::optional<Abort> abort;
};

/// Deals the inputs and material for one (T1,T2,T3) product with truncation
/// and runs it. Without `reveal`, the deferred checks are still flushed.
PipelineRun run_pipeline(Pipeline pipeline, const RingParams& params, const WorkloadInputs& inputs,
                         const RunOptions& options);

/// Per-party counters of the closed-form scope: the "matmul" step for the
/// baseline, the "compact_matmul" step for CompactTag.
StepCounters formula_scope_counters(Pipeline pipeline, const CostLedger& ledger);

/// Per-party broadcast totals of the in-operation openings (E, U, D).
CommCounters operation_traffic(const CommLog& log, PartyId party);

// ---- attack trials ---------------------------------------------------------

enum class AttackTarget { compact, batch };
enum class AttackStrategy { random, all_y_zero, single_entry, top_bit, zero, half_modulus };

AttackTarget attack_target_from_string(std::string_view name);
AttackStrategy attack_strategy_from_string(std::string_view name);
const char* to_string(AttackTarget t);
const char* to_string(AttackStrategy s);

struct AttackConfig {
  RingParams params{16, 8, 4};
  std::size_t parties = 2;
  MatmulShape shape{4, 4, 4};
  AttackTarget target = AttackTarget::compact;
  AttackStrategy strategy = AttackStrategy::random;
  std::uint64_t trials = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Replaces the built-in strategy when set; rules are applied as given.
  std::optional<AdversarySpec> adversary;
};

struct AttackResult {
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  /// Bound the rate is tested against (1 for the no-forgery strategy).
  double bound = 0.0;
  /// False for strategies reported without a bound.
  bool bounded = true;
  /// For the no-forgery strategy the expectation is acceptance, not rejection.
  bool expect_accept = false;

  double rate() const;
  double sigma() const;
  bool pass() const;
};

/// The tamper rules a strategy injects (empty for half-modulus, which bypasses the protocol).
AdversarySpec strategy_adversary(const AttackConfig& cfg);
AttackResult run_attack(const AttackConfig& cfg);

}  // namespace ctag
