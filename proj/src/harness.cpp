#include "ctag/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ctag {

const char* to_string(Pipeline p) { return p == Pipeline::baseline ? "baseline" : "compacttag"; }

Pipeline pipeline_from_string(std::string_view name) {
  if (name == "baseline") return Pipeline::baseline;
  if (name == "compacttag") return Pipeline::compact;
  throw std::invalid_argument("unknown protocol '" + std::string(name) + "' (expected baseline or compacttag)");
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
  return mix64(mix64(base ^ (stream << 56)) + trial);
}

RMatrix random_signed(Prg& prg, std::size_t rows, std::size_t cols, unsigned bits, unsigned width) {
  const std::uint64_t half = (std::uint64_t{1} << bits) - 1;  // |v| <= half
  RMatrix m(rows, cols, width);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto draw = prg.uniform_below(2 * half + 1);
    m[i] = RElem::from_i64(static_cast<std::int64_t>(draw) - static_cast<std::int64_t>(half), width);
  }
  return m;
}

}  // namespace

WorkloadInputs random_inputs(const RingParams& params, const MatmulShape& shape, unsigned magnitude_bits,
                             std::uint64_t seed) {
  if (magnitude_bits == 0 || magnitude_bits > 62 || magnitude_bits >= params.k) {
    throw std::invalid_argument("random_inputs: magnitude must be in [1, min(62, k-1)] bits");
  }
  const std::array<std::uint8_t, 8> seed_bytes = {
      static_cast<std::uint8_t>(seed),       static_cast<std::uint8_t>(seed >> 8),
      static_cast<std::uint8_t>(seed >> 16), static_cast<std::uint8_t>(seed >> 24),
      static_cast<std::uint8_t>(seed >> 32), static_cast<std::uint8_t>(seed >> 40),
      static_cast<std::uint8_t>(seed >> 48), static_cast<std::uint8_t>(seed >> 56)};
  Prg prg(seed_bytes, "ctag.inputs");
  WorkloadInputs in;
  in.x = random_signed(prg, shape.t1, shape.t2, magnitude_bits, params.k);
  in.y = random_signed(prg, shape.t2, shape.t3, magnitude_bits, params.k);
  return in;
}

PipelineRun run_pipeline(Pipeline pipeline, const RingParams& params, const WorkloadInputs& inputs,
                         const RunOptions& options) {
  params.validate();
  const std::size_t t1 = inputs.x.rows(), t2 = inputs.x.cols(), t3 = inputs.y.cols();
  if (inputs.y.rows() != t2) throw std::invalid_argument("run_pipeline: inner dimensions differ");

  Dealer dealer(params, options.parties, dealer_seed_from(options.seed));
  dealer.init_keys();
  const PartyShares x = dealer.share_input(inputs.x);
  const PartyShares y = dealer.share_input(inputs.y);
  MaterialPlan plan =
      pipeline == Pipeline::baseline ? plan_matmul_truncate(t1, t2, t3) : plan_compact_matmul(t1, t2, t3);
  if (options.reveal) plan.push_back(MaterialRequest::zero_mask(t1, t3));

  Network net(options.parties, params, options.seed, options.adversary);
  Engine engine(MaterialPool(dealer.generate(plan)), net, options.engine);

  PipelineRun run;
  run.keys = engine.keys();
  try {
    run.result = pipeline == Pipeline::baseline ? engine.truncate(engine.matmul_spdz2k(x, y))
                                                : engine.compact_matmul(x, y);
    if (options.reveal) {
      run.output = engine.reveal(run.result);
    } else {
      engine.flush();
    }
  } catch (const Abort& a) {
    run.abort = a;
  }
  run.ledgers = engine.ledgers();
  run.comm = net.log();
  run.consumption = engine.consumption();
  return run;
}

StepCounters formula_scope_counters(Pipeline pipeline, const CostLedger& ledger) {
  return ledger.at(pipeline == Pipeline::baseline ? "matmul" : "compact_matmul");
}

CommCounters operation_traffic(const CommLog& log, PartyId party) {
  return log.totals(party, {"E", "U", "D"});
}

// ---- attack trials ---------------------------------------------------------

AttackTarget attack_target_from_string(std::string_view name) {
  if (name == "compact") return AttackTarget::compact;
  if (name == "batch") return AttackTarget::batch;
  throw std::invalid_argument("unknown attack target '" + std::string(name) + "' (expected compact or batch)");
}

AttackStrategy attack_strategy_from_string(std::string_view name) {
  if (name == "random") return AttackStrategy::random;
  if (name == "all-y-zero") return AttackStrategy::all_y_zero;
  if (name == "single-entry") return AttackStrategy::single_entry;
  if (name == "top-bit") return AttackStrategy::top_bit;
  if (name == "zero") return AttackStrategy::zero;
  if (name == "half-modulus") return AttackStrategy::half_modulus;
  throw std::invalid_argument("unknown attack strategy '" + std::string(name) + "'");
}

const char* to_string(AttackTarget t) { return t == AttackTarget::compact ? "compact" : "batch"; }

const char* to_string(AttackStrategy s) {
  switch (s) {
    case AttackStrategy::random: return "random";
    case AttackStrategy::all_y_zero: return "all-y-zero";
    case AttackStrategy::single_entry: return "single-entry";
    case AttackStrategy::top_bit: return "top-bit";
    case AttackStrategy::zero: return "zero";
    case AttackStrategy::half_modulus: return "half-modulus";
  }
  return "?";
}

double AttackResult::rate() const {
  return trials == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(trials);
}

double AttackResult::sigma() const {
  return trials == 0 ? 0.0 : std::sqrt(bound * (1.0 - bound) / static_cast<double>(trials));
}

bool AttackResult::pass() const {
  if (expect_accept) return accepted == trials;
  if (!bounded) return true;
  return rate() <= bound + 3.0 * sigma();
}

AdversarySpec strategy_adversary(const AttackConfig& cfg) {
  AdversarySpec adv;
  if (cfg.strategy == AttackStrategy::half_modulus) return adv;
  const PartyId culprit = cfg.parties;
  adv.corrupt = {culprit};
  TamperRule rule;
  rule.party = culprit;
  switch (cfg.strategy) {
    case AttackStrategy::random: rule.kind = TamperKind::random_nonzero; break;
    case AttackStrategy::all_y_zero: rule.kind = TamperKind::column_top; break;
    case AttackStrategy::single_entry: rule.kind = TamperKind::single_entry; break;
    case AttackStrategy::top_bit: rule.kind = TamperKind::top_bits; break;
    case AttackStrategy::zero:
      rule.kind = TamperKind::additive;
      rule.error = RMatrix(1, 1, cfg.params.share_width());
      break;
    case AttackStrategy::half_modulus: break;
  }
  if (cfg.target == AttackTarget::compact) {
    rule.step = "D";
    adv.rules.push_back(rule);
  } else {
    rule.step = "E";
    adv.rules.push_back(rule);
    rule.step = "U";
    adv.rules.push_back(rule);
  }
  return adv;
}

namespace {

// One trial of the checksum event with y fixed to 2^{k+s-1} e_1: only the
// public combiners vary.
bool half_modulus_trial(const AttackConfig& cfg, std::uint64_t seed) {
  const RingParams& p = cfg.params;
  Network net(cfg.parties, p, seed);
  const auto chi_hat = net.coin_toss("half_modulus/chi_hat", cfg.shape.t1, 1, p.s);
  RMatrix y(cfg.shape.t1, 1, p.share_width());
  y[0] = RElem::pow2(p.share_width() - 1, p.share_width());
  RElem acc = RElem::zero(p.check_width());
  for (std::size_t i = 0; i < y.size(); ++i) acc += mul_key(chi_hat.values[i], y[i].lift(p.check_width()));
  return acc.is_zero();
}

bool protocol_trial(const AttackConfig& cfg, const AdversarySpec& base, std::uint64_t trial) {
  RunOptions opt;
  opt.parties = cfg.parties;
  opt.seed = trial_seed(cfg.seed, trial, 1);
  opt.reveal = false;
  opt.adversary = base;
  opt.adversary.seed = trial_seed(cfg.seed, trial, 2);
  const auto inputs = random_inputs(cfg.params, cfg.shape, std::min(cfg.params.k - 1, 8u), trial_seed(cfg.seed, trial, 3));
  const Pipeline pipeline = cfg.target == AttackTarget::compact ? Pipeline::compact : Pipeline::baseline;
  return !run_pipeline(pipeline, cfg.params, inputs, opt).abort.has_value();
}

}  // namespace

AttackResult run_attack(const AttackConfig& cfg) {
  cfg.params.validate();
  if (cfg.parties < 2) throw std::invalid_argument("attack: at least two parties are required");
  AdversarySpec adv = cfg.adversary ? *cfg.adversary : strategy_adversary(cfg);
  if (cfg.strategy != AttackStrategy::half_modulus || cfg.adversary) adv.validate(cfg.parties);

  AttackResult res;
  res.trials = cfg.trials;
  if (cfg.adversary) {
    res.bound = cfg.params.forgery_bound();
  } else {
    switch (cfg.strategy) {
      case AttackStrategy::half_modulus: res.bound = std::ldexp(1.0, -static_cast<int>(cfg.params.s)); break;
      case AttackStrategy::zero:
        res.bound = 1.0;
        res.expect_accept = true;
        break;
      case AttackStrategy::top_bit:
        res.bound = cfg.params.forgery_bound();
        res.bounded = false;
        break;
      default: res.bound = cfg.params.forgery_bound(); break;
    }
  }

  const bool half_modulus = cfg.strategy == AttackStrategy::half_modulus && !cfg.adversary;
  std::atomic<std::uint64_t> accepted{0};
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      for (std::uint64_t t = next++; t < cfg.trials; t = next++) {
        const bool ok = half_modulus ? half_modulus_trial(cfg, trial_seed(cfg.seed, t, 4)) : protocol_trial(cfg, adv, t);
        if (ok) ++accepted;
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = cfg.trials;
    }
  };
  const unsigned threads = std::max(1u, cfg.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  res.accepted = accepted.load();
  return res;
}

}  // namespace ctag
