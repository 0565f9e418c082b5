#include "ctag/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "ctag/harness.hpp"
#include "ctag/oracle.hpp"
#include "ctag/shapes.hpp"

namespace ctag {

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

MatmulShape parse_shape(const std::string& text) {
  MatmulShape s;
  char x1 = 0, x2 = 0;
  std::istringstream is(text);
  if (!(is >> s.t1 >> x1 >> s.t2 >> x2 >> s.t3) || x1 != 'x' || x2 != 'x' || !is.eof() || s.t1 == 0 ||
      s.t2 == 0 || s.t3 == 0) {
    throw UsageError("shape must look like T1xT2xT3 with positive entries, got '" + text + "'");
  }
  return s;
}

std::string shape_label(const MatmulShape& s) {
  return std::to_string(s.t1) + "x" + std::to_string(s.t2) + "x" + std::to_string(s.t3);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct CommonFlags {
  unsigned k = 64;
  unsigned s = 64;
  unsigned f = 16;
  std::size_t parties = 2;
  std::uint64_t seed = 1;

  void add(CLI::App& app) {
    app.add_option("--k", k, "Message ring bits")->capture_default_str();
    app.add_option("--s", s, "MAC security bits")->capture_default_str();
    app.add_option("--f", f, "Fixed-point fraction bits")->capture_default_str();
    app.add_option("--parties", parties, "Number of parties (>= 2)")->capture_default_str();
    app.add_option("--seed", seed, "Seed for dealer, network and inputs")->capture_default_str();
  }

  RingParams params() const {
    RingParams p{k, s, f};
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (parties < 2) throw UsageError("--parties must be at least 2");
    return p;
  }
};

// ---- bench -------------------------------------------------------------------

struct BenchFlags {
  CommonFlags common;
  std::string model;
  std::string model_file;
  std::string shape;
  std::string protocol = "compacttag";
  std::string mode = "formula";
  bool training = false;
  std::size_t seq_len = 0;
  std::string out;
  std::string format = "csv";
  bool timing = false;
  std::uint64_t max_volume = std::uint64_t{1} << 22;
  std::string adversary;
};

ModelSpec bench_model(const BenchFlags& b) {
  const int sources = !b.model.empty() + !b.model_file.empty() + !b.shape.empty();
  if (sources != 1) throw UsageError("give exactly one of --model, --model-file or --shape");
  ModelSpec m;
  try {
    if (!b.model.empty()) {
      m = builtin_model(b.model, b.seq_len);
    } else if (!b.model_file.empty()) {
      m = load_model_file(b.model_file, b.seq_len);
    } else {
      const MatmulShape s = parse_shape(b.shape);
      LayerSpec l;
      l.name = shape_label(s);
      l.fc = s;
      m.name = "shape";
      m.layers.push_back(l);
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return b.training ? training_expansion(m) : m;
}

ReportRow formula_row(const LayerSpec& layer, const MatmulShape& s) {
  ReportRow row;
  row.label = layer.name;
  row.t1 = s.t1;
  row.t2 = s.t2;
  row.t3 = s.t3;
  row.instances = layer.batch;
  row.baseline_tag_formula = formula_baseline_tag(s.t1, s.t2, s.t3) * layer.batch;
  row.compact_tag_formula = formula_compact_tag(s.t1, s.t2, s.t3) * layer.batch;
  row.baseline_value_formula = formula_baseline_value(s.t1, s.t2, s.t3) * layer.batch;
  row.compact_value_formula = formula_compact_value(s.t1, s.t2, s.t3) * layer.batch;
  return row;
}

int cmd_bench(const BenchFlags& b, std::ostream& out, std::ostream& err) {
  const RingParams params = b.common.params();
  const Pipeline pipeline = pipeline_from_string(b.protocol);
  if (b.mode != "formula" && b.mode != "instrumented") throw UsageError("--mode must be formula or instrumented");
  const ReportFormat format = report_format_from_string(b.format);
  const ModelSpec model = bench_model(b);
  AdversarySpec adversary;
  if (!b.adversary.empty()) {
    if (b.mode != "instrumented") throw UsageError("--adversary needs --mode instrumented");
    try {
      adversary = AdversarySpec::from_json(read_file(b.adversary), params);
      adversary.validate(b.common.parties);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("adversary file: ") + e.what());
    }
  }

  CostReport report;
  report.mode = b.mode;
  report.protocol = to_string(pipeline);
  report.model = model.name + (model.training ? "+training" : "");
  report.params = params;
  report.parties = b.common.parties;
  report.seed = b.common.seed;

  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t elem_bytes = (params.share_width() + 7) / 8;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    const MatmulShape s = layer.matmul();
    ReportRow row = formula_row(layer, s);
    if (b.mode == "formula") {
      const bool base = pipeline == Pipeline::baseline;
      row.counters.tag_mults = base ? row.baseline_tag_formula : row.compact_tag_formula;
      row.counters.value_mults = base ? row.baseline_value_formula : row.compact_value_formula;
      row.counters.broadcast_elements = formula_broadcast_elements(s.t1, s.t2, s.t3) * layer.batch;
      row.counters.broadcast_bytes = row.counters.broadcast_elements * elem_bytes;
    } else {
      const std::uint64_t volume = static_cast<std::uint64_t>(s.t1) * s.t2 * s.t3;
      if (volume > b.max_volume) {
        throw UsageError("layer " + layer.name + " (" + shape_label(s) + ") exceeds --max-volume " +
                         std::to_string(b.max_volume) + "; use --mode formula for this shape");
      }
      RunOptions opt;
      opt.parties = b.common.parties;
      opt.seed = b.common.seed + i;
      opt.reveal = false;
      opt.adversary = adversary;
      const unsigned bits = params.k > 2 + 2 * params.f ? std::min(params.k - 2 - 2 * params.f, 62u) : 1u;
      const auto run = run_pipeline(pipeline, params, random_inputs(params, s, bits, b.common.seed + i), opt);
      if (run.abort) {
        err << "bench: run aborted in " << run.abort->step() << ": " << run.abort->what() << "\n";
        return kExitFail;
      }
      const CostLedger& ledger = run.ledgers.front();
      const StepCounters scoped = formula_scope_counters(pipeline, ledger);
      const CommCounters traffic = operation_traffic(run.comm, 1);
      row.counters.tag_mults = scoped.tag_mults * layer.batch;
      row.counters.value_mults = scoped.value_mults * layer.batch;
      row.counters.check_mults = ledger.total().check_mults * layer.batch;
      row.counters.broadcast_elements = traffic.elements * layer.batch;
      row.counters.broadcast_bytes = traffic.bytes * layer.batch;
    }
    report.rows.push_back(std::move(row));
  }
  if (report.rows.size() > 1) report.rows.push_back(report.aggregate());
  if (b.timing) {
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  if (b.out.empty()) {
    emit_report(report, format, out);
  } else {
    try {
      emit_report_file(report, format, b.out);
    } catch (const std::runtime_error& e) {
      err << "bench: " << e.what() << "\n";
      return kExitFail;
    }
  }
  return kExitPass;
}

// ---- verify ------------------------------------------------------------------

struct VerifyFlags {
  CommonFlags common;
  std::uint64_t trials = 100;
  std::string shape = "8x8x8";
  std::string inject_fault = "none";
};

// floor(x . y / 2^f) per entry, computed in 128-bit integers.
std::vector<__int128> plain_reference(const WorkloadInputs& in, unsigned f) {
  std::vector<__int128> out;
  for (std::size_t i = 0; i < in.x.rows(); ++i) {
    for (std::size_t j = 0; j < in.y.cols(); ++j) {
      __int128 acc = 0;
      for (std::size_t l = 0; l < in.x.cols(); ++l) {
        acc += static_cast<__int128>(in.x(i, l).to_i64()) * in.y(l, j).to_i64();
      }
      out.push_back(acc >> f);
    }
  }
  return out;
}

int cmd_verify(const VerifyFlags& v, std::ostream& out, std::ostream& err) {
  const RingParams params = v.common.params();
  const MatmulShape shape = parse_shape(v.shape);
  if (v.inject_fault != "none" && v.inject_fault != "mac" && v.inject_fault != "tag") {
    throw UsageError("--inject-fault must be none, mac or tag");
  }
  if (params.k < 3 + 2 * params.f) throw UsageError("verify needs k >= 2f + 3 for bounded fixed-point inputs");
  const unsigned bits = std::min(params.k - 2 - 2 * params.f, 62u);

  std::map<std::string, std::uint64_t> passed;
  auto fail = [&](const std::string& property, std::uint64_t trial, const std::string& detail) {
    out << "FAIL " << property << " (trial " << trial << "): " << detail << "\n";
    return kExitFail;
  };

  for (std::uint64_t t = 0; t < v.trials; ++t) {
    const std::size_t parties = v.common.parties + (t % 2);
    const std::uint64_t seed = v.common.seed * 1000003 + t;
    const WorkloadInputs in = random_inputs(params, shape, bits, seed);
    RunOptions opt;
    opt.parties = parties;
    opt.seed = seed;
    if (v.inject_fault == "tag") {
      opt.adversary.corrupt = {parties};
      opt.adversary.rules.push_back({"D", parties, TamperKind::random_nonzero, std::nullopt});
      opt.adversary.seed = seed;
    }
    PipelineRun compact = run_pipeline(Pipeline::compact, params, in, opt);
    if (compact.abort) return fail("compact_tag_check", t, compact.abort->what());
    opt.adversary = {};
    const PipelineRun baseline = run_pipeline(Pipeline::baseline, params, in, opt);
    if (baseline.abort) return fail("batch_tag_check", t, baseline.abort->what());
    ++passed["honest checks accept"];

    if (v.inject_fault == "mac") {
      auto& m = compact.result.front().macs;
      m[0] += RElem::from_u64(1, m.width());
    }
    try {
      oracle::require_mac_invariant(compact.result, compact.keys, params, "compact_matmul output");
      oracle::require_mac_invariant(baseline.result, baseline.keys, params, "truncate output");
    } catch (const oracle::InvariantViolation& e) {
      return fail(e.invariant(), t, e.what());
    }
    ++passed["mac_invariant"];

    if (!(*compact.output == *baseline.output)) {
      return fail("output_equivalence", t, "compact and baseline outputs differ");
    }
    ++passed["output_equivalence"];

    const auto ref = plain_reference(in, params.f);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const __int128 got = (*compact.output)[i].to_i64();
      if (got - ref[i] > 1 || ref[i] - got > 1) {
        return fail("truncation_accuracy", t, "entry " + std::to_string(i) + " off by more than 1");
      }
    }
    ++passed["truncation_accuracy"];

    if (!compact.consumption.same_multiset(baseline.consumption)) {
      return fail("offline_parity", t, "material consumption differs");
    }
    ++passed["offline_parity"];

    for (PartyId p = 1; p <= parties; ++p) {
      if (operation_traffic(compact.comm, p).elements != operation_traffic(baseline.comm, p).elements) {
        return fail("communication_parity", t, "party " + std::to_string(p));
      }
    }
    ++passed["communication_parity"];
  }
  for (const auto& [name, count] : passed) out << "PASS " << name << " (" << count << " trials)\n";
  out << "verify: all properties hold over " << v.trials << " trials of " << shape_label(shape) << "\n";
  (void)err;
  return kExitPass;
}

// ---- attack ------------------------------------------------------------------

struct AttackFlags {
  CommonFlags common;
  std::string target = "compact";
  std::string strategy = "random";
  std::uint64_t trials = 20000;
  unsigned threads = 1;
  std::string shape = "4x4x4";
  std::string adversary;
};

int cmd_attack(const AttackFlags& a, std::ostream& out) {
  AttackConfig cfg;
  cfg.params = a.common.params();
  if (cfg.params.s > 16) throw UsageError("attack needs --s <= 16 so that acceptance events are observable");
  cfg.parties = a.common.parties;
  cfg.shape = parse_shape(a.shape);
  cfg.target = attack_target_from_string(a.target);
  cfg.strategy = attack_strategy_from_string(a.strategy);
  cfg.trials = a.trials;
  cfg.seed = a.common.seed;
  cfg.threads = a.threads;
  if (cfg.trials == 0) throw UsageError("--trials must be positive");
  if (!a.adversary.empty()) {
    try {
      cfg.adversary = AdversarySpec::from_json(read_file(a.adversary), cfg.params);
      cfg.adversary->validate(cfg.parties);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("adversary file: ") + e.what());
    }
  }
  const AttackResult r = run_attack(cfg);

  out << "target,strategy,k,s,parties,shape,trials,accepted,rate,bound,sigma,threshold,pass\n";
  out << std::setprecision(6) << std::fixed;
  out << to_string(cfg.target) << ',' << (cfg.adversary ? "file" : to_string(cfg.strategy)) << ','
      << cfg.params.k << ',' << cfg.params.s << ',' << cfg.parties << ',' << shape_label(cfg.shape) << ','
      << r.trials << ',' << r.accepted << ',' << r.rate() << ',' << r.bound << ',' << r.sigma() << ',';
  if (r.expect_accept) {
    out << "rate=1";
  } else if (r.bounded) {
    out << r.bound + 3.0 * r.sigma();
  } else {
    out << "none";
  }
  out << ',' << (r.pass() ? "yes" : "no") << "\n";
  return r.pass() ? kExitPass : kExitFail;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CompactTag SPDZ2k online-phase simulator: cost benchmarks, correctness and soundness checks"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  BenchFlags bench;
  auto* b = app.add_subcommand("bench", "Multiplication and communication cost report");
  bench.common.add(*b);
  b->add_option("--model", bench.model, "Built-in model: vgg16, resnet50 or transformer");
  b->add_option("--model-file", bench.model_file, "Model description file (JSON)");
  b->add_option("--shape", bench.shape, "Single product T1xT2xT3");
  b->add_option("--protocol", bench.protocol, "baseline or compacttag")->capture_default_str();
  b->add_option("--mode", bench.mode, "formula (closed form) or instrumented (executed)")->capture_default_str();
  b->add_flag("--training", bench.training, "Add the backward-pass products of every layer");
  b->add_option("--seq-len", bench.seq_len, "Transformer sequence length (default from the model file)");
  b->add_option("--out", bench.out, "Report path (default stdout)");
  b->add_option("--format", bench.format, "csv or json")->capture_default_str();
  b->add_flag("--timing", bench.timing, "Record wall time in the report");
  b->add_option("--max-volume", bench.max_volume, "Largest T1*T2*T3 run in instrumented mode")
      ->capture_default_str();
  b->add_option("--adversary", bench.adversary, "Adversary file applied to instrumented runs");

  VerifyFlags verify;
  auto* v = app.add_subcommand("verify", "Honest-run correctness properties");
  verify.common.add(*v);
  v->add_option("--trials", verify.trials, "Number of seeded trials")->capture_default_str();
  v->add_option("--shape", verify.shape, "Product shape T1xT2xT3")->capture_default_str();
  v->add_option("--inject-fault", verify.inject_fault, "none, mac (corrupt an output MAC) or tag (tamper D)")
      ->capture_default_str();

  AttackFlags attack;
  attack.common.k = 16;
  attack.common.s = 8;
  attack.common.f = 4;
  auto* a = app.add_subcommand("attack", "Forgery acceptance rate against the soundness bound");
  attack.common.add(*a);
  a->add_option("--target", attack.target, "compact (tamper D) or batch (tamper E and U)")->capture_default_str();
  a->add_option("--strategy", attack.strategy, "random, all-y-zero, single-entry, top-bit, zero or half-modulus")
      ->capture_default_str();
  a->add_option("--trials", attack.trials, "Number of trials")->capture_default_str();
  a->add_option("--threads", attack.threads, "Worker threads")->capture_default_str();
  a->add_option("--shape", attack.shape, "Product shape T1xT2xT3")->capture_default_str();
  a->add_option("--adversary", attack.adversary, "Adversary file replacing the built-in strategy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (b->parsed()) return cmd_bench(bench, out, err);
    if (v->parsed()) return cmd_verify(verify, out, err);
    return cmd_attack(attack, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }
}

}  // namespace ctag
