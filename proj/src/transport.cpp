#include "ctag/transport.hpp"

#include <json.hpp>

#include <algorithm>
#include <ostream>

namespace ctag {

Commitment commit(const Opening& o, const Hasher& h) {
  return {hash_parts({o.payload, o.randomness}, h)};
}

bool verify_opening(const Commitment& c, const Opening& o, const Hasher& h) {
  return commit(o, h) == c;
}

namespace {

std::string abort_message(Abort::Reason reason, const std::string& step, std::optional<PartyId> culprit) {
  std::string msg = reason == Abort::Reason::tag_mismatch ? "abort: tag mismatch" : "abort: equivocation";
  msg += " at " + step;
  if (culprit) msg += " by party " + std::to_string(*culprit);
  return msg;
}

}  // namespace

Abort::Abort(Reason reason, std::string step, std::optional<PartyId> culprit)
    : std::runtime_error(abort_message(reason, step, culprit)),
      reason_(reason),
      step_(std::move(step)),
      culprit_(culprit) {}

const char* to_string(TamperKind kind) {
  switch (kind) {
    case TamperKind::additive: return "additive";
    case TamperKind::random_nonzero: return "random_nonzero";
    case TamperKind::single_entry: return "single_entry";
    case TamperKind::column_top: return "column_top";
    case TamperKind::top_bits: return "top_bits";
    case TamperKind::equivocate: return "equivocate";
    case TamperKind::fixed_seed: return "fixed_seed";
  }
  return "unknown";
}

TamperKind tamper_kind_from_string(std::string_view name) {
  for (auto k : {TamperKind::additive, TamperKind::random_nonzero, TamperKind::single_entry,
                 TamperKind::column_top, TamperKind::top_bits, TamperKind::equivocate,
                 TamperKind::fixed_seed}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown tamper kind '" + std::string(name) + "'");
}

const std::vector<std::string>& known_step_kinds() {
  static const std::vector<std::string> kinds{"W",       "E",         "U",          "D",
                                              "open_w",  "open_cs",   "batch_cs",   "compact_cs",
                                              "batch_chi", "chi",     "chi_hat",    "coin"};
  return kinds;
}

std::string_view step_kind(std::string_view label) {
  auto pos = label.rfind('/');
  return pos == std::string_view::npos ? label : label.substr(pos + 1);
}

void AdversarySpec::validate(std::size_t parties) const {
  for (PartyId p : corrupt) {
    if (p < 1 || p > parties) throw std::invalid_argument("adversary: corrupt party id out of range");
  }
  if (corrupt.size() >= parties) throw std::invalid_argument("adversary: at least one party must be honest");
  const auto& kinds = known_step_kinds();
  for (const auto& r : rules) {
    if (std::find(kinds.begin(), kinds.end(), r.step) == kinds.end()) {
      throw std::invalid_argument("adversary: unknown step label '" + r.step + "'");
    }
    if (corrupt.count(r.party) == 0) {
      throw std::invalid_argument("adversary: rule targets honest party " + std::to_string(r.party));
    }
    if (r.kind == TamperKind::additive && !r.error) {
      throw std::invalid_argument("adversary: additive rule without error matrix");
    }
  }
}

AdversarySpec AdversarySpec::from_json(std::string_view text, const RingParams& params) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("adversary file: ") + e.what());
  }
  auto literal = [&](const json& v) {
    if (v.is_string()) return RElem::parse(v.get<std::string>(), params.share_width());
    if (v.is_number_integer()) return RElem::from_i64(v.get<std::int64_t>(), params.share_width());
    throw std::invalid_argument("adversary file: error entries must be integers or strings");
  };
  AdversarySpec spec;
  try {
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& p : doc.at("corrupt")) spec.corrupt.insert(p.get<PartyId>());
    for (const auto& r : doc.at("rules")) {
      TamperRule rule;
      rule.step = r.at("step").get<std::string>();
      rule.party = r.at("party").get<PartyId>();
      rule.kind = tamper_kind_from_string(r.value("kind", std::string("random_nonzero")));
      if (r.contains("error")) {
        const auto& e = r.at("error");
        if (e.is_array()) {
          std::vector<RElem> data;
          std::size_t cols = 0;
          for (const auto& row : e) {
            if (!row.is_array()) throw std::invalid_argument("adversary file: error must be a matrix");
            if (cols == 0) cols = row.size();
            if (row.size() != cols || cols == 0) throw std::invalid_argument("adversary file: ragged error matrix");
            for (const auto& x : row) data.push_back(literal(x));
          }
          std::size_t rows = data.size() / cols;
          rule.error = RMatrix(rows, cols, std::move(data));
        } else {
          rule.error = RMatrix(1, 1, std::vector<RElem>{literal(e)});
        }
      }
      spec.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("adversary file: ") + e.what());
  }
  return spec;
}

void CommLog::record(const std::string& label, PartyId party, std::uint64_t elements, std::uint64_t bytes,
                     std::uint64_t messages) {
  auto& c = entries_[{label, party}];
  c.elements += elements;
  c.bytes += bytes;
  c.messages += messages;
}

CommCounters CommLog::totals(PartyId party, const std::set<std::string>& kinds) const {
  CommCounters out;
  for (const auto& [key, c] : entries_) {
    if (key.second != party) continue;
    if (!kinds.empty() && kinds.count(std::string(step_kind(key.first))) == 0) continue;
    out.elements += c.elements;
    out.bytes += c.bytes;
    out.messages += c.messages;
  }
  return out;
}

CommCounters CommLog::totals_with_prefix(PartyId party, std::string_view prefix) const {
  CommCounters out;
  for (const auto& [key, c] : entries_) {
    if (key.second != party || key.first.compare(0, prefix.size(), prefix) != 0) continue;
    out.elements += c.elements;
    out.bytes += c.bytes;
    out.messages += c.messages;
  }
  return out;
}

void CommLog::write_csv(std::ostream& os) const {
  os << "step_label,party,elements,bytes\n";
  for (const auto& [key, c] : entries_) {
    os << key.first << ',' << key.second << ',' << c.elements << ',' << c.bytes << '\n';
  }
}

namespace {

std::uint64_t element_bytes(unsigned width) { return (width + 7) / 8; }

Bytes serialize(const RMatrix& m) {
  Bytes out;
  auto put = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(m.rows(), 8);
  put(m.cols(), 8);
  put(m.width(), 4);
  for (const auto& e : m.data()) {
    for (unsigned i = 0; i < (e.width() + 63) / 64; ++i) put(e.limbs()[i], 8);
  }
  return out;
}

RMatrix deserialize(const Bytes& b) {
  std::size_t pos = 0;
  auto get = [&](int n) {
    if (b.size() - pos < static_cast<std::size_t>(n)) throw std::runtime_error("malformed opened payload");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[pos++]) << (8 * i);
    return v;
  };
  std::size_t rows = get(8);
  std::size_t cols = get(8);
  auto width = static_cast<unsigned>(get(4));
  std::vector<RElem> data;
  for (std::size_t i = 0; i < rows * cols; ++i) {
    RElem::Limbs l{};
    for (unsigned j = 0; j < (width + 63) / 64; ++j) l[j] = get(8);
    data.emplace_back(l, width);
  }
  return RMatrix(rows, cols, std::move(data));
}

std::array<std::uint8_t, 8> le64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

}  // namespace

Network::Network(std::size_t parties, const RingParams& params, std::uint64_t seed, AdversarySpec adversary)
    : n_(parties),
      params_(params),
      adversary_(std::move(adversary)),
      adversary_prg_(le64(adversary_.seed ^ seed), "ctag.adversary") {
  if (n_ < 2) throw std::invalid_argument("network: at least two parties required");
  adversary_.validate(n_);
  for (PartyId p = 1; p <= n_; ++p) {
    auto s = le64(seed);
    auto id = le64(p);
    Digest d = hash_parts({as_bytes("party-randomness"), s, id});
    party_prgs_.emplace_back(d);
  }
}

void Network::check_party_count(std::size_t got, const std::string& label) const {
  if (got != n_) {
    throw RoundError("round desync at " + label + ": " + std::to_string(got) + " of " +
                     std::to_string(n_) + " parties sent");
  }
}

RMatrix Network::make_error(const TamperRule& rule, const RMatrix& payload, const std::string& label) {
  const unsigned w = payload.width();
  const std::size_t rows = payload.rows();
  const std::size_t cols = payload.cols();
  const unsigned k = std::min(params_.k, w);
  auto nonzero_mod_k = [&](const RElem& e) { return !e.reduce(k).is_zero(); };
  switch (rule.kind) {
    case TamperKind::additive: {
      const RMatrix& e = *rule.error;
      if (e.rows() == rows && e.cols() == cols) return e.width() == w ? e : reduce(lift(e, std::max(e.width(), w)), w);
      if (e.rows() == 1 && e.cols() == 1) {
        RElem v = e.width() >= w ? e[0].reduce(w) : e[0].lift(w);
        return RMatrix(rows, cols, std::vector<RElem>(rows * cols, v));
      }
      throw std::invalid_argument("additive tamper at " + label + ": error shape does not match payload");
    }
    case TamperKind::random_nonzero: {
      for (;;) {
        RMatrix e = adversary_prg_.uniform_matrix(rows, cols, w);
        if (std::any_of(e.data().begin(), e.data().end(), nonzero_mod_k)) return e;
      }
    }
    case TamperKind::single_entry: {
      RMatrix e(rows, cols, w);
      std::size_t pos = adversary_prg_.uniform_below(rows * cols);
      RElem v;
      do {
        v = adversary_prg_.uniform(w);
      } while (!nonzero_mod_k(v));
      e[pos] = v;
      return e;
    }
    case TamperKind::column_top: {
      RMatrix e(rows, cols, w);
      std::size_t col = adversary_prg_.uniform_below(cols);
      for (std::size_t r = 0; r < rows; ++r) e(r, col) = RElem::pow2(k - 1, w);
      return e;
    }
    case TamperKind::top_bits: {
      if (w <= params_.k) throw std::invalid_argument("top_bits tamper needs a payload wider than k");
      for (;;) {
        RMatrix t = adversary_prg_.uniform_matrix(rows, cols, w - params_.k);
        if (std::all_of(t.data().begin(), t.data().end(), [](const RElem& x) { return x.is_zero(); })) continue;
        return shift_up(lift(t, w), params_.k);
      }
    }
    case TamperKind::equivocate:
    case TamperKind::fixed_seed:
      break;
  }
  return RMatrix(rows, cols, w);
}

void Network::apply_tamper(const std::string& label, PartyId p, RMatrix& payload) {
  if (adversary_.corrupt.count(p) == 0) return;
  const auto kind = step_kind(label);
  for (const auto& rule : adversary_.rules) {
    if (rule.party != p || rule.step != kind) continue;
    if (rule.kind == TamperKind::equivocate || rule.kind == TamperKind::fixed_seed) continue;
    payload += make_error(rule, payload, label);
  }
}

std::vector<RMatrix> Network::broadcast_shares(const std::string& label, std::vector<RMatrix> sent) {
  check_party_count(sent.size(), label);
  ++round_;
  for (PartyId p = 1; p <= n_; ++p) {
    RMatrix& m = sent[p - 1];
    apply_tamper(label, p, m);
    log_.record(label, p, m.size(), m.size() * element_bytes(m.width()));
  }
  return sent;
}

void Network::commit_bytes(const std::string& label, std::vector<Bytes> payloads) {
  check_party_count(payloads.size(), label);
  if (pending_.count(label) != 0) throw RoundError("commit round " + label + " already open");
  ++round_;
  Pending pend;
  for (PartyId p = 1; p <= n_; ++p) {
    Opening o{std::move(payloads[p - 1]), party_prg(p).bytes<16>()};
    pend.commitments.push_back(commit(o));
    pend.openings.push_back(std::move(o));
    log_.record(label + "/commit", p, 0, Digest{}.size());
  }
  pending_.emplace(label, std::move(pend));
}

std::vector<Bytes> Network::open_bytes(const std::string& label) {
  auto it = pending_.find(label);
  if (it == pending_.end()) throw RoundError("open before commit at " + label);
  Pending pend = std::move(it->second);
  pending_.erase(it);
  ++round_;
  // Seed openings of a coin toss answer to the toss's own step kind or to "coin".
  const bool coin = step_kind(label) == "seed";
  const auto kind = coin ? step_kind(std::string_view(label).substr(0, label.size() - 5)) : step_kind(label);
  std::vector<Bytes> out;
  for (PartyId p = 1; p <= n_; ++p) {
    Opening o = std::move(pend.openings[p - 1]);
    if (adversary_.corrupt.count(p) != 0) {
      for (const auto& rule : adversary_.rules) {
        const bool targeted = rule.step == kind || (coin && rule.step == "coin");
        if (rule.party == p && targeted && rule.kind == TamperKind::equivocate && !o.payload.empty()) {
          o.payload.back() ^= 0x01;
        }
      }
    }
    log_.record(label + "/open", p, 0, o.payload.size() + o.randomness.size());
    if (!verify_opening(pend.commitments[p - 1], o)) {
      throw Abort(Abort::Reason::equivocation, label, p);
    }
    out.push_back(std::move(o.payload));
  }
  return out;
}

void Network::commit_round(const std::string& label, std::vector<RMatrix> payloads) {
  check_party_count(payloads.size(), label);
  std::vector<Bytes> raw;
  for (PartyId p = 1; p <= n_; ++p) {
    apply_tamper(label, p, payloads[p - 1]);
    raw.push_back(serialize(payloads[p - 1]));
  }
  commit_bytes(label, std::move(raw));
}

std::vector<RMatrix> Network::open_round(const std::string& label) {
  auto raw = open_bytes(label);
  std::vector<RMatrix> out;
  for (PartyId p = 1; p <= n_; ++p) {
    out.push_back(deserialize(raw[p - 1]));
    // The opening message was already logged in bytes; add its ring elements.
    log_.record(label + "/open", p, out.back().size(), 0, 0);
  }
  return out;
}

PublicCoins Network::coin_toss(const std::string& label, std::size_t rows, std::size_t cols, unsigned width) {
  const auto kind = step_kind(label);
  std::vector<Bytes> seeds;
  for (PartyId p = 1; p <= n_; ++p) {
    auto s = party_prg(p).bytes<32>();
    if (adversary_.corrupt.count(p) != 0) {
      for (const auto& rule : adversary_.rules) {
        const bool targeted = rule.step == kind || rule.step == "coin";
        if (rule.party == p && targeted && rule.kind == TamperKind::fixed_seed) s.fill(0);
      }
    }
    seeds.emplace_back(s.begin(), s.end());
  }
  const std::string seed_label = label + "/seed";
  commit_bytes(seed_label, std::move(seeds));
  auto opened = open_bytes(seed_label);
  std::array<std::uint8_t, 32> combined{};
  for (const auto& s : opened) {
    if (s.size() != combined.size()) throw Abort(Abort::Reason::equivocation, seed_label);
    for (std::size_t i = 0; i < combined.size(); ++i) combined[i] ^= s[i];
  }
  Prg expand(combined, "ctag.coin:" + label);
  return {expand.uniform_matrix(rows, cols, width), round_};
}

}  // namespace ctag
