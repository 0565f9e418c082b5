#include "ctag/oracle.hpp"

namespace ctag::oracle {

RMatrix reconstruct_lifted(const PartyShares& shares) {
  if (shares.empty()) throw InvariantViolation("missing_party", "no shares given");
  RMatrix sum = shares.front().vals;
  for (std::size_t p = 1; p < shares.size(); ++p) sum += shares[p].vals;
  return sum;
}

PlainView to_plain(const RMatrix& m) {
  PlainView v{m.rows(), m.cols(), {}};
  v.data.reserve(m.size());
  for (const auto& e : m.data()) v.data.push_back(e.to_i64());
  return v;
}

PlainView reconstruct_all(const PartyShares& shares, const RingParams& params, std::size_t parties) {
  if (shares.size() != parties) {
    throw InvariantViolation("missing_party", "got " + std::to_string(shares.size()) + " of " +
                                                  std::to_string(parties) + " shares");
  }
  return to_plain(reduce(reconstruct_lifted(shares), params.k));
}

std::int64_t reconstruct_scalar(const std::vector<AuthShare>& shares, const RingParams& params) {
  RElem sum = RElem::zero(params.share_width());
  for (const auto& s : shares) sum += s.val;
  return sum.reduce(params.k).to_i64();
}

RElem effective_key(const std::vector<MacKeyShare>& keys, const RingParams& params) {
  RElem sum = RElem::zero(params.share_width());
  for (const auto& k : keys) sum += k.delta.lift(params.share_width());
  return sum;
}

namespace {

// Returns the index of the first entry violating sum(mac) = key * sum(val), or -1.
long first_violation(const PartyShares& shares, const std::vector<MacKeyShare>& keys, const RingParams& params) {
  if (shares.size() != keys.size()) throw InvariantViolation("missing_party", "share and key counts differ");
  const RElem key = effective_key(keys, params);
  RMatrix val = shares.front().vals;
  RMatrix mac = shares.front().macs;
  for (std::size_t p = 1; p < shares.size(); ++p) {
    val += shares[p].vals;
    mac += shares[p].macs;
  }
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (!(mac[i] == key * val[i])) return static_cast<long>(i);
  }
  return -1;
}

}  // namespace

bool mac_invariant_holds(const PartyShares& shares, const std::vector<MacKeyShare>& keys, const RingParams& params) {
  MulCounterScope no_count(nullptr);
  return first_violation(shares, keys, params) < 0;
}

bool mac_invariant_holds(const std::vector<AuthShare>& shares, const std::vector<MacKeyShare>& keys,
                         const RingParams& params) {
  PartyShares m;
  for (const auto& s : shares) {
    m.push_back({RMatrix(1, 1, std::vector<RElem>{s.val}), RMatrix(1, 1, std::vector<RElem>{s.mac})});
  }
  return mac_invariant_holds(m, keys, params);
}

void require_mac_invariant(const PartyShares& shares, const std::vector<MacKeyShare>& keys, const RingParams& params,
                           const std::string& what) {
  MulCounterScope no_count(nullptr);
  const long bad = first_violation(shares, keys, params);
  if (bad >= 0) {
    const auto cols = static_cast<long>(shares.front().cols());
    throw InvariantViolation("mac_invariant", what + " entry (" + std::to_string(bad / cols) + "," +
                                                  std::to_string(bad % cols) + ")");
  }
}

AuthMatrixShare add_public_party1_only(const AuthMatrixShare& x, const RMatrix& c, PartyId me,
                                       const MacKeyShare& key) {
  AuthMatrixShare out = x;
  if (me == 1) {
    out.vals += c;
    out.macs += scale_key(key.delta, c);
  }
  return out;
}

RMatrix plain_matrix(const std::vector<std::int64_t>& values, std::size_t rows, std::size_t cols, unsigned width) {
  std::vector<RElem> data;
  data.reserve(values.size());
  for (auto v : values) data.push_back(RElem::from_i64(v, width));
  return RMatrix(rows, cols, std::move(data));
}

}  // namespace ctag::oracle
