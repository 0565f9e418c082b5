#include "support.hpp"

#include <cstdlib>

namespace ctag::test {

Big to_big(const RElem& e) {
  Big out = 0;
  for (int i = 3; i >= 0; --i) {
    out <<= 64;
    out += e.limbs()[static_cast<std::size_t>(i)];
  }
  return out;
}

Big pow2(unsigned e) { return Big(1) << e; }

Big mod_pow2(const Big& x, unsigned width) {
  const Big m = pow2(width);
  Big r = x % m;
  if (r < 0) r += m;
  return r;
}

RElem from_big(const Big& x, unsigned width) {
  Big r = mod_pow2(x, width);
  RElem::Limbs limbs{};
  for (auto& l : limbs) {
    l = static_cast<std::uint64_t>(r & Big(0xffffffffffffffffULL));
    r >>= 64;
  }
  return RElem(limbs, width);
}

std::array<std::uint8_t, 8> seed_bytes(std::uint64_t seed) {
  std::array<std::uint8_t, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  return b;
}

Session::Session(RingParams p, std::size_t n, std::uint64_t seed, AdversarySpec adversary)
    : params(p), parties(n), dealer(p, n, dealer_seed_from(seed)), net(n, p, seed, std::move(adversary)) {
  dealer.init_keys();
}

Engine& Session::start(const MaterialPlan& plan, EngineOptions options) {
  engine = std::make_unique<Engine>(MaterialPool(dealer.generate(plan)), net, options);
  return *engine;
}

oracle::PlainView Session::plain(const PartyShares& m) const { return oracle::reconstruct_all(m, params, parties); }

bool Session::mac_ok(const PartyShares& m) const {
  return oracle::mac_invariant_holds(m, dealer.key_shares(), params);
}

RMatrix random_plain(Prg& prg, std::size_t rows, std::size_t cols, unsigned bits, unsigned k) {
  const std::uint64_t half = (std::uint64_t{1} << bits) - 1;
  RMatrix m(rows, cols, k);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto d = static_cast<std::int64_t>(prg.uniform_below(2 * half + 1)) - static_cast<std::int64_t>(half);
    m[i] = RElem::from_i64(d, k);
  }
  return m;
}

std::vector<Big> plain_product(const RMatrix& x, const RMatrix& y) {
  std::vector<Big> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      Big acc = 0;
      for (std::size_t l = 0; l < x.cols(); ++l) acc += Big(x(i, l).to_i64()) * Big(y(l, j).to_i64());
      out.push_back(acc);
    }
  }
  return out;
}

Big floor_shift(const Big& v, unsigned f) {
  const Big d = pow2(f);
  Big q = v / d;  // truncates toward zero
  if (v < 0 && q * d != v) q -= 1;
  return q;
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

}  // namespace ctag::test
