#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctag/harness.hpp"
#include "ctag/protocol.hpp"
#include "support.hpp"

using namespace ctag;
using test::Big;
using test::Session;
using test::to_big;

namespace {

const RingParams kSmall{16, 8, 4};
const RingParams kWide = RingParams::k64();

RMatrix col(std::initializer_list<std::uint64_t> v, unsigned w) {
  std::vector<RElem> d;
  for (auto x : v) d.push_back(RElem::from_u64(x, w));
  const std::size_t n = d.size();
  return RMatrix(n, 1, std::move(d));
}

AdversarySpec tamper(PartyId p, const std::string& step, TamperKind kind, std::uint64_t seed = 1,
                     std::optional<RMatrix> error = {}) {
  AdversarySpec a;
  a.corrupt = {p};
  a.rules.push_back({step, p, kind, std::move(error)});
  a.seed = seed;
  return a;
}

}  // namespace

// ---- opening --------------------------------------------------------------

TEST_CASE("open_single of a dealt value") {
  Session s(kSmall, 3, 1);
  const auto x = s.dealer.auth_shares(RElem::from_u64(42, kSmall.share_width()));
  Engine& e = s.start({MaterialRequest::open_mask()});
  CHECK(e.open_single(x) == RElem::from_u64(42, kSmall.k));
  CHECK_THROWS_AS(e.open_single(x), MissingMaterial);
}

TEST_CASE("open_single rejects tampered broadcasts at s=8 (5000 trials)") {
  const int trials = 5000;
  int aborted = 0;
  for (int t = 0; t < trials; ++t) {
    Session s(kSmall, 2, 10000 + t, tamper(2, "open_w", TamperKind::random_nonzero, t));
    const auto x = s.dealer.auth_shares(RElem::from_u64(42, kSmall.share_width()));
    Engine& e = s.start({MaterialRequest::open_mask()});
    try {
      e.open_single(x);
    } catch (const Abort& a) {
      CHECK(a.reason() == Abort::Reason::tag_mismatch);
      ++aborted;
    }
  }
  const double q = 1.0 - std::ldexp(1.0, -8);
  const double sigma = std::sqrt(q * (1 - q) / trials);
  CHECK(static_cast<double>(aborted) / trials >= q - 3 * sigma);
}

TEST_CASE("open_single: errors in the masked top bits leave the value intact") {
  for (int t = 0; t < 50; ++t) {
    Session s(kSmall, 2, 20000 + t, tamper(2, "open_w", TamperKind::top_bits, t));
    const auto x = s.dealer.auth_shares(RElem::from_u64(42, kSmall.share_width()));
    Engine& e = s.start({MaterialRequest::open_mask()});
    std::optional<RElem> opened;
    try {
      opened = e.open_single(x);
    } catch (const Abort&) {
      // Rejection is allowed but not required for this error class.
    }
    if (opened) CHECK(*opened == RElem::from_u64(42, kSmall.k));
  }
}

TEST_CASE("batch_open: value is exact, lifted view is masked, traffic is T1*T2") {
  Prg prg(test::seed_bytes(3), "bo");
  int masked = 0;
  for (int t = 0; t < 20; ++t) {
    Session s(kSmall, 2, 300 + t);
    const RMatrix plain = test::random_plain(prg, 3, 4, 10, kSmall.k);
    const auto m = s.input(plain);
    Engine& e = s.start({MaterialRequest::zero_mask(3, 4)});
    const OpenedMatrix o = e.batch_open(m);
    CHECK(o.value == plain);
    CHECK(reduce(o.lifted, kSmall.k) == o.value);
    masked += o.lifted == sign_extend(plain, kSmall.share_width()) ? 0 : 1;
    CHECK(s.net.log().totals(1, {"W"}).elements == 12);
    CHECK(e.pending_batch_elements() == 12);
    CHECK_NOTHROW(e.batch_tag_check());
    CHECK(e.pending_batch_elements() == 0);
  }
  CHECK(masked > 15);
}

TEST_CASE("batch_tag_check: honest zero, tampering caught, forged checksum caught by binding") {
  Prg prg(test::seed_bytes(4), "btc");
  const RMatrix plain = test::random_plain(prg, 2, 2, 10, kSmall.k);
  {
    Session s(kSmall, 2, 1, tamper(2, "W", TamperKind::single_entry));
    const auto m = s.input(plain);
    Engine& e = s.start({MaterialRequest::zero_mask(2, 2)});
    e.batch_open(m);
    int caught = 0;
    try {
      e.batch_tag_check();
    } catch (const Abort& a) {
      CHECK(a.reason() == Abort::Reason::tag_mismatch);
      caught = 1;
    }
    CHECK(caught == 1);  // seed chosen so the single trial is not a lucky forgery
  }
  {
    Session s(kSmall, 3, 2, tamper(3, "batch_cs", TamperKind::equivocate));
    const auto m = s.input(plain);
    Engine& e = s.start({MaterialRequest::zero_mask(2, 2)});
    e.batch_open(m);
    try {
      e.batch_tag_check();
      FAIL("expected abort");
    } catch (const Abort& a) {
      CHECK(a.reason() == Abort::Reason::equivocation);
      CHECK(a.culprit() == std::optional<PartyId>(3));
    }
  }
  {
    // A corrupt party shifting its committed checksum share is rejected.
    Session s(kSmall, 2, 3, tamper(2, "batch_cs", TamperKind::random_nonzero));
    const auto m = s.input(plain);
    Engine& e = s.start({MaterialRequest::zero_mask(2, 2)});
    e.batch_open(m);
    CHECK_THROWS_AS(e.batch_tag_check(), Abort);
  }
}

// ---- baseline multiplication and truncation -------------------------------

TEST_CASE("matmul 1x1x1 is a scalar Beaver multiply") {
  Session s(kSmall, 2, 5);
  const auto x = s.input(col({1234}, kSmall.k)), y = s.input(col({77}, kSmall.k));
  Engine& e = s.start(plan_matmul(1, 1, 1));
  const auto z = e.matmul_spdz2k(x, y);
  CHECK(s.plain(z)(0, 0) == static_cast<std::int64_t>(static_cast<std::int16_t>(1234 * 77)));
  CHECK(s.mac_ok(z));
  CHECK_NOTHROW(e.flush());
}

TEST_CASE("matmul 3x4x2 against the plaintext product") {
  Prg prg(test::seed_bytes(6), "mm");
  for (std::size_t n : {2u, 3u}) {
    Session s(kWide, n, 6 + n);
    const RMatrix xp = test::random_plain(prg, 3, 4, 20, kWide.k), yp = test::random_plain(prg, 4, 2, 20, kWide.k);
    Engine& e = s.start(plan_matmul(3, 4, 2));
    const auto z = e.matmul_spdz2k(s.input(xp), s.input(yp));
    const auto ref = test::plain_product(xp, yp);
    const auto got = s.plain(z);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(Big(got.data[i]) == ref[i]);
    CHECK(s.mac_ok(z));
    CHECK_NOTHROW(e.flush());
  }
}

TEST_CASE("matmul tag counter at (16,12,8) is 4736") {
  Prg prg(test::seed_bytes(7), "mmc");
  Session s(kSmall, 2, 7);
  Engine& e = s.start(plan_matmul(16, 12, 8));
  const auto x = s.input(test::random_plain(prg, 16, 12, 3, kSmall.k));
  const auto y = s.input(test::random_plain(prg, 12, 8, 3, kSmall.k));
  e.matmul_spdz2k(x, y);
  for (const auto& ledger : e.ledgers()) {
    CHECK(ledger.at("matmul").tag_mults == 4736);
    CHECK(ledger.at("matmul").tag_mults == formula_baseline_tag(16, 12, 8));
  }
  CHECK(e.ledgers()[0].at("matmul").value_mults == formula_baseline_value(16, 12, 8));
}

TEST_CASE("truncate: fixed-point product and zero") {
  const RingParams p{64, 64, 16};
  Session s(p, 2, 8);
  const auto x = s.input(RMatrix(1, 1, std::vector<RElem>{encode_fixed(1.5, p)}));
  const auto zero = s.input(RMatrix(1, 1, p.k));
  Engine& e = s.start({MaterialRequest::triple(1, 1, 1), MaterialRequest::trunc_pair(1, 1),
                       MaterialRequest::trunc_pair(1, 1)});
  const auto prod = e.matmul_spdz2k(x, x);
  const auto t = e.truncate(prod);
  const auto v = s.plain(t)(0, 0);
  CHECK(std::abs(v - static_cast<std::int64_t>(2.25 * 65536)) <= 1);
  CHECK(s.mac_ok(t));
  const auto tz = e.truncate(zero);
  CHECK(s.plain(tz)(0, 0) == 0);
  CHECK(s.mac_ok(tz));
  CHECK_NOTHROW(e.flush());
}

// ---- compression and optimistic MACs ---------------------------------------

TEST_CASE("compress examples") {
  const unsigned w = 16;
  const RMatrix m(2, 2, std::vector<RElem>{RElem::from_u64(1, w), RElem::from_u64(2, w), RElem::from_u64(3, w),
                                           RElem::from_u64(4, w)});
  CHECK(compress(m, col({1, 1}, 8), 32) == col({3, 7}, 32));
  CHECK(compress(m, col({0, 1}, 8), 32) == col({2, 4}, 32));
  CHECK(compress(m, col({1, 0}, 8), 32) == col({1, 3}, 32));
  CHECK_THROWS(compress(m, col({1, 1, 1}, 8), 32));
  std::uint64_t count = 0;
  {
    MulCounterScope scope(&count);
    compress(m, col({1, 1}, 8), 32);
  }
  CHECK(count == 4);
}

TEST_CASE("compress accumulates without intermediate reduction (200 cases)") {
  Prg prg(test::seed_bytes(9), "compress");
  for (int c = 0; c < 200; ++c) {
    const RingParams p = c % 2 == 0 ? kWide : kSmall;
    const std::size_t rows = 1 + prg.uniform_below(4), cols = 1 + prg.uniform_below(6);
    const RMatrix m = prg.uniform_matrix(rows, cols, p.share_width());
    const RMatrix chi = prg.uniform_matrix(cols, 1, p.s);
    const RMatrix got = compress(m, chi, p.check_width());
    for (std::size_t i = 0; i < rows; ++i) {
      Big acc = 0;
      for (std::size_t j = 0; j < cols; ++j) acc += to_big(m(i, j)) * to_big(chi[j]);
      CHECK(to_big(got[i]) == test::mod_pow2(acc, p.check_width()));
    }
  }
}

TEST_CASE("opt_mac: honest invariant, opened consistency, and the exact error under tampering") {
  Prg prg(test::seed_bytes(10), "optmac");
  const RMatrix plain = test::random_plain(prg, 2, 3, 10, kSmall.k);
  const RMatrix err = prg.uniform_matrix(2, 3, kSmall.share_width());
  for (bool attack : {false, true}) {
    Session s(kSmall, 2, 10, attack ? tamper(2, "D", TamperKind::additive, 1, err) : AdversarySpec{});
    const auto m = s.input(plain);
    Engine& e = s.start({MaterialRequest::random_auth(2, 3)});
    std::vector<RMatrix> vals;
    for (const auto& sh : m) vals.push_back(sh.vals);
    const OptMacResult r = e.opt_mac(vals);
    CHECK(reduce(r.d.lifted, kSmall.k) == r.d.value);
    PartyShares out;
    for (PartyId p = 1; p <= 2; ++p) out.push_back({vals[p - 1], r.macs[p - 1]});
    if (!attack) {
      CHECK(s.mac_ok(out));
      CHECK(s.net.log().totals(1, {"D"}).elements == 6);
    } else {
      const RElem key = s.dealer.mac_key();
      const RMatrix mac_sum = out[0].macs + out[1].macs;
      const RMatrix val_sum = oracle::reconstruct_lifted(out);
      for (std::size_t i = 0; i < val_sum.size(); ++i) CHECK(key * val_sum[i] - mac_sum[i] == key * err[i]);
    }
  }
}

TEST_CASE("opt_mac_trunc equals truncate under identical material") {
  Prg prg(test::seed_bytes(11), "omt");
  for (int c = 0; c < 20; ++c) {
    const RMatrix plain = test::random_plain(prg, 3, 2, 40, kWide.k);
    Session a(kWide, 2 + c % 2, 100 + c), b(kWide, 2 + c % 2, 100 + c);
    const auto ma = a.input(plain), mb = b.input(plain);
    Engine& ea = a.start({MaterialRequest::trunc_pair(3, 2)});
    Engine& eb = b.start({MaterialRequest::trunc_pair(3, 2)});
    const auto t = ea.truncate(ma);
    std::vector<RMatrix> vals;
    for (const auto& sh : mb) vals.push_back(sh.vals);
    const auto o = eb.opt_mac_trunc(vals);
    CHECK(o.truncated == t);
    CHECK(b.mac_ok(o.truncated));
    CHECK(a.net.log().totals(1, {"D"}).elements == b.net.log().totals(1, {"D"}).elements);
    CHECK(a.net.log().totals(1, {"D"}).bytes == b.net.log().totals(1, {"D"}).bytes);
  }
}

// ---- compact multiplication -------------------------------------------------

TEST_CASE("compact_matmul 4x4x4 at k=64, s=64, f=16 against the plaintext oracle") {
  Prg prg(test::seed_bytes(12), "cm");
  for (std::size_t n : {2u, 3u}) {
    Session s(kWide, n, 12 + n);
    const RMatrix xp = test::random_plain(prg, 4, 4, 30, kWide.k), yp = test::random_plain(prg, 4, 4, 30, kWide.k);
    Engine& e = s.start(plan_compact_matmul(4, 4, 4));
    const auto z = e.compact_matmul(s.input(xp), s.input(yp));
    CHECK(s.mac_ok(z));
    const auto ref = test::plain_product(xp, yp);
    const auto got = s.plain(z);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const Big diff = Big(got.data[i]) - test::floor_shift(ref[i], kWide.f);
      CHECK(abs(diff) <= 1);
    }
    CHECK(e.pending_compact_rows() == 4);
    CHECK_NOTHROW(e.flush());
    CHECK(e.pending_compact_rows() == 0);
  }
}

TEST_CASE("compact tag counter at (16,12,8) is 1296") {
  Prg prg(test::seed_bytes(13), "cmc");
  Session s(kSmall, 2, 13);
  Engine& e = s.start(plan_compact_matmul(16, 12, 8));
  e.compact_matmul(s.input(test::random_plain(prg, 16, 12, 3, kSmall.k)),
                   s.input(test::random_plain(prg, 12, 8, 3, kSmall.k)));
  for (const auto& ledger : e.ledgers()) {
    CHECK(ledger.at("compact_matmul").tag_mults == 1296);
    CHECK(ledger.at("compact_matmul").tag_mults == formula_compact_tag(16, 12, 8));
  }
  CHECK(e.ledgers()[0].at("compact_matmul").value_mults == formula_compact_value(16, 12, 8));
  CHECK(e.ledgers()[1].at("compact_matmul").value_mults == 2 * 16 * 12 * 8);
  CHECK_NOTHROW(e.flush());
  CHECK(e.ledgers()[0].at("compact_check").check_mults > 0);
}

TEST_CASE("honest compact checksum is zero for random shapes and seeds (200 cases)") {
  Prg prg(test::seed_bytes(14), "cs");
  for (std::uint64_t c = 0; c < 200; ++c) {
    const RingParams p = c % 3 == 0 ? kWide : (c % 3 == 1 ? RingParams::k32() : kSmall);
    const std::size_t t1 = 1 + prg.uniform_below(4), t2 = 1 + prg.uniform_below(4), t3 = 1 + prg.uniform_below(4);
    Session s(p, 2 + c % 3, 5000 + c);
    const unsigned bits = std::max(1u, std::min(p.k - 2 - 2 * p.f, 20u));
    Engine& e = s.start(plan_compact_matmul(t1, t2, t3));
    const auto z = e.compact_matmul(s.input(test::random_plain(prg, t1, t2, bits, p.k)),
                                    s.input(test::random_plain(prg, t2, t3, bits, p.k)));
    REQUIRE(s.mac_ok(z));
    REQUIRE_NOTHROW(e.flush());
  }
}

TEST_CASE("compact and baseline pipelines agree bit for bit") {
  for (std::uint64_t c = 0; c < 20; ++c) {
    const MatmulShape shape{1 + c % 5, 1 + c % 3, 1 + c % 4};
    const auto in = random_inputs(kWide, shape, 30, c);
    RunOptions opt;
    opt.parties = 2 + c % 2;
    opt.seed = c;
    const auto a = run_pipeline(Pipeline::compact, kWide, in, opt);
    const auto b = run_pipeline(Pipeline::baseline, kWide, in, opt);
    REQUIRE_FALSE(a.abort.has_value());
    REQUIRE_FALSE(b.abort.has_value());
    CHECK(*a.output == *b.output);
    CHECK(a.consumption.same_multiset(b.consumption));
  }
}

TEST_CASE("tampering with D in compact_matmul is detected") {
  Prg prg(test::seed_bytes(15), "cmt");
  int caught = 0;
  for (int t = 0; t < 40; ++t) {
    Session s(kWide, 2, 700 + t, tamper(2, "D", TamperKind::single_entry, t));
    Engine& e = s.start(plan_compact_matmul(3, 3, 3));
    e.compact_matmul(s.input(test::random_plain(prg, 3, 3, 20, kWide.k)),
                     s.input(test::random_plain(prg, 3, 3, 20, kWide.k)));
    try {
      e.flush();
    } catch (const Abort& a) {
      CHECK(a.reason() == Abort::Reason::tag_mismatch);
      CHECK(a.step() == "compact_check");
      ++caught;
    }
  }
  CHECK(caught == 40);
}

TEST_CASE("combiners must be fresh") {
  Prg prg(test::seed_bytes(16), "fresh");
  Session s(kSmall, 2, 16);
  Engine& e = s.start(plan_compact_matmul(2, 2, 2));
  const auto early = s.net.coin_toss("early/chi_hat", 2, 1, kSmall.s);
  const auto x = s.input(test::random_plain(prg, 2, 2, 3, kSmall.k));
  e.compact_matmul(x, x);
  CHECK_THROWS_AS(e.compact_tag_check(early), RoundError);
  REQUIRE(e.pending_batch_elements() > 0);
  const auto early_batch = PublicCoins{prg.uniform_matrix(e.pending_batch_elements(), 1, kSmall.s), 1};
  CHECK_THROWS_AS(e.batch_tag_check(early_batch), RoundError);
  CHECK_THROWS_AS(e.compact_tag_check(PublicCoins{RMatrix(3, 1, kSmall.s), s.net.round() + 1}),
                  std::invalid_argument);
  // Fresh coins with the right shape are accepted.
  const auto fresh = s.net.coin_toss("late/chi_hat", 2, 1, kSmall.s);
  CHECK_NOTHROW(e.compact_tag_check(fresh));
  CHECK_NOTHROW(e.batch_tag_check());
}

TEST_CASE("deferred checks span several layers and catch a late error") {
  Prg prg(test::seed_bytes(17), "layers");
  Session s(kWide, 2, 17, tamper(2, "D", TamperKind::additive, 1, RMatrix(1, 1, std::vector<RElem>{RElem::from_u64(1, kWide.share_width())})));
  MaterialPlan plan = plan_compact_matmul(2, 3, 2);
  for (auto r : plan_compact_matmul(2, 2, 2)) plan.push_back(r);
  Engine& e = s.start(plan);
  e.set_label_prefix("layer1");
  const auto z1 = e.compact_matmul(s.input(test::random_plain(prg, 2, 3, 20, kWide.k)),
                                   s.input(test::random_plain(prg, 3, 2, 20, kWide.k)));
  e.set_label_prefix("layer2");
  e.compact_matmul(z1, s.input(test::random_plain(prg, 2, 2, 20, kWide.k)));
  CHECK(e.pending_compact_rows() == 4);
  CHECK(s.net.log().entries().count({"layer1/compact_matmul/D", 1}) == 1);
  CHECK_THROWS_AS(e.flush(), Abort);
}

TEST_CASE("flush_each_op and threaded execution") {
  const auto in = random_inputs(kWide, {3, 4, 5}, 30, 99);
  RunOptions serial;
  serial.seed = 5;
  RunOptions threaded = serial;
  threaded.engine.threaded = true;
  RunOptions eager = serial;
  eager.engine.flush_each_op = true;
  const auto a = run_pipeline(Pipeline::compact, kWide, in, serial);
  const auto b = run_pipeline(Pipeline::compact, kWide, in, threaded);
  const auto c = run_pipeline(Pipeline::compact, kWide, in, eager);
  REQUIRE_FALSE(a.abort.has_value());
  REQUIRE_FALSE(b.abort.has_value());
  REQUIRE_FALSE(c.abort.has_value());
  CHECK(*a.output == *b.output);
  CHECK(*a.output == *c.output);
  CHECK(a.result == b.result);
  CHECK(a.ledgers[0].at("compact_matmul") == b.ledgers[0].at("compact_matmul"));
}

TEST_CASE("missing material and shape errors") {
  Prg prg(test::seed_bytes(18), "err");
  Session s(kSmall, 2, 18);
  const auto x = s.input(test::random_plain(prg, 2, 3, 3, kSmall.k));
  const auto y = s.input(test::random_plain(prg, 2, 2, 3, kSmall.k));
  Engine& e = s.start(plan_matmul(2, 3, 2));
  CHECK_THROWS_AS(e.matmul_spdz2k(x, y), std::invalid_argument);
  CHECK_THROWS_AS(e.compact_matmul(y, y), MissingMaterial);
  PartyShares short_x = x;
  short_x.pop_back();
  CHECK_THROWS(e.batch_open(short_x));
}

// ---- convolution ------------------------------------------------------------

TEST_CASE("conv_dims examples") {
  CHECK(conv_dims({32, 32, 3, 64, 3, 1, 1}) == MatmulShape{1024, 27, 64});
  CHECK(conv_dims({7, 5, 4, 9, 1, 0, 1}) == MatmulShape{35, 4, 9});
  CHECK(conv_dims({224, 224, 3, 64, 3, 1, 1}) == MatmulShape{50176, 27, 64});
  CHECK(conv_dims({224, 224, 3, 64, 7, 3, 2}) == MatmulShape{112 * 112, 147, 64});
  CHECK_THROWS(conv_dims({2, 2, 1, 1, 5, 0, 1}));
  CHECK_THROWS(conv_dims({2, 2, 0, 1, 1, 0, 1}));
}

namespace {

// Plain convolution over integers: input (h*w) x in pixel-major, kernel
// (kernel*kernel*in) x out.
std::vector<Big> plain_conv(const RMatrix& input, const RMatrix& kernel, const ConvParams& c) {
  std::vector<Big> out;
  for (std::size_t oy = 0; oy < c.out_h(); ++oy) {
    for (std::size_t ox = 0; ox < c.out_w(); ++ox) {
      for (std::size_t o = 0; o < c.out; ++o) {
        Big acc = 0;
        for (std::size_t ky = 0; ky < c.kernel; ++ky) {
          for (std::size_t kx = 0; kx < c.kernel; ++kx) {
            const long iy = static_cast<long>(oy * c.stride + ky) - static_cast<long>(c.pad);
            const long ix = static_cast<long>(ox * c.stride + kx) - static_cast<long>(c.pad);
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(c.h) || ix >= static_cast<long>(c.w)) continue;
            for (std::size_t ch = 0; ch < c.in; ++ch) {
              acc += Big(input(static_cast<std::size_t>(iy) * c.w + static_cast<std::size_t>(ix), ch).to_i64()) *
                     Big(kernel((ky * c.kernel + kx) * c.in + ch, o).to_i64());
            }
          }
        }
        out.push_back(acc);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("conv_via_matmul against a plaintext convolution") {
  Prg prg(test::seed_bytes(19), "conv");
  for (const ConvParams c : {ConvParams{4, 4, 2, 3, 3, 1, 1}, ConvParams{4, 4, 1, 2, 3, 0, 1},
                             ConvParams{5, 4, 2, 2, 3, 1, 2}, ConvParams{3, 3, 2, 2, 1, 0, 1}}) {
    const MatmulShape shape = conv_dims(c);
    Session s(kWide, 2, 19);
    const RMatrix in = test::random_plain(prg, c.h * c.w, c.in, 20, kWide.k);
    const RMatrix k = test::random_plain(prg, shape.t2, shape.t3, 20, kWide.k);
    Engine& e = s.start(plan_compact_matmul(shape.t1, shape.t2, shape.t3));
    const auto z = e.conv_via_matmul(s.input(in), s.input(k), c);
    const auto ref = plain_conv(in, k, c);
    const auto got = s.plain(z);
    REQUIRE(got.data.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(abs(Big(got.data[i]) - test::floor_shift(ref[i], kWide.f)) <= 1);
    CHECK(e.ledgers()[0].at("compact_matmul").tag_mults == formula_compact_tag(shape.t1, shape.t2, shape.t3));
    CHECK_NOTHROW(e.flush());
  }
}

TEST_CASE("1x1 convolution equals the plain matmul") {
  Prg prg(test::seed_bytes(20), "conv1");
  const ConvParams c{3, 2, 4, 5, 1, 0, 1};
  const RMatrix in = test::random_plain(prg, 6, 4, 30, kWide.k);
  const RMatrix k = test::random_plain(prg, 4, 5, 30, kWide.k);
  Session a(kWide, 2, 20), b(kWide, 2, 20);
  const auto ia = a.input(in), ka = a.input(k), ib = b.input(in), kb = b.input(k);
  Engine& ea = a.start(plan_compact_matmul(6, 4, 5));
  Engine& eb = b.start(plan_compact_matmul(6, 4, 5));
  CHECK(ea.conv_via_matmul(ia, ka, c) == eb.compact_matmul(ib, kb));
}
