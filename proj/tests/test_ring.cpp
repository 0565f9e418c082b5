#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctag/crypto.hpp"
#include "ctag/ring.hpp"
#include "support.hpp"

using namespace ctag;
using ctag::test::Big;
using ctag::test::from_big;
using ctag::test::mod_pow2;
using ctag::test::to_big;

namespace {

RElem u(std::uint64_t v, unsigned w) { return RElem::from_u64(v, w); }

}  // namespace

TEST_CASE("addition wraps modulo 2^width") {
  CHECK(u(200, 8) + u(100, 8) == u(44, 8));
  for (std::uint64_t x : {0ULL, 1ULL, 77ULL, 255ULL}) CHECK(u(0, 8) + u(x, 8) == u(x, 8));
  CHECK(u(3, 8) - u(5, 8) == u(254, 8));
  CHECK(-u(1, 8) == u(255, 8));
}

TEST_CASE("multiplication wraps and counts") {
  std::uint64_t count = 0;
  {
    MulCounterScope scope(&count);
    CHECK(u(16, 8) * u(16, 8) == u(0, 8));
    for (std::uint64_t x : {0ULL, 3ULL, 200ULL}) CHECK(u(1, 8) * u(x, 8) == u(x, 8));
  }
  CHECK(count == 4);
  CHECK(u(2, 8) * u(3, 8) == u(6, 8));
  CHECK(count == 4);  // scope closed
}

TEST_CASE("mismatched widths are rejected") {
  CHECK_THROWS_AS(u(1, 8) + u(1, 9), WidthError);
  CHECK_THROWS_AS((void)(u(1, 8) * u(1, 16)), WidthError);
  CHECK_THROWS_AS(mul_key(u(1, 16), u(1, 8)), WidthError);
  CHECK_THROWS_AS(mul_key(u(1, 16), u(1, 16)), WidthError);
  CHECK(mul_key(u(3, 8), u(5, 16)) == u(15, 16));
  CHECK_THROWS_AS(u(1, 16).lift(8), WidthError);
  CHECK_THROWS_AS(u(1, 8).reduce(16), WidthError);
}

TEST_CASE("lift keeps the representative and reduce round-trips") {
  const RElem a = u(200, 8);
  const RElem wide = a.lift(24);
  CHECK(wide.width() == 24);
  CHECK(wide == u(200, 24));
  CHECK(wide.reduce(8) == a);
  CHECK(RElem::from_i64(-1, 8).sign_extend(16) == u(0xffff, 16));
  CHECK(RElem::from_i64(5, 8).sign_extend(16) == u(5, 16));
}

TEST_CASE("arithmetic matches a big-integer reference at k, k+s and k+2s") {
  Prg prg(test::seed_bytes(11), "ring-test");
  for (unsigned w : {64u, 128u, 192u, 96u, 13u}) {
    for (int i = 0; i < 200; ++i) {
      const RElem a = prg.uniform(w), b = prg.uniform(w), c = prg.uniform(w);
      const Big A = to_big(a), B = to_big(b), C = to_big(c);
      CHECK(to_big(a + b) == mod_pow2(A + B, w));
      CHECK(to_big(a - b) == mod_pow2(A - B, w));
      CHECK(to_big(a * b) == mod_pow2(A * B, w));
      CHECK((a * b) * c == a * (b * c));
      CHECK(a * (b + c) == a * b + a * c);
      CHECK(a * b == b * a);
    }
  }
}

TEST_CASE("lift is a homomorphism up to reduction") {
  Prg prg(test::seed_bytes(12), "ring-test");
  const RingParams p = RingParams::k64();
  for (int i = 0; i < 200; ++i) {
    const RElem a = prg.uniform(p.share_width()), b = prg.uniform(p.share_width());
    const RElem la = a.lift(p.check_width()), lb = b.lift(p.check_width());
    CHECK((la * lb).reduce(p.share_width()) == a * b);
    CHECK((la + lb).reduce(p.share_width()) == a + b);
    CHECK(to_big(la * lb) == mod_pow2(to_big(a) * to_big(b), p.check_width()));
  }
}

TEST_CASE("key-times-share product matches the reference") {
  Prg prg(test::seed_bytes(13), "ring-test");
  for (int i = 0; i < 200; ++i) {
    const RElem key = prg.uniform(64), share = prg.uniform(128);
    CHECK(to_big(mul_key(key, share)) == mod_pow2(to_big(key) * to_big(share), 128));
  }
}

TEST_CASE("fixed-point encoding") {
  const RingParams p{32, 32, 16};
  CHECK(encode_fixed(1.5, p) == u(98304, 32));
  CHECK(encode_fixed(-1.0, p) == u((std::uint64_t{1} << 32) - 65536, 32));
  CHECK(decode_fixed(encode_fixed(-2.25, p), p) == -2.25);
  CHECK_THROWS(encode_fixed(40000.0, p));
  Prg prg(test::seed_bytes(14), "ring-test");
  for (int i = 0; i < 1000; ++i) {
    const double x = (static_cast<double>(prg.uniform_below(1ULL << 40)) / (1ULL << 40) - 0.5) * 60000.0;
    CHECK(std::fabs(decode_fixed(encode_fixed(x, p), p) - x) <= std::ldexp(1.0, -17));
  }
}

TEST_CASE("shift_down is floor division of the representative") {
  // 1.5 encoded with 16 fraction bits needs 17 bits, so the check runs at width 32.
  CHECK(u(98304, 32).shift_down(16) == u(1, 32));
  CHECK(u(0, 16).shift_down(5) == u(0, 16));
  Prg prg(test::seed_bytes(15), "ring-test");
  for (int i = 0; i < 200; ++i) {
    const RElem a = prg.uniform(128);
    const unsigned f = static_cast<unsigned>(prg.uniform_below(60));
    const Big q = to_big(a.shift_down(f)), v = to_big(a);
    CHECK(q * test::pow2(f) <= v);
    CHECK(v < q * test::pow2(f) + test::pow2(f));
  }
}

TEST_CASE("parse and print") {
  CHECK(RElem::parse("300", 8) == u(44, 8));
  CHECK(RElem::parse("-1", 16) == u(0xffff, 16));
  CHECK(RElem::parse("0xff", 16) == u(255, 16));
  const RElem big = RElem::pow2(150, 192);
  CHECK(RElem::parse(big.to_dec(), 192) == big);
  CHECK(RElem::parse(big.to_hex(), 192) == big);
  CHECK_THROWS(RElem::parse("12a", 16));
  CHECK(RElem::from_i64(-7, 64).to_i64() == -7);
  CHECK(u(8, 16).valuation() == 3);
  CHECK(u(0, 16).valuation() == 16);
}

TEST_CASE("parameter validation and derived quantities") {
  CHECK_NOTHROW(RingParams::k32().validate());
  CHECK_NOTHROW(RingParams::k64().validate());
  CHECK_NOTHROW((RingParams{16, 8, 4}).validate());
  CHECK_THROWS((RingParams{65, 8, 4}).validate());
  CHECK_THROWS((RingParams{64, 65, 4}).validate());
  CHECK_THROWS((RingParams{32, 32, 32}).validate());
  CHECK_THROWS((RingParams{64, 0, 4}).validate());
  const RingParams p{16, 8, 4};
  CHECK(p.share_width() == 24);
  CHECK(p.check_width() == 32);
  CHECK(p.sigma() == doctest::Approx(8.0 - std::log2(9.0)));
  CHECK(p.forgery_bound() == doctest::Approx(9.0 / 256.0));
  CHECK(p.forgery_bound() == doctest::Approx(0.03516).epsilon(1e-3));
}

TEST_CASE("matrix operations") {
  const RMatrix a(2, 2, std::vector<RElem>{u(1, 16), u(2, 16), u(3, 16), u(4, 16)});
  const RMatrix b(2, 1, std::vector<RElem>{u(5, 16), u(6, 16)});
  std::uint64_t count = 0;
  RMatrix c;
  {
    MulCounterScope scope(&count);
    c = matmul(a, b);
  }
  CHECK(count == 4);
  CHECK(c[0] == u(17, 16));
  CHECK(c[1] == u(39, 16));
  CHECK(transpose(a)(0, 1) == u(3, 16));
  CHECK_THROWS(matmul(b, b));
  CHECK_THROWS(RMatrix(2, 2, std::vector<RElem>{u(1, 16)}));
  RMatrix m(1, 2, 16);
  CHECK_THROWS_AS(m.set(0, 0, u(1, 8)), WidthError);
  CHECK(scale_key(u(2, 8), a)[3] == u(8, 16));
}
