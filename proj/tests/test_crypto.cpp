#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ctag/crypto.hpp"
#include "support.hpp"

using namespace ctag;

namespace {

std::string hex(const Digest& d) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto b : d) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

}  // namespace

TEST_CASE("SHA-256 known answers") {
  const Sha256Hasher h;
  CHECK(hex(h.hash(as_bytes(""))) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hex(h.hash(as_bytes("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hash_parts separates parts unambiguously") {
  CHECK(hash_parts({as_bytes("ab"), as_bytes("c")}) != hash_parts({as_bytes("a"), as_bytes("bc")}));
  CHECK(hash_parts({as_bytes("ab"), as_bytes("c")}) == hash_parts({as_bytes("ab"), as_bytes("c")}));
}

TEST_CASE("Prg is deterministic per seed and domain") {
  const auto s1 = test::seed_bytes(1), s2 = test::seed_bytes(2);
  Prg a(s1, "d"), b(s1, "d"), c(s2, "d"), d(s1, "e");
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(x != d.next_u64());
  // Crossing the internal buffer boundary keeps both streams aligned.
  for (int i = 0; i < 2000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("Prg uniform values stay in range") {
  Prg p(test::seed_bytes(3), "range");
  for (int i = 0; i < 1000; ++i) {
    CHECK(p.uniform_below(7) < 7);
    const RElem e = p.uniform(13);
    CHECK(e.width() == 13);
    CHECK(e.limbs()[0] < (1u << 13));
  }
  const RMatrix m = p.uniform_matrix(3, 4, 130);
  CHECK(m.rows() == 3);
  CHECK(m.width() == 130);
  CHECK(m[0].limbs()[2] < 4);
}

TEST_CASE("Prg low bits pass a coarse uniformity check") {
  Prg p(test::seed_bytes(4), "chi2");
  std::array<int, 16> bins{};
  const int n = 16000;
  for (int i = 0; i < n; ++i) ++bins[p.uniform(4).low64()];
  double chi2 = 0;
  for (int b : bins) chi2 += (b - n / 16.0) * (b - n / 16.0) / (n / 16.0);
  CHECK(chi2 < 37.7);  // 15 degrees of freedom, p = 0.001
}

TEST_CASE("Prg is movable") {
  Prg a(test::seed_bytes(5), "move");
  Prg ref(test::seed_bytes(5), "move");
  (void)ref.next_u64();
  (void)a.next_u64();
  Prg b(std::move(a));
  CHECK(b.next_u64() == ref.next_u64());
}
