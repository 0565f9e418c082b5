#include "ctag/ring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ctag {

namespace detail {
thread_local std::uint64_t* active_mul_sink = nullptr;
}

namespace {

using u128 = unsigned __int128;

unsigned limb_count(unsigned width) { return (width + 63) / 64; }

void mask_to(RElem::Limbs& l, unsigned width) {
  unsigned full = width / 64;
  unsigned rem = width % 64;
  if (full >= 4) return;
  if (rem != 0) {
    l[full] &= (std::uint64_t{1} << rem) - 1;
    ++full;
  }
  for (unsigned i = full; i < 4; ++i) l[i] = 0;
}

void check_width(unsigned width) {
  if (width == 0 || width > kMaxWidth) {
    throw WidthError("ring width must be in [1, 256], got " + std::to_string(width));
  }
}

void require_same(const RElem& a, const RElem& b, const char* op) {
  if (a.width() != b.width()) {
    throw WidthError(std::string(op) + ": width mismatch " + std::to_string(a.width()) + " vs " +
                     std::to_string(b.width()));
  }
}

// Multiply-accumulate of the low `n` limbs; the caller masks the result.
RElem::Limbs mul_limbs(const RElem::Limbs& a, const RElem::Limbs& b, unsigned n) {
  RElem::Limbs r{};
  if (n == 1) {
    r[0] = a[0] * b[0];
    return r;
  }
  for (unsigned i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    std::uint64_t carry = 0;
    for (unsigned j = 0; i + j < n; ++j) {
      u128 t = static_cast<u128>(a[i]) * b[j] + r[i + j] + carry;
      r[i + j] = static_cast<std::uint64_t>(t);
      carry = static_cast<std::uint64_t>(t >> 64);
    }
  }
  return r;
}

// Divides the limbs in place by a small divisor and returns the remainder.
std::uint64_t divmod_small(RElem::Limbs& l, std::uint64_t d) {
  u128 rem = 0;
  for (int i = 3; i >= 0; --i) {
    u128 cur = (rem << 64) | l[static_cast<unsigned>(i)];
    l[static_cast<unsigned>(i)] = static_cast<std::uint64_t>(cur / d);
    rem = cur % d;
  }
  return static_cast<std::uint64_t>(rem);
}

void muladd_small(RElem::Limbs& l, std::uint64_t m, std::uint64_t a) {
  u128 carry = a;
  for (auto& limb : l) {
    u128 t = static_cast<u128>(limb) * m + carry;
    limb = static_cast<std::uint64_t>(t);
    carry = t >> 64;
  }
}

}  // namespace

double RingParams::sigma() const noexcept {
  return static_cast<double>(s) - std::log2(static_cast<double>(s) + 1.0);
}

double RingParams::forgery_bound() const noexcept { return std::exp2(-sigma()); }

void RingParams::validate() const {
  if (k < 2 || k > 64) throw std::invalid_argument("k must be in [2, 64]");
  if (s == 0 || s > 64) throw std::invalid_argument("s must be in [1, 64]");
  if (f == 0 || f >= k) throw std::invalid_argument("f must satisfy 0 < f < k");
  if (k + 2 * s > 192) throw std::invalid_argument("k + 2s must not exceed 192");
}

RElem::RElem(const Limbs& limbs, unsigned width) : limbs_(limbs), width_(width) {
  check_width(width);
  mask_to(limbs_, width_);
}

RElem RElem::from_u64(std::uint64_t v, unsigned width) { return RElem(Limbs{v, 0, 0, 0}, width); }

RElem RElem::from_i64(std::int64_t v, unsigned width) {
  std::uint64_t ext = v < 0 ? ~std::uint64_t{0} : 0;
  return RElem(Limbs{static_cast<std::uint64_t>(v), ext, ext, ext}, width);
}

RElem RElem::pow2(unsigned e, unsigned width) {
  check_width(width);
  Limbs l{};
  if (e < width) l[e / 64] = std::uint64_t{1} << (e % 64);
  return RElem(l, width);
}

RElem RElem::parse(std::string_view text, unsigned width) {
  check_width(width);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) throw std::invalid_argument("empty ring element literal");
  Limbs l{};
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    for (char ch : text) {
      std::uint64_t digit;
      if (ch >= '0' && ch <= '9') {
        digit = static_cast<std::uint64_t>(ch - '0');
      } else if (ch >= 'a' && ch <= 'f') {
        digit = static_cast<std::uint64_t>(ch - 'a' + 10);
      } else if (ch >= 'A' && ch <= 'F') {
        digit = static_cast<std::uint64_t>(ch - 'A' + 10);
      } else {
        throw std::invalid_argument("bad hex digit in ring element literal");
      }
      muladd_small(l, 16, digit);
    }
  } else {
    for (char ch : text) {
      if (ch < '0' || ch > '9') throw std::invalid_argument("bad decimal digit in ring element literal");
      muladd_small(l, 10, static_cast<std::uint64_t>(ch - '0'));
    }
  }
  RElem v(l, width);
  return negative ? -v : v;
}

bool RElem::is_zero() const noexcept {
  return limbs_[0] == 0 && limbs_[1] == 0 && limbs_[2] == 0 && limbs_[3] == 0;
}

bool RElem::bit(unsigned i) const noexcept {
  if (i >= width_) return false;
  return ((limbs_[i / 64] >> (i % 64)) & 1U) != 0;
}

unsigned RElem::valuation() const noexcept {
  for (unsigned i = 0; i < 4; ++i) {
    if (limbs_[i] != 0) {
      return std::min(width_, i * 64 + static_cast<unsigned>(__builtin_ctzll(limbs_[i])));
    }
  }
  return width_;
}

RElem RElem::lift(unsigned to_width) const {
  if (to_width < width_) throw WidthError("lift: narrowing requested");
  return RElem(limbs_, to_width);
}

RElem RElem::reduce(unsigned to_width) const {
  if (to_width > width_) throw WidthError("reduce: widening requested, use lift");
  return RElem(limbs_, to_width);
}

RElem RElem::sign_extend(unsigned to_width) const {
  if (to_width < width_) throw WidthError("sign_extend: narrowing requested");
  if (!bit(width_ - 1)) return RElem(limbs_, to_width);
  Limbs l = limbs_;
  for (unsigned i = width_; i < to_width; ++i) l[i / 64] |= std::uint64_t{1} << (i % 64);
  return RElem(l, to_width);
}

RElem RElem::shift_down(unsigned f) const {
  if (f >= width_) return zero(width_);
  Limbs out{};
  unsigned limb_shift = f / 64;
  unsigned bit_shift = f % 64;
  for (unsigned i = 0; i + limb_shift < 4; ++i) {
    std::uint64_t lo = limbs_[i + limb_shift] >> bit_shift;
    std::uint64_t hi = 0;
    if (bit_shift != 0 && i + limb_shift + 1 < 4) hi = limbs_[i + limb_shift + 1] << (64 - bit_shift);
    out[i] = lo | hi;
  }
  return RElem(out, width_);
}

RElem RElem::shift_up(unsigned e) const {
  if (e >= width_) return zero(width_);
  Limbs out{};
  unsigned limb_shift = e / 64;
  unsigned bit_shift = e % 64;
  for (unsigned i = 3 + 1; i-- > limb_shift;) {
    std::uint64_t hi = limbs_[i - limb_shift] << bit_shift;
    std::uint64_t lo = 0;
    if (bit_shift != 0 && i - limb_shift >= 1) lo = limbs_[i - limb_shift - 1] >> (64 - bit_shift);
    out[i] = hi | lo;
  }
  return RElem(out, width_);
}

std::int64_t RElem::to_i64() const {
  if (width_ > 64) throw WidthError("to_i64: width exceeds 64 bits");
  std::uint64_t v = limbs_[0];
  if (width_ < 64 && bit(width_ - 1)) v |= ~std::uint64_t{0} << width_;
  return static_cast<std::int64_t>(v);
}

std::string RElem::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (int i = 3; i >= 0; --i) {
    for (int nib = 15; nib >= 0; --nib) {
      unsigned d = static_cast<unsigned>((limbs_[static_cast<unsigned>(i)] >> (nib * 4)) & 0xF);
      if (out.empty() && d == 0) continue;
      out.push_back(kDigits[d]);
    }
  }
  return "0x" + (out.empty() ? std::string("0") : out);
}

std::string RElem::to_dec() const {
  if (is_zero()) return "0";
  Limbs l = limbs_;
  std::string out;
  while (l[0] != 0 || l[1] != 0 || l[2] != 0 || l[3] != 0) {
    out.push_back(static_cast<char>('0' + divmod_small(l, 10)));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

RElem& RElem::operator+=(const RElem& o) {
  require_same(*this, o, "add");
  std::uint64_t carry = 0;
  for (unsigned i = 0, n = limb_count(width_); i < n; ++i) {
    u128 t = static_cast<u128>(limbs_[i]) + o.limbs_[i] + carry;
    limbs_[i] = static_cast<std::uint64_t>(t);
    carry = static_cast<std::uint64_t>(t >> 64);
  }
  mask_to(limbs_, width_);
  return *this;
}

RElem& RElem::operator-=(const RElem& o) {
  require_same(*this, o, "sub");
  std::uint64_t borrow = 0;
  for (unsigned i = 0, n = limb_count(width_); i < n; ++i) {
    u128 t = static_cast<u128>(limbs_[i]) - o.limbs_[i] - borrow;
    limbs_[i] = static_cast<std::uint64_t>(t);
    borrow = static_cast<std::uint64_t>(t >> 64) != 0 ? 1 : 0;
  }
  mask_to(limbs_, width_);
  return *this;
}

RElem RElem::operator-() const { return zero(width_) - *this; }

RElem operator*(const RElem& a, const RElem& b) {
  require_same(a, b, "mul");
  count_muls(1);
  return RElem(mul_limbs(a.limbs_, b.limbs_, limb_count(a.width_)), a.width_);
}

RElem mul_key(const RElem& key, const RElem& share) {
  if (key.width() >= share.width()) {
    throw WidthError("mul_key: key width must be narrower than share width");
  }
  count_muls(1);
  return RElem(mul_limbs(key.limbs(), share.limbs(), limb_count(share.width())), share.width());
}

RMatrix::RMatrix(std::size_t rows, std::size_t cols, unsigned width)
    : rows_(rows), cols_(cols), width_(width), data_(rows * cols, RElem::zero(width)) {}

RMatrix::RMatrix(std::size_t rows, std::size_t cols, std::vector<RElem> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("RMatrix: data length != rows*cols");
  if (data_.empty()) return;
  width_ = data_.front().width();
  for (const auto& e : data_) {
    if (e.width() != width_) throw WidthError("RMatrix: mixed entry widths");
  }
}

void RMatrix::set(std::size_t r, std::size_t c, const RElem& v) {
  if (v.width() != width_) throw WidthError("RMatrix::set: width mismatch");
  data_.at(r * cols_ + c) = v;
}

void RMatrix::require_same_shape(const RMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch");
  if (width_ != o.width_) throw WidthError("matrix width mismatch");
}

RMatrix& RMatrix::operator+=(const RMatrix& o) {
  require_same_shape(o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

RMatrix& RMatrix::operator-=(const RMatrix& o) {
  require_same_shape(o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

RMatrix RMatrix::operator-() const {
  RMatrix out = *this;
  for (auto& e : out.data_) e = -e;
  return out;
}

RMatrix matmul(const RMatrix& a, const RMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  if (a.width() != b.width()) throw WidthError("matmul: width mismatch");
  RMatrix out(a.rows(), b.cols(), a.width());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t t = 0; t < a.cols(); ++t) {
      const RElem& lhs = a(i, t);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += lhs * b(t, j);
    }
  }
  return out;
}

RMatrix scale(const RElem& c, const RMatrix& m) {
  RMatrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * m[i];
  return out;
}

RMatrix scale_key(const RElem& key, const RMatrix& m) {
  RMatrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mul_key(key, m[i]);
  return out;
}

namespace {
template <typename Fn>
RMatrix map_entries(const RMatrix& m, Fn fn) {
  std::vector<RElem> data;
  data.reserve(m.size());
  for (const auto& e : m.data()) data.push_back(fn(e));
  return RMatrix(m.rows(), m.cols(), std::move(data));
}
}  // namespace

RMatrix lift(const RMatrix& m, unsigned to_width) {
  return map_entries(m, [&](const RElem& e) { return e.lift(to_width); });
}
RMatrix reduce(const RMatrix& m, unsigned to_width) {
  return map_entries(m, [&](const RElem& e) { return e.reduce(to_width); });
}
RMatrix sign_extend(const RMatrix& m, unsigned to_width) {
  return map_entries(m, [&](const RElem& e) { return e.sign_extend(to_width); });
}
RMatrix shift_down(const RMatrix& m, unsigned f) {
  return map_entries(m, [&](const RElem& e) { return e.shift_down(f); });
}
RMatrix shift_up(const RMatrix& m, unsigned e) {
  return map_entries(m, [&](const RElem& x) { return x.shift_up(e); });
}

RMatrix transpose(const RMatrix& m) {
  RMatrix out(m.cols(), m.rows(), m.width());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  }
  return out;
}

RElem encode_fixed(double x, const RingParams& params) {
  long double limit = std::ldexp(1.0L, static_cast<int>(params.k - 1 - params.f));
  if (!std::isfinite(x) || std::fabs(static_cast<long double>(x)) >= limit) {
    throw std::out_of_range("encode_fixed: value outside encodable range");
  }
  long double scaled = std::ldexp(static_cast<long double>(x), static_cast<int>(params.f));
  return RElem::from_i64(static_cast<std::int64_t>(std::llroundl(scaled)), params.k);
}

double decode_fixed(const RElem& v, const RingParams& params) {
  if (v.width() != params.k) throw WidthError("decode_fixed: expects a width-k element");
  long double signed_value = static_cast<long double>(v.to_i64());
  return static_cast<double>(std::ldexp(signed_value, -static_cast<int>(params.f)));
}

}  // namespace ctag
