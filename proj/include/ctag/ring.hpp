#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctag {

inline constexpr unsigned kMaxWidth = 256;

/// Thrown when two operands live in rings of different widths.
class WidthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Message width k, MAC width s and fixed-point fraction bits f.
struct RingParams {
  unsigned k = 32;
  unsigned s = 32;
  unsigned f = 12;

  unsigned share_width() const noexcept { return k + s; }
  unsigned check_width() const noexcept { return k + 2 * s; }
  /// s - log2(s + 1): the exponent of the batch-check soundness bound.
  double sigma() const noexcept;
  /// 2^{-sigma}.
  double forgery_bound() const noexcept;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  static RingParams k32() { return {32, 32, 12}; }
  static RingParams k64() { return {64, 64, 16}; }

  friend bool operator==(const RingParams&, const RingParams&) = default;
};

namespace detail {
extern thread_local std::uint64_t* active_mul_sink;
}

/// Routes every counted multiplication on this thread into `*sink` until
/// destruction, then restores the previous sink. A null sink disables counting.
class MulCounterScope {
 public:
  explicit MulCounterScope(std::uint64_t* sink) noexcept
      : prev_(detail::active_mul_sink) {
    detail::active_mul_sink = sink;
  }
  ~MulCounterScope() { detail::active_mul_sink = prev_; }
  MulCounterScope(const MulCounterScope&) = delete;
  MulCounterScope& operator=(const MulCounterScope&) = delete;

 private:
  std::uint64_t* prev_;
};

inline void count_muls(std::uint64_t n) noexcept {
  if (detail::active_mul_sink != nullptr) *detail::active_mul_sink += n;
}

/// Residue modulo 2^width, stored as four little-endian 64-bit limbs.
class RElem {
 public:
  using Limbs = std::array<std::uint64_t, 4>;

  RElem() = default;
  RElem(const Limbs& limbs, unsigned width);

  static RElem zero(unsigned width) { return RElem(Limbs{}, width); }
  static RElem from_u64(std::uint64_t v, unsigned width);
  /// Two's-complement embedding of a signed value.
  static RElem from_i64(std::int64_t v, unsigned width);
  static RElem pow2(unsigned e, unsigned width);
  /// Parses decimal or 0x-prefixed hex, with an optional leading '-'.
  static RElem parse(std::string_view text, unsigned width);

  unsigned width() const noexcept { return width_; }
  const Limbs& limbs() const noexcept { return limbs_; }
  std::uint64_t low64() const noexcept { return limbs_[0]; }
  bool is_zero() const noexcept;
  bool bit(unsigned i) const noexcept;
  /// Number of trailing zero bits; equals width for zero.
  unsigned valuation() const noexcept;

  /// Same representative in a wider ring.
  RElem lift(unsigned to_width) const;
  /// Representative reduced into a narrower (or equal) ring.
  RElem reduce(unsigned to_width) const;
  /// Reads the value as signed at the current width and embeds it in a wider ring.
  RElem sign_extend(unsigned to_width) const;
  /// floor(representative / 2^f) at the same width.
  RElem shift_down(unsigned f) const;
  /// (representative * 2^e) mod 2^width. Not counted as a multiplication.
  RElem shift_up(unsigned e) const;
  /// Signed reading of a value of width at most 64.
  std::int64_t to_i64() const;

  std::string to_hex() const;
  std::string to_dec() const;

  RElem& operator+=(const RElem& o);
  RElem& operator-=(const RElem& o);
  friend RElem operator+(RElem a, const RElem& b) { return a += b; }
  friend RElem operator-(RElem a, const RElem& b) { return a -= b; }
  RElem operator-() const;
  /// Counted product; widths must match.
  friend RElem operator*(const RElem& a, const RElem& b);

  friend bool operator==(const RElem& a, const RElem& b) noexcept {
    return a.width_ == b.width_ && a.limbs_ == b.limbs_;
  }

 private:
  Limbs limbs_{};
  unsigned width_ = 0;
};

/// Counted product of a narrow key-width operand with a wider share-width
/// operand; the result has the wider width.
RElem mul_key(const RElem& key, const RElem& share);

/// Row-major matrix of residues sharing one width.
class RMatrix {
 public:
  RMatrix() = default;
  RMatrix(std::size_t rows, std::size_t cols, unsigned width);
  RMatrix(std::size_t rows, std::size_t cols, std::vector<RElem> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  unsigned width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }

  const RElem& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  RElem& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const RElem& operator[](std::size_t i) const { return data_[i]; }
  RElem& operator[](std::size_t i) { return data_[i]; }
  const std::vector<RElem>& data() const noexcept { return data_; }

  /// Replaces entry (r, c); the width must match.
  void set(std::size_t r, std::size_t c, const RElem& v);

  RMatrix& operator+=(const RMatrix& o);
  RMatrix& operator-=(const RMatrix& o);
  friend RMatrix operator+(RMatrix a, const RMatrix& b) { return a += b; }
  friend RMatrix operator-(RMatrix a, const RMatrix& b) { return a -= b; }
  RMatrix operator-() const;

  friend bool operator==(const RMatrix& a, const RMatrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  void require_same_shape(const RMatrix& o) const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  unsigned width_ = 0;
  std::vector<RElem> data_;
};

/// Counted matrix product, rows*inner*cols multiplications.
RMatrix matmul(const RMatrix& a, const RMatrix& b);
/// Counted entrywise product of a public scalar (same width) with a matrix.
RMatrix scale(const RElem& c, const RMatrix& m);
/// Counted entrywise product of a key-width scalar with a wider matrix.
RMatrix scale_key(const RElem& key, const RMatrix& m);
RMatrix lift(const RMatrix& m, unsigned to_width);
RMatrix reduce(const RMatrix& m, unsigned to_width);
RMatrix sign_extend(const RMatrix& m, unsigned to_width);
RMatrix shift_down(const RMatrix& m, unsigned f);
RMatrix shift_up(const RMatrix& m, unsigned e);
RMatrix transpose(const RMatrix& m);

/// Fixed-point encoding into Z_{2^k}: round(x * 2^f), two's complement.
RElem encode_fixed(double x, const RingParams& params);
/// Inverse of encode_fixed; representatives >= 2^{k-1} decode as negative.
double decode_fixed(const RElem& v, const RingParams& params);

}  // namespace ctag
