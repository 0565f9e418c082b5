#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "ctag/ring.hpp"

namespace ctag {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

/// 256-bit hash seam used by commitments and seed derivation.
class Hasher {
 public:
  virtual ~Hasher() = default;
  virtual Digest hash(std::span<const std::uint8_t> data) const = 0;
};

class Sha256Hasher final : public Hasher {
 public:
  Digest hash(std::span<const std::uint8_t> data) const override;
};

const Hasher& default_hasher();

/// Hash of the concatenation of several byte strings, each length-prefixed.
Digest hash_parts(std::initializer_list<std::span<const std::uint8_t>> parts,
                  const Hasher& h = default_hasher());

std::span<const std::uint8_t> as_bytes(std::string_view s);

/// Deterministic stream generator: AES-128 in counter mode under a key
/// derived by hashing the seed material.
class Prg {
 public:
  explicit Prg(std::span<const std::uint8_t> seed);
  Prg(std::span<const std::uint8_t> seed, std::string_view domain);
  ~Prg();
  Prg(Prg&& other) noexcept;
  Prg& operator=(Prg&& other) noexcept;
  Prg(const Prg&) = delete;
  Prg& operator=(const Prg&) = delete;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t uniform_below(std::uint64_t bound);
  RElem uniform(unsigned width);
  RMatrix uniform_matrix(std::size_t rows, std::size_t cols, unsigned width);
  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

 private:
  void refill();

  void* ctx_ = nullptr;
  std::array<std::uint8_t, 4096> buf_{};
  std::size_t pos_ = 0;
};

}  // namespace ctag
