#include "ctag/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace ctag {

Digest Sha256Hasher::hash(std::span<const std::uint8_t> data) const {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("SHA-256 evaluation failed");
  }
  return out;
}

const Hasher& default_hasher() {
  static const Sha256Hasher instance;
  return instance;
}

Digest hash_parts(std::initializer_list<std::span<const std::uint8_t>> parts, const Hasher& h) {
  Bytes buf;
  for (auto part : parts) {
    std::uint64_t len = part.size();
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    buf.insert(buf.end(), part.begin(), part.end());
  }
  return h.hash(buf);
}

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Prg::Prg(std::span<const std::uint8_t> seed) : Prg(seed, "ctag.prg") {}

Prg::Prg(std::span<const std::uint8_t> seed, std::string_view domain) {
  Digest key = hash_parts({as_bytes(domain), seed});
  auto* ctx = EVP_CIPHER_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  std::array<std::uint8_t, 16> iv{};
  if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ctr(), nullptr, key.data(), iv.data()) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    throw std::runtime_error("AES-CTR init failed");
  }
  ctx_ = ctx;
  refill();
}

Prg::~Prg() {
  if (ctx_ != nullptr) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

Prg::Prg(Prg&& other) noexcept : ctx_(other.ctx_), buf_(other.buf_), pos_(other.pos_) {
  other.ctx_ = nullptr;
}

Prg& Prg::operator=(Prg&& other) noexcept {
  if (this != &other) {
    if (ctx_ != nullptr) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
    ctx_ = other.ctx_;
    buf_ = other.buf_;
    pos_ = other.pos_;
    other.ctx_ = nullptr;
  }
  return *this;
}

void Prg::refill() {
  static const std::array<std::uint8_t, 4096> kZeros{};
  int len = 0;
  if (EVP_EncryptUpdate(static_cast<EVP_CIPHER_CTX*>(ctx_), buf_.data(), &len, kZeros.data(),
                        static_cast<int>(kZeros.size())) != 1 ||
      len != static_cast<int>(buf_.size())) {
    throw std::runtime_error("AES-CTR keystream generation failed");
  }
  pos_ = 0;
}

void Prg::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buf_.size()) refill();
    std::size_t take = std::min(out.size() - done, buf_.size() - pos_);
    std::memcpy(out.data() + done, buf_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

std::uint64_t Prg::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t Prg::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

RElem Prg::uniform(unsigned width) {
  RElem::Limbs l{};
  for (unsigned i = 0; i < (width + 63) / 64 && i < 4; ++i) l[i] = next_u64();
  return RElem(l, width);
}

RMatrix Prg::uniform_matrix(std::size_t rows, std::size_t cols, unsigned width) {
  std::vector<RElem> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows * cols; ++i) data.push_back(uniform(width));
  return RMatrix(rows, cols, std::move(data));
}

}  // namespace ctag
