#include "ctag/dealer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace ctag {

const char* to_string(MaterialKind kind) {
  switch (kind) {
    case MaterialKind::triple: return "triple";
    case MaterialKind::trunc_pair: return "trunc_pair";
    case MaterialKind::zero_mask: return "zero_mask";
    case MaterialKind::open_mask: return "open_mask";
    case MaterialKind::random_auth: return "random_auth";
  }
  return "unknown";
}

std::string MaterialRequest::describe() const {
  std::string out = to_string(kind);
  out += "(" + std::to_string(d1) + "x" + std::to_string(d2);
  if (kind == MaterialKind::triple) out += "x" + std::to_string(d3);
  return out + ")";
}

bool operator==(const DealerMaterial& a, const DealerMaterial& b) {
  if (!(a.params == b.params) || a.parties != b.parties || a.items != b.items) return false;
  if (a.key_shares.size() != b.key_shares.size()) return false;
  for (std::size_t i = 0; i < a.key_shares.size(); ++i) {
    if (!(a.key_shares[i].delta == b.key_shares[i].delta)) return false;
  }
  return true;
}

DealerSeed dealer_seed_from(std::uint64_t seed) {
  DealerSeed out{};
  std::array<std::uint8_t, 8> raw{};
  for (int i = 0; i < 8; ++i) raw[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed >> (8 * i));
  Digest lo = hash_parts({as_bytes("dealer-seed-lo"), raw});
  Digest hi = hash_parts({as_bytes("dealer-seed-hi"), raw});
  std::copy(lo.begin(), lo.end(), out.begin());
  std::copy(hi.begin(), hi.end(), out.begin() + 32);
  return out;
}

Dealer::Dealer(RingParams params, std::size_t parties, const DealerSeed& seed)
    : params_(params), n_(parties), rng_(seed) {
  params_.validate();
  if (n_ < 2) throw std::invalid_argument("dealer: at least two parties required");
}

const std::vector<MacKeyShare>& Dealer::init_keys() {
  keys_.clear();
  for (std::size_t p = 0; p < n_; ++p) keys_.push_back({rng_.uniform(params_.s)});
  return keys_;
}

void Dealer::require_keys() const {
  if (keys_.empty()) throw std::logic_error("dealer: MAC keys not initialized");
}

const std::vector<MacKeyShare>& Dealer::key_shares() const {
  require_keys();
  return keys_;
}

RElem Dealer::global_key() const {
  require_keys();
  RElem sum = RElem::zero(params_.s);
  for (const auto& k : keys_) sum += k.delta;
  return sum;
}

RElem Dealer::mac_key() const {
  require_keys();
  RElem sum = RElem::zero(params_.share_width());
  for (const auto& k : keys_) sum += k.delta.lift(params_.share_width());
  return sum;
}

std::vector<RMatrix> Dealer::split(const RMatrix& value) {
  std::vector<RMatrix> shares;
  RMatrix rest = value;
  for (std::size_t p = 0; p + 1 < n_; ++p) {
    shares.push_back(rng_.uniform_matrix(value.rows(), value.cols(), value.width()));
    rest -= shares.back();
  }
  shares.push_back(std::move(rest));
  return shares;
}

PartyShares Dealer::auth_matrix(const RMatrix& value) {
  require_keys();
  if (value.width() != params_.share_width()) throw WidthError("auth_matrix: expects width k+s");
  const RElem key = mac_key();
  RMatrix tag(value.rows(), value.cols(), value.width());
  for (std::size_t i = 0; i < value.size(); ++i) tag[i] = key * value[i];
  auto val_shares = split(value);
  auto mac_shares = split(tag);
  PartyShares out;
  for (std::size_t p = 0; p < n_; ++p) out.push_back({std::move(val_shares[p]), std::move(mac_shares[p])});
  return out;
}

std::vector<AuthShare> Dealer::auth_shares(const RElem& value) {
  auto m = auth_matrix(RMatrix(1, 1, std::vector<RElem>{value}));
  std::vector<AuthShare> out;
  for (auto& s : m) out.push_back({s.vals[0], s.macs[0]});
  return out;
}

std::vector<AuthShare> Dealer::auth_shares(const std::vector<RElem>& value_shares) {
  require_keys();
  if (value_shares.size() != n_) throw std::invalid_argument("auth_shares: one value share per party");
  RElem v = RElem::zero(params_.share_width());
  for (const auto& s : value_shares) v += s;
  auto mac_shares = split(RMatrix(1, 1, std::vector<RElem>{mac_key() * v}));
  std::vector<AuthShare> out;
  for (std::size_t p = 0; p < n_; ++p) out.push_back({value_shares[p], mac_shares[p][0]});
  return out;
}

PartyShares Dealer::share_input(const RMatrix& plain) {
  if (plain.width() != params_.k) throw WidthError("share_input: expects a width-k plaintext");
  return auth_matrix(sign_extend(plain, params_.share_width()));
}

std::vector<PartyShares> Dealer::beaver_triple(std::size_t t1, std::size_t t2, std::size_t t3) {
  require_keys();
  if (t1 == 0 || t2 == 0 || t3 == 0) throw std::invalid_argument("beaver_triple: zero dimension");
  const unsigned w = params_.share_width();
  RMatrix a = rng_.uniform_matrix(t1, t2, w);
  RMatrix b = rng_.uniform_matrix(t2, t3, w);
  RMatrix c = matmul(a, b);
  return {auth_matrix(a), auth_matrix(b), auth_matrix(c)};
}

std::vector<PartyShares> Dealer::trunc_pair(std::size_t rows, std::size_t cols, unsigned f) {
  require_keys();
  if (f >= params_.k) throw std::invalid_argument("trunc_pair: f must be below k");
  if (rows == 0 || cols == 0) throw std::invalid_argument("trunc_pair: zero dimension");
  RMatrix r = rng_.uniform_matrix(rows, cols, params_.share_width());
  RMatrix rf = shift_down(r, f);
  return {auth_matrix(r), auth_matrix(rf)};
}

PartyShares Dealer::zero_mask(std::size_t rows, std::size_t cols) {
  RMatrix top = rng_.uniform_matrix(rows, cols, params_.s);
  return auth_matrix(shift_up(lift(top, params_.share_width()), params_.k));
}

PartyShares Dealer::random_auth(std::size_t rows, std::size_t cols) {
  return auth_matrix(rng_.uniform_matrix(rows, cols, params_.share_width()));
}

PartyShares Dealer::open_mask() {
  return auth_matrix(lift(rng_.uniform_matrix(1, 1, params_.s), params_.share_width()));
}

MaterialItem Dealer::make_item(const MaterialRequest& req) {
  std::vector<PartyShares> groups;
  switch (req.kind) {
    case MaterialKind::triple: groups = beaver_triple(req.d1, req.d2, req.d3); break;
    case MaterialKind::trunc_pair: groups = trunc_pair(req.d1, req.d2, params_.f); break;
    case MaterialKind::zero_mask: groups = {zero_mask(req.d1, req.d2)}; break;
    case MaterialKind::open_mask: groups = {open_mask()}; break;
    case MaterialKind::random_auth: groups = {random_auth(req.d1, req.d2)}; break;
  }
  MaterialItem item{req, std::vector<std::vector<AuthMatrixShare>>(n_)};
  for (auto& g : groups) {
    for (std::size_t p = 0; p < n_; ++p) item.parts[p].push_back(std::move(g[p]));
  }
  return item;
}

DealerMaterial Dealer::generate(const MaterialPlan& plan) {
  if (keys_.empty()) init_keys();
  DealerMaterial out{params_, n_, keys_, {}};
  for (const auto& req : plan) out.items.push_back(make_item(req));
  return out;
}

std::vector<MaterialRequest> ConsumptionLog::as_multiset() const {
  auto sorted = entries_;
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

MaterialPool::MaterialPool(DealerMaterial material)
    : material_(std::move(material)), used_(material_.items.size(), false) {}

MaterialItem MaterialPool::take(const MaterialRequest& req) {
  for (std::size_t i = 0; i < material_.items.size(); ++i) {
    if (used_[i] || material_.items[i].request.kind != req.kind) continue;
    if (!(material_.items[i].request == req)) {
      throw MissingMaterial("next " + std::string(to_string(req.kind)) + " has shape " +
                            material_.items[i].request.describe() + ", requested " + req.describe());
    }
    used_[i] = true;
    log_.record(req);
    return std::move(material_.items[i]);
  }
  throw MissingMaterial("no " + req.describe() + " left in preprocessing material");
}

std::size_t MaterialPool::remaining() const {
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), false));
}

// ---- binary format ---------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic{'C', 'T', 'D', 'M'};
constexpr std::uint32_t kSectionParams = 1;
constexpr std::uint32_t kSectionKeys = 2;
constexpr std::uint32_t kSectionItems = 3;

struct Writer {
  Bytes buf;
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void elem(const RElem& e) {
    for (unsigned i = 0; i < (e.width() + 63) / 64; ++i) u64(e.limbs()[i]);
  }
  void matrix(const RMatrix& m) {
    u64(m.rows());
    u64(m.cols());
    u32(m.width());
    for (const auto& e : m.data()) elem(e);
  }
};

struct Reader {
  const Bytes& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (buf.size() - pos < n) throw MaterialFormatError("material file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return v;
  }
  RElem elem(unsigned width) {
    RElem::Limbs l{};
    for (unsigned i = 0; i < (width + 63) / 64; ++i) l[i] = u64();
    RElem e(l, width);
    if (e.limbs() != l) throw MaterialFormatError("material file: limb exceeds declared width");
    return e;
  }
  RMatrix matrix() {
    std::uint64_t rows = u64();
    std::uint64_t cols = u64();
    std::uint32_t width = u32();
    if (width == 0 || width > kMaxWidth) throw MaterialFormatError("material file: bad width");
    if (rows * cols * ((width + 63) / 64) * 8 > buf.size() - pos) throw MaterialFormatError("material file truncated");
    std::vector<RElem> data;
    data.reserve(rows * cols);
    for (std::uint64_t i = 0; i < rows * cols; ++i) data.push_back(elem(width));
    return RMatrix(rows, cols, std::move(data));
  }
};

void write_section(std::ostream& os, std::uint32_t tag, const Bytes& body) {
  Writer head;
  head.u32(tag);
  head.u64(body.size());
  os.write(reinterpret_cast<const char*>(head.buf.data()), static_cast<std::streamsize>(head.buf.size()));
  os.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}

}  // namespace

void write_material(const DealerMaterial& m, std::ostream& os) {
  os.write(kMagic.data(), kMagic.size());
  Writer version;
  version.u32(kMaterialFormatVersion);
  os.write(reinterpret_cast<const char*>(version.buf.data()), 4);

  Writer params;
  params.u32(m.params.k);
  params.u32(m.params.s);
  params.u32(m.params.f);
  params.u64(m.parties);
  write_section(os, kSectionParams, params.buf);

  Writer keys;
  keys.u64(m.key_shares.size());
  for (const auto& k : m.key_shares) keys.elem(k.delta);
  write_section(os, kSectionKeys, keys.buf);

  Writer items;
  items.u64(m.items.size());
  for (const auto& item : m.items) {
    items.u8(static_cast<std::uint8_t>(item.request.kind));
    items.u64(item.request.d1);
    items.u64(item.request.d2);
    items.u64(item.request.d3);
    for (const auto& part : item.parts) {
      items.u32(static_cast<std::uint32_t>(part.size()));
      for (const auto& share : part) {
        items.matrix(share.vals);
        items.matrix(share.macs);
      }
    }
  }
  write_section(os, kSectionItems, items.buf);
  if (!os) throw MaterialFormatError("failed writing material stream");
}

DealerMaterial read_material(std::istream& is) {
  Bytes raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (raw.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), raw.begin())) {
    throw MaterialFormatError("not a dealer material file (bad magic)");
  }
  Reader r{raw, 4};
  std::uint32_t version = r.u32();
  if (version != kMaterialFormatVersion) {
    throw MaterialFormatError("unsupported material format version " + std::to_string(version));
  }

  DealerMaterial m;
  bool seen_params = false;
  while (r.pos < raw.size()) {
    std::uint32_t tag = r.u32();
    std::uint64_t len = r.u64();
    r.need(len);
    Bytes body(raw.begin() + static_cast<std::ptrdiff_t>(r.pos),
               raw.begin() + static_cast<std::ptrdiff_t>(r.pos + len));
    r.pos += len;
    Reader s{body};
    if (tag == kSectionParams) {
      m.params.k = s.u32();
      m.params.s = s.u32();
      m.params.f = s.u32();
      m.parties = s.u64();
      try {
        m.params.validate();
      } catch (const std::invalid_argument& e) {
        throw MaterialFormatError(std::string("material file: ") + e.what());
      }
      seen_params = true;
    } else if (tag == kSectionKeys) {
      if (!seen_params) throw MaterialFormatError("material file: keys before params");
      std::uint64_t count = s.u64();
      for (std::uint64_t i = 0; i < count; ++i) m.key_shares.push_back({s.elem(m.params.s)});
    } else if (tag == kSectionItems) {
      if (!seen_params) throw MaterialFormatError("material file: items before params");
      std::uint64_t count = s.u64();
      for (std::uint64_t i = 0; i < count; ++i) {
        MaterialItem item;
        std::uint8_t kind = s.u8();
        if (kind < 1 || kind > 5) throw MaterialFormatError("material file: unknown item kind");
        item.request.kind = static_cast<MaterialKind>(kind);
        item.request.d1 = s.u64();
        item.request.d2 = s.u64();
        item.request.d3 = s.u64();
        for (std::size_t p = 0; p < m.parties; ++p) {
          std::uint32_t nmat = s.u32();
          std::vector<AuthMatrixShare> part;
          for (std::uint32_t j = 0; j < nmat; ++j) {
            RMatrix vals = s.matrix();
            RMatrix macs = s.matrix();
            part.push_back({std::move(vals), std::move(macs)});
          }
          item.parts.push_back(std::move(part));
        }
        m.items.push_back(std::move(item));
      }
    }
    // Unknown sections are skipped so later versions can append data.
  }
  if (!seen_params) throw MaterialFormatError("material file: missing params section");
  if (m.key_shares.size() != m.parties) throw MaterialFormatError("material file: key share count mismatch");
  return m;
}

void save_material(const DealerMaterial& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw MaterialFormatError("cannot open " + path + " for writing");
  write_material(m, os);
}

DealerMaterial load_material(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MaterialFormatError("cannot open " + path);
  return read_material(is);
}

}  // namespace ctag
