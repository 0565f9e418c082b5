#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctag/conv.hpp"
#include "ctag/dealer.hpp"
#include "ctag/metrics.hpp"
#include "ctag/ring.hpp"
#include "ctag/sharing.hpp"
#include "ctag/transport.hpp"

namespace ctag {

/// A publicly reconstructed matrix: `value` mod 2^k and `lifted`, the share
/// sum mod 2^{k+s}.
struct OpenedMatrix {
  RMatrix value;
  RMatrix lifted;
};

struct OptMacResult {
  std::vector<RMatrix> macs;    // per party: MAC shares of M
  std::vector<RMatrix> r_macs;  // per party: MAC shares of R
  OpenedMatrix d;
};

struct OptMacTruncResult {
  PartyShares truncated;        // [M^f] with optimistic MACs
  std::vector<RMatrix> r_macs;  // per party: MAC shares of R
  OpenedMatrix d;
};

/// Compressed column M * chi, lifted to width k+2s before accumulation.
RMatrix compress(const RMatrix& m, const RMatrix& chi, unsigned check_width);

/// Material plans for the online procedures below.
MaterialPlan plan_matmul(std::size_t t1, std::size_t t2, std::size_t t3);
MaterialPlan plan_matmul_truncate(std::size_t t1, std::size_t t2, std::size_t t3);
MaterialPlan plan_compact_matmul(std::size_t t1, std::size_t t2, std::size_t t3);

struct EngineOptions {
  /// Run both deferred checks at the end of every operation.
  bool flush_each_op = false;
  /// Run each party's local computation on its own thread.
  bool threaded = false;
};

/// Online phase for n simulated parties in lockstep. Every method takes all
/// parties' shares (index PartyId - 1); local steps for party p only read
/// party p's entries, and all cross-party data moves through the Network.
class Engine {
 public:
  Engine(MaterialPool pool, Network& net, EngineOptions options = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const RingParams& params() const noexcept { return params_; }
  std::size_t parties() const noexcept { return n_; }
  const MacKeyShare& key(PartyId p) const { return keys_.at(p - 1); }
  const std::vector<MacKeyShare>& keys() const noexcept { return keys_; }
  Network& network() noexcept { return net_; }

  /// Prefix for step labels of subsequent operations (for example a layer name).
  void set_label_prefix(std::string prefix) { prefix_ = std::move(prefix); }

  RElem open_single(const std::vector<AuthShare>& x);
  /// Zero-masked opening; the check is deferred.
  OpenedMatrix batch_open(const PartyShares& m);
  PartyShares matmul_spdz2k(const PartyShares& x, const PartyShares& y);
  PartyShares truncate(const PartyShares& m);
  OptMacResult opt_mac(const std::vector<RMatrix>& m_vals);
  OptMacTruncResult opt_mac_trunc(const std::vector<RMatrix>& m_vals);
  PartyShares compact_matmul(const PartyShares& x, const PartyShares& y);
  /// input: (h*w) x in, pixel-major; kernel: (kernel*kernel*in) x out with
  /// row index (ky*kernel + kx)*in + c.
  PartyShares conv_via_matmul(const PartyShares& input, const PartyShares& kernel, const ConvParams& conv);

  void batch_tag_check();
  void batch_tag_check(const PublicCoins& chi);
  void compact_tag_check();
  void compact_tag_check(const PublicCoins& chi_hat);
  /// Both deferred checks, in order.
  void flush();
  /// Opens an output after flushing every pending check.
  RMatrix reveal(const PartyShares& m);

  std::size_t pending_batch_elements() const;
  std::size_t pending_compact_rows() const;
  std::uint64_t last_broadcast_round() const noexcept { return last_broadcast_round_; }

  const std::vector<CostLedger>& ledgers() const noexcept { return ledgers_; }
  const ConsumptionLog& consumption() const noexcept { return pool_.consumption(); }

 private:
  struct BatchItem {
    std::string label;
    RMatrix lifted;
    std::vector<RMatrix> macs;
    std::uint64_t round;
  };
  struct CompactItem {
    std::string label;
    RMatrix d_compressed;                  // T1 x 1, width k+2s, public
    std::vector<RMatrix> mac_d_compressed;  // per party, T1 x 1, width k+2s
    std::uint64_t d_round;
    std::uint64_t chi_round;
  };

  std::string label(const std::string& op) const;
  void for_each_party(const std::function<void(PartyId)>& fn);
  OpenedMatrix open_unchecked(const std::string& label, const std::vector<RMatrix>& vals);
  OpenedMatrix open_and_defer(const std::string& label, const std::vector<RMatrix>& vals,
                              std::vector<RMatrix> macs);
  std::vector<AuthMatrixShare> take_group(const MaterialItem& item, std::size_t index) const;
  void check_shares(const PartyShares& m, const char* what) const;
  void maybe_flush();
  OptMacTruncResult opt_mac_trunc_impl(const std::string& op, const std::vector<RMatrix>& m_vals);

  RingParams params_;
  std::size_t n_;
  MaterialPool pool_;
  Network& net_;
  EngineOptions options_;
  std::vector<MacKeyShare> keys_;
  std::vector<CostLedger> ledgers_;
  std::vector<BatchItem> batch_items_;
  std::vector<CompactItem> compact_items_;
  std::string prefix_;
  std::uint64_t last_broadcast_round_ = 0;
};

}  // namespace ctag
