#include "ctag/protocol.hpp"

#include <exception>
#include <thread>

namespace ctag {

RMatrix compress(const RMatrix& m, const RMatrix& chi, unsigned check_width) {
  if (chi.cols() != 1 || chi.rows() != m.cols()) {
    throw std::invalid_argument("compress: combiner length must equal the column count");
  }
  if (m.width() > check_width) throw WidthError("compress: matrix wider than the target width");
  RMatrix out(m.rows(), 1, check_width);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    RElem acc = RElem::zero(check_width);
    for (std::size_t j = 0; j < m.cols(); ++j) acc += mul_key(chi[j], m(i, j).lift(check_width));
    out[i] = acc;
  }
  return out;
}

MaterialPlan plan_matmul(std::size_t t1, std::size_t t2, std::size_t t3) {
  return {MaterialRequest::triple(t1, t2, t3)};
}

MaterialPlan plan_matmul_truncate(std::size_t t1, std::size_t t2, std::size_t t3) {
  return {MaterialRequest::triple(t1, t2, t3), MaterialRequest::trunc_pair(t1, t3)};
}

MaterialPlan plan_compact_matmul(std::size_t t1, std::size_t t2, std::size_t t3) {
  return {MaterialRequest::triple(t1, t2, t3), MaterialRequest::trunc_pair(t1, t3)};
}

Engine::Engine(MaterialPool pool, Network& net, EngineOptions options)
    : params_(pool.params()),
      n_(pool.parties()),
      pool_(std::move(pool)),
      net_(net),
      options_(options),
      keys_(pool_.key_shares()),
      ledgers_(n_) {
  if (net_.parties() != n_) throw std::invalid_argument("engine: network and material disagree on n");
  if (keys_.size() != n_) throw std::invalid_argument("engine: material lacks key shares");
}

std::string Engine::label(const std::string& op) const {
  return prefix_.empty() ? op : prefix_ + "/" + op;
}

void Engine::for_each_party(const std::function<void(PartyId)>& fn) {
  if (!options_.threaded) {
    for (PartyId p = 1; p <= n_; ++p) fn(p);
    return;
  }
  std::vector<std::exception_ptr> errors(n_);
  std::vector<std::thread> threads;
  threads.reserve(n_);
  for (PartyId p = 1; p <= n_; ++p) {
    threads.emplace_back([&, p] {
      try {
        fn(p);
      } catch (...) {
        errors[p - 1] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void Engine::check_shares(const PartyShares& m, const char* what) const {
  if (m.size() != n_) throw std::invalid_argument(std::string(what) + ": expected one share per party");
  for (const auto& s : m) {
    s.check_consistent();
    if (s.vals.width() != params_.share_width()) throw WidthError(std::string(what) + ": shares must be width k+s");
    if (s.rows() != m.front().rows() || s.cols() != m.front().cols()) {
      throw std::invalid_argument(std::string(what) + ": parties disagree on shape");
    }
  }
}

std::vector<AuthMatrixShare> Engine::take_group(const MaterialItem& item, std::size_t index) const {
  std::vector<AuthMatrixShare> out;
  for (const auto& part : item.parts) out.push_back(part.at(index));
  return out;
}

OpenedMatrix Engine::open_unchecked(const std::string& lbl, const std::vector<RMatrix>& vals) {
  auto received = net_.broadcast_shares(lbl, vals);
  RMatrix lifted = received.front();
  for (std::size_t p = 1; p < received.size(); ++p) lifted += received[p];
  last_broadcast_round_ = net_.round();
  return {reduce(lifted, params_.k), std::move(lifted)};
}

OpenedMatrix Engine::open_and_defer(const std::string& lbl, const std::vector<RMatrix>& vals,
                                    std::vector<RMatrix> macs) {
  OpenedMatrix o = open_unchecked(lbl, vals);
  batch_items_.push_back({lbl, o.lifted, std::move(macs), net_.round()});
  return o;
}

void Engine::maybe_flush() {
  if (options_.flush_each_op) flush();
}

RElem Engine::open_single(const std::vector<AuthShare>& x) {
  if (x.size() != n_) throw std::invalid_argument("open_single: expected one share per party");
  const auto op = label("open_single");
  const unsigned k = params_.k;
  auto mask = take_group(pool_.take(MaterialRequest::open_mask()), 0);

  std::vector<RMatrix> w(n_), mac_w(n_);
  for_each_party([&](PartyId p) {
    const auto& r = mask[p - 1];
    w[p - 1] = RMatrix(1, 1, std::vector<RElem>{x[p - 1].val + r.vals[0].shift_up(k)});
    mac_w[p - 1] = RMatrix(1, 1, std::vector<RElem>{x[p - 1].mac + r.macs[0].shift_up(k)});
  });
  const OpenedMatrix opened = open_unchecked(op + "/open_w", w);
  const RElem& w_tilde = opened.lifted[0];

  std::vector<RMatrix> u(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::check);
    u[p - 1] = mac_w[p - 1] - RMatrix(1, 1, std::vector<RElem>{mul_key(key(p).delta, w_tilde)});
  });
  net_.commit_round(op + "/open_cs", std::move(u));
  auto revealed = net_.open_round(op + "/open_cs");
  RElem sum = RElem::zero(params_.share_width());
  for (const auto& cs : revealed) sum += cs[0];
  if (!sum.is_zero()) throw Abort(Abort::Reason::tag_mismatch, op);
  return opened.value[0];
}

OpenedMatrix Engine::batch_open(const PartyShares& m) {
  check_shares(m, "batch_open");
  const auto op = label("batch_open");
  auto mask = take_group(pool_.take(MaterialRequest::zero_mask(m[0].rows(), m[0].cols())), 0);
  std::vector<RMatrix> w(n_), mac_w(n_);
  for_each_party([&](PartyId p) {
    w[p - 1] = m[p - 1].vals + mask[p - 1].vals;
    mac_w[p - 1] = m[p - 1].macs + mask[p - 1].macs;
  });
  OpenedMatrix o = open_and_defer(op + "/W", w, std::move(mac_w));
  maybe_flush();
  return o;
}

PartyShares Engine::matmul_spdz2k(const PartyShares& x, const PartyShares& y) {
  check_shares(x, "matmul");
  check_shares(y, "matmul");
  const std::size_t t1 = x[0].rows(), t2 = x[0].cols(), t3 = y[0].cols();
  if (y[0].rows() != t2) throw std::invalid_argument("matmul: inner dimension mismatch");
  const auto op = label("matmul");
  const auto item = pool_.take(MaterialRequest::triple(t1, t2, t3));
  const auto a = take_group(item, 0), b = take_group(item, 1), c = take_group(item, 2);

  std::vector<RMatrix> e_v(n_), e_m(n_), u_v(n_), u_m(n_);
  for_each_party([&](PartyId p) {
    e_v[p - 1] = x[p - 1].vals - a[p - 1].vals;
    e_m[p - 1] = x[p - 1].macs - a[p - 1].macs;
    u_v[p - 1] = y[p - 1].vals - b[p - 1].vals;
    u_m[p - 1] = y[p - 1].macs - b[p - 1].macs;
  });
  const OpenedMatrix e = open_and_defer(op + "/E", e_v, std::move(e_m));
  const OpenedMatrix u = open_and_defer(op + "/U", u_v, std::move(u_m));

  PartyShares z(n_);
  for_each_party([&](PartyId p) {
    const auto& ap = a[p - 1];
    const auto& bp = b[p - 1];
    const auto& cp = c[p - 1];
    RMatrix z_val;
    {
      auto scope = ledgers_[p - 1].attribute(op, MulPath::value);
      z_val = cp.vals + matmul(e.lifted, bp.vals) + matmul(ap.vals, u.lifted);
    }
    auto scope = ledgers_[p - 1].attribute(op, MulPath::tag);
    RMatrix z_mac = cp.macs + matmul(e.lifted, bp.macs) + matmul(ap.macs, u.lifted);
    const RMatrix eu = matmul(e.lifted, u.lifted);
    z[p - 1] = add_public({std::move(z_val), std::move(z_mac)}, eu, p, key(p));
  });
  maybe_flush();
  return z;
}

PartyShares Engine::truncate(const PartyShares& m) {
  check_shares(m, "truncate");
  const std::size_t rows = m[0].rows(), cols = m[0].cols();
  const auto op = label("truncate");
  const auto item = pool_.take(MaterialRequest::trunc_pair(rows, cols));
  const auto r = take_group(item, 0), rf = take_group(item, 1);

  std::vector<RMatrix> d_v(n_), d_m(n_);
  for_each_party([&](PartyId p) {
    d_v[p - 1] = r[p - 1].vals - m[p - 1].vals;
    d_m[p - 1] = r[p - 1].macs - m[p - 1].macs;
  });
  const OpenedMatrix d = open_and_defer(op + "/D", d_v, std::move(d_m));
  const RMatrix d_shifted = shift_down(d.lifted, params_.f);

  PartyShares out(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::tag);
    AuthMatrixShare o{rf[p - 1].vals, rf[p - 1].macs - scale_key(key(p).delta, d_shifted)};
    if (p == 1) o.vals -= d_shifted;
    out[p - 1] = std::move(o);
  });
  maybe_flush();
  return out;
}

namespace {

void check_values(const std::vector<RMatrix>& v, std::size_t n, unsigned width, const char* what) {
  if (v.size() != n) throw std::invalid_argument(std::string(what) + ": expected one share per party");
  for (const auto& m : v) {
    if (m.width() != width) throw WidthError(std::string(what) + ": shares must be width k+s");
    if (m.rows() != v.front().rows() || m.cols() != v.front().cols()) {
      throw std::invalid_argument(std::string(what) + ": parties disagree on shape");
    }
  }
}

}  // namespace

OptMacResult Engine::opt_mac(const std::vector<RMatrix>& m_vals) {
  check_values(m_vals, n_, params_.share_width(), "opt_mac");
  const auto op = label("opt_mac");
  const auto r = take_group(pool_.take(MaterialRequest::random_auth(m_vals[0].rows(), m_vals[0].cols())), 0);

  std::vector<RMatrix> d_v(n_);
  for_each_party([&](PartyId p) { d_v[p - 1] = r[p - 1].vals - m_vals[p - 1]; });
  OptMacResult out;
  out.d = open_unchecked(op + "/D", d_v);
  out.macs.resize(n_);
  out.r_macs.resize(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::tag);
    out.macs[p - 1] = r[p - 1].macs - scale_key(key(p).delta, out.d.lifted);
    out.r_macs[p - 1] = r[p - 1].macs;
  });
  return out;
}

OptMacTruncResult Engine::opt_mac_trunc(const std::vector<RMatrix>& m_vals) {
  return opt_mac_trunc_impl(label("opt_mac_trunc"), m_vals);
}

OptMacTruncResult Engine::opt_mac_trunc_impl(const std::string& op, const std::vector<RMatrix>& m_vals) {
  check_values(m_vals, n_, params_.share_width(), "opt_mac_trunc");
  const auto item = pool_.take(MaterialRequest::trunc_pair(m_vals[0].rows(), m_vals[0].cols()));
  const auto r = take_group(item, 0), rf = take_group(item, 1);

  std::vector<RMatrix> d_v(n_);
  for_each_party([&](PartyId p) { d_v[p - 1] = r[p - 1].vals - m_vals[p - 1]; });
  OptMacTruncResult out;
  out.d = open_unchecked(op + "/D", d_v);
  const RMatrix d_shifted = shift_down(out.d.lifted, params_.f);
  out.truncated.resize(n_);
  out.r_macs.resize(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::tag);
    AuthMatrixShare o{rf[p - 1].vals, rf[p - 1].macs - scale_key(key(p).delta, d_shifted)};
    if (p == 1) o.vals -= d_shifted;
    out.truncated[p - 1] = std::move(o);
    out.r_macs[p - 1] = r[p - 1].macs;
  });
  return out;
}

PartyShares Engine::compact_matmul(const PartyShares& x, const PartyShares& y) {
  check_shares(x, "compact_matmul");
  check_shares(y, "compact_matmul");
  const std::size_t t1 = x[0].rows(), t2 = x[0].cols(), t3 = y[0].cols();
  if (y[0].rows() != t2) throw std::invalid_argument("compact_matmul: inner dimension mismatch");
  const auto op = label("compact_matmul");
  const unsigned cw = params_.check_width();
  const auto item = pool_.take(MaterialRequest::triple(t1, t2, t3));
  const auto a = take_group(item, 0), b = take_group(item, 1), c = take_group(item, 2);

  std::vector<RMatrix> e_v(n_), e_m(n_), u_v(n_), u_m(n_);
  for_each_party([&](PartyId p) {
    e_v[p - 1] = x[p - 1].vals - a[p - 1].vals;
    e_m[p - 1] = x[p - 1].macs - a[p - 1].macs;
    u_v[p - 1] = y[p - 1].vals - b[p - 1].vals;
    u_m[p - 1] = y[p - 1].macs - b[p - 1].macs;
  });
  const OpenedMatrix e = open_and_defer(op + "/E", e_v, std::move(e_m));
  const OpenedMatrix u = open_and_defer(op + "/U", u_v, std::move(u_m));

  // Value shares only; their tags come from the optimistic step below.
  std::vector<RMatrix> z(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::value);
    z[p - 1] = c[p - 1].vals + matmul(e.lifted, b[p - 1].vals) + matmul(a[p - 1].vals, u.lifted);
    if (p == 1) z[p - 1] += matmul(e.lifted, u.lifted);
  });

  OptMacTruncResult omt = opt_mac_trunc_impl(op, z);
  const std::uint64_t d_round = net_.round();

  const PublicCoins chi = net_.coin_toss(op + "/chi", t3, 1, params_.s);
  if (chi.round <= d_round) throw RoundError("compact_matmul: combiners sampled before D was broadcast");

  std::vector<RMatrix> d_c(n_), mac_d_c(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::tag);
    const RMatrix mac_b_c = compress(b[p - 1].macs, chi.values, cw);
    const RMatrix u_c = compress(u.lifted, chi.values, cw);
    const RMatrix mac_c_c = compress(c[p - 1].macs, chi.values, cw);
    const RMatrix mac_r_c = compress(omt.r_macs[p - 1], chi.values, cw);
    d_c[p - 1] = compress(omt.d.lifted, chi.values, cw);

    const RMatrix e_wide = lift(e.lifted, cw);
    const RMatrix mac_z_c = mac_c_c + matmul(e_wide, mac_b_c) + matmul(lift(a[p - 1].macs, cw), u_c) +
                            scale_key(key(p).delta, matmul(e_wide, u_c));
    mac_d_c[p - 1] = mac_r_c - mac_z_c;
  });
  compact_items_.push_back({op, std::move(d_c[0]), std::move(mac_d_c), d_round, chi.round});
  maybe_flush();
  return std::move(omt.truncated);
}

PartyShares Engine::conv_via_matmul(const PartyShares& input, const PartyShares& kernel, const ConvParams& conv) {
  const MatmulShape shape = conv_dims(conv);
  check_shares(input, "conv");
  check_shares(kernel, "conv");
  if (input[0].rows() != conv.h * conv.w || input[0].cols() != conv.in) {
    throw std::invalid_argument("conv: input must be (h*w) x in");
  }
  if (kernel[0].rows() != shape.t2 || kernel[0].cols() != shape.t3) {
    throw std::invalid_argument("conv: kernel must be (kernel*kernel*in) x out");
  }
  const std::size_t ow = conv.out_w(), oh = conv.out_h();
  auto im2col = [&](const RMatrix& src) {
    RMatrix out(shape.t1, shape.t2, src.width());
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t row = oy * ow + ox;
        for (std::size_t ky = 0; ky < conv.kernel; ++ky) {
          for (std::size_t kx = 0; kx < conv.kernel; ++kx) {
            const std::size_t iy = oy * conv.stride + ky;
            const std::size_t ix = ox * conv.stride + kx;
            if (iy < conv.pad || ix < conv.pad || iy - conv.pad >= conv.h || ix - conv.pad >= conv.w) continue;
            const std::size_t pixel = (iy - conv.pad) * conv.w + (ix - conv.pad);
            for (std::size_t ch = 0; ch < conv.in; ++ch) {
              out(row, (ky * conv.kernel + kx) * conv.in + ch) = src(pixel, ch);
            }
          }
        }
      }
    }
    return out;
  };
  PartyShares cols(n_);
  for_each_party([&](PartyId p) { cols[p - 1] = {im2col(input[p - 1].vals), im2col(input[p - 1].macs)}; });
  return compact_matmul(cols, kernel);
}

void Engine::batch_tag_check() {
  if (batch_items_.empty()) return;
  const auto chi = net_.coin_toss(label("batch_check") + "/batch_chi", pending_batch_elements(), 1, params_.s);
  batch_tag_check(chi);
}

void Engine::batch_tag_check(const PublicCoins& chi) {
  if (batch_items_.empty()) return;
  if (chi.values.rows() != pending_batch_elements() || chi.values.cols() != 1 || chi.values.width() != params_.s) {
    throw std::invalid_argument("batch_tag_check: combiners must be a column of width-s elements, one per opened entry");
  }
  for (const auto& item : batch_items_) {
    if (chi.round <= item.round) {
      throw RoundError("batch_tag_check: stale combiners, sampled no later than the opening of " + item.label);
    }
  }
  const auto items = std::move(batch_items_);
  batch_items_.clear();
  const auto op = label("batch_check");
  const unsigned ks = params_.share_width();

  std::vector<RMatrix> cs(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::check);
    RElem acc_mac = RElem::zero(ks);
    RElem acc_w = RElem::zero(ks);
    std::size_t idx = 0;
    for (const auto& item : items) {
      const RMatrix& macs = item.macs[p - 1];
      for (std::size_t e = 0; e < item.lifted.size(); ++e, ++idx) {
        acc_mac += mul_key(chi.values[idx], macs[e]);
        acc_w += mul_key(chi.values[idx], item.lifted[e]);
      }
    }
    cs[p - 1] = RMatrix(1, 1, std::vector<RElem>{acc_mac - mul_key(key(p).delta, acc_w)});
  });
  net_.commit_round(op + "/batch_cs", std::move(cs));
  const auto revealed = net_.open_round(op + "/batch_cs");
  RElem sum = RElem::zero(ks);
  for (const auto& v : revealed) sum += v[0];
  if (!sum.is_zero()) throw Abort(Abort::Reason::tag_mismatch, op);
}

void Engine::compact_tag_check() {
  if (compact_items_.empty()) return;
  const auto chi_hat = net_.coin_toss(label("compact_check") + "/chi_hat", pending_compact_rows(), 1, params_.s);
  compact_tag_check(chi_hat);
}

void Engine::compact_tag_check(const PublicCoins& chi_hat) {
  if (compact_items_.empty()) return;
  const std::size_t rows = pending_compact_rows();
  if (chi_hat.values.rows() != rows || chi_hat.values.cols() != 1 || chi_hat.values.width() != params_.s) {
    throw std::invalid_argument("compact_tag_check: combiners must be a column of width-s elements, one per row");
  }
  for (const auto& item : compact_items_) {
    if (chi_hat.round <= item.chi_round || chi_hat.round <= item.d_round) {
      throw RoundError("compact_tag_check: stale combiners for " + item.label);
    }
  }
  const auto items = std::move(compact_items_);
  compact_items_.clear();
  const auto op = label("compact_check");
  const unsigned ks = params_.share_width();
  const unsigned cw = params_.check_width();

  // Each party reveals t_p = Delta_p * D' - mac(D')_p reduced mod 2^{k+s};
  // the shares only agree modulo 2^{k+s}, so the carries are dropped before
  // the public combination in Z_{2^{k+2s}}.
  std::vector<RMatrix> t(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::check);
    RMatrix col(rows, 1, ks);
    std::size_t idx = 0;
    for (const auto& item : items) {
      for (std::size_t i = 0; i < item.d_compressed.rows(); ++i, ++idx) {
        col[idx] = (mul_key(key(p).delta, item.d_compressed[i]) - item.mac_d_compressed[p - 1][i]).reduce(ks);
      }
    }
    t[p - 1] = std::move(col);
  });
  net_.commit_round(op + "/compact_cs", std::move(t));
  const auto revealed = net_.open_round(op + "/compact_cs");
  RMatrix y = revealed.front();
  for (std::size_t p = 1; p < revealed.size(); ++p) y += revealed[p];

  std::vector<RElem> cs(n_);
  for_each_party([&](PartyId p) {
    auto scope = ledgers_[p - 1].attribute(op, MulPath::check);
    RElem acc = RElem::zero(cw);
    for (std::size_t i = 0; i < rows; ++i) acc += mul_key(chi_hat.values[i], y[i].lift(cw));
    cs[p - 1] = acc;
  });
  if (!cs.front().is_zero()) throw Abort(Abort::Reason::tag_mismatch, op);
}

void Engine::flush() {
  batch_tag_check();
  compact_tag_check();
}

RMatrix Engine::reveal(const PartyShares& m) {
  const bool saved = options_.flush_each_op;
  options_.flush_each_op = false;
  OpenedMatrix o = batch_open(m);
  options_.flush_each_op = saved;
  flush();
  return o.value;
}

std::size_t Engine::pending_batch_elements() const {
  std::size_t total = 0;
  for (const auto& item : batch_items_) total += item.lifted.size();
  return total;
}

std::size_t Engine::pending_compact_rows() const {
  std::size_t total = 0;
  for (const auto& item : compact_items_) total += item.d_compressed.rows();
  return total;
}

}  // namespace ctag
