#include "ctag/sharing.hpp"

#include <stdexcept>

namespace ctag {

void AuthMatrixShare::check_consistent() const {
  if (vals.rows() != macs.rows() || vals.cols() != macs.cols()) {
    throw std::invalid_argument("authenticated share: value/MAC shape mismatch");
  }
  if (vals.width() != macs.width()) throw WidthError("authenticated share: value/MAC width mismatch");
}

AuthMatrixShare lin_combine(const std::vector<RElem>& coeffs,
                            const std::vector<AuthMatrixShare>& inputs) {
  if (coeffs.size() != inputs.size() || inputs.empty()) {
    throw std::invalid_argument("lin_combine: need one coefficient per input");
  }
  const auto& first = inputs.front();
  first.check_consistent();
  const unsigned width = first.vals.width();
  AuthMatrixShare out{RMatrix(first.rows(), first.cols(), width),
                      RMatrix(first.rows(), first.cols(), width)};
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const auto& in = inputs[j];
    in.check_consistent();
    if (in.rows() != first.rows() || in.cols() != first.cols()) {
      throw std::invalid_argument("lin_combine: shape mismatch");
    }
    if (coeffs[j].width() > width) throw WidthError("lin_combine: coefficient wider than shares");
    const RElem c = coeffs[j].lift(width);
    out.vals += scale(c, in.vals);
    out.macs += scale(c, in.macs);
  }
  return out;
}

AuthMatrixShare add_public(const AuthMatrixShare& x, const RMatrix& c, PartyId me,
                           const MacKeyShare& key) {
  x.check_consistent();
  if (c.rows() != x.rows() || c.cols() != x.cols()) {
    throw std::invalid_argument("add_public: shape mismatch");
  }
  AuthMatrixShare out = x;
  if (me == 1) out.vals += c;
  out.macs += scale_key(key.delta, c);
  return out;
}

}  // namespace ctag
