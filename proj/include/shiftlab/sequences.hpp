#pragma once

// Named generators of unit-vector sequences h_k in C^n (k >= 1). These drive
// both the product-state classification tests and the gauge-sequence
// construction U_p mapping h_{p+2} to h_{p+1}.

#include <cmath>
#include <optional>
#include <utility>

#include "shiftlab/common.hpp"

namespace shiftlab::states {

// Convergence class of the alignment series sum_k (1 - |<h_k, h>|) against
// the limit h; declared analytically per family, used by the exact conjugacy
// reduction.
enum class TailClass { zero, summable, divergent, undeclared };

class SequenceFamily {
 public:
  enum class Kind { theta_harmonic, inverse_sqrt, geometric, constant, explicit_list };

  // theta ladder 1, 1/2, 1/2, 1/3, 1/3, 1/3, ... (term 1/q appears q times)
  static SequenceFamily theta_harmonic() {
    SequenceFamily f;
    f.kind_ = Kind::theta_harmonic;
    f.n_ = 2;
    f.tail_ = TailClass::divergent;
    return f;
  }

  // theta_k = k^{-1/2}
  static SequenceFamily inverse_sqrt() {
    SequenceFamily f;
    f.kind_ = Kind::inverse_sqrt;
    f.n_ = 2;
    f.tail_ = TailClass::divergent;
    return f;
  }

  // theta_k = r^k, 0 < r < 1
  static SequenceFamily geometric(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0))
      throw std::invalid_argument("geometric: ratio must be in (0,1)");
    SequenceFamily f;
    f.kind_ = Kind::geometric;
    f.n_ = 2;
    f.ratio_ = ratio;
    f.tail_ = TailClass::summable;
    return f;
  }

  static SequenceFamily constant(VectorXcd h) {
    SequenceFamily f;
    f.kind_ = Kind::constant;
    f.n_ = static_cast<int>(h.size());
    if (std::abs(h.norm() - 1.0) > kDefaultTol)
      throw std::invalid_argument("constant: h must be a unit vector");
    f.h_const_ = std::move(h);
    f.tail_ = TailClass::zero;
    return f;
  }

  // Finite list; indices past the end repeat the last entry.
  static SequenceFamily explicit_list(std::vector<VectorXcd> hs,
                                      TailClass tail = TailClass::undeclared) {
    if (hs.empty()) throw std::invalid_argument("explicit_list: empty");
    SequenceFamily f;
    f.kind_ = Kind::explicit_list;
    f.n_ = static_cast<int>(hs.front().size());
    for (const auto& h : hs) {
      if (h.size() != f.n_)
        throw std::invalid_argument("explicit_list: mixed dimensions");
      if (std::abs(h.norm() - 1.0) > kDefaultTol)
        throw std::invalid_argument("explicit_list: entries must be unit vectors");
    }
    f.list_ = std::move(hs);
    f.tail_ = tail;
    return f;
  }

  Kind kind() const { return kind_; }
  int dim() const { return n_; }
  double ratio() const { return ratio_; }
  TailClass tail_class() const { return tail_; }

  // theta_k of the angle ladder (theta-based families only), k >= 1.
  double theta(std::int64_t k) const {
    switch (kind_) {
      case Kind::theta_harmonic: {
        // block q covers indices q(q-1)/2 < k <= q(q+1)/2
        const auto q = static_cast<std::int64_t>(
            std::floor((1.0 + std::sqrt(8.0 * static_cast<double>(k) - 7.0)) / 2.0));
        std::int64_t qq = q;
        while (qq * (qq + 1) / 2 < k) ++qq;
        while (qq > 1 && qq * (qq - 1) / 2 >= k) --qq;
        return 1.0 / static_cast<double>(qq);
      }
      case Kind::inverse_sqrt:
        return 1.0 / std::sqrt(static_cast<double>(k));
      case Kind::geometric:
        return std::pow(ratio_, static_cast<double>(k));
      default:
        throw std::invalid_argument("theta: not an angle-ladder family");
    }
  }

  bool has_theta() const {
    return kind_ == Kind::theta_harmonic || kind_ == Kind::inverse_sqrt ||
           kind_ == Kind::geometric;
  }

  // h_k, k >= 1; unit norm.
  VectorXcd h(std::int64_t k) const {
    switch (kind_) {
      case Kind::constant:
        return h_const_;
      case Kind::explicit_list:
        return list_[static_cast<std::size_t>(
            std::min<std::int64_t>(k, static_cast<std::int64_t>(list_.size())) - 1)];
      default: {
        const double t = theta(k);
        VectorXcd v(2);
        v << std::cos(t), std::sin(t);
        return v;
      }
    }
  }

  // Norm limit of h_k, when declared.
  std::optional<VectorXcd> limit() const {
    switch (kind_) {
      case Kind::constant:
        return h_const_;
      case Kind::explicit_list:
        return tail_ == TailClass::undeclared
                   ? std::nullopt
                   : std::optional<VectorXcd>(list_.back());
      default: {
        VectorXcd v(2);
        v << 1.0, 0.0;
        return v;
      }
    }
  }

  std::string name() const {
    switch (kind_) {
      case Kind::theta_harmonic: return "theta_harmonic";
      case Kind::inverse_sqrt: return "inverse_sqrt";
      case Kind::geometric: return "geometric";
      case Kind::constant: return "constant";
      case Kind::explicit_list: return "explicit_list";
    }
    return "?";
  }

 private:
  Kind kind_ = Kind::constant;
  int n_ = 2;
  double ratio_ = 0.5;
  TailClass tail_ = TailClass::undeclared;
  VectorXcd h_const_;
  std::vector<VectorXcd> list_;
};

}  // namespace shiftlab::states
