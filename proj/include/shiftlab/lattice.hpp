#pragma once

// Indexing, measure and Fourier infrastructure for the compact group
// Omega = prod Z_n and its dual Lambda = coprod Z_n, truncated to levels:
// the level-m space is the span of cylinder functions depending on the first
// m coordinates, stored in measure-absorbed point coordinates so that every
// adjoint below is a plain conjugate transpose.

#include <cmath>
#include <numbers>

#include "shiftlab/common.hpp"

namespace shiftlab::lattice {

// ---------------------------------------------------------------------------
// MeasureSpec: per-coordinate weights of the infinite product measure.
// ---------------------------------------------------------------------------

class MeasureSpec {
 public:
  MeasureSpec(int base, VectorXd weights)
      : base_(base), weights_(std::move(weights)) {
    if (base_ < 2) throw measure_error("MeasureSpec: base must be >= 2");
    if (weights_.size() != base_)
      throw measure_error("MeasureSpec: weight count != base");
    double sum = 0.0;
    for (int i = 0; i < base_; ++i) {
      if (weights_[i] < 0.0) throw measure_error("MeasureSpec: negative weight");
      sum += weights_[i];
    }
    if (std::abs(sum - 1.0) > kDefaultTol)
      throw measure_error("MeasureSpec: weights must sum to 1");
    sqrt_weights_ = weights_.cwiseSqrt();
  }

  static MeasureSpec haar(int base) {
    return MeasureSpec(base, VectorXd::Constant(base, 1.0 / base));
  }

  int base() const { return base_; }
  const VectorXd& weights() const { return weights_; }
  const VectorXd& sqrt_weights() const { return sqrt_weights_; }

  bool is_haar(double tol = kDefaultTol) const {
    return (weights_.array() - 1.0 / base_).abs().maxCoeff() <= tol;
  }

  bool operator==(const MeasureSpec& o) const {
    return base_ == o.base_ &&
           (weights_ - o.weights_).cwiseAbs().maxCoeff() <= kDefaultTol;
  }

 private:
  int base_;
  VectorXd weights_;
  VectorXd sqrt_weights_;
};

// ---------------------------------------------------------------------------
// CylinderVector: a level-m element of L^2, constant beyond coordinate m-1.
//
// amplitude(x) = f(x) * sqrt(mu(level-m cylinder at x)), so the squared
// norm is the plain sum of |amplitude|^2 and equals the L^2 norm of the
// represented function.
// ---------------------------------------------------------------------------

class CylinderVector {
 public:
  CylinderVector(int level, MeasureSpec measure, VectorXcd amplitudes)
      : level_(level), measure_(std::move(measure)), amp_(std::move(amplitudes)) {
    if (level_ < 0) throw level_error("CylinderVector: negative level");
    if (amp_.size() != ipow(measure_.base(), level_))
      throw level_error("CylinderVector: amplitude count != n^m");
  }

  // The constant function 1 (unit norm for any probability measure).
  static CylinderVector one(const MeasureSpec& mu, int level) {
    const std::int64_t dim = ipow(mu.base(), level);
    VectorXcd a(dim);
    for (std::int64_t ix = 0; ix < dim; ++ix) {
      double v = 1.0;
      std::int64_t t = ix;
      for (int p = 0; p < level; ++p) {
        v *= mu.sqrt_weights()[static_cast<int>(t % mu.base())];
        t /= mu.base();
      }
      a[ix] = v;
    }
    return CylinderVector(level, mu, std::move(a));
  }

  static CylinderVector point_mass(const MeasureSpec& mu, const Word& x) {
    VectorXcd a = VectorXcd::Zero(ipow(mu.base(), x.length()));
    a[x.index()] = 1.0;
    return CylinderVector(x.length(), mu, std::move(a));
  }

  int level() const { return level_; }
  int base() const { return measure_.base(); }
  const MeasureSpec& measure() const { return measure_; }
  const VectorXcd& amplitudes() const { return amp_; }
  VectorXcd& amplitudes() { return amp_; }
  std::int64_t dim() const { return amp_.size(); }

  double norm() const { return amp_.norm(); }

  // Function value at a point (any extension of the length-m word addresses
  // the same cylinder).
  cplx value_at(const Word& x) const {
    if (x.length() != level_) throw level_error("value_at: level mismatch");
    double w = 1.0;
    for (int d : x.digits) w *= measure_.sqrt_weights()[d];
    if (w == 0.0) return 0.0;
    return amp_[x.index()] / w;
  }

 private:
  int level_;
  MeasureSpec measure_;
  VectorXcd amp_;
};

// ---------------------------------------------------------------------------
// Characters (Haar measure only)
// ---------------------------------------------------------------------------

// <j,x> = exp(2 pi i j x / n), unit modulus.
inline cplx char_value(int j, int x, int n) {
  if (j < 0 || j >= n || x < 0 || x >= n)
    throw std::invalid_argument("char_value: residue out of range");
  const double a = 2.0 * std::numbers::pi * static_cast<double>(j) *
                   static_cast<double>(x) / static_cast<double>(n);
  return cplx(std::cos(a), std::sin(a));
}

// e_lambda(x) = prod_p <lambda_p, x_p> as a unit vector at level m.
// Orthonormal over all lambda supported in the first m coordinates.
inline CylinderVector character_vector(const Word& lambda, int m,
                                       const MeasureSpec& mu) {
  if (!mu.is_haar())
    throw measure_error("character_vector: characters need Haar measure");
  if (lambda.length() > m)
    throw level_error("character_vector: lambda longer than level");
  const int n = mu.base();
  const std::int64_t dim = ipow(n, m);
  const double absorb = std::pow(1.0 / n, m / 2.0);
  VectorXcd a(dim);
  for (std::int64_t ix = 0; ix < dim; ++ix) {
    Word x = Word::from_index(ix, m, n);
    cplx v = 1.0;
    for (int p = 0; p < lambda.length(); ++p)
      v *= char_value(lambda.digits[static_cast<std::size_t>(p)],
                      x.digits[static_cast<std::size_t>(p)], n);
    a[ix] = v * absorb;
  }
  return CylinderVector(m, mu, std::move(a));
}

// Unitary change of basis, characters -> absorbed point coordinates:
// column y holds the absorbed amplitudes of e_y on one coordinate factor.
inline MatrixXcd char_to_point(int n) {
  MatrixXcd f(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) f(x, y) = s * char_value(y, x, n);
  return f;
}

// ---------------------------------------------------------------------------
// Fourier transform on Z_n^m (Haar): coefficient at lambda is <e_lambda, v>.
// Computed coordinate by coordinate; Parseval holds to rounding.
// ---------------------------------------------------------------------------

namespace detail {

// Applies an n x n matrix to coordinate p of a vector on Z_n^m (big-endian).
inline void mode_apply(VectorXcd& a, const MatrixXcd& u, int p, int m, int n) {
  const std::int64_t outer = ipow(n, p);             // digits before p
  const std::int64_t inner = ipow(n, m - p - 1);     // digits after p
  VectorXcd tmp(n);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t off = o * n * inner + i;
      for (int d = 0; d < n; ++d) tmp[d] = a[off + d * inner];
      for (int d = 0; d < n; ++d) {
        cplx s = 0.0;
        for (int e = 0; e < n; ++e) s += u(d, e) * tmp[e];
        a[off + d * inner] = s;
      }
    }
  }
}

}  // namespace detail

// Returns the coefficient sequence indexed by Word linearization.
inline VectorXcd fourier_forward(const CylinderVector& v) {
  if (!v.measure().is_haar())
    throw measure_error("fourier_forward: Haar measure required");
  const int n = v.base();
  const MatrixXcd fh = char_to_point(n).adjoint();
  VectorXcd a = v.amplitudes();
  for (int p = 0; p < v.level(); ++p) detail::mode_apply(a, fh, p, v.level(), n);
  return a;
}

inline CylinderVector fourier_inverse(const VectorXcd& coeff, int m,
                                      const MeasureSpec& mu) {
  if (!mu.is_haar())
    throw measure_error("fourier_inverse: Haar measure required");
  if (coeff.size() != ipow(mu.base(), m))
    throw level_error("fourier_inverse: coefficient count != n^m");
  const int n = mu.base();
  const MatrixXcd f = char_to_point(n);
  VectorXcd a = coeff;
  for (int p = 0; p < m; ++p) detail::mode_apply(a, f, p, m, n);
  return CylinderVector(m, mu, std::move(a));
}

// ---------------------------------------------------------------------------
// Embedding into a deeper level (the represented function is unchanged).
// ---------------------------------------------------------------------------

inline CylinderVector embed(const CylinderVector& v, int target_level) {
  if (target_level < v.level())
    throw level_error("embed: target level below source level");
  if (target_level == v.level()) return v;
  const int n = v.base();
  const int extra = target_level - v.level();
  const std::int64_t tail_dim = ipow(n, extra);
  VectorXcd tail(tail_dim);
  for (std::int64_t t = 0; t < tail_dim; ++t) {
    double w = 1.0;
    std::int64_t ix = t;
    for (int p = 0; p < extra; ++p) {
      w *= v.measure().sqrt_weights()[static_cast<int>(ix % n)];
      ix /= n;
    }
    tail[t] = w;
  }
  VectorXcd out(v.dim() * tail_dim);
  for (std::int64_t i = 0; i < v.dim(); ++i)
    out.segment(i * tail_dim, tail_dim) = v.amplitudes()[i] * tail;
  return CylinderVector(target_level, v.measure(), std::move(out));
}

// L^2 inner product of two cylinder vectors; levels are aligned by embedding,
// which is the honest inner product of the represented functions.
inline cplx inner(const CylinderVector& u, const CylinderVector& v) {
  if (!(u.measure() == v.measure()))
    throw measure_error("inner: measures differ");
  const int m = std::max(u.level(), v.level());
  if (u.level() == v.level()) return u.amplitudes().dot(v.amplitudes());
  return embed(u, m).amplitudes().dot(embed(v, m).amplitudes());
}

}  // namespace shiftlab::lattice
