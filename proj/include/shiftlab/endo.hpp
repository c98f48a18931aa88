#pragma once

// The endomorphism alpha(A) = sum_i S_i A S_i^* on truncated matrix algebras:
// powers, relative commutant (Powers index), clustering dynamics, Cesaro
// means and the finite-window two-sided extension.

#include <random>
#include <vector>

#include "shiftlab/cuntz.hpp"

namespace shiftlab::endo {

using cuntz::IsometryFamily;
using lattice::CylinderVector;
using lattice::MeasureSpec;

// ---------------------------------------------------------------------------
// MatrixObservable: a level-tagged element of M_{n^m} in the level-m point
// basis (measure-absorbed), i.e. the cylinder observable A (x) 1 (x) 1 ...
// ---------------------------------------------------------------------------

struct MatrixObservable {
  int level;
  int base;
  MatrixXcd mat;

  MatrixObservable(int m, int n, MatrixXcd a) : level(m), base(n), mat(std::move(a)) {
    if (mat.rows() != mat.cols() || mat.rows() != ipow(base, level))
      throw level_error("MatrixObservable: shape != n^m x n^m");
  }

  static MatrixObservable identity(int m, int n) {
    const std::int64_t d = ipow(n, m);
    return MatrixObservable(m, n, MatrixXcd::Identity(d, d));
  }

  // Matrix unit E_{PQ} for point words P, Q of equal length.
  static MatrixObservable matrix_unit(const Word& p, const Word& q) {
    if (p.base != q.base || p.length() != q.length())
      throw std::invalid_argument("matrix_unit: mismatched words");
    const std::int64_t d = ipow(p.base, p.length());
    MatrixXcd m = MatrixXcd::Zero(d, d);
    m(p.index(), q.index()) = 1.0;
    return MatrixObservable(p.length(), p.base, std::move(m));
  }

  bool is_hermitian(double tol = kDefaultTol) const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }
};

// A (x) I on a deeper level (the same operator as a cylinder observable).
inline MatrixObservable embed_observable(const MatrixObservable& a, int target) {
  if (target < a.level) throw level_error("embed_observable: target below level");
  const std::int64_t rest = ipow(a.base, target - a.level);
  const std::int64_t d = a.mat.rows();
  MatrixXcd out = MatrixXcd::Zero(d * rest, d * rest);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      if (a.mat(i, j) != cplx(0, 0))
        out.block(i * rest, j * rest, rest, rest) =
            a.mat(i, j) * MatrixXcd::Identity(rest, rest);
  return MatrixObservable(target, a.base, std::move(out));
}

// (A (x) I) x without materializing the embedded matrix; x lives at level
// v >= a.level. Column-major view: column index = leading digits (A side).
inline VectorXcd observable_apply(const MatrixObservable& a, const VectorXcd& x) {
  const std::int64_t d = a.mat.rows();
  const std::int64_t rest = x.size() / d;
  Eigen::Map<const MatrixXcd> xm(x.data(), rest, d);
  MatrixXcd ym = xm * a.mat.transpose();
  return Eigen::Map<VectorXcd>(ym.data(), x.size());
}

// ---------------------------------------------------------------------------
// alpha and the canonical shift
// ---------------------------------------------------------------------------

inline MatrixObservable alpha_apply(const IsometryFamily& fam,
                                    const MatrixObservable& a,
                                    const LevelBudget& budget = {}) {
  if (a.base != fam.base()) throw std::invalid_argument("alpha_apply: base mismatch");
  if (a.level < fam.multiplier_depth())
    throw level_error("alpha_apply: level below multiplier depth");
  const std::int64_t d = a.mat.rows();
  budget.check_dense(d * fam.base(), "alpha_apply");
  MatrixXcd out = MatrixXcd::Zero(d * fam.base(), d * fam.base());
  for (int i = 0; i < fam.base(); ++i) {
    const MatrixXcd si = cuntz::isometry_matrix(fam, i, a.level, budget);
    out += si * a.mat * si.adjoint();
  }
  return MatrixObservable(a.level + 1, a.base, std::move(out));
}

// 1_n (x) A: the one-sided shift on the matrix algebra.
inline MatrixObservable canonical_shift(const MatrixObservable& a) {
  const std::int64_t d = a.mat.rows();
  MatrixXcd out = MatrixXcd::Zero(d * a.base, d * a.base);
  for (int i = 0; i < a.base; ++i) out.block(i * d, i * d, d, d) = a.mat;
  return MatrixObservable(a.level + 1, a.base, std::move(out));
}

// omega_0(A) = <1, A 1> at A's own level.
inline cplx omega0(const MatrixObservable& a, const MeasureSpec& mu) {
  const VectorXcd one = CylinderVector::one(mu, a.level).amplitudes();
  return one.dot(a.mat * one);
}

// ---------------------------------------------------------------------------
// Relative commutant dimension (Powers index witness).
//
// The solution space of [X, alpha(A)] = 0, X in M_{n^m}, over the image of
// M_{n^{m-1}}. The cyclic shift C and a distinct-entry diagonal D generate
// M_{n^{m-1}} as a unital algebra, and alpha is an exact *-homomorphism at
// truncation, so commuting with {alpha(C), alpha(D)} is commuting with the
// whole image algebra; the stacked commutation system is solved by SVD
// nullity (singular values below 1e-9 count as zero). The tests validate
// this against the full matrix-unit spanning set.
// ---------------------------------------------------------------------------

inline int relative_commutant_dim(const IsometryFamily& fam, int m,
                                  const LevelBudget& budget = {},
                                  double sv_cutoff = 1e-9) {
  if (m < 1) throw level_error("relative_commutant_dim: m >= 1 required");
  const int n = fam.base();
  const std::int64_t dm = ipow(n, m);
  const std::int64_t d = dm / n;  // n^{m-1}
  budget.check_dense(dm * dm, "relative_commutant_dim");

  std::vector<MatrixXcd> gens;
  if (d == 1) {
    gens.push_back(MatrixXcd::Identity(1, 1));
  } else {
    MatrixXcd c = MatrixXcd::Zero(d, d);
    for (std::int64_t j = 0; j < d; ++j) c((j + 1) % d, j) = 1.0;
    MatrixXcd diag = MatrixXcd::Zero(d, d);
    for (std::int64_t j = 0; j < d; ++j)
      diag(j, j) = static_cast<double>(j) / static_cast<double>(d - 1);
    gens.push_back(std::move(c));
    gens.push_back(std::move(diag));
  }

  MatrixXcd stacked(static_cast<std::int64_t>(gens.size()) * dm * dm, dm * dm);
  std::int64_t row = 0;
  for (const auto& g : gens) {
    const MatrixXcd b = alpha_apply(fam, MatrixObservable(m - 1, n, g), budget).mat;
    // vec(XB - BX) = (B^T (x) I - I (x) B) vec(X), column-major vec
    MatrixXcd k = MatrixXcd::Zero(dm * dm, dm * dm);
    const MatrixXcd bt = b.transpose();
    for (std::int64_t i = 0; i < dm; ++i)
      for (std::int64_t j = 0; j < dm; ++j)
        if (bt(i, j) != cplx(0, 0))
          for (std::int64_t r = 0; r < dm; ++r) k(i * dm + r, j * dm + r) += bt(i, j);
    for (std::int64_t c2 = 0; c2 < dm; ++c2)
      k.block(c2 * dm, c2 * dm, dm, dm) -= b;
    stacked.middleRows(row, dm * dm) = k;
    row += dm * dm;
  }
  const auto sv = stacked.bdcSvd().singularValues();
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= sv_cutoff) ++nullity;
  nullity += static_cast<int>(dm * dm - sv.size());
  return nullity;
}

// ---------------------------------------------------------------------------
// Clustering curve c_k = <xi, alpha^k(A) xi>.
//
// Evaluated through the adjoint Kraus recursion: c_k = sum_{|I|=k}
// <T_I^* xi, (A (x) 1) T_I^* xi>, which is exact by adjointness at
// truncation. Because every T_i^* maps a cylinder-with-product-tail state to
// states of the same shape, the branch sum collapses to a small window
// density matrix plus per-site tail vectors; levels far beyond the dense
// budget are never materialized. Cross-checked against iterated alpha_apply
// in the tests.
// ---------------------------------------------------------------------------

namespace detail {

struct TailState {
  MatrixXcd window;                // density matrix over current sites [0, w)
  int w = 0;                       // window site count
  std::vector<VectorXcd> tails;    // site vectors at current sites w, w+1, ...
  int n = 2;

  void pull_tail_site() {
    const VectorXcd t = tails.front();
    tails.erase(tails.begin());
    const std::int64_t d = window.rows();
    MatrixXcd next(d * n, d * n);
    for (std::int64_t i = 0; i < d; ++i)
      for (std::int64_t j = 0; j < d; ++j)
        next.block(i * n, j * n, n, n) = window(i, j) * (t * t.adjoint());
    // window (x) |t><t| : site order puts the pulled site last
    window = std::move(next);
    ++w;
  }
};

inline MatrixXcd mode_matrix_apply(const MatrixXcd& rho, const MatrixXcd& u, int p,
                                   int w, int n) {
  // conjugates site p of a w-site density matrix by u
  MatrixXcd out = rho;
  VectorXcd col(out.rows());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    col = out.col(c);
    lattice::detail::mode_apply(col, u, p, w, n);
    out.col(c) = col;
  }
  MatrixXcd outH = out.adjoint();
  for (Eigen::Index c = 0; c < outH.cols(); ++c) {
    col = outH.col(c);
    lattice::detail::mode_apply(col, u, p, w, n);
    outH.col(c) = col;
  }
  return outH.adjoint();
}

}  // namespace detail

inline std::vector<cplx> clustering_curve(const IsometryFamily& fam,
                                          const MatrixObservable& a,
                                          const CylinderVector& xi, int horizon,
                                          const LevelBudget& budget = {}) {
  if (a.base != fam.base()) throw std::invalid_argument("clustering_curve: base mismatch");
  if (!(xi.measure() == fam.measure()))
    throw measure_error("clustering_curve: xi not absorbed against family measure");
  const int n = fam.base();
  const int ell = a.level;
  budget.check_vector(ipow(n, ell + horizon), "clustering_curve");

  const bool gp = fam.variant() == IsometryFamily::Variant::gauge_perturbed;
  const bool nn = fam.variant() == IsometryFamily::Variant::nearest_neighbor;
  const MatrixXcd f = lattice::char_to_point(n);

  // base tail vector: one absorbed site of the constant function
  VectorXcd base_tail(n);
  for (int i = 0; i < n; ++i) base_tail[i] = fam.measure().sqrt_weights()[i];

  detail::TailState st;
  st.n = n;
  st.w = xi.level();
  st.window = xi.amplitudes() * xi.amplitudes().adjoint();
  const int tail_count = ell + horizon + 4;
  for (int j = 0; j < tail_count; ++j) st.tails.push_back(base_tail);

  auto reduce_to = [&](int sites) {
    // density matrix over current sites [0, sites)
    MatrixXcd rho = st.window;
    int w = st.w;
    std::size_t t = 0;
    while (w < sites) {
      const VectorXcd& tv = st.tails[t++];
      const std::int64_t d = rho.rows();
      MatrixXcd next(d * n, d * n);
      for (std::int64_t i = 0; i < d; ++i)
        for (std::int64_t j = 0; j < d; ++j)
          next.block(i * n, j * n, n, n) = rho(i, j) * (tv * tv.adjoint());
      rho = std::move(next);
      ++w;
    }
    while (w > sites) {
      const std::int64_t d = rho.rows() / n;
      MatrixXcd red = MatrixXcd::Zero(d, d);
      for (std::int64_t i = 0; i < d; ++i)
        for (std::int64_t j = 0; j < d; ++j) {
          cplx s = 0.0;
          for (int q = 0; q < n; ++q) s += rho(i * n + q, j * n + q);
          red(i, j) = s;
        }
      rho = std::move(red);
      --w;
    }
    return rho;
  };

  std::vector<cplx> curve;
  curve.reserve(static_cast<std::size_t>(horizon) + 1);
  curve.push_back((a.mat * reduce_to(ell)).trace());

  for (int k = 1; k <= horizon; ++k) {
    // one adjoint Kraus step: rho <- sum_i K_i rho K_i^H
    const int need = nn ? 2 : 1;
    while (st.w < need) st.pull_tail_site();

    const std::int64_t d = st.window.rows() / n;
    MatrixXcd next = MatrixXcd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      MatrixXcd blk = st.window.block(i * d, i * d, d, d);
      if (nn) {
        MatrixXcd di = MatrixXcd::Zero(n, n);
        for (int x = 0; x < n; ++x) di(x, x) = std::conj(lattice::char_value(i, x, n));
        blk = detail::mode_matrix_apply(blk, di, 0, st.w - 1, n);
      }
      next += blk;
    }
    st.window = std::move(next);
    --st.w;

    if (gp) {
      const auto& useq = fam.unitary_sequence();
      for (int p = 0; p < st.w; ++p) {
        const MatrixXcd up = (f * useq.at(p) * f.adjoint()).adjoint();
        st.window = detail::mode_matrix_apply(st.window, up, p, st.w, n);
      }
      for (std::size_t j = 0; j < st.tails.size(); ++j) {
        const std::int64_t p = st.w + static_cast<std::int64_t>(j);
        st.tails[j] = (f * useq.at(p) * f.adjoint()).adjoint() * st.tails[j];
      }
    }
    curve.push_back((a.mat * reduce_to(ell)).trace());
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Cesaro means A_N = (1/N) sum_{r<N} alpha^r(A) and the invariance defect.
//
// alpha(A_N) - A_N telescopes to (alpha^N(A) - A)/N exactly, so the defect
// is computed matrix-free by Lanczos on x -> alpha^N(A)x - (A (x) I)x and
// never needs the level-(l+N) dense space.
// ---------------------------------------------------------------------------

namespace detail {

// Leaner Kraus recursion for the matrix-free defect: per-level point-basis
// gauge factors are cached once, and branches work on raw amplitude vectors.
// Semantics identical to apply_s / apply_s_star (validated in the tests).
struct KrausContext {
  const IsometryFamily& fam;
  int n;
  std::vector<MatrixXcd> gauge;    // point basis, per coordinate
  std::vector<MatrixXcd> gauge_h;  // adjoints

  KrausContext(const IsometryFamily& f, int max_level) : fam(f), n(f.base()) {
    if (fam.variant() == IsometryFamily::Variant::gauge_perturbed) {
      const MatrixXcd fp = lattice::char_to_point(n);
      const auto& useq = fam.unitary_sequence();
      for (int p = 0; p < max_level; ++p) {
        gauge.push_back(fp * useq.at(p) * fp.adjoint());
        gauge_h.push_back(gauge.back().adjoint());
      }
    }
  }

  // T_i^* : level v -> v-1
  VectorXcd descend(const VectorXcd& x, int v, int i) const {
    const std::int64_t block = x.size() / n;
    VectorXcd out = x.segment(i * block, block);
    switch (fam.variant()) {
      case IsometryFamily::Variant::weighted_haar:
        out *= std::conj(fam.phase(i));
        break;
      case IsometryFamily::Variant::gauge_perturbed: {
        const int active =
            fam.unitary_sequence().horizon() >= 0
                ? std::min(v - 1, fam.unitary_sequence().horizon())
                : v - 1;
        for (int p = 0; p < active; ++p)
          lattice::detail::mode_apply(out, gauge_h[static_cast<std::size_t>(p)], p,
                                      v - 1, n);
        break;
      }
      case IsometryFamily::Variant::nearest_neighbor:
        cuntz::detail::first_digit_character(out, i, n, /*conjugate=*/true);
        break;
    }
    return out;
  }

  // T_i : level v -> v+1
  VectorXcd ascend(const VectorXcd& x, int v, int i) const {
    VectorXcd mid = x;
    switch (fam.variant()) {
      case IsometryFamily::Variant::weighted_haar:
        mid *= fam.phase(i);
        break;
      case IsometryFamily::Variant::gauge_perturbed: {
        const int active = fam.unitary_sequence().horizon() >= 0
                               ? std::min(v, fam.unitary_sequence().horizon())
                               : v;
        for (int p = 0; p < active; ++p)
          lattice::detail::mode_apply(mid, gauge[static_cast<std::size_t>(p)], p, v, n);
        break;
      }
      case IsometryFamily::Variant::nearest_neighbor:
        cuntz::detail::first_digit_character(mid, i, n, /*conjugate=*/false);
        break;
    }
    VectorXcd out = VectorXcd::Zero(x.size() * n);
    out.segment(i * x.size(), x.size()) = mid;
    return out;
  }
};

inline VectorXcd alpha_power_apply(const KrausContext& ctx,
                                   const MatrixObservable& a, int power,
                                   const VectorXcd& x, int level) {
  if (power == 0) return observable_apply(a, x);
  VectorXcd out = VectorXcd::Zero(x.size());
  for (int i = 0; i < ctx.n; ++i) {
    const VectorXcd down = ctx.descend(x, level, i);
    const VectorXcd mid = alpha_power_apply(ctx, a, power - 1, down, level - 1);
    out += ctx.ascend(mid, level - 1, i);
  }
  return out;
}

// Extreme |eigenvalue| of the Hermitian map x -> op(x) by Lanczos with full
// reorthogonalization; stops once the extreme Ritz value stalls.
inline double lanczos_extreme(const std::function<VectorXcd(const VectorXcd&)>& op,
                              std::int64_t dim, int iters = 90) {
  std::mt19937_64 gen(0x5eed5eedULL);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd v(dim);
  for (std::int64_t i = 0; i < dim; ++i) v[i] = cplx(g(gen), g(gen));
  v.normalize();
  std::vector<VectorXcd> basis;
  std::vector<double> alpha, beta;
  VectorXcd w;
  double prev_extreme = 0.0;
  int stable = 0;
  auto extreme_of_tridiag = [&]() {
    const int k = static_cast<int>(alpha.size());
    MatrixXd tri = MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      tri(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) {
        tri(i, i + 1) = beta[static_cast<std::size_t>(i)];
        tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(tri, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  };
  for (int it = 0; it < iters; ++it) {
    basis.push_back(v);
    w = op(v);
    const double al = std::real(v.dot(w));
    alpha.push_back(al);
    w -= al * v;
    if (it > 0) w -= beta.back() * basis[basis.size() - 2];
    for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
    const double be = w.norm();
    if (be < 1e-13) break;
    const double ext = extreme_of_tridiag();
    if (it >= 6) {
      if (std::abs(ext - prev_extreme) <= 1e-11 * std::max(1.0, std::abs(ext)))
        ++stable;
      else
        stable = 0;
      if (stable >= 2) return ext;
    }
    prev_extreme = ext;
    beta.push_back(be);
    v = w / be;
  }
  return extreme_of_tridiag();
}

}  // namespace detail

// ||alpha(A_N) - A_N|| via the telescoped identity.
inline double cesaro_defect(const IsometryFamily& fam, const MatrixObservable& a,
                            int count, const LevelBudget& budget = {}) {
  if (count < 1) throw std::invalid_argument("cesaro_defect: N >= 1");
  const int level = a.level + count;
  const std::int64_t dim = ipow(a.base, level);
  budget.check_vector(dim, "cesaro_defect");

  const detail::KrausContext ctx(fam, level);
  const bool herm = a.is_hermitian(1e-13);
  auto x_op = [&](const VectorXcd& x) {
    return (detail::alpha_power_apply(ctx, a, count, x, level) - observable_apply(a, x))
               .eval();
  };
  if (herm) return detail::lanczos_extreme(x_op, dim) / count;

  MatrixObservable ah(a.level, a.base, a.mat.adjoint());
  auto xh_op = [&](const VectorXcd& x) {
    return (detail::alpha_power_apply(ctx, ah, count, x, level) -
            observable_apply(ah, x))
        .eval();
  };
  auto gram = [&](const VectorXcd& x) { return xh_op(x_op(x)).eval(); };
  return std::sqrt(std::max(0.0, detail::lanczos_extreme(gram, dim))) / count;
}

struct CesaroMean {
  MatrixObservable mean;
  double defect;
};

inline CesaroMean cesaro_mean(const IsometryFamily& fam, const MatrixObservable& a,
                              int count, const LevelBudget& budget = {}) {
  if (count < 1) throw std::invalid_argument("cesaro_mean: N >= 1");
  const int top = a.level + count - 1;
  budget.check_dense(ipow(a.base, top), "cesaro_mean");
  MatrixObservable power = a;
  MatrixXcd acc = embed_observable(a, top).mat;
  for (int r = 1; r < count; ++r) {
    power = alpha_apply(fam, power, budget);
    acc += embed_observable(power, top).mat;
  }
  acc /= static_cast<double>(count);
  return CesaroMean{MatrixObservable(top, a.base, std::move(acc)),
                    cesaro_defect(fam, a, count, budget)};
}

// ---------------------------------------------------------------------------
// Two-sided extension on a finite window: the extended automorphism is the
// right rotation of 2W tensor slots; away from wraparound it restricts to
// the canonical shift.
// ---------------------------------------------------------------------------

struct TwoSidedReport {
  bool ok;
  double max_defect;
};

inline TwoSidedReport two_sided_extension_check(int window,
                                                const MatrixObservable& a,
                                                const LevelBudget& budget = {}) {
  if (window < a.level + 1)
    throw level_error("two_sided_extension_check: wraparound region touched");
  const int n = a.base;
  const int slots = 2 * window;
  const std::int64_t dim = ipow(n, slots);
  budget.check_dense(dim, "two_sided_extension_check");

  // embed_right(B@k): B on slots [0,k) of the window -W..W-1, i.e. positions
  // W..W+k-1 in the linearization.
  auto embed_right = [&](const MatrixObservable& b) {
    const std::int64_t left = ipow(n, window);
    const std::int64_t mid = b.mat.rows();
    const std::int64_t right = ipow(n, window - b.level);
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (std::int64_t l = 0; l < left; ++l)
      for (std::int64_t i = 0; i < mid; ++i)
        for (std::int64_t j = 0; j < mid; ++j)
          if (b.mat(i, j) != cplx(0, 0))
            out.block((l * mid + i) * right, (l * mid + j) * right, right, right) =
                b.mat(i, j) * MatrixXcd::Identity(right, right);
    return out;
  };

  // beta(X) = P X P^H with P the cyclic right rotation of slot contents.
  std::vector<std::int64_t> rot(static_cast<std::size_t>(dim));
  for (std::int64_t ix = 0; ix < dim; ++ix) {
    const Word x = Word::from_index(ix, slots, n);
    std::vector<int> y(static_cast<std::size_t>(slots));
    for (int s = 0; s < slots; ++s)
      y[static_cast<std::size_t>((s + 1) % slots)] = x.digits[static_cast<std::size_t>(s)];
    rot[static_cast<std::size_t>(ix)] = Word(y, n).index();
  }

  const MatrixXcd lhs_in = embed_right(a);
  MatrixXcd lhs(dim, dim);
  for (std::int64_t i = 0; i < dim; ++i)
    for (std::int64_t j = 0; j < dim; ++j)
      lhs(rot[static_cast<std::size_t>(i)], rot[static_cast<std::size_t>(j)]) =
          lhs_in(i, j);

  const MatrixXcd rhs = embed_right(canonical_shift(a));
  const double defect = (lhs - rhs).cwiseAbs().maxCoeff();
  return TwoSidedReport{defect <= 1e-12, defect};
}

}  // namespace shiftlab::endo
