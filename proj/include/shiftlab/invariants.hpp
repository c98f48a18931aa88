#pragma once

// Spectral certificates for the existence and nonexistence mechanisms:
// joint-eigenvector residuals, the Fourier recursion identity of the
// character-coupled composite, the n^{-m} matrix-element bound, and the Wold
// decomposition probes.

#include "shiftlab/endo.hpp"

namespace shiftlab::invariants {

using cuntz::IsometryFamily;
using lattice::CylinderVector;
using lattice::MeasureSpec;

// ---------------------------------------------------------------------------
// Joint-eigenvector residual: r_m = min over unit xi at level m of
// sum_j || embed(S_j^* xi, m) - lambda_j xi ||^2, the smallest eigenvalue of
// the assembled PSD form. The adjoint images are re-embedded upward because
// the eigenvalue equation compares functions on the full group.
// ---------------------------------------------------------------------------

struct EigenResidualEntry {
  double residual;
  VectorXcd minimizer;
};

namespace detail {

// matrix of apply_s_star at input level m (output level depends on variant)
inline MatrixXcd star_matrix(const IsometryFamily& fam, int j, int m) {
  const std::int64_t d = ipow(fam.base(), m);
  const CylinderVector probe = cuntz::apply_s_star(
      fam, j, CylinderVector(m, fam.measure(), VectorXcd::Zero(d)));
  MatrixXcd out(probe.dim(), d);
  for (std::int64_t c = 0; c < d; ++c) {
    VectorXcd e = VectorXcd::Zero(d);
    e[c] = 1.0;
    out.col(c) =
        cuntz::apply_s_star(fam, j, CylinderVector(m, fam.measure(), std::move(e)))
            .amplitudes();
  }
  return out;
}

// matrix of embed from level r to level m
inline MatrixXcd embed_matrix(const MeasureSpec& mu, int r, int m) {
  const std::int64_t d = ipow(mu.base(), r);
  MatrixXcd out(ipow(mu.base(), m), d);
  for (std::int64_t c = 0; c < d; ++c) {
    VectorXcd e = VectorXcd::Zero(d);
    e[c] = 1.0;
    out.col(c) = lattice::embed(CylinderVector(r, mu, std::move(e)), m).amplitudes();
  }
  return out;
}

}  // namespace detail

inline EigenResidualEntry eigen_residual(const IsometryFamily& fam,
                                         const VectorXcd& lambda, int m,
                                         const LevelBudget& budget = {}) {
  if (m < 1) throw level_error("eigen_residual: m >= 1 required");
  if (static_cast<int>(lambda.size()) != fam.base())
    throw std::invalid_argument("eigen_residual: lambda size != n");
  if (std::abs(lambda.squaredNorm() - 1.0) > 1e-10)
    throw std::invalid_argument("eigen_residual: sum |lambda_j|^2 must be 1");
  const std::int64_t d = ipow(fam.base(), m);
  budget.check_dense(d, "eigen_residual");
  MatrixXcd q = MatrixXcd::Zero(d, d);
  for (int j = 0; j < fam.base(); ++j) {
    const MatrixXcd tj = detail::star_matrix(fam, j, m);
    int r = 0;
    while (ipow(fam.base(), r) < tj.rows()) ++r;
    MatrixXcd b = detail::embed_matrix(fam.measure(), r, m) * tj -
                  lambda[j] * MatrixXcd::Identity(d, d);
    q += b.adjoint() * b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(q);
  EigenResidualEntry out;
  out.residual = std::max(0.0, es.eigenvalues()(0));
  out.minimizer = es.eigenvectors().col(0);
  return out;
}

// ---------------------------------------------------------------------------
// Invariant-vector search: alternate lambda_j = <xi, embed(S_j^* xi)> with
// the residual minimizer until the residual stalls.
// ---------------------------------------------------------------------------

struct SearchResult {
  bool found = false;
  VectorXcd lambda;
  VectorXcd xi;
  double residual = 1e300;
  int iterations = 0;
};

inline SearchResult invariant_vector_search(const IsometryFamily& fam, int m,
                                            int max_iterations = 100,
                                            const LevelBudget& budget = {}) {
  if (m < 1) throw level_error("invariant_vector_search: m >= 1 required");
  const int n = fam.base();
  SearchResult res;
  CylinderVector xi = CylinderVector::one(fam.measure(), m);
  VectorXcd lam(n);
  for (int it = 1; it <= max_iterations; ++it) {
    for (int j = 0; j < n; ++j)
      lam[j] = lattice::inner(xi, cuntz::apply_s_star(fam, j, xi));
    const double norm = lam.norm();
    if (norm < 1e-14)
      lam = VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    else
      lam /= norm;
    const auto entry = eigen_residual(fam, lam, m, budget);
    const double prev = res.residual;
    if (entry.residual < res.residual) {
      res.residual = entry.residual;
      res.lambda = lam;
      res.xi = entry.minimizer;
    }
    xi = CylinderVector(m, fam.measure(), entry.minimizer);
    res.iterations = it;
    if (std::abs(prev - res.residual) < 1e-15 && it > 2) break;
  }
  res.found = res.residual < 1e-10;
  return res;
}

// Exhaustive lambda grid on the unit sphere modulo global phase (n = 2 only);
// a completeness heuristic for the search, not a proof procedure.
inline double grid_lambda_minimum(const IsometryFamily& fam, int m,
                                  double resolution = 0.05,
                                  const LevelBudget& budget = {}) {
  if (fam.base() != 2)
    throw std::invalid_argument("grid_lambda_minimum: implemented for n = 2");
  double best = 1e300;
  const double pi = std::numbers::pi;
  for (double a = 0.0; a <= pi / 2 + 1e-12; a += resolution) {
    const double c = std::cos(a), s = std::sin(a);
    const int phases = s > 1e-9 ? static_cast<int>(2 * pi / resolution) + 1 : 1;
    for (int pi_idx = 0; pi_idx < phases; ++pi_idx) {
      const double phi = pi_idx * resolution;
      VectorXcd lam(2);
      lam << c, s * std::exp(cplx(0, phi));
      best = std::min(best, eigen_residual(fam, lam, m, budget).residual);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// The character-coupled composite T = U S: S is composition with the
// one-sided coordinate shift, U multiplies by the first-two-coordinate
// character <x_0, x_1>.
// ---------------------------------------------------------------------------

struct LevelMap {
  int base;
  int raise;      // level increase per application
  int min_level;  // smallest admissible input level
  std::function<CylinderVector(const CylinderVector&)> apply;
  std::string name;
};

// xi -> xi o sigma, the isometric composition (fixes the constant function).
inline LevelMap shift_compose_map(int n) {
  const MeasureSpec mu = MeasureSpec::haar(n);
  return LevelMap{
      n, 1, 0,
      [n, mu](const CylinderVector& v) {
        VectorXcd out(v.dim() * n);
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        for (int d = 0; d < n; ++d) out.segment(d * v.dim(), v.dim()) = s * v.amplitudes();
        return CylinderVector(v.level() + 1, mu, std::move(out));
      },
      "shift_compose"};
}

// multiplication by <x_0, x_1> (inputs below level 2 are embedded first)
inline CylinderVector character_multiplier_apply(const CylinderVector& v) {
  const int n = v.base();
  CylinderVector w = v.level() < 2 ? lattice::embed(v, 2) : v;
  VectorXcd a = w.amplitudes();
  const std::int64_t block = a.size() / (n * n);
  for (int x0 = 0; x0 < n; ++x0)
    for (int x1 = 0; x1 < n; ++x1)
      a.segment((static_cast<std::int64_t>(x0) * n + x1) * block, block) *=
          lattice::char_value(x0, x1, n);
  return CylinderVector(w.level(), w.measure(), std::move(a));
}

inline LevelMap us_map(int n) {
  const auto s = shift_compose_map(n);
  return LevelMap{n, 1, 1,
                  [s](const CylinderVector& v) {
                    return character_multiplier_apply(s.apply(v));
                  },
                  "us_composite"};
}

inline LevelMap unitary_level_map(MatrixXcd u, int level, int n) {
  const MeasureSpec mu = MeasureSpec::haar(n);
  return LevelMap{n, 0, level,
                  [u = std::move(u), mu](const CylinderVector& v) {
                    return CylinderVector(v.level(), mu, u * v.amplitudes());
                  },
                  "unitary"};
}

// ---------------------------------------------------------------------------
// Fourier recursion identity: the matrix of (US)^2 in the character bases
// has the closed form  C[lambda, mu] = n^{-1} conj(<l_0, l_1>)
// delta(mu = (l_2 - l_0, l_3, ..., l_{m+1})).
// ---------------------------------------------------------------------------

inline double fourier_recursion_check(int n, int m, const LevelBudget& budget = {}) {
  if (m < 1) throw level_error("fourier_recursion_check: m >= 1 required");
  const MeasureSpec mu = MeasureSpec::haar(n);
  budget.check_dense(ipow(n, m + 2), "fourier_recursion_check");
  const auto us = us_map(n);
  const std::int64_t cols = ipow(n, m), rows = ipow(n, m + 2);
  double defect = 0.0;
  for (std::int64_t c = 0; c < cols; ++c) {
    const Word muw = Word::from_index(c, m, n);
    const auto col = us.apply(us.apply(lattice::character_vector(muw, m, mu)));
    const VectorXcd coeff = lattice::fourier_forward(col);
    for (std::int64_t r = 0; r < rows; ++r) {
      const Word lam = Word::from_index(r, m + 2, n);
      std::vector<int> target(static_cast<std::size_t>(m));
      target[0] = ((lam.digits[2] - lam.digits[0]) % n + n) % n;
      for (int p = 1; p < m; ++p)
        target[static_cast<std::size_t>(p)] = lam.digits[static_cast<std::size_t>(p + 2)];
      const bool match = Word(target, n).index() == c;
      const cplx expect =
          match ? std::conj(lattice::char_value(lam.digits[0], lam.digits[1], n)) /
                      static_cast<double>(n)
                : cplx(0, 0);
      defect = std::max(defect, std::abs(coeff[r] - expect));
    }
  }
  return defect;
}

// ---------------------------------------------------------------------------
// Matrix-element decay of (US)^{2m}: per-depth maximal character coefficient,
// plus the values at an explicit probe set.
// ---------------------------------------------------------------------------

struct DecayTable {
  std::vector<double> max_coefficient;           // depth 0..M
  std::vector<std::vector<double>> probe_values;  // [depth][probe]
};

inline DecayTable matrix_element_decay(const CylinderVector& xi,
                                       const std::vector<Word>& probes, int depth,
                                       const LevelBudget& budget = {}) {
  const int n = xi.base();
  budget.check_vector(ipow(n, xi.level() + 2 * depth + 2), "matrix_element_decay");
  const auto us = us_map(n);
  DecayTable table;
  int start_level = std::max(xi.level(), 1);
  for (const auto& p : probes) start_level = std::max(start_level, p.length());
  CylinderVector cur = xi.level() < start_level ? lattice::embed(xi, start_level) : xi;
  for (int m = 0; m <= depth; ++m) {
    const VectorXcd coeff = lattice::fourier_forward(cur);
    table.max_coefficient.push_back(coeff.cwiseAbs().maxCoeff());
    std::vector<double> row;
    for (const auto& p : probes) {
      std::vector<int> digits = p.digits;
      digits.resize(static_cast<std::size_t>(cur.level()), 0);
      row.push_back(std::abs(coeff[Word(digits, n).index()]));
    }
    table.probe_values.push_back(std::move(row));
    if (m < depth) cur = us.apply(us.apply(cur));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Wold decomposition probes.
//
// Ranges of T^1, ..., T^K applied to the full level-m space are embedded
// into the deepest level and intersected there; the numerical rank of the
// intersection (eigenvalues of the summed range-complement projectors below
// the cutoff) is the unitary-part estimate at each depth. Kernel codimension
// of the adjoint is reported per level step.
// ---------------------------------------------------------------------------

struct WoldReport {
  std::vector<int> unitary_rank;           // depth 1..K
  std::vector<std::int64_t> kernel_codim;  // per application step
  double isometry_defect = 0.0;
  double cutoff = 1e-9;
};

inline WoldReport wold_decompose(const LevelMap& map, int depth, int m,
                                 const LevelBudget& budget = {}) {
  if (m < map.min_level) throw level_error("wold_decompose: level below map minimum");
  const int n = map.base;
  const MeasureSpec mu = MeasureSpec::haar(n);
  const int top = m + depth * map.raise;
  const std::int64_t dim_top = ipow(n, top);
  budget.check_dense(dim_top, "wold_decompose");

  WoldReport rep;
  const std::int64_t d0 = ipow(n, m);

  // images of the level-m basis under successive applications
  std::vector<MatrixXcd> images;
  {
    MatrixXcd cur(d0, d0);
    cur.setIdentity();
    int level = m;
    for (int j = 1; j <= depth; ++j) {
      MatrixXcd next(ipow(n, level + map.raise), d0);
      for (std::int64_t c = 0; c < d0; ++c)
        next.col(c) = map.apply(CylinderVector(level, mu, cur.col(c))).amplitudes();
      level += map.raise;
      cur = std::move(next);
      images.push_back(cur);
    }
  }

  // isometry check on the first step
  rep.isometry_defect =
      (images[0].adjoint() * images[0] - MatrixXcd::Identity(d0, d0)).norm();
  if (rep.isometry_defect > 1e-10)
    throw std::invalid_argument("wold_decompose: map is not isometric");

  // kernel codimension of the adjoint per single application step, with the
  // full level space as domain
  for (int j = 0; j < depth; ++j) {
    const int level_in = m + j * map.raise;
    const std::int64_t din = ipow(n, level_in);
    MatrixXcd step(ipow(n, level_in + map.raise), din);
    for (std::int64_t c = 0; c < din; ++c) {
      VectorXcd e = VectorXcd::Zero(din);
      e[c] = 1.0;
      step.col(c) = map.apply(CylinderVector(level_in, mu, std::move(e))).amplitudes();
    }
    const auto sv = step.bdcSvd().singularValues();
    std::int64_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rep.cutoff) ++rank;
    rep.kernel_codim.push_back(step.rows() - rank);
  }

  // intersection of embedded ranges at the deepest level
  MatrixXcd gram = MatrixXcd::Zero(dim_top, dim_top);
  for (int k = 1; k <= depth; ++k) {
    const MatrixXcd& img = images[static_cast<std::size_t>(k - 1)];
    const int level = m + k * map.raise;
    MatrixXcd q(dim_top, d0);
    for (std::int64_t c = 0; c < d0; ++c)
      q.col(c) =
          lattice::embed(CylinderVector(level, mu, img.col(c)), top).amplitudes();
    gram += MatrixXcd::Identity(dim_top, dim_top) - q * q.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    int rank = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) < rep.cutoff) ++rank;
    rep.unitary_rank.push_back(rank);
  }
  return rep;
}

}  // namespace shiftlab::invariants
