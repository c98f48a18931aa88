#pragma once

// Concrete Cuntz isometry families acting between truncation levels of
// L^2(Omega, mu), their adjoints, gauge transforms and transfer operators.
//
// Level bookkeeping: apply_s raises the level by one, apply_s_star lowers it
// by one (down to the variant's multiplier depth); operators never silently
// re-embed. In measure-absorbed coordinates all adjoints are conjugate
// transposes and the Cuntz relations are exact theorems at truncation.

#include <functional>
#include <memory>
#include <utility>

#include "shiftlab/lattice.hpp"
#include "shiftlab/sequences.hpp"

namespace shiftlab::cuntz {

using lattice::CylinderVector;
using lattice::MeasureSpec;

// ---------------------------------------------------------------------------
// UnitarySequence: p -> U_p, each an n x n unitary acting on one coordinate
// factor *in the character basis* {e_y} (a "diagonal" U_p is diagonal in
// characters, not in point masses). horizon h means U_p = I for p >= h;
// horizon < 0 declares an analytic family defined for every p.
// ---------------------------------------------------------------------------

enum class GaugeSummability { strong, weak };  // sum ||I-U_p|| resp. sum ||e_0-U_p e_0||^2

class UnitarySequence {
 public:
  UnitarySequence(std::function<MatrixXcd(std::int64_t)> gen, int base,
                  int horizon, GaugeSummability decl, std::string desc)
      : gen_(std::move(gen)),
        base_(base),
        horizon_(horizon),
        declared_(decl),
        desc_(std::move(desc)) {}

  static UnitarySequence identity(int n) {
    return UnitarySequence([n](std::int64_t) { return MatrixXcd::Identity(n, n); },
                           n, 0, GaugeSummability::strong, "identity");
  }

  static UnitarySequence from_list(std::vector<MatrixXcd> us, int n,
                                   GaugeSummability decl = GaugeSummability::strong) {
    const int h = static_cast<int>(us.size());
    auto data = std::make_shared<std::vector<MatrixXcd>>(std::move(us));
    for (const auto& u : *data) {
      if (u.rows() != n || u.cols() != n)
        throw std::invalid_argument("UnitarySequence: wrong shape");
      if ((u.adjoint() * u - MatrixXcd::Identity(n, n)).norm() > 1e-12 * n)
        throw std::invalid_argument("UnitarySequence: entry not unitary");
    }
    return UnitarySequence(
        [data, n](std::int64_t p) {
          if (p < static_cast<std::int64_t>(data->size()))
            return (*data)[static_cast<std::size_t>(p)];
          return MatrixXcd(MatrixXcd::Identity(n, n));
        },
        n, h, decl, "explicit");
  }

  MatrixXcd at(std::int64_t p) const {
    if (horizon_ >= 0 && p >= horizon_)
      return MatrixXcd::Identity(base_, base_);
    return gen_(p);
  }

  int base() const { return base_; }
  int horizon() const { return horizon_; }
  GaugeSummability declared() const { return declared_; }
  const std::string& description() const { return desc_; }

 private:
  std::function<MatrixXcd(std::int64_t)> gen_;
  int base_;
  int horizon_;
  GaugeSummability declared_;
  std::string desc_;
};

// Deterministic unitary with V e_0 = h: a plane rotation for real 2-vectors,
// otherwise a phased Householder reflection.
inline MatrixXcd map_e0_to(const VectorXcd& h) {
  const int n = static_cast<int>(h.size());
  if (n == 2 && std::abs(h[0].imag()) < 1e-15 && std::abs(h[1].imag()) < 1e-15) {
    MatrixXcd v(2, 2);
    const double c = h[0].real(), s = h[1].real();
    v << c, -s, s, c;
    return v;
  }
  const double phi = std::abs(h[0]) > 0 ? std::arg(h[0]) : 0.0;
  const VectorXcd b = std::exp(cplx(0, -phi)) * h;
  VectorXcd u = -b;
  u[0] += 1.0;
  const double nu = u.norm();
  MatrixXcd v = MatrixXcd::Identity(n, n);
  if (nu > 1e-14) v -= (2.0 / (nu * nu)) * (u * u.adjoint());
  return std::exp(cplx(0, phi)) * v;
}

// U_p := V_p V_{p+1}^*, with V_p e_0 = h_{p+1}; then U_p maps h_{p+2} to
// h_{p+1}, so the sequence realizes the family's angle ladder as a gauge
// perturbation of the Haar family.
inline UnitarySequence make_unitary_sequence(const states::SequenceFamily& fam) {
  auto f = std::make_shared<states::SequenceFamily>(fam);
  const int n = fam.dim();
  return UnitarySequence(
      [f](std::int64_t p) {
        return MatrixXcd(map_e0_to(f->h(p + 1)) * map_e0_to(f->h(p + 2)).adjoint());
      },
      n, -1, GaugeSummability::strong, "from_sequence:" + fam.name());
}

// Partial sums of both summability gauges, reported with the declaration.
struct GaugeSummabilityReport {
  GaugeSummability declared;
  std::vector<double> strong_partial_sums;  // sum_p ||I - U_p||
  std::vector<double> weak_partial_sums;    // sum_p ||e_0 - U_p e_0||^2
};

inline GaugeSummabilityReport verify_summability(const UnitarySequence& u,
                                                 const std::vector<std::int64_t>& horizons) {
  GaugeSummabilityReport rep;
  rep.declared = u.declared();
  double s = 0.0, w = 0.0;
  std::int64_t p = 0;
  VectorXcd e0 = VectorXcd::Zero(u.base());
  e0[0] = 1.0;
  for (std::int64_t h : horizons) {
    for (; p < h; ++p) {
      const MatrixXcd up = u.at(p);
      s += (MatrixXcd::Identity(u.base(), u.base()) - up)
               .jacobiSvd()
               .singularValues()(0);
      w += (e0 - up * e0).squaredNorm();
    }
    rep.strong_partial_sums.push_back(s);
    rep.weak_partial_sums.push_back(w);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// IsometryFamily
// ---------------------------------------------------------------------------

class IsometryFamily {
 public:
  enum class Variant { weighted_haar, gauge_perturbed, nearest_neighbor };

  static IsometryFamily weighted_haar(VectorXcd eta) {
    const int n = static_cast<int>(eta.size());
    if (n < 2) throw std::invalid_argument("weighted_haar: need n >= 2");
    if (std::abs(eta.norm() - 1.0) > kDefaultTol)
      throw std::invalid_argument("weighted_haar: sum |eta_i|^2 must be 1");
    VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      if (std::abs(eta[i]) == 0.0)
        throw std::invalid_argument("weighted_haar: every eta_i must be nonzero");
      w[i] = std::norm(eta[i]);
    }
    w /= w.sum();  // renormalize rounding residue so the measure is exact
    IsometryFamily f(Variant::weighted_haar, MeasureSpec(n, w));
    f.eta_ = std::move(eta);
    return f;
  }

  static IsometryFamily haar(int n) {
    return weighted_haar(VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  }

  static IsometryFamily gauge_perturbed(UnitarySequence u) {
    const int n = u.base();
    IsometryFamily f(Variant::gauge_perturbed, MeasureSpec::haar(n));
    f.eta_ = VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    f.useq_ = std::make_shared<UnitarySequence>(std::move(u));
    return f;
  }

  static IsometryFamily nearest_neighbor(int n) {
    IsometryFamily f(Variant::nearest_neighbor, MeasureSpec::haar(n));
    f.eta_ = VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    return f;
  }

  Variant variant() const { return variant_; }
  int base() const { return measure_.base(); }
  const MeasureSpec& measure() const { return measure_; }
  const VectorXcd& eta() const { return eta_; }
  const UnitarySequence& unitary_sequence() const {
    if (!useq_) throw std::logic_error("unitary_sequence: not gauge perturbed");
    return *useq_;
  }

  // Phase of eta_i; the whole action of S_i in absorbed coordinates.
  cplx phase(int i) const { return eta_[i] / std::abs(eta_[i]); }

  // Smallest level the variant's multiplier can act on.
  int multiplier_depth() const {
    return variant_ == Variant::nearest_neighbor ? 1 : 0;
  }

  std::string variant_name() const {
    switch (variant_) {
      case Variant::weighted_haar:
        return measure_.is_haar() && std::abs(eta_[0].imag()) < 1e-15 &&
                       (eta_.array() - eta_[0]).matrix().norm() < 1e-15
                   ? "haar"
                   : "weighted_haar";
      case Variant::gauge_perturbed: return "gauge_perturbed";
      case Variant::nearest_neighbor: return "nearest_neighbor";
    }
    return "?";
  }

 private:
  IsometryFamily(Variant v, MeasureSpec m) : variant_(v), measure_(std::move(m)) {}

  Variant variant_;
  MeasureSpec measure_;
  VectorXcd eta_;
  std::shared_ptr<UnitarySequence> useq_;
};

// ---------------------------------------------------------------------------
// Gauge unitary at a truncation level: the point-basis matrix of the tensor
// product of U_0,...,U_{m-1}, each factor conjugated from the character basis.
// ---------------------------------------------------------------------------

inline MatrixXcd gauge_unitary(const UnitarySequence& u, int m) {
  const int n = u.base();
  const MatrixXcd f = lattice::char_to_point(n);
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int p = 0; p < m; ++p) {
    const MatrixXcd up = f * u.at(p) * f.adjoint();
    MatrixXcd next(out.rows() * n, out.cols() * n);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * n, j * n, n, n) = out(i, j) * up;
    out = std::move(next);
  }
  return out;
}

namespace detail {

// Multiplication by the character <i, x_0> of the first remaining coordinate.
inline void first_digit_character(VectorXcd& a, int i, int n, bool conjugate) {
  const std::int64_t block = a.size() / n;
  for (int d = 0; d < n; ++d) {
    cplx c = lattice::char_value(i, d, n);
    if (conjugate) c = std::conj(c);
    a.segment(d * block, block) *= c;
  }
}

// Applies the level-m truncated gauge tensor (or its adjoint) in place.
inline void apply_gauge(VectorXcd& a, const UnitarySequence& u, int m, int n,
                        bool adjoint) {
  const MatrixXcd f = lattice::char_to_point(n);
  const int active = u.horizon() >= 0 ? std::min(m, u.horizon()) : m;
  for (int p = 0; p < active; ++p) {
    MatrixXcd up = f * u.at(p) * f.adjoint();
    if (adjoint) up.adjointInPlace();
    lattice::detail::mode_apply(a, up, p, m, n);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// S_i and its adjoint
// ---------------------------------------------------------------------------

inline CylinderVector apply_s(const IsometryFamily& fam, int i,
                              const CylinderVector& v,
                              const LevelBudget& budget = {}) {
  if (!(v.measure() == fam.measure()))
    throw measure_error("apply_s: vector not absorbed against family measure");
  if (i < 0 || i >= fam.base()) throw std::invalid_argument("apply_s: bad index");
  const int n = fam.base();
  const int m = v.level();
  if (m < fam.multiplier_depth())
    throw level_error("apply_s: level below the variant's multiplier depth");
  budget.check_vector(v.dim() * n, "apply_s");

  VectorXcd in = v.amplitudes();
  switch (fam.variant()) {
    case IsometryFamily::Variant::weighted_haar:
      in *= fam.phase(i);
      break;
    case IsometryFamily::Variant::gauge_perturbed:
      detail::apply_gauge(in, fam.unitary_sequence(), m, n, /*adjoint=*/false);
      break;
    case IsometryFamily::Variant::nearest_neighbor:
      detail::first_digit_character(in, i, n, /*conjugate=*/false);
      break;
  }
  VectorXcd out = VectorXcd::Zero(v.dim() * n);
  out.segment(i * v.dim(), v.dim()) = in;
  return CylinderVector(m + 1, v.measure(), std::move(out));
}

inline CylinderVector apply_s_star(const IsometryFamily& fam, int i,
                                   const CylinderVector& v) {
  if (!(v.measure() == fam.measure()))
    throw measure_error("apply_s_star: vector not absorbed against family measure");
  if (i < 0 || i >= fam.base())
    throw std::invalid_argument("apply_s_star: bad index");
  const int n = fam.base();
  const int m = v.level();

  if (m == 0) {
    // Forced by the defining formula on constants: S_i^* c = conj(eta_i) c;
    // the nearest-neighbor multiplier then still contributes its character.
    VectorXcd c = v.amplitudes() * std::conj(fam.eta()[i]);
    CylinderVector out(0, v.measure(), std::move(c));
    if (fam.variant() == IsometryFamily::Variant::nearest_neighbor) {
      CylinderVector e = lattice::embed(out, 1);
      VectorXcd a = e.amplitudes();
      detail::first_digit_character(a, i, n, /*conjugate=*/true);
      return CylinderVector(1, v.measure(), std::move(a));
    }
    return out;
  }

  const std::int64_t block = v.dim() / n;
  VectorXcd a = v.amplitudes().segment(i * block, block);
  switch (fam.variant()) {
    case IsometryFamily::Variant::weighted_haar:
      a *= std::conj(fam.phase(i));
      return CylinderVector(m - 1, v.measure(), std::move(a));
    case IsometryFamily::Variant::gauge_perturbed:
      detail::apply_gauge(a, fam.unitary_sequence(), m - 1, n, /*adjoint=*/true);
      return CylinderVector(m - 1, v.measure(), std::move(a));
    case IsometryFamily::Variant::nearest_neighbor: {
      if (m == 1) {
        // result is the level-1 function conj(<i, x_0>) * c
        CylinderVector e =
            lattice::embed(CylinderVector(0, v.measure(), std::move(a)), 1);
        VectorXcd b = e.amplitudes();
        detail::first_digit_character(b, i, n, /*conjugate=*/true);
        return CylinderVector(1, v.measure(), std::move(b));
      }
      detail::first_digit_character(a, i, n, /*conjugate=*/true);
      return CylinderVector(m - 1, v.measure(), std::move(a));
    }
  }
  throw std::logic_error("apply_s_star: unreachable");
}

// ---------------------------------------------------------------------------
// Matrix forms
// ---------------------------------------------------------------------------

// n^{m+1} x n^m matrix of apply_s at level m; its conjugate transpose
// realizes apply_s_star on level m+1.
inline MatrixXcd isometry_matrix(const IsometryFamily& fam, int i, int m,
                                 const LevelBudget& budget = {}) {
  const std::int64_t d = ipow(fam.base(), m);
  budget.check_dense(d * fam.base(), "isometry_matrix");
  MatrixXcd out(d * fam.base(), d);
  for (std::int64_t c = 0; c < d; ++c) {
    VectorXcd e = VectorXcd::Zero(d);
    e[c] = 1.0;
    out.col(c) =
        apply_s(fam, i, CylinderVector(m, fam.measure(), std::move(e)), budget)
            .amplitudes();
  }
  return out;
}

// U = sum_j T_j S_j^* on the level-m space.
inline MatrixXcd transfer_unitary(const IsometryFamily& famS,
                                  const IsometryFamily& famT, int m,
                                  const LevelBudget& budget = {}) {
  if (famS.base() != famT.base() || !(famS.measure() == famT.measure()))
    throw std::invalid_argument("transfer_unitary: incompatible families");
  if (m < 1) throw level_error("transfer_unitary: m >= 1 required");
  const int depth = std::max(famS.multiplier_depth(), famT.multiplier_depth());
  if (m - 1 < depth)
    throw level_error("transfer_unitary: level too small for the multiplier depth");
  const std::int64_t d = ipow(famS.base(), m);
  budget.check_dense(d, "transfer_unitary");
  MatrixXcd out = MatrixXcd::Zero(d, d);
  for (int j = 0; j < famS.base(); ++j) {
    const MatrixXcd tj = isometry_matrix(famT, j, m - 1, budget);
    const MatrixXcd sj = isometry_matrix(famS, j, m - 1, budget);
    out += tj * sj.adjoint();
  }
  return out;
}

// Non-commutative Radon-Nikodym derivative m_{ji} = S_j^* T_i, an n x n
// block matrix of level-m operators; block (j,i) sits at (j*d, i*d).
struct RadonNikodymMatrix {
  int base;
  int level;
  MatrixXcd blocks;  // (n*d) x (n*d)

  const MatrixXcd block(int j, int i) const {
    const std::int64_t d = blocks.rows() / base;
    return blocks.block(j * d, i * d, d, d);
  }
};

inline RadonNikodymMatrix radon_nikodym_matrix(const IsometryFamily& famS,
                                               const IsometryFamily& famT, int m,
                                               const LevelBudget& budget = {}) {
  if (famS.base() != famT.base() || !(famS.measure() == famT.measure()))
    throw std::invalid_argument("radon_nikodym_matrix: incompatible families");
  const int depth = std::max(famS.multiplier_depth(), famT.multiplier_depth());
  if (m < depth)
    throw level_error("radon_nikodym_matrix: level too small for the multiplier depth");
  const int n = famS.base();
  const std::int64_t d = ipow(n, m);
  budget.check_dense(d * n, "radon_nikodym_matrix");
  RadonNikodymMatrix out{n, m, MatrixXcd::Zero(d * n, d * n)};
  std::vector<MatrixXcd> s(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    s[static_cast<std::size_t>(k)] = isometry_matrix(famS, k, m, budget);
    t[static_cast<std::size_t>(k)] = isometry_matrix(famT, k, m, budget);
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.blocks.block(j * d, i * d, d, d) =
          s[static_cast<std::size_t>(j)].adjoint() * t[static_cast<std::size_t>(i)];
  return out;
}

// ---------------------------------------------------------------------------
// Cuntz relation defects at levels (m, m+1), as operator norms.
// ---------------------------------------------------------------------------

// Largest |eigenvalue| of a Hermitian matrix; used where the defect matrix is
// Hermitian by construction (faster than a full SVD at n^5).
inline double hermitian_norm(const MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline double operator_norm(const MatrixXcd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  if (a.rows() <= 96 && a.cols() <= 96) return a.jacobiSvd().singularValues()(0);
  // sigma_max via the Hermitian Gram spectrum at larger sizes
  return std::sqrt(std::max(0.0, hermitian_norm(a.adjoint() * a)));
}

struct CuntzDefect {
  double orthogonality;  // max_ij || S_i^* S_j - delta_ij I ||
  double completeness;   // || sum_i S_i S_i^* - I ||
};

inline CuntzDefect cuntz_defect(const IsometryFamily& fam, int m,
                                const LevelBudget& budget = {}) {
  const int n = fam.base();
  if (m < fam.multiplier_depth())
    throw level_error("cuntz_defect: level below multiplier depth");
  std::vector<MatrixXcd> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    s[static_cast<std::size_t>(i)] = isometry_matrix(fam, i, m, budget);
  const std::int64_t d = s[0].cols();
  double ortho = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatrixXcd g = s[static_cast<std::size_t>(i)].adjoint() * s[static_cast<std::size_t>(j)];
      if (i == j) g -= MatrixXcd::Identity(d, d);
      ortho = std::max(ortho, operator_norm(g));
    }
  MatrixXcd comp = MatrixXcd::Identity(d * n, d * n) * (-1.0);
  for (int i = 0; i < n; ++i)
    comp += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)].adjoint();
  return CuntzDefect{ortho, hermitian_norm(comp)};
}

}  // namespace shiftlab::cuntz
