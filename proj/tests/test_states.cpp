#include <gtest/gtest.h>

#include <random>

#include "shiftlab/states.hpp"

using namespace shiftlab;
using namespace shiftlab::lattice;
using namespace shiftlab::cuntz;
using namespace shiftlab::endo;
using namespace shiftlab::states;

namespace {

std::mt19937_64 rng(2024);

VectorXcd random_unit(int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v / v.norm();
}

MatrixXcd random_unitary(int n) {
  MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) a.col(i) = random_unit(n);
  Eigen::HouseholderQR<MatrixXcd> qr(a);
  MatrixXcd q = qr.householderQ();
  const MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

void expect_psd_trace_one(const MatrixObservable& rho) {
  EXPECT_NEAR(std::abs(rho.mat.trace() - cplx(1, 0)), 0.0, 1e-12);
  EXPECT_LE((rho.mat - rho.mat.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho.mat, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

}  // namespace

TEST(EvalState, NearestNeighborClosedForm) {
  const auto nn2 = StateSpec::nearest_neighbor(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const cplx v = eval_state(nn2, Word({i}, 2), Word({j}, 2));
      EXPECT_NEAR(std::abs(v - (i == j ? cplx(0.5, 0) : cplx(0, 0))), 0.0, 1e-15);
    }
  // the worked pair: (1/4) <0,1> conj(<1,1>) = -1/4
  const cplx v = eval_state(nn2, Word({0, 1}, 2), Word({1, 1}, 2));
  EXPECT_NEAR(std::abs(v - cplx(-0.25, 0)), 0.0, 1e-15);
}

TEST(EvalState, NearestNeighborMatchesOperatorRoute) {
  for (int n : {2, 3}) {
    const auto spec = StateSpec::nearest_neighbor(n);
    const auto fam = IsometryFamily::nearest_neighbor(n);
    double max_defect = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const std::int64_t d = ipow(n, k);
      for (std::int64_t a = 0; a < d; ++a)
        for (std::int64_t b = 0; b < d; ++b) {
          const Word i = Word::from_index(a, k, n);
          const Word j = Word::from_index(b, k, n);
          max_defect = std::max(
              max_defect,
              std::abs(eval_state(spec, i, j) - eval_state_operator(fam, i, j)));
        }
    }
    EXPECT_LE(max_defect, 1e-12) << "n=" << n;
  }
}

TEST(EvalState, CuntzStateUniformDiagonal) {
  const int n = 2;
  const auto spec =
      StateSpec::cuntz_state(VectorXcd::Constant(n, 1.0 / std::sqrt(2.0)));
  for (int k = 1; k <= 3; ++k) {
    const Word w = Word::from_index(ipow(n, k) - 1, k, n);
    EXPECT_NEAR(std::abs(eval_state(spec, w, w) - cplx(std::pow(0.5, k), 0)), 0.0,
                1e-14);
  }
}

TEST(EvalState, HermitianSymmetryAndCompatibility) {
  std::vector<StateSpec> specs{
      StateSpec::nearest_neighbor(2),
      StateSpec::cuntz_state(random_unit(2)),
      StateSpec::product(SequenceFamily::theta_harmonic()),
      StateSpec::finite_mix(
          0, (VectorXd(2) << 0.25, 0.75).finished(),
          {(VectorXcd(2) << 1.0, 0.0).finished(), (VectorXcd(2) << 0.0, 1.0).finished()})};
  for (const auto& spec : specs) {
    const int k = 2, n = 2;
    const std::int64_t d = ipow(n, k);
    for (std::int64_t a = 0; a < d; ++a)
      for (std::int64_t b = 0; b < d; ++b) {
        const Word i = Word::from_index(a, k, n);
        const Word j = Word::from_index(b, k, n);
        EXPECT_NEAR(std::abs(eval_state(spec, i, j) -
                             std::conj(eval_state(spec, j, i))),
                    0.0, 1e-13);
        // diagonal extension on the trailing slot reproduces the value
        cplx ext = 0.0;
        for (int q = 0; q < n; ++q) {
          auto id = i.digits, jd = j.digits;
          id.push_back(q);
          jd.push_back(q);
          ext += eval_state(spec, Word(id, n), Word(jd, n));
        }
        EXPECT_NEAR(std::abs(ext - eval_state(spec, i, j)), 0.0, 1e-13)
            << spec.label();
      }
  }
}

// Product dictionary for a gauge-perturbed family: sites follow the backward
// gauge chain, and word values match the operator route.
TEST(EvalState, GaugePerturbedProductDictionary) {
  const auto fam = IsometryFamily::gauge_perturbed(
      make_unitary_sequence(SequenceFamily::theta_harmonic()));
  const auto spec = product_form(fam);
  const int n = 2;
  for (int k = 1; k <= 3; ++k) {
    const std::int64_t d = ipow(n, k);
    for (std::int64_t a = 0; a < d; ++a)
      for (std::int64_t b = 0; b < d; ++b) {
        const Word i = Word::from_index(a, k, n);
        const Word j = Word::from_index(b, k, n);
        EXPECT_NEAR(std::abs(eval_state(spec, i, j) - eval_state_operator(fam, i, j)),
                    0.0, 1e-12);
      }
  }
  // rotation closed form of the sites: characters coordinates
  const auto family = SequenceFamily::theta_harmonic();
  const MatrixXcd f = char_to_point(2);
  for (int m : {0, 1, 2, 5}) {
    const VectorXcd chi = f.adjoint() * spec.site(m);
    const double ang = family.theta(m + 1) - family.theta(1);
    EXPECT_NEAR(std::abs(chi[0] - cplx(std::cos(ang), 0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(chi[1] - cplx(std::sin(ang), 0)), 0.0, 1e-12);
  }
}

TEST(DensityMatrix, ProductIsRankOneProjector) {
  const auto spec = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << std::cos(0.3), std::sin(0.3)).finished()));
  const auto rho = density_matrix(spec, 3);
  expect_psd_trace_one(rho);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho.mat, Eigen::EigenvaluesOnly);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-10) ++rank;
  EXPECT_EQ(rank, 1);
}

TEST(DensityMatrix, CuntzStateProjectsOntoConjugateEta) {
  const VectorXcd eta = random_unit(2);
  const auto rho = density_matrix(StateSpec::cuntz_state(eta), 2);
  expect_psd_trace_one(rho);
  VectorXcd target = VectorXcd::Zero(4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      target[a * 2 + b] = std::conj(eta[a]) * std::conj(eta[b]);
  EXPECT_NEAR((rho.mat * target - target).norm(), 0.0, 1e-12);
}

TEST(DensityMatrix, NearestNeighborEntrywiseAndPartialTrace) {
  const auto spec = StateSpec::nearest_neighbor(2);
  for (int k = 1; k <= 3; ++k) {
    const auto rho = density_matrix(spec, k);
    expect_psd_trace_one(rho);
    if (k > 1) {
      const auto reduced = partial_trace_last(rho);
      const auto smaller = density_matrix(spec, k - 1);
      EXPECT_NEAR((reduced.mat - smaller.mat).cwiseAbs().maxCoeff(), 0.0, 1e-13);
    }
  }
  // entrywise against the evaluation at k = 2
  const auto rho2 = density_matrix(spec, 2);
  for (std::int64_t a = 0; a < 4; ++a)
    for (std::int64_t b = 0; b < 4; ++b)
      EXPECT_NEAR(std::abs(rho2.mat(b, a) - eval_state(spec, Word::from_index(a, 2, 2),
                                                       Word::from_index(b, 2, 2))),
                  0.0, 1e-14);
}

// Shifted windows of the nearest-neighbor state from the honest route:
// extend words on the leading slots and sum the diagonal.
TEST(DensityMatrix, NearestNeighborShiftedWindowOracle) {
  const int n = 2;
  const auto spec = StateSpec::nearest_neighbor(n);
  for (int k = 1; k <= 2; ++k) {
    for (int s = 1; s <= 2; ++s) {
      const auto rho = density_matrix(spec, k, s);
      expect_psd_trace_one(rho);
      const std::int64_t d = ipow(n, k);
      const std::int64_t lead = ipow(n, s);
      for (std::int64_t a = 0; a < d; ++a)
        for (std::int64_t b = 0; b < d; ++b) {
          cplx oracle = 0.0;
          for (std::int64_t l = 0; l < lead; ++l) {
            const Word pre = Word::from_index(l, s, n);
            auto id = pre.digits, jd = pre.digits;
            const Word wi = Word::from_index(a, k, n), wj = Word::from_index(b, k, n);
            id.insert(id.end(), wi.digits.begin(), wi.digits.end());
            jd.insert(jd.end(), wj.digits.begin(), wj.digits.end());
            oracle += eval_state(spec, Word(id, n), Word(jd, n));
          }
          EXPECT_NEAR(std::abs(rho.mat(b, a) - oracle), 0.0, 1e-13)
              << "k=" << k << " s=" << s;
        }
    }
  }
}

TEST(StateDistance, BasicsAndPureStateFormula) {
  const auto c1 = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << 1.0, 0.0).finished()));
  EXPECT_NEAR(state_distance(c1, c1, 3), 0.0, 1e-13);

  const VectorXcd xi = random_unit(3), zeta = random_unit(3);
  const auto a = StateSpec::product(SequenceFamily::constant(xi));
  const auto b = StateSpec::product(SequenceFamily::constant(zeta));
  const double got = state_distance(a, b, 1);
  const double ov = std::abs(xi.dot(zeta));
  EXPECT_NEAR(got, 2.0 * std::sqrt(1.0 - ov * ov), 1e-12);
}

TEST(StateDistance, NearestNeighborVsProductProbe) {
  const auto nn = StateSpec::nearest_neighbor(2);
  const auto prod = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << 1.0, 0.0).finished()));
  double prev = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const double d = state_distance(nn, prod, k);
    EXPECT_GE(d, prev - 1e-12);
    EXPECT_LE(d, 2.0 + 1e-12);
    prev = d;
  }
  EXPECT_GT(prev, 0.5);
}

TEST(InP, ConstantAndThetaConverge) {
  const auto c = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << 1.0, 0.0).finished()));
  EXPECT_EQ(in_p_test(c, 1000).verdict, Verdict::converges);

  const auto theta = StateSpec::product(SequenceFamily::theta_harmonic());
  const auto rep = in_p_test(theta, 100000);
  EXPECT_EQ(rep.verdict, Verdict::converges);
  EXPECT_LE(rep.series.partial_sums.back(), std::sqrt(2.0));
}

TEST(InP, NearestNeighborSigmaSequence) {
  const auto rep = in_p_test(StateSpec::nearest_neighbor(2));
  ASSERT_GE(rep.sigma_distance.size(), 3u);
  // invariance holds exactly from the first shifted window on
  for (std::size_t m = 1; m < rep.sigma_distance.size(); ++m)
    EXPECT_LE(rep.sigma_distance[m], 1e-12);
  EXPECT_GT(rep.sigma_distance[0], 0.1);  // offset 0 genuinely differs
  EXPECT_EQ(rep.verdict, Verdict::converges);
}

TEST(InP, FiniteMixStabilizesAtAnchor) {
  const auto mix = StateSpec::finite_mix(
      1, (VectorXd(2) << 0.5, 0.5).finished(),
      {(VectorXcd(2) << 1.0, 0.0).finished(), (VectorXcd(2) << 0.0, 1.0).finished()});
  const auto rep = in_p_test(mix);
  for (double d : rep.sigma_distance) EXPECT_LE(d, 1e-12);
  EXPECT_EQ(rep.verdict, Verdict::converges);
}

TEST(Equivalence, PhaseAlignmentIdentity) {
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXcd x = random_unit(3), y = random_unit(3);
    EXPECT_NEAR((x - y).squaredNorm(), 2.0 * (1.0 - (x.dot(y)).real()), 1e-12);
  }
}

TEST(Equivalence, FourFormsAgreeAcrossFamilies) {
  const auto constant = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << 1.0, 0.0).finished()));
  const std::vector<std::pair<StateSpec, Verdict>> cases{
      {StateSpec::product(SequenceFamily::theta_harmonic()), Verdict::diverges},
      {StateSpec::product(SequenceFamily::inverse_sqrt()), Verdict::diverges},
      {StateSpec::product(SequenceFamily::geometric(0.5)), Verdict::converges},
      {constant, Verdict::converges}};
  for (const auto& [spec, expect] : cases) {
    const auto rep = equivalence_test(spec, constant);
    EXPECT_TRUE(rep.agree) << spec.label();
    EXPECT_EQ(rep.verdict, expect) << spec.label();
  }
  const auto rep = equivalence_test(StateSpec::product(SequenceFamily::geometric(0.5)),
                                    StateSpec::product(SequenceFamily::geometric(0.3)));
  EXPECT_TRUE(rep.agree);
  EXPECT_EQ(rep.verdict, Verdict::converges);

  const auto cross = equivalence_test(StateSpec::product(SequenceFamily::theta_harmonic()),
                                      StateSpec::product(SequenceFamily::inverse_sqrt()));
  EXPECT_TRUE(cross.agree);
  EXPECT_EQ(cross.verdict, Verdict::diverges);
}

TEST(Conjugacy, ExactOrbitIsFound) {
  const auto theta = StateSpec::product(SequenceFamily::theta_harmonic());
  const MatrixXcd g0 = random_unitary(2);
  const auto rotated = gauge_transform(theta, g0);
  const auto rep = conjugacy_test(theta, rotated, 10000);
  EXPECT_EQ(rep.verdict, Verdict::converges);
  EXPECT_LE(rep.aligned.partial_sums.back(), 1e-8);
}

TEST(Conjugacy, ThetaAgainstConstantDivergesExactly) {
  const auto theta = StateSpec::product(SequenceFamily::theta_harmonic());
  const auto constant = StateSpec::product(SequenceFamily::constant(
      (VectorXcd(2) << 1.0, 0.0).finished()));
  const auto rep = conjugacy_test(theta, constant);
  EXPECT_EQ(rep.verdict, Verdict::diverges);
  EXPECT_FALSE(rep.heuristic);
}

TEST(Conjugacy, SummableTailsAlwaysAlign) {
  const auto a = StateSpec::product(SequenceFamily::geometric(0.5));
  auto b = StateSpec::product(SequenceFamily::geometric(0.3));
  const MatrixXcd g0 = random_unitary(2);
  b = gauge_transform(b, g0);
  const auto rep = conjugacy_test(a, b);
  EXPECT_EQ(rep.verdict, Verdict::converges);
  EXPECT_FALSE(rep.heuristic);
  // the witness aligns the limits up to phase
  const VectorXcd la = *a.limit(), lb = *b.limit();
  EXPECT_NEAR(std::abs(la.dot(rep.gauge * lb)), 1.0, 1e-10);
  // and the aligned series itself passes the rule
  EXPECT_EQ(rep.aligned.verdict, Verdict::converges);
}

TEST(FiniteMix, ReflexiveAndRotatedOrbit) {
  const auto mk = [](VectorXd w, std::vector<VectorXcd> v) {
    return StateSpec::finite_mix(1, std::move(w), std::move(v));
  };
  const VectorXcd v0 = (VectorXcd(2) << 1.0, 0.0).finished();
  const VectorXcd v1 = (VectorXcd(2) << 0.0, 1.0).finished();
  const auto mixA = mk((VectorXd(2) << 0.5, 0.5).finished(), {v0, v1});

  const auto self = finite_mix_conjugacy(mixA, mixA);
  EXPECT_TRUE(self.conjugate);

  const MatrixXcd g0 = random_unitary(2);
  std::vector<VectorXcd> rotated{g0.adjoint() * v0, g0.adjoint() * v1};
  const auto mixB = mk((VectorXd(2) << 0.5, 0.5).finished(), rotated);
  const auto rep = finite_mix_conjugacy(mixA, mixB);
  EXPECT_TRUE(rep.conjugate);
  // recovered gauge carries the primed vectors onto the originals as states
  for (std::size_t i = 0; i < 2; ++i) {
    const VectorXcd back = rep.gauge.adjoint() * mixB.mix_vectors()[i];
    EXPECT_NEAR(std::abs(back.dot(mixA.mix_vectors()[i])), 1.0, 1e-8);
  }
  // symmetry
  EXPECT_TRUE(finite_mix_conjugacy(mixB, mixA).conjugate);
}

TEST(FiniteMix, WeightMismatchAndCommonGauge) {
  const VectorXcd v0 = (VectorXcd(2) << 1.0, 0.0).finished();
  const VectorXcd v1 = (VectorXcd(2) << 0.0, 1.0).finished();
  const auto mixA = StateSpec::finite_mix(1, (VectorXd(2) << 0.5, 0.5).finished(),
                                          {v0, v1});
  const auto mixB = StateSpec::finite_mix(
      1, (VectorXd(2) << 1.0 / 3.0, 2.0 / 3.0).finished(), {v0, v1});
  EXPECT_FALSE(finite_mix_conjugacy(mixA, mixB).conjugate);

  // applying a common gauge to both sides preserves the verdict
  const MatrixXcd g = random_unitary(2);
  const auto rep = finite_mix_conjugacy(gauge_transform(mixA, g),
                                        gauge_transform(mixA, g));
  EXPECT_TRUE(rep.conjugate);
}

TEST(FiniteMix, NontrivialPermutationAndPhases) {
  const VectorXcd v0 = (VectorXcd(2) << 1.0, 0.0).finished();
  VectorXcd v1 = (VectorXcd(2) << 1.0 / std::sqrt(2.0),
                  cplx(0.3, 0.64031242374328) / std::sqrt(2.0) * std::sqrt(2.0))
                     .finished();
  v1 << std::cos(0.7), std::exp(cplx(0, 0.4)) * std::sin(0.7);
  const auto mixA = StateSpec::finite_mix(1, (VectorXd(2) << 0.25, 0.75).finished(),
                                          {v0, v1});
  // same mix with swapped listing order and a phase twist on each vector
  const auto mixB = StateSpec::finite_mix(
      1, (VectorXd(2) << 0.75, 0.25).finished(),
      {VectorXcd(std::exp(cplx(0, 1.1)) * v1), VectorXcd(std::exp(cplx(0, -0.2)) * v0)});
  const auto rep = finite_mix_conjugacy(mixA, mixB);
  EXPECT_TRUE(rep.conjugate);
  ASSERT_EQ(rep.permutation.size(), 2u);
  EXPECT_EQ(rep.permutation[0], 1);
  EXPECT_EQ(rep.permutation[1], 0);
}

TEST(Hellinger, ClosedFormAndEdgeCases) {
  const VectorXd p = (VectorXd(2) << 0.5, 0.5).finished();
  EXPECT_NEAR(hellinger_singularity(p, p).affinity, 1.0, 1e-14);
  EXPECT_FALSE(hellinger_singularity(p, p).diverges_to_zero);

  const VectorXd q = (VectorXd(2) << 0.25, 0.75).finished();
  const auto rep = hellinger_singularity(p, q, {40});
  EXPECT_NEAR(rep.affinity, std::sqrt(0.125) + std::sqrt(0.375), 1e-14);
  EXPECT_NEAR(rep.affinity, 0.9659, 1e-4);
  EXPECT_LT(rep.products[0], 0.25);
  EXPECT_TRUE(rep.diverges_to_zero);

  // disjoint supports: zero affinity, the product vanishes immediately
  const VectorXd d1 = (VectorXd(2) << 1.0, 0.0).finished();
  const VectorXd d2 = (VectorXd(2) << 0.0, 1.0).finished();
  const auto disjoint = hellinger_singularity(d1, d2, {1, 10});
  EXPECT_NEAR(disjoint.affinity, 0.0, 1e-15);
  EXPECT_NEAR(disjoint.products[0], 0.0, 1e-15);
  EXPECT_TRUE(disjoint.diverges_to_zero);
}

TEST(GaugeTransform, IdentityAndCuntzCovariance) {
  const VectorXcd eta = random_unit(3);
  const auto spec = StateSpec::cuntz_state(eta);
  const auto same = gauge_transform(spec, MatrixXcd::Identity(3, 3));
  EXPECT_NEAR((same.eta() - eta).norm(), 0.0, 1e-14);

  // omega_eta composed with the gauge action equals omega_{g^T eta} on
  // length-1 words: sum_{k,l} g_{ki} conj(g_{lj}) omega(e_kl)
  const MatrixXcd g = random_unitary(3);
  const auto transformed = gauge_transform(spec, g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      cplx lhs = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          lhs += g(k, i) * std::conj(g(l, j)) *
                 eval_state(spec, Word({k}, 3), Word({l}, 3));
      const cplx rhs = eval_state(transformed, Word({i}, 3), Word({j}, 3));
      EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12);
    }
}

TEST(GaugeTransform, WordExpansionAtLengthTwo) {
  const auto spec = StateSpec::cuntz_state(random_unit(2));
  const MatrixXcd g = random_unitary(2);
  const auto transformed = gauge_transform(spec, g);
  for (std::int64_t a = 0; a < 4; ++a)
    for (std::int64_t b = 0; b < 4; ++b) {
      const Word i = Word::from_index(a, 2, 2), j = Word::from_index(b, 2, 2);
      cplx lhs = 0.0;
      for (std::int64_t ka = 0; ka < 4; ++ka)
        for (std::int64_t lb = 0; lb < 4; ++lb) {
          const Word kw = Word::from_index(ka, 2, 2), lw = Word::from_index(lb, 2, 2);
          cplx coeff = 1.0;
          for (int r = 0; r < 2; ++r)
            coeff *= g(kw.digits[static_cast<std::size_t>(r)],
                       i.digits[static_cast<std::size_t>(r)]) *
                     std::conj(g(lw.digits[static_cast<std::size_t>(r)],
                                 j.digits[static_cast<std::size_t>(r)]));
          lhs += coeff * eval_state(spec, kw, lw);
        }
      EXPECT_NEAR(std::abs(lhs - eval_state(transformed, i, j)), 0.0, 1e-12);
    }
}

TEST(GaugeTransform, ProductSitewise) {
  const auto spec = StateSpec::product(SequenceFamily::geometric(0.4));
  const MatrixXcd g = random_unitary(2);
  const auto t = gauge_transform(spec, g);
  for (int m : {0, 1, 5})
    EXPECT_NEAR((t.site(m) - g.adjoint() * spec.site(m)).norm(), 0.0, 1e-13);
}

TEST(FKernel, ReservedKindRejectsEvaluation) {
  const auto spec = StateSpec::f_kernel(2);
  EXPECT_THROW(eval_state(spec, Word({0}, 2), Word({0}, 2)), std::invalid_argument);
  EXPECT_THROW(density_matrix(spec, 1), std::invalid_argument);
}

TEST(FiniteMix, DomainRejection) {
  const auto mix = StateSpec::finite_mix(
      2, (VectorXd(2) << 0.5, 0.5).finished(),
      {(VectorXcd(2) << 1.0, 0.0).finished(), (VectorXcd(2) << 0.0, 1.0).finished()});
  EXPECT_THROW(density_matrix(mix, 2, 0), std::invalid_argument);
  EXPECT_NO_THROW(density_matrix(mix, 2, 2));
}
