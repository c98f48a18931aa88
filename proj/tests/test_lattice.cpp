#include <gtest/gtest.h>

#include <random>

#include "shiftlab/lattice.hpp"

using namespace shiftlab;
using namespace shiftlab::lattice;

namespace {

std::mt19937_64 rng(424242);

VectorXcd random_vector(std::int64_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd v(d);
  for (std::int64_t i = 0; i < d; ++i) v[i] = cplx(g(rng), g(rng));
  return v;
}

CylinderVector random_cylinder(const MeasureSpec& mu, int m) {
  return CylinderVector(m, mu, random_vector(ipow(mu.base(), m)));
}

}  // namespace

TEST(Word, IndexRoundTrip) {
  Word w({1, 0, 2}, 3);
  EXPECT_EQ(w.index(), 1 * 9 + 0 * 3 + 2);
  EXPECT_EQ(Word::from_index(w.index(), 3, 3), w);
  EXPECT_EQ(Word({}, 2).index(), 0);
  EXPECT_THROW(Word({3}, 3), std::invalid_argument);
}

TEST(CharValue, Trivials) {
  EXPECT_NEAR(std::abs(char_value(0, 1, 7) - cplx(1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(char_value(1, 1, 2) - cplx(-1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(char_value(1, 1, 4) - cplx(0, 1)), 0.0, 1e-15);
}

TEST(Characters, ConstantIsUnitAtLevelTwo) {
  const auto mu = MeasureSpec::haar(2);
  const auto one = character_vector(Word({}, 2), 2, mu);
  EXPECT_NEAR(one.norm(), 1.0, 1e-14);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(std::abs(one.amplitudes()[i] - cplx(0.5, 0)), 0.0, 1e-15);
}

TEST(Characters, SingleCoordinateValues) {
  const auto mu = MeasureSpec::haar(2);
  const auto e1 = character_vector(Word({1}, 2), 1, mu);
  EXPECT_NEAR(std::abs(e1.value_at(Word({0}, 2)) - cplx(1, 0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(e1.value_at(Word({1}, 2)) - cplx(-1, 0)), 0.0, 1e-14);
}

// Gram matrix of all characters by direct inner products.
TEST(Characters, OrthonormalBasisSmall) {
  const auto mu = MeasureSpec::haar(2);
  const int m = 2;
  std::vector<CylinderVector> ch;
  for (std::int64_t ix = 0; ix < 4; ++ix)
    ch.push_back(character_vector(Word::from_index(ix, m, 2), m, mu));
  for (std::size_t a = 0; a < ch.size(); ++a)
    for (std::size_t b = 0; b < ch.size(); ++b) {
      const cplx g = inner(ch[a], ch[b]);
      EXPECT_NEAR(std::abs(g - (a == b ? cplx(1, 0) : cplx(0, 0))), 0.0, 1e-13);
    }
}

TEST(Characters, OrthonormalBasisGrid) {
  for (int n : {2, 3, 4}) {
    for (int m = 1; m <= 5; ++m) {
      const auto mu = MeasureSpec::haar(n);
      const std::int64_t d = ipow(n, m);
      MatrixXcd basis(d, d);
      for (std::int64_t ix = 0; ix < d; ++ix)
        basis.col(ix) = character_vector(Word::from_index(ix, m, n), m, mu).amplitudes();
      const double defect =
          (basis.adjoint() * basis - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
      EXPECT_LE(defect, 1e-12) << "n=" << n << " m=" << m;
    }
  }
}

TEST(Characters, RejectNonHaar) {
  VectorXd w(2);
  w << 0.25, 0.75;
  const MeasureSpec mu(2, w);
  EXPECT_THROW(character_vector(Word({1}, 2), 1, mu), measure_error);
}

TEST(Fourier, ConstantAndCharacterCoefficients) {
  const auto mu = MeasureSpec::haar(3);
  const auto one = CylinderVector::one(mu, 2);
  const VectorXcd c = fourier_forward(one);
  EXPECT_NEAR(std::abs(c[0] - cplx(1, 0)), 0.0, 1e-13);
  EXPECT_NEAR(c.tail(c.size() - 1).norm(), 0.0, 1e-13);

  const Word lam({2, 1}, 3);
  const VectorXcd cl = fourier_forward(character_vector(lam, 2, mu));
  for (std::int64_t ix = 0; ix < cl.size(); ++ix)
    EXPECT_NEAR(std::abs(cl[ix] - (ix == lam.index() ? cplx(1, 0) : cplx(0, 0))),
                0.0, 1e-13);
}

TEST(Fourier, ParsevalAndInverse) {
  const auto mu = MeasureSpec::haar(2);
  const auto v = random_cylinder(mu, 3);
  const VectorXcd c = fourier_forward(v);
  EXPECT_NEAR(c.squaredNorm(), v.amplitudes().squaredNorm(), 1e-12);
  const auto back = fourier_inverse(c, 3, mu);
  EXPECT_NEAR((back.amplitudes() - v.amplitudes()).norm(), 0.0, 1e-12);
}

TEST(Embed, ConstantStaysConstant) {
  const auto mu = MeasureSpec::haar(2);
  const auto e = embed(CylinderVector::one(mu, 0), 3);
  EXPECT_EQ(e.level(), 3);
  EXPECT_NEAR(e.norm(), 1.0, 1e-14);
  EXPECT_NEAR((e.amplitudes() - CylinderVector::one(mu, 3).amplitudes()).norm(),
              0.0, 1e-14);
}

TEST(Embed, IsometricAndIdempotent) {
  VectorXd w(3);
  w << 0.5, 0.2, 0.3;
  const MeasureSpec mu(3, w);
  const auto u = random_cylinder(mu, 2);
  const auto v = random_cylinder(mu, 2);
  const auto uu = embed(u, 4);
  const auto vv = embed(v, 4);
  EXPECT_NEAR(std::abs(inner(uu, vv) - inner(u, v)), 0.0, 1e-12);
  EXPECT_NEAR((embed(uu, 4).amplitudes() - uu.amplitudes()).norm(), 0.0, 1e-15);
  EXPECT_THROW(embed(uu, 1), level_error);
}

TEST(Embed, CommutesWithFourier) {
  const auto mu = MeasureSpec::haar(2);
  const auto v = random_cylinder(mu, 2);
  const VectorXcd small = fourier_forward(v);
  const VectorXcd big = fourier_forward(embed(v, 4));
  for (std::int64_t ix = 0; ix < big.size(); ++ix) {
    const Word lam = Word::from_index(ix, 4, 2);
    const bool shared = lam.digits[2] == 0 && lam.digits[3] == 0;
    const cplx expect =
        shared ? small[Word({lam.digits[0], lam.digits[1]}, 2).index()] : cplx(0, 0);
    EXPECT_NEAR(std::abs(big[ix] - expect), 0.0, 1e-12);
  }
}

// Absorbed norm vs the weighted sum of |function value|^2 * cylinder weight.
TEST(Measure, AbsorbedNormMatchesWeightedSum) {
  VectorXd w(2);
  w << 0.3, 0.7;
  const MeasureSpec mu(2, w);
  for (int m = 1; m <= 4; ++m) {
    const auto v = random_cylinder(mu, m);
    double weighted = 0.0;
    for (std::int64_t ix = 0; ix < v.dim(); ++ix) {
      const Word x = Word::from_index(ix, m, 2);
      double cyl = 1.0;
      for (int d : x.digits) cyl *= mu.weights()[d];
      weighted += std::norm(v.value_at(x)) * cyl;
    }
    EXPECT_NEAR(weighted, v.amplitudes().squaredNorm(), 1e-10 * v.dim());
  }
}

TEST(Measure, Validation) {
  VectorXd bad(2);
  bad << 0.5, 0.6;
  EXPECT_THROW(MeasureSpec(2, bad), measure_error);
  VectorXd neg(2);
  neg << -0.1, 1.1;
  EXPECT_THROW(MeasureSpec(2, neg), measure_error);
}

TEST(Budget, VectorOverflowThrows) {
  LevelBudget b;
  b.max_vector_dim = 8;
  EXPECT_THROW(b.check_vector(16, "test"), budget_error);
  EXPECT_NO_THROW(b.check_vector(8, "test"));
}
