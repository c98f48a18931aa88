#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shiftlab {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kDefaultTol = 1e-12;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct level_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct measure_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct budget_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Level budget
//
// Dense objects (matrices on a level-m space) are capped at max_dense_dim;
// purely vector-shaped computations may go up to max_vector_dim. Overflow is
// an explicit error, never a silent truncation.
// ---------------------------------------------------------------------------

struct LevelBudget {
  std::int64_t max_dense_dim = 4096;
  std::int64_t max_vector_dim = std::int64_t{1} << 21;

  void check_dense(std::int64_t dim, const char* what) const {
    if (dim > max_dense_dim)
      throw budget_error(std::string(what) + ": dense dimension " +
                         std::to_string(dim) + " exceeds budget " +
                         std::to_string(max_dense_dim));
  }
  void check_vector(std::int64_t dim, const char* what) const {
    if (dim > max_vector_dim)
      throw budget_error(std::string(what) + ": vector dimension " +
                         std::to_string(dim) + " exceeds budget " +
                         std::to_string(max_vector_dim));
  }
};

inline std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// ---------------------------------------------------------------------------
// Word: a finite multi-index over Z_n.
//
// Indexes points of Z_n^m, characters of the dual, and matrix-unit
// subscripts. Linearization into 0..n^m-1 is big-endian: digit 0 is the most
// significant. The empty word is valid (level 0).
// ---------------------------------------------------------------------------

struct Word {
  std::vector<int> digits;
  int base = 2;

  Word() = default;
  Word(std::vector<int> d, int n) : digits(std::move(d)), base(n) {
    if (base < 2) throw std::invalid_argument("Word: base must be >= 2");
    for (int v : digits)
      if (v < 0 || v >= base)
        throw std::invalid_argument("Word: digit out of range");
  }

  int length() const { return static_cast<int>(digits.size()); }

  std::int64_t index() const {
    std::int64_t ix = 0;
    for (int v : digits) ix = ix * base + v;
    return ix;
  }

  static Word from_index(std::int64_t ix, int length, int n) {
    std::vector<int> d(static_cast<std::size_t>(length));
    for (int p = length - 1; p >= 0; --p) {
      d[static_cast<std::size_t>(p)] = static_cast<int>(ix % n);
      ix /= n;
    }
    return Word(std::move(d), n);
  }

  bool operator==(const Word& o) const {
    return base == o.base && digits == o.digits;
  }
};

inline std::string to_string(const Word& w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.digits.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w.digits[i]);
  }
  return s + ")";
}

}  // namespace shiftlab
