#pragma once

#include <cstdint>
#include <vector>

#include "galgeo/field.hpp"

namespace galgeo {

using Vec = std::vector<code_t>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<code_t> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0) {}

  code_t& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  code_t at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  Vec row(int r) const {
    return Vec(a.begin() + static_cast<std::ptrdiff_t>(r) * cols,
               a.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols);
  }

  void set_row(int r, const Vec& v) {
    for (int c = 0; c < cols; ++c) at(r, c) = v[static_cast<std::size_t>(c)];
  }

  void push_row(const Vec& v) {
    a.insert(a.end(), v.begin(), v.end());
    ++rows;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

// Reduced row echelon form in place. Zero rows are dropped; returns the rank.
// Pivot columns come out strictly increasing, pivots are 1 and are the only
// nonzero entries in their column, so the result is a canonical form of the
// row space.
inline int rref_in_place(const Gf& F, Mat& m) {
  int rank = 0;
  for (int col = 0; col < m.cols && rank < m.rows; ++col) {
    int piv = -1;
    for (int r = rank; r < m.rows; ++r)
      if (m.at(r, col)) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    if (piv != rank)
      for (int c = 0; c < m.cols; ++c) std::swap(m.at(piv, c), m.at(rank, c));
    code_t inv = F.inv(m.at(rank, col));
    for (int c = col; c < m.cols; ++c) m.at(rank, c) = F.mul(m.at(rank, c), inv);
    for (int r = 0; r < m.rows; ++r) {
      if (r == rank) continue;
      code_t f = m.at(r, col);
      if (!f) continue;
      for (int c = col; c < m.cols; ++c)
        m.at(r, c) = F.sub(m.at(r, c), F.mul(f, m.at(rank, c)));
    }
    ++rank;
  }
  m.rows = rank;
  m.a.resize(static_cast<std::size_t>(rank) * m.cols);
  return rank;
}

inline int rank_of(const Gf& F, Mat m) { return rref_in_place(F, m); }

inline Mat transpose(const Mat& m) {
  Mat t(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
  return t;
}

inline Mat mat_mul(const Gf& F, const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      code_t v = a.at(i, k);
      if (!v) continue;
      for (int j = 0; j < b.cols; ++j)
        c.at(i, j) = F.add(c.at(i, j), F.mul(v, b.at(k, j)));
    }
  return c;
}

inline Vec vec_mat(const Gf& F, const Vec& v, const Mat& m) {
  Vec r(static_cast<std::size_t>(m.cols), 0);
  for (int i = 0; i < m.rows; ++i) {
    code_t x = v[static_cast<std::size_t>(i)];
    if (!x) continue;
    for (int j = 0; j < m.cols; ++j)
      r[static_cast<std::size_t>(j)] = F.add(r[static_cast<std::size_t>(j)], F.mul(x, m.at(i, j)));
  }
  return r;
}

inline Mat mat_inv(const Gf& F, const Mat& m) {
  if (m.rows != m.cols) fail("InternalCheckFailed", "inverse of non-square matrix");
  int n = m.rows;
  Mat aug(n, 2 * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) aug.at(r, c) = m.at(r, c);
    aug.at(r, n + r) = 1;
  }
  rref_in_place(F, aug);
  // the augmented rows are always independent; singularity shows up as a
  // non-identity left block
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (aug.at(r, c) != (r == c ? 1 : 0)) fail("InternalCheckFailed", "singular matrix");
  Mat inv(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) inv.at(r, c) = aug.at(r, n + c);
  return inv;
}

inline bool mat_is_invertible(const Gf& F, const Mat& m) {
  return m.rows == m.cols && rank_of(F, m) == m.rows;
}

// Basis of { x : x * m = 0 } as rows (left kernel).
inline std::vector<Vec> left_kernel(const Gf& F, const Mat& m) {
  Mat t = transpose(m);  // solve t * x^T = 0 via column view of t's RREF
  Mat r = t;
  int rank = rref_in_place(F, r);
  std::vector<int> pivot_col(static_cast<std::size_t>(rank));
  std::vector<bool> is_pivot(static_cast<std::size_t>(r.cols), false);
  for (int i = 0; i < rank; ++i) {
    int c = 0;
    while (!r.at(i, c)) ++c;
    pivot_col[static_cast<std::size_t>(i)] = c;
    is_pivot[static_cast<std::size_t>(c)] = true;
  }
  std::vector<Vec> basis;
  for (int freec = 0; freec < r.cols; ++freec) {
    if (is_pivot[static_cast<std::size_t>(freec)]) continue;
    Vec x(static_cast<std::size_t>(r.cols), 0);
    x[static_cast<std::size_t>(freec)] = 1;
    for (int i = 0; i < rank; ++i)
      x[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])] =
          F.neg(r.at(i, freec));
    basis.push_back(std::move(x));
  }
  return basis;
}

inline Mat mat_pow(const Gf& F, Mat m, std::uint64_t e) {
  Mat r = Mat::identity(m.rows);
  while (e) {
    if (e & 1) r = mat_mul(F, r, m);
    m = mat_mul(F, m, m);
    e >>= 1;
  }
  return r;
}

// Minimal polynomial of a square matrix, monic, coefficients low degree
// first. Computed as the lcm of the annihilators of the standard basis
// vectors (Krylov chains with coefficient tracking).
inline Poly min_poly(const Gf& F, const Mat& m) {
  int n = m.rows;
  Poly acc = {1};
  for (int s = 0; s < n; ++s) {
    // Krylov chain e_s, e_s m, e_s m^2, ...
    Vec v(static_cast<std::size_t>(n), 0);
    v[static_cast<std::size_t>(s)] = 1;
    Mat krylov(0, n);
    for (;;) {
      krylov.push_row(v);
      if (rank_of(F, krylov) < krylov.rows) {
        // track row operations through an identity block to read off the
        // dependency among the powers
        Mat aug(krylov.rows, n + krylov.rows);
        for (int r = 0; r < krylov.rows; ++r) {
          for (int c = 0; c < n; ++c) aug.at(r, c) = krylov.at(r, c);
          aug.at(r, n + r) = 1;
        }
        rref_in_place(F, aug);
        Poly ann(static_cast<std::size_t>(krylov.rows), 0);
        for (int r = 0; r < aug.rows; ++r) {
          bool zero_left = true;
          for (int c = 0; c < n; ++c)
            if (aug.at(r, c)) {
              zero_left = false;
              break;
            }
          if (!zero_left) continue;
          for (int c = 0; c < krylov.rows; ++c) ann[static_cast<std::size_t>(c)] = aug.at(r, n + c);
          break;
        }
        ann = poly_make_monic(F, poly_trim(std::move(ann)));
        // acc = lcm(acc, ann)
        Poly g = poly_gcd(F, acc, ann);
        Poly prod = poly_mul(F, acc, ann);
        // divide prod by g
        Poly quotient;
        {
          Poly rem = prod;
          int dg = poly_deg(g);
          int dq = poly_deg(prod) - dg;
          quotient.assign(static_cast<std::size_t>(dq + 1), 0);
          for (int i = poly_deg(rem); i >= dg; --i) {
            code_t c = rem[static_cast<std::size_t>(i)];
            if (!c) continue;
            code_t f = F.div(c, g[static_cast<std::size_t>(dg)]);
            quotient[static_cast<std::size_t>(i - dg)] = f;
            for (int j = 0; j <= dg; ++j)
              rem[static_cast<std::size_t>(i - dg + j)] =
                  F.sub(rem[static_cast<std::size_t>(i - dg + j)],
                        F.mul(f, g[static_cast<std::size_t>(j)]));
          }
        }
        acc = poly_make_monic(F, std::move(quotient));
        break;
      }
      v = vec_mat(F, v, m);
    }
    if (poly_deg(acc) == n) break;
  }
  return acc;
}

// Row-action companion matrix of a monic polynomial f: row vector c of
// coefficients maps to coefficients of x*c(x) mod f.
inline Mat companion(const Gf& F, const Poly& f) {
  int n = poly_deg(f);
  Mat c(n, n);
  for (int j = 0; j + 1 < n; ++j) c.at(j, j + 1) = 1;
  for (int j = 0; j < n; ++j) c.at(n - 1, j) = F.neg(f[static_cast<std::size_t>(j)]);
  return c;
}

}  // namespace galgeo
