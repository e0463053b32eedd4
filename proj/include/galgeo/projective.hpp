#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "galgeo/linalg.hpp"

namespace galgeo {

// A projective point is a normalized coordinate vector: first nonzero
// coordinate equal to 1. A subspace of PG(r-1,q) is the row space of a
// canonical RREF matrix, so equal subspaces compare byte-equal. rank() is the
// vector-space dimension; projdim() = rank()-1 (-1 for the empty subspace).
struct Subspace {
  int ambient = 0;
  Mat basis;  // RREF, basis.cols == ambient

  int rank() const { return basis.rows; }
  int projdim() const { return basis.rows - 1; }
  bool is_empty() const { return basis.rows == 0; }

  bool operator==(const Subspace& o) const { return ambient == o.ambient && basis == o.basis; }
  bool operator!=(const Subspace& o) const { return !(*this == o); }
  bool operator<(const Subspace& o) const {
    if (ambient != o.ambient) return ambient < o.ambient;
    if (basis.rows != o.basis.rows) return basis.rows < o.basis.rows;
    return basis.a < o.basis.a;
  }
};

struct SubspaceHash {
  std::size_t operator()(const Subspace& s) const {
    std::size_t h = 1469598103934665603ull;
    auto mix = [&h](std::size_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::size_t>(s.ambient));
    mix(static_cast<std::size_t>(s.basis.rows));
    for (code_t c : s.basis.a) mix(c);
    return h;
  }
};

using SubspaceSet = std::unordered_set<Subspace, SubspaceHash>;

struct VecHash {
  std::size_t operator()(const Vec& v) const {
    std::size_t h = 1469598103934665603ull;
    for (code_t c : v) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }
};

using PointSet = std::unordered_set<Vec, VecHash>;

inline Subspace empty_subspace(int ambient) {
  Subspace s;
  s.ambient = ambient;
  s.basis = Mat(0, ambient);
  return s;
}

inline Subspace subspace_from_matrix(const Gf& F, int ambient, Mat rows) {
  if (rows.cols != ambient) fail("AmbientMismatch", "row length does not match ambient");
  rref_in_place(F, rows);
  Subspace s;
  s.ambient = ambient;
  s.basis = std::move(rows);
  return s;
}

inline Subspace subspace_from_rows(const Gf& F, int ambient, const std::vector<Vec>& rows) {
  Mat m(0, ambient);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != ambient)
      fail("AmbientMismatch", "row length does not match ambient");
    m.push_row(r);
  }
  return subspace_from_matrix(F, ambient, std::move(m));
}

inline Subspace full_space(int ambient) {
  Subspace s;
  s.ambient = ambient;
  s.basis = Mat::identity(ambient);
  return s;
}

inline Vec normalize_point(const Gf& F, Vec v) {
  code_t lead = 0;
  for (code_t c : v)
    if (c) {
      lead = c;
      break;
    }
  if (!lead) fail("InternalCheckFailed", "zero vector is not a projective point");
  if (lead != 1) {
    code_t inv = F.inv(lead);
    for (auto& c : v) c = F.mul(c, inv);
  }
  return v;
}

inline void check_same_ambient(const Subspace& a, const Subspace& b) {
  if (a.ambient != b.ambient) fail("AmbientMismatch", "subspaces live in different spaces");
}

inline Subspace span(const Gf& F, const Subspace& a, const Subspace& b) {
  check_same_ambient(a, b);
  Mat m = a.basis;
  m.a.insert(m.a.end(), b.basis.a.begin(), b.basis.a.end());
  m.rows += b.basis.rows;
  return subspace_from_matrix(F, a.ambient, std::move(m));
}

inline Subspace span_many(const Gf& F, const std::vector<Subspace>& parts) {
  if (parts.empty()) fail("AmbientMismatch", "span of an empty list");
  Mat m(0, parts.front().ambient);
  for (const auto& p : parts) {
    if (p.ambient != parts.front().ambient) fail("AmbientMismatch", "mixed ambients in span");
    m.a.insert(m.a.end(), p.basis.a.begin(), p.basis.a.end());
    m.rows += p.basis.rows;
  }
  return subspace_from_matrix(F, parts.front().ambient, std::move(m));
}

inline Subspace span_point(const Gf& F, const Subspace& a, const Vec& pt) {
  if (static_cast<int>(pt.size()) != a.ambient)
    fail("AmbientMismatch", "point length does not match ambient");
  Mat m = a.basis;
  m.push_row(pt);
  return subspace_from_matrix(F, a.ambient, std::move(m));
}

inline Subspace point_subspace(const Gf& F, const Vec& pt) {
  Mat m(0, static_cast<int>(pt.size()));
  m.push_row(pt);
  return subspace_from_matrix(F, static_cast<int>(pt.size()), std::move(m));
}

// Largest common subspace. Coefficients c with c*[A;B] = 0 give the
// intersection as (c_A)*A.
inline Subspace meet(const Gf& F, const Subspace& a, const Subspace& b) {
  check_same_ambient(a, b);
  if (a.is_empty() || b.is_empty()) return empty_subspace(a.ambient);
  Mat st(0, a.ambient);
  st.a = a.basis.a;
  st.rows = a.basis.rows;
  st.a.insert(st.a.end(), b.basis.a.begin(), b.basis.a.end());
  st.rows += b.basis.rows;
  auto kern = left_kernel(F, st);
  Mat rows(0, a.ambient);
  for (const auto& k : kern) {
    Vec v(static_cast<std::size_t>(a.ambient), 0);
    for (int i = 0; i < a.basis.rows; ++i) {
      code_t c = k[static_cast<std::size_t>(i)];
      if (!c) continue;
      for (int j = 0; j < a.ambient; ++j)
        v[static_cast<std::size_t>(j)] = F.add(v[static_cast<std::size_t>(j)],
                                               F.mul(c, a.basis.at(i, j)));
    }
    rows.push_row(v);
  }
  return subspace_from_matrix(F, a.ambient, std::move(rows));
}

// Membership tests reduce against the RREF basis.
inline bool contains_point(const Gf& F, const Subspace& s, Vec v) {
  for (int r = 0; r < s.basis.rows; ++r) {
    int p = 0;
    while (!s.basis.at(r, p)) ++p;
    code_t c = v[static_cast<std::size_t>(p)];
    if (!c) continue;
    for (int j = p; j < s.ambient; ++j)
      v[static_cast<std::size_t>(j)] = F.sub(v[static_cast<std::size_t>(j)],
                                             F.mul(c, s.basis.at(r, j)));
  }
  for (code_t c : v)
    if (c) return false;
  return true;
}

inline bool contains(const Gf& F, const Subspace& s, const Subspace& t) {
  if (s.ambient != t.ambient) fail("AmbientMismatch", "containment across ambients");
  for (int r = 0; r < t.basis.rows; ++r)
    if (!contains_point(F, s, t.basis.row(r))) return false;
  return true;
}

inline bool disjoint(const Gf& F, const Subspace& a, const Subspace& b) {
  check_same_ambient(a, b);
  Mat st(0, a.ambient);
  st.a = a.basis.a;
  st.rows = a.basis.rows;
  st.a.insert(st.a.end(), b.basis.a.begin(), b.basis.a.end());
  st.rows += b.basis.rows;
  return rref_in_place(F, st) == a.rank() + b.rank();
}

inline std::uint64_t num_points(std::uint64_t q, int rank) {
  std::uint64_t total = 0, pw = 1;
  for (int i = 0; i < rank; ++i) {
    total += pw;
    pw *= q;
  }
  return total;
}

// All points of a subspace, sorted lexicographically by coordinate codes.
inline std::vector<Vec> points_of(const Gf& F, const Subspace& s) {
  std::vector<Vec> pts;
  int k = s.rank();
  if (k == 0) return pts;
  std::uint64_t q = F.order();
  pts.reserve(num_points(q, k));
  // coefficient vectors with first nonzero entry 1 hit each point once
  for (int lead = 0; lead < k; ++lead) {
    std::uint64_t frees = 1;
    for (int i = lead + 1; i < k; ++i) frees *= q;
    for (std::uint64_t t = 0; t < frees; ++t) {
      Vec coef(static_cast<std::size_t>(k), 0);
      coef[static_cast<std::size_t>(lead)] = 1;
      std::uint64_t v = t;
      for (int i = lead + 1; i < k; ++i) {
        coef[static_cast<std::size_t>(i)] = static_cast<code_t>(v % q);
        v /= q;
      }
      Vec pt(static_cast<std::size_t>(s.ambient), 0);
      for (int i = 0; i < k; ++i) {
        code_t c = coef[static_cast<std::size_t>(i)];
        if (!c) continue;
        for (int j = 0; j < s.ambient; ++j)
          pt[static_cast<std::size_t>(j)] = F.add(pt[static_cast<std::size_t>(j)],
                                                  F.mul(c, s.basis.at(i, j)));
      }
      pts.push_back(normalize_point(F, std::move(pt)));
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

// Deterministic complement of E: unit vectors on the non-pivot columns.
inline Subspace default_complement(const Gf& F, const Subspace& e) {
  std::vector<bool> pivot(static_cast<std::size_t>(e.ambient), false);
  for (int r = 0; r < e.basis.rows; ++r) {
    int p = 0;
    while (!e.basis.at(r, p)) ++p;
    pivot[static_cast<std::size_t>(p)] = true;
  }
  Mat m(0, e.ambient);
  for (int c = 0; c < e.ambient; ++c) {
    if (pivot[static_cast<std::size_t>(c)]) continue;
    Vec v(static_cast<std::size_t>(e.ambient), 0);
    v[static_cast<std::size_t>(c)] = 1;
    m.push_row(v);
  }
  return subspace_from_matrix(F, e.ambient, std::move(m));
}

// Projection of X from centre E onto the complementary screen Sigma.
inline Subspace project_from(const Gf& F, const Subspace& e, const Subspace& sigma,
                             const Subspace& x) {
  check_same_ambient(e, sigma);
  check_same_ambient(e, x);
  if (!disjoint(F, e, sigma) || e.rank() + sigma.rank() != e.ambient)
    fail("NotComplementary", "screen is not complementary to the centre");
  if (!disjoint(F, e, x)) fail("NotDisjoint", "projected subspace meets the centre");
  Subspace result = meet(F, span(F, e, x), sigma);
  if (result.rank() != x.rank()) fail("InternalCheckFailed", "projection changed dimension");
  return result;
}

// Coordinates of X with respect to the RREF basis of Sigma (X must lie in
// Sigma). The coefficient of basis row i is the coordinate at its pivot.
inline Subspace restrict_to(const Gf& F, const Subspace& sigma, const Subspace& x) {
  if (!contains(F, sigma, x)) fail("AmbientMismatch", "subspace not inside the carrier");
  std::vector<int> pivots;
  for (int r = 0; r < sigma.basis.rows; ++r) {
    int p = 0;
    while (!sigma.basis.at(r, p)) ++p;
    pivots.push_back(p);
  }
  Mat m(0, sigma.rank());
  for (int r = 0; r < x.basis.rows; ++r) {
    Vec v(static_cast<std::size_t>(sigma.rank()), 0);
    for (int i = 0; i < sigma.rank(); ++i) v[static_cast<std::size_t>(i)] = x.basis.at(r, pivots[static_cast<std::size_t>(i)]);
    m.push_row(v);
  }
  return subspace_from_matrix(F, sigma.rank(), std::move(m));
}

inline Vec restrict_point(const Gf& F, const Subspace& sigma, const Vec& pt) {
  if (!contains_point(F, sigma, pt)) fail("AmbientMismatch", "point not inside the carrier");
  Vec v(static_cast<std::size_t>(sigma.rank()), 0);
  for (int r = 0; r < sigma.basis.rows; ++r) {
    int p = 0;
    while (!sigma.basis.at(r, p)) ++p;
    v[static_cast<std::size_t>(r)] = pt[static_cast<std::size_t>(p)];
  }
  return v;
}

inline Vec embed_point(const Gf& F, const Subspace& sigma, const Vec& small) {
  return vec_mat(F, small, sigma.basis);
}

inline Subspace embed_from(const Gf& F, const Subspace& sigma, const Subspace& x_small) {
  if (x_small.ambient != sigma.rank()) fail("AmbientMismatch", "restricted ambient mismatch");
  Mat m(0, sigma.ambient);
  for (int r = 0; r < x_small.basis.rows; ++r)
    m.push_row(vec_mat(F, x_small.basis.row(r), sigma.basis));
  return subspace_from_matrix(F, sigma.ambient, std::move(m));
}

inline std::uint64_t gaussian_binomial(std::uint64_t q, int r, int k) {
  // [r choose k]_q as an exact integer; each partial product is itself a
  // Gaussian binomial, so the divisions are exact
  if (k < 0 || k > r) return 0;
  auto qpow = [&](int e) {
    std::uint64_t v = 1;
    for (int i = 0; i < e; ++i) v *= q;
    return v;
  };
  std::uint64_t result = 1;
  for (int i = 0; i < k; ++i) {
    result *= qpow(r - i) - 1;
    result /= qpow(i + 1) - 1;
  }
  return result;
}

// Streaming enumeration of all subspaces of projective dimension d in
// PG(r-1,q): every RREF shape (pivot column choice) with every filling of the
// free entries, in deterministic order.
class SubspaceEnumerator {
 public:
  SubspaceEnumerator(const Gf& F, int ambient, int projdim)
      : F_(F), ambient_(ambient), k_(projdim + 1) {
    if (k_ < 0 || k_ > ambient_) {
      done_ = true;
      return;
    }
    if (k_ == 0) {
      // single empty subspace
      empty_pending_ = true;
      return;
    }
    pivots_.resize(static_cast<std::size_t>(k_));
    for (int i = 0; i < k_; ++i) pivots_[static_cast<std::size_t>(i)] = i;
    reset_free();
  }

  std::optional<Subspace> next() {
    if (empty_pending_) {
      empty_pending_ = false;
      done_ = true;
      return empty_subspace(ambient_);
    }
    if (done_) return std::nullopt;
    Subspace s = current();
    advance();
    return s;
  }

 private:
  void reset_free() {
    free_slots_.clear();
    for (int i = 0; i < k_; ++i)
      for (int c = pivots_[static_cast<std::size_t>(i)] + 1; c < ambient_; ++c) {
        bool is_pivot = false;
        for (int j = 0; j < k_; ++j)
          if (pivots_[static_cast<std::size_t>(j)] == c) is_pivot = true;
        if (!is_pivot) free_slots_.push_back({i, c});
      }
    free_vals_.assign(free_slots_.size(), 0);
  }

  Subspace current() const {
    Mat m(k_, ambient_);
    for (int i = 0; i < k_; ++i) m.at(i, pivots_[static_cast<std::size_t>(i)]) = 1;
    for (std::size_t t = 0; t < free_slots_.size(); ++t)
      m.at(free_slots_[t].first, free_slots_[t].second) = free_vals_[t];
    Subspace s;
    s.ambient = ambient_;
    s.basis = std::move(m);
    return s;
  }

  void advance() {
    std::uint32_t q = F_.order();
    int t = static_cast<int>(free_vals_.size()) - 1;
    while (t >= 0) {
      if (++free_vals_[static_cast<std::size_t>(t)] < q) return;
      free_vals_[static_cast<std::size_t>(t)] = 0;
      --t;
    }
    // next pivot combination
    int i = k_ - 1;
    while (i >= 0 && pivots_[static_cast<std::size_t>(i)] == ambient_ - k_ + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++pivots_[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k_; ++j)
      pivots_[static_cast<std::size_t>(j)] = pivots_[static_cast<std::size_t>(j - 1)] + 1;
    reset_free();
  }

  const Gf& F_;
  int ambient_, k_;
  std::vector<int> pivots_;
  std::vector<std::pair<int, int>> free_slots_;
  std::vector<code_t> free_vals_;
  bool done_ = false;
  bool empty_pending_ = false;
};

inline std::vector<Subspace> all_subspaces(const Gf& F, int ambient, int projdim,
                                           std::uint64_t max_count = 2'000'000) {
  std::uint64_t total = gaussian_binomial(F.order(), ambient, projdim + 1);
  if (total > max_count)
    fail("TooLarge", "subspace enumeration of size " + std::to_string(total));
  std::vector<Subspace> out;
  out.reserve(total);
  SubspaceEnumerator e(F, ambient, projdim);
  while (auto s = e.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace galgeo
