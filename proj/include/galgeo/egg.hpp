#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "galgeo/spread.hpp"

namespace galgeo {

// ---------------------------------------------------------------------------
// Caps of points over the extension field, the inputs to field reduction.
// ---------------------------------------------------------------------------

struct PointCap {
  TowerPtr tower;
  int dim = 0;              // number of coordinates, i.e. PG(dim-1, q^n)
  std::vector<Vec> points;  // extension-field codes, normalized, sorted
};

inline PointCap make_point_cap(TowerPtr tower, int dim, std::vector<Vec> pts) {
  const Gf& E = tower->ext();
  for (auto& p : pts) p = normalize_point(E, std::move(p));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return PointCap{std::move(tower), dim, std::move(pts)};
}

// no three points on a common line
inline bool is_cap(const PointCap& pc) {
  const Gf& E = pc.tower->ext();
  std::size_t s = pc.points.size();
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j)
      for (std::size_t k = j + 1; k < s; ++k) {
        Mat m(0, pc.dim);
        m.push_row(pc.points[i]);
        m.push_row(pc.points[j]);
        m.push_row(pc.points[k]);
        if (rank_of(E, m) < 3) return false;
      }
  return true;
}

// {(1, t, t^2)} plus the point at infinity of the tangent direction
inline PointCap construct_conic(const TowerPtr& tower) {
  const Gf& E = tower->ext();
  std::vector<Vec> pts;
  for (code_t t = 0; t < E.order(); ++t) pts.push_back({1, t, E.mul(t, t)});
  pts.push_back({0, 0, 1});
  auto cap = make_point_cap(tower, 3, std::move(pts));
  if (cap.points.size() != E.order() + 1 || !is_cap(cap))
    fail("InternalCheckFailed", "conic construction broke");
  return cap;
}

// zero set of x0*x1 + f(x2,x3) for the lex-smallest irreducible binary
// quadratic f over GF(q^n)
inline PointCap construct_elliptic_quadric(const TowerPtr& tower) {
  const Gf& E = tower->ext();
  code_t fa = 0, fb = 0, fc = 0;
  bool found = false;
  for (std::uint32_t a = 0; a < E.order() && !found; ++a)
    for (std::uint32_t b = 0; b < E.order() && !found; ++b)
      for (std::uint32_t c = 0; c < E.order() && !found; ++c) {
        bool has_root = false;
        for (const auto& uv : points_of(E, full_space(2))) {
          code_t u = uv[0], v = uv[1];
          code_t val = E.add(E.add(E.mul(static_cast<code_t>(a), E.mul(u, u)),
                                   E.mul(static_cast<code_t>(b), E.mul(u, v))),
                             E.mul(static_cast<code_t>(c), E.mul(v, v)));
          if (val == 0) {
            has_root = true;
            break;
          }
        }
        if (!has_root) {
          fa = static_cast<code_t>(a);
          fb = static_cast<code_t>(b);
          fc = static_cast<code_t>(c);
          found = true;
        }
      }
  if (!found) fail("InternalCheckFailed", "no irreducible binary quadratic");
  std::vector<Vec> pts;
  for (const auto& p : points_of(E, full_space(4))) {
    code_t val = E.add(E.mul(p[0], p[1]),
                       E.add(E.add(E.mul(fa, E.mul(p[2], p[2])), E.mul(fb, E.mul(p[2], p[3]))),
                             E.mul(fc, E.mul(p[3], p[3]))));
    if (val == 0) pts.push_back(p);
  }
  auto cap = make_point_cap(tower, 4, std::move(pts));
  std::uint64_t q2 = static_cast<std::uint64_t>(E.order()) * E.order();
  if (cap.points.size() != q2 + 1 || !is_cap(cap))
    fail("InternalCheckFailed", "elliptic quadric construction broke");
  return cap;
}

// ---------------------------------------------------------------------------
// Pseudo-caps
// ---------------------------------------------------------------------------

struct PseudoCap {
  TowerPtr tower;
  int n = 0, m = 0;                // elements are (n-1)-spaces of PG(2n+m-1,q)
  std::vector<Subspace> elements;  // sorted canonically

  int ambient() const { return 2 * n + m; }
  std::uint64_t qm() const {
    std::uint64_t v = 1;
    for (int i = 0; i < m; ++i) v *= tower->q();
    return v;
  }
  std::uint64_t qn() const {
    std::uint64_t v = 1;
    for (int i = 0; i < n; ++i) v *= tower->q();
    return v;
  }
};

inline PseudoCap make_pseudo_cap(TowerPtr tower, int n, int m, std::vector<Subspace> elements) {
  PseudoCap cap;
  cap.tower = std::move(tower);
  cap.n = n;
  cap.m = m;
  for (const auto& e : elements) {
    if (e.ambient != 2 * n + m) fail("DimensionMismatch", "element in wrong ambient space");
    if (e.rank() != n) fail("DimensionMismatch", "element of wrong dimension");
  }
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  cap.elements = std::move(elements);
  return cap;
}

inline PseudoCap sub_pseudo_cap(const PseudoCap& cap, const std::vector<int>& keep) {
  std::vector<Subspace> els;
  for (int i : keep) els.push_back(cap.elements[static_cast<std::size_t>(i)]);
  return make_pseudo_cap(cap.tower, cap.n, cap.m, std::move(els));
}

// any three elements span a (3n-1)-space (pairs must then be disjoint)
inline bool is_pseudo_cap(const PseudoCap& cap) {
  const Gf& F = cap.tower->base();
  std::size_t s = cap.elements.size();
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j)
      if (!disjoint(F, cap.elements[i], cap.elements[j])) return false;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j)
      for (std::size_t k = j + 1; k < s; ++k) {
        Mat st(0, cap.elements[i].ambient);
        for (const auto* e : {&cap.elements[i], &cap.elements[j], &cap.elements[k]}) {
          st.a.insert(st.a.end(), e->basis.a.begin(), e->basis.a.end());
          st.rows += e->basis.rows;
        }
        if (rref_in_place(F, st) != 3 * cap.n) return false;
      }
  return true;
}

inline bool is_weak_egg(const PseudoCap& cap) {
  return is_pseudo_cap(cap) && cap.elements.size() == cap.qm() + 1;
}

// Field reduction of a cap: elementary pseudo-caps by construction.
inline PseudoCap field_reduce_cap(const PointCap& pc) {
  if (!is_cap(pc)) fail("DimensionMismatch", "input points are not a cap");
  int n = pc.tower->n();
  std::vector<Subspace> elements;
  for (const auto& p : pc.points) elements.push_back(field_reduce_point(pc.tower, p));
  PseudoCap cap = make_pseudo_cap(pc.tower, n, (pc.dim - 2) * n, std::move(elements));
  if (cap.elements.size() != pc.points.size() || !is_pseudo_cap(cap))
    fail("InternalCheckFailed", "field reduction did not yield a pseudo-cap");
  return cap;
}

inline PseudoCap pseudo_conic(const TowerPtr& tower) {
  return field_reduce_cap(construct_conic(tower));
}

inline PseudoCap classical_pseudo_ovoid(const TowerPtr& tower) {
  return field_reduce_cap(construct_elliptic_quadric(tower));
}

// ---------------------------------------------------------------------------
// Induced partial spreads, tangent spaces, egg certificates
// ---------------------------------------------------------------------------

// Projections of the other elements from element idx onto a complementary
// screen, in the screen's own coordinates.
inline PartialSpread induced_partial_spread(const PseudoCap& cap, int idx,
                                            std::optional<Subspace> sigma = std::nullopt) {
  const Gf& F = cap.tower->base();
  const Subspace& e = cap.elements[static_cast<std::size_t>(idx)];
  Subspace sig = sigma ? *sigma : default_complement(F, e);
  if (!disjoint(F, e, sig) || e.rank() + sig.rank() != e.ambient)
    fail("NotComplementary", "screen is not complementary to the element");
  std::vector<Subspace> members;
  for (std::size_t i = 0; i < cap.elements.size(); ++i) {
    if (static_cast<int>(i) == idx) continue;
    members.push_back(restrict_to(F, sig, project_from(F, e, sig, cap.elements[i])));
  }
  return make_partial_spread(F, sig.rank(), std::move(members));
}

// Points of the screen not covered by the induced partial spread.
inline std::vector<Vec> induced_holes(const PseudoCap& cap, int idx, const Subspace& sigma) {
  const Gf& F = cap.tower->base();
  PartialSpread s = induced_partial_spread(cap, idx, sigma);
  PointSet covered;
  for (const auto& m : s.members)
    for (const auto& p : points_of(F, m)) covered.insert(p);
  std::vector<Vec> holes;
  for (const auto& p : points_of(F, full_space(sigma.rank())))
    if (!covered.count(p)) holes.push_back(p);
  return holes;
}

// The (n+m-1)-space through the element meeting the cap only there, when the
// quotient holes line up in an (m-1)-space.
inline std::optional<Subspace> tangent_space_at(const PseudoCap& cap, int idx) {
  const Gf& F = cap.tower->base();
  const Subspace& e = cap.elements[static_cast<std::size_t>(idx)];
  Subspace sig = default_complement(F, e);
  auto holes = induced_holes(cap, idx, sig);
  Mat rows(0, sig.rank());
  for (const auto& h : holes) rows.push_row(h);
  Subspace hole_space = subspace_from_matrix(F, sig.rank(), std::move(rows));
  if (hole_space.rank() != cap.m) return std::nullopt;
  if (num_points(F.order(), cap.m) != holes.size()) return std::nullopt;
  return span(F, e, embed_from(F, sig, hole_space));
}

struct EggCheck {
  std::optional<std::vector<Subspace>> tangents;  // parallel to cap.elements
  int failing_element = -1;
};

inline EggCheck is_egg(const PseudoCap& cap) {
  EggCheck out;
  const Gf& F = cap.tower->base();
  std::vector<Subspace> tangents;
  for (std::size_t i = 0; i < cap.elements.size(); ++i) {
    auto t = tangent_space_at(cap, static_cast<int>(i));
    if (!t) {
      out.failing_element = static_cast<int>(i);
      return out;
    }
    for (std::size_t j = 0; j < cap.elements.size(); ++j)
      if (j != i && !disjoint(F, *t, cap.elements[j]))
        fail("InternalCheckFailed", "tangent space meets another element");
    tangents.push_back(std::move(*t));
  }
  out.tangents = std::move(tangents);
  return out;
}

// ---------------------------------------------------------------------------
// Goodness
// ---------------------------------------------------------------------------

struct GoodnessReport {
  int element = -1;
  bool good = false;
  std::vector<int> section_counts;  // sizes of all (3n-1)-sections through the
                                    // element and at least two others
};

inline std::vector<int> section_elements(const PseudoCap& cap, const Subspace& pi) {
  const Gf& F = cap.tower->base();
  std::vector<int> out;
  for (std::size_t i = 0; i < cap.elements.size(); ++i)
    if (contains(F, pi, cap.elements[i])) out.push_back(static_cast<int>(i));
  return out;
}

inline GoodnessReport is_good_at(const PseudoCap& cap, int idx) {
  if (cap.m <= cap.n) fail("GoodnessUndefined", "goodness needs m > n");
  const Gf& F = cap.tower->base();
  const Subspace& e = cap.elements[static_cast<std::size_t>(idx)];
  std::map<Subspace, std::set<int>> buckets;
  for (std::size_t i = 0; i < cap.elements.size(); ++i) {
    if (static_cast<int>(i) == idx) continue;
    for (std::size_t j = i + 1; j < cap.elements.size(); ++j) {
      if (static_cast<int>(j) == idx) continue;
      Subspace pi = span(F, e, span(F, cap.elements[i], cap.elements[j]));
      auto& b = buckets[pi];
      b.insert(static_cast<int>(i));
      b.insert(static_cast<int>(j));
    }
  }
  GoodnessReport rep;
  rep.element = idx;
  rep.good = true;
  std::uint64_t want = cap.qn() + 1;
  for (const auto& [pi, mem] : buckets) {
    int count = static_cast<int>(mem.size()) + 1;  // the element itself
    rep.section_counts.push_back(count);
    if (static_cast<std::uint64_t>(count) != want) rep.good = false;
  }
  std::sort(rep.section_counts.begin(), rep.section_counts.end());
  return rep;
}

// Theorem route: goodness corresponds to the induced partial spread extending
// to a Desarguesian spread. Requires a weak egg (q odd) or an egg (q even).
inline std::optional<DesarguesianWitness> good_via_spread(const PseudoCap& cap, int idx) {
  if (!is_weak_egg(cap)) fail("HypothesisUnmet", "input is not a weak egg");
  if (cap.tower->q() % 2 == 0) {
    auto egg = is_egg(cap);
    if (!egg.tangents)
      fail("HypothesisUnmet", "q even requires an egg certificate; element " +
                                  std::to_string(egg.failing_element) + " has no tangent space");
  }
  auto res = extends_to_desarguesian(cap.tower, induced_partial_spread(cap, idx));
  if (res.status == ExtensionResult::Status::Extended) return std::move(res.witness);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Elementarity
// ---------------------------------------------------------------------------

// Project the other elements from element idx onto an explicit screen given
// in ambient coordinates, keeping the result there.
inline std::vector<Subspace> projected_elements(const PseudoCap& cap, int idx,
                                                const Subspace& sigma) {
  const Gf& F = cap.tower->base();
  const Subspace& e = cap.elements[static_cast<std::size_t>(idx)];
  std::vector<Subspace> out;
  for (std::size_t i = 0; i < cap.elements.size(); ++i) {
    if (static_cast<int>(i) == idx) continue;
    out.push_back(project_from(F, e, sigma, cap.elements[i]));
  }
  return out;
}

// Extend the partial spread induced on an explicit screen; returns members in
// ambient coordinates plus the witness relative to the screen.
inline std::optional<std::pair<PartialSpread, DesarguesianWitness>> extend_induced_on(
    const PseudoCap& cap, int idx, const Subspace& sigma) {
  const Gf& F = cap.tower->base();
  auto proj = projected_elements(cap, idx, sigma);
  std::vector<Subspace> small;
  for (const auto& p : proj) small.push_back(restrict_to(F, sigma, p));
  auto res = extends_to_desarguesian(cap.tower, make_partial_spread(F, sigma.rank(), small));
  if (res.status != ExtensionResult::Status::Extended) return std::nullopt;
  PartialSpread big;
  big.ambient = sigma.ambient;
  big.element_rank = cap.n;
  for (const auto& mloc : res.spread->members) big.members.push_back(embed_from(F, sigma, mloc));
  std::sort(big.members.begin(), big.members.end());
  return std::make_pair(std::move(big), std::move(*res.witness));
}

// Collapse the elements of a cap contained in a Desarguesian spread of the
// whole space back to points over GF(q^n).
inline PointCap collapse_cap(const PseudoCap& cap, const DesarguesianWitness& w) {
  const Gf& F = cap.tower->base();
  int n = cap.n;
  int d = cap.ambient();
  int k = d / n;
  Mat j = w.J;
  // module basis of the whole space
  Mat t(0, d);
  Subspace covered = empty_subspace(d);
  for (const auto& p : points_of(F, full_space(d))) {
    if (t.rows == d) break;
    if (contains_point(F, covered, p)) continue;
    Mat rows = covered.basis;
    Vec v = p;
    for (int e = 0; e < n; ++e) {
      rows.push_row(v);
      v = vec_mat(F, v, j);
    }
    Subspace bigger = subspace_from_matrix(F, d, std::move(rows));
    if (bigger.rank() != covered.rank() + n) continue;
    covered = std::move(bigger);
    Vec u = p;
    for (int e = 0; e < n; ++e) {
      t.push_row(u);
      u = vec_mat(F, u, j);
    }
  }
  if (t.rows != d) fail("InternalCheckFailed", "no module basis for the collapse");
  Mat tinv = mat_inv(F, t);
  std::vector<Vec> pts;
  for (const auto& el : cap.elements) {
    Vec c = vec_mat(F, el.basis.row(0), tinv);
    Vec pt(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
      std::vector<code_t> digits(c.begin() + i * n, c.begin() + (i + 1) * n);
      pt[static_cast<std::size_t>(i)] = cap.tower->vector_to_ext(digits);
    }
    pts.push_back(std::move(pt));
  }
  return make_point_cap(cap.tower, k, std::move(pts));
}

struct ElementarityResult {
  bool elementary = false;
  std::optional<DesarguesianWitness> witness;
  std::optional<PointCap> collapsed;
  std::vector<std::string> warnings;
  std::string note;
};

// Two elements with extendable induced spreads force the whole cap into one
// Desarguesian spread; constructive, with the final containment verified.
inline ElementarityResult is_elementary(const PseudoCap& cap) {
  ElementarityResult out;
  const Gf& F = cap.tower->base();
  int n = cap.n;
  if (cap.m != 2 * n) fail("WrongDimension", "elementarity procedure needs ambient PG(4n-1,q)");
  std::uint64_t q = cap.tower->q();

  // size bound with k the largest proper divisor of n (q^n + 2 when n = 1)
  std::uint64_t bound;
  if (n == 1) {
    bound = q + 2;
  } else {
    int kk = 1;
    for (int d = n / 2; d >= 1; --d)
      if (n % d == 0) {
        kk = d;
        break;
      }
    auto qpow = [&](int e) {
      std::uint64_t v = 1;
      for (int i = 0; i < e; ++i) v *= q;
      return v;
    };
    bound = (q % 2 == 1) ? qpow(n + kk) + qpow(n) - qpow(kk) + 1 : qpow(n + kk) + qpow(n) + 2;
  }
  if (cap.elements.size() <= bound)
    out.warnings.push_back("SizeBoundUnmet: cap size " + std::to_string(cap.elements.size()) +
                           " is not above " + std::to_string(bound));

  // two elements whose induced partial spreads extend
  int e1 = -1, e2 = -1;
  for (std::size_t i = 0; i < cap.elements.size() && e2 < 0; ++i) {
    auto res = extends_to_desarguesian(cap.tower, induced_partial_spread(cap, static_cast<int>(i)));
    if (res.status == ExtensionResult::Status::Extended) {
      if (e1 < 0)
        e1 = static_cast<int>(i);
      else
        e2 = static_cast<int>(i);
    }
  }
  if (e2 < 0) {
    out.note = "NoExtendablePair";
    return out;
  }

  // elements completing a frame of the whole space
  int e3 = -1, e4 = -1;
  for (std::size_t i = 0; i < cap.elements.size() && e4 < 0; ++i) {
    if (static_cast<int>(i) == e1 || static_cast<int>(i) == e2) continue;
    for (std::size_t j = i + 1; j < cap.elements.size() && e4 < 0; ++j) {
      if (static_cast<int>(j) == e1 || static_cast<int>(j) == e2) continue;
      Subspace four = span_many(
          F, {cap.elements[static_cast<std::size_t>(e1)], cap.elements[static_cast<std::size_t>(e2)],
              cap.elements[i], cap.elements[j]});
      if (four.rank() == 4 * n) {
        e3 = static_cast<int>(i);
        e4 = static_cast<int>(j);
      }
    }
  }
  if (e4 < 0) {
    out.note = "no spanning quadruple of elements";
    return out;
  }

  Subspace sigma1 = span_many(F, {cap.elements[static_cast<std::size_t>(e2)],
                                  cap.elements[static_cast<std::size_t>(e3)],
                                  cap.elements[static_cast<std::size_t>(e4)]});
  Subspace sigma2 = span_many(F, {cap.elements[static_cast<std::size_t>(e1)],
                                  cap.elements[static_cast<std::size_t>(e3)],
                                  cap.elements[static_cast<std::size_t>(e4)]});
  auto d1 = extend_induced_on(cap, e1, sigma1);
  auto d2 = extend_induced_on(cap, e2, sigma2);
  if (!d1 || !d2) {
    out.note = "induced spread on the frame did not extend";
    return out;
  }

  // both restrictions to <E3,E4> must carry the same spread
  Subspace w34 = span(F, cap.elements[static_cast<std::size_t>(e3)],
                      cap.elements[static_cast<std::size_t>(e4)]);
  SubspaceSet s1, s2;
  for (const auto& m : d1->first.members)
    if (contains(F, w34, m)) s1.insert(m);
  for (const auto& m : d2->first.members)
    if (contains(F, w34, m)) s2.insert(m);
  if (s1 != s2) {
    out.note = "restriction spreads disagree";
    return out;
  }

  // extend D1 by two elements of D2 \ D1
  SubspaceSet d1set = member_set(d1->first);
  std::optional<std::pair<PartialSpread, DesarguesianWitness>> big;
  for (std::size_t i = 0; i < d2->first.members.size() && !big; ++i) {
    const Subspace& a = d2->first.members[i];
    if (d1set.count(a) || !disjoint(F, a, sigma1)) continue;
    for (std::size_t j = i + 1; j < d2->first.members.size() && !big; ++j) {
      const Subspace& b = d2->first.members[j];
      if (d1set.count(b) || !disjoint(F, b, sigma1)) continue;
      if (!disjoint(F, a, b)) continue;
      Subspace mu = meet(F, span(F, a, b), sigma1);
      if (mu.rank() != n || !d1set.count(mu)) continue;
      if (!disjoint(F, mu, a) || !disjoint(F, mu, b)) continue;
      try {
        big = unique_desarguesian_extension(cap.tower, d1->first, d1->second, mu, a, b);
      } catch (const Error&) {
      }
    }
  }
  if (!big) {
    out.note = "no extension pair from the second frame spread";
    return out;
  }

  SubspaceSet bigset = member_set(big->first);
  for (const auto& el : cap.elements)
    if (!bigset.count(el)) {
      out.note = "an element escapes the constructed spread";
      return out;
    }

  out.elementary = true;
  out.witness = big->second;
  out.collapsed = collapse_cap(cap, big->second);
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo-oval elementarity (used by the five-coplanar characterisation)
// ---------------------------------------------------------------------------

struct PseudoOvalCheck {
  bool elementary = false;
  Subspace carrier;  // span of the oval, ambient coordinates
  std::optional<PartialSpread> spread;  // in carrier-restricted coordinates
  std::optional<DesarguesianWitness> witness;
  std::string note;
};

inline PseudoOvalCheck pseudo_oval_elementary(const TowerPtr& tower,
                                              const std::vector<Subspace>& oval) {
  const Gf& F = tower->base();
  int n = tower->n();
  PseudoOvalCheck out;
  out.carrier = span_many(F, oval);
  if (out.carrier.rank() != 3 * n) fail("DimensionMismatch", "oval does not span a (3n-1)-space");
  std::vector<Subspace> local;
  for (const auto& e : oval) local.push_back(restrict_to(F, out.carrier, e));
  std::sort(local.begin(), local.end());

  const Subspace& f0 = local.front();
  Subspace screen = default_complement(F, f0);
  std::vector<Subspace> proj;
  for (std::size_t i = 1; i < local.size(); ++i)
    proj.push_back(restrict_to(F, screen, project_from(F, f0, screen, local[i])));
  PartialSpread induced = make_partial_spread(F, screen.rank(), proj);
  Subspace hole;
  try {
    hole = extend_deficiency_one(F, induced);
  } catch (const Error&) {
    out.note = "induced spread does not close";
    return out;
  }
  PartialSpread fullsmall = induced;
  fullsmall.members.push_back(hole);
  std::sort(fullsmall.members.begin(), fullsmall.members.end());
  auto wit = try_witness_from_spread_set(tower, fullsmall);
  if (!wit) {
    out.note = "closed spread carries no field certificate";
    return out;
  }
  PartialSpread base;
  base.ambient = 3 * n;
  base.element_rank = n;
  for (const auto& mm : fullsmall.members) base.members.push_back(embed_from(F, screen, mm));
  std::sort(base.members.begin(), base.members.end());
  SubspaceSet baseset = member_set(base);

  for (std::size_t i = 1; i < local.size(); ++i) {
    const Subspace& x = local[i];
    Subspace mu = meet(F, span(F, f0, x), screen);
    if (mu.rank() != n || !baseset.count(mu)) continue;
    if (!disjoint(F, mu, x) || !disjoint(F, mu, f0)) continue;
    try {
      auto [spread3n, wit3n] = unique_desarguesian_extension(tower, base, *wit, mu, f0, x);
      SubspaceSet got = member_set(spread3n);
      bool all = true;
      for (const auto& e : local) all = all && got.count(e);
      if (!all) {
        out.note = "oval element escapes its spread";
        return out;
      }
      out.elementary = true;
      out.spread = std::move(spread3n);
      out.witness = std::move(wit3n);
      return out;
    } catch (const Error&) {
    }
  }
  out.note = "no admissible second element for the extension";
  return out;
}

// ---------------------------------------------------------------------------
// Five coplanar elements off a good element
// ---------------------------------------------------------------------------

enum class OvalCheckMode { Direct, ConicCorollary };

struct GoodElementElementarity {
  DesarguesianWitness witness;
  int coplanar_elements = 0;
  int ovals_checked = 0;
  bool used_conic_corollary = false;
  int propagation_ovals = 0;  // ovals through {E,E3} with partners in O1 and O2
};

inline GoodElementElementarity elementarity_via_good_element(const PseudoCap& cap, int idx,
                                                             const Subspace& pi,
                                                             OvalCheckMode mode) {
  const Gf& F = cap.tower->base();
  int n = cap.n;
  std::uint64_t q = cap.tower->q();
  if (cap.m != 2 * n) fail("WrongDimension", "needs a weak egg in PG(4n-1,q)");
  if (n <= 1 || cap.qn() <= 4)
    fail("HypothesisViolated", "the five-coplanar characterisation needs n > 1 and q^n > 4");
  if (mode == OvalCheckMode::ConicCorollary && q % 2 == 0)
    fail("HypothesisViolated", "the conic corollary needs q odd");

  const Subspace& e = cap.elements[static_cast<std::size_t>(idx)];
  if (pi.rank() != 3 * n || !disjoint(F, e, pi))
    fail("HypothesisViolated", "need a (3n-1)-space disjoint from the element");

  auto rep = is_good_at(cap, idx);
  if (!rep.good) fail("GoodnessFails", "cap is not good at the chosen element");

  auto inside = section_elements(cap, pi);
  if (static_cast<int>(inside.size()) < 5)
    fail("TooFewCoplanarElements", "only " + std::to_string(inside.size()) +
                                       " elements inside the chosen space");
  GoodElementElementarity out;
  out.coplanar_elements = static_cast<int>(inside.size());
  int i1 = inside[0], i2 = inside[1], i3 = inside[2], i4 = inside[3], i5 = inside[4];

  // hypothesis: all pseudo-ovals through {E,E1}, {E,E2}, {E,E3} elementary
  if (mode == OvalCheckMode::ConicCorollary) {
    out.used_conic_corollary = true;  // goodness at E with q odd covers them
  } else {
    for (int t : {i1, i2, i3}) {
      SubspaceSet seen;
      for (std::size_t x = 0; x < cap.elements.size(); ++x) {
        if (static_cast<int>(x) == idx || static_cast<int>(x) == t) continue;
        Subspace os = span(F, e, span(F, cap.elements[static_cast<std::size_t>(t)],
                                      cap.elements[x]));
        if (!seen.insert(os).second) continue;
        std::vector<Subspace> oval;
        for (int j : section_elements(cap, os)) oval.push_back(cap.elements[static_cast<std::size_t>(j)]);
        if (oval.size() != cap.qn() + 1)
          fail("OvalNotElementary", "section through the pair is not a pseudo-oval");
        auto chk = pseudo_oval_elementary(cap.tower, oval);
        if (!chk.elementary)
          fail("OvalNotElementary", "pseudo-oval through the pair: " + chk.note);
        ++out.ovals_checked;
      }
    }
  }

  // Desarguesian spread of the screen through the five elements
  auto d0 = extend_induced_on(cap, idx, pi);
  if (!d0) fail("GoodnessFails", "induced spread on the chosen space does not extend");
  SubspaceSet d0set = member_set(d0->first);

  auto tangent = tangent_space_at(cap, idx);
  if (!tangent) fail("GoodnessFails", "no tangent space at the good element");

  Subspace f = meet(F, span(F, cap.elements[static_cast<std::size_t>(i1)],
                            cap.elements[static_cast<std::size_t>(i5)]),
                    span(F, cap.elements[static_cast<std::size_t>(i2)],
                         cap.elements[static_cast<std::size_t>(i4)]));
  Subspace fprime = meet(F, span(F, cap.elements[static_cast<std::size_t>(i1)],
                                 cap.elements[static_cast<std::size_t>(i5)]),
                         span(F, cap.elements[static_cast<std::size_t>(i3)],
                              cap.elements[static_cast<std::size_t>(i4)]));
  if (f.rank() != n || !d0set.count(f))
    fail("InternalCheckFailed", "diagonal space is not a spread member");
  if (fprime.rank() != n || !d0set.count(fprime))
    fail("InternalCheckFailed", "second diagonal space is not a spread member");

  Subspace g;
  if (!contains(F, *tangent, f)) {
    g = f;
  } else if (!contains(F, *tangent, fprime)) {
    g = fprime;
    std::swap(i2, i3);  // the two middle elements trade roles
  } else {
    fail("HypothesisViolated", "both diagonal spaces lie in the tangent space");
  }

  // the element met by <E, G>
  int i6 = -1;
  for (std::size_t x = 0; x < cap.elements.size(); ++x) {
    if (static_cast<int>(x) == idx) continue;
    if (project_from(F, e, pi, cap.elements[x]) == g) {
      i6 = static_cast<int>(x);
      break;
    }
  }
  if (i6 < 0) fail("InternalCheckFailed", "no element projects onto the chosen member");
  const Subspace& e6 = cap.elements[static_cast<std::size_t>(i6)];
  if (!disjoint(F, e6, g)) fail("HypothesisViolated", "the sixth element meets the member");

  auto [dbig, wbig] = unique_desarguesian_extension(cap.tower, d0->first, d0->second, g, e, e6);
  SubspaceSet dset = member_set(dbig);
  for (const auto& el : cap.elements)
    if (!dset.count(el))
      fail("HypothesisViolated", "an element of the cap escapes the constructed spread");

  // propagation bookkeeping along the ovals of the proof
  auto o1 = section_elements(cap, span(F, e, span(F, cap.elements[static_cast<std::size_t>(i1)],
                                                  cap.elements[static_cast<std::size_t>(i5)])));
  auto o2 = section_elements(cap, span(F, e, span(F, cap.elements[static_cast<std::size_t>(i2)],
                                                  cap.elements[static_cast<std::size_t>(i4)])));
  std::set<int> o1set(o1.begin(), o1.end()), o2set(o2.begin(), o2.end());
  SubspaceSet seen3;
  for (std::size_t x = 0; x < cap.elements.size(); ++x) {
    if (static_cast<int>(x) == idx || static_cast<int>(x) == i3) continue;
    Subspace os = span(F, e, span(F, cap.elements[static_cast<std::size_t>(i3)], cap.elements[x]));
    if (!seen3.insert(os).second) continue;
    auto o = section_elements(cap, os);
    bool has7 = false, has8 = false;
    for (int j : o) {
      if (j != idx && o1set.count(j)) has7 = true;
      if (j != idx && o2set.count(j)) has8 = true;
    }
    if (has7 && has8) ++out.propagation_ovals;
  }

  out.witness = std::move(wbig);
  return out;
}

// ---------------------------------------------------------------------------
// Parameter restrictions
// ---------------------------------------------------------------------------

struct ParamVerdict {
  bool allowed = false;
  std::string reason;
  std::optional<int> odd_a;  // the odd a with m*a = n*(a+1), when m != n
};

inline ParamVerdict parameter_check(int n, int m, std::uint64_t q, bool require_good) {
  ParamVerdict v;
  if (n < 1 || m < 1) {
    v.reason = "degenerate parameters";
    return v;
  }
  bool q_even = (q % 2 == 0);
  if (require_good) {
    if (m <= n) {
      v.reason = "goodness is defined only for m > n";
      return v;
    }
    if (m % n != 0) {
      v.reason = "good eggs need n to divide m";
      return v;
    }
    if (m != 2 * n) {
      v.reason = "good eggs exist only in PG(4n-1,q)";
      return v;
    }
  }
  if (m != n) {
    // m*a = n*(a+1) forces a = n/(m-n), odd and positive
    if (m < n || n % (m - n) != 0) {
      v.reason = "no odd a with m*a = n*(a+1)";
      return v;
    }
    int a = n / (m - n);
    if (a % 2 == 0) {
      v.reason = "the solution a = " + std::to_string(a) + " is even";
      return v;
    }
    if (q_even && m != 2 * n) {
      v.reason = "q even admits only m = n or m = 2n";
      return v;
    }
    v.odd_a = a;
  }
  v.allowed = true;
  return v;
}

// ---------------------------------------------------------------------------
// Quadratic form recognition
// ---------------------------------------------------------------------------

// Fit a quadratic form over GF(q^n) through the points (monomials x_i x_j,
// i <= j), then demand its zero set be a cap of the right size containing
// them all. Degenerate solutions never pass the cap filter.
inline std::optional<Vec> recognize_quadric(const TowerPtr& tower, int dim,
                                            const std::vector<Vec>& points,
                                            std::uint64_t expected_size) {
  const Gf& E = tower->ext();
  if (points.size() < 5) fail("TooFewPoints", "need at least five points");
  std::vector<std::pair<int, int>> monos;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) monos.push_back({i, j});
  Mat sys(0, static_cast<int>(monos.size()));
  for (const auto& p : points) {
    Vec row;
    for (auto [i, j] : monos)
      row.push_back(E.mul(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]));
    sys.push_row(row);
  }
  auto kernel = left_kernel(E, transpose(sys));
  if (kernel.empty()) return std::nullopt;
  Mat krows(0, static_cast<int>(monos.size()));
  for (const auto& kv : kernel) krows.push_row(kv);
  Subspace kspace = subspace_from_matrix(E, static_cast<int>(monos.size()), std::move(krows));
  auto all_pts = points_of(E, full_space(dim));
  PointSet wanted(points.begin(), points.end());
  for (const auto& cand : points_of(E, kspace)) {
    std::vector<Vec> zero;
    for (const auto& p : all_pts) {
      code_t val = 0;
      std::size_t mi = 0;
      for (auto [i, j] : monos) {
        val = E.add(val, E.mul(cand[mi], E.mul(p[static_cast<std::size_t>(i)],
                                               p[static_cast<std::size_t>(j)])));
        ++mi;
      }
      if (val == 0) zero.push_back(p);
    }
    if (zero.size() != expected_size) continue;
    bool covers = true;
    PointSet zs(zero.begin(), zero.end());
    for (const auto& p : points) covers = covers && zs.count(p);
    if (!covers) continue;
    PointCap zcap{tower, dim, zero};
    if (!is_cap(zcap)) continue;
    return cand;
  }
  return std::nullopt;
}

inline std::optional<Vec> recognize_conic(const TowerPtr& tower, const std::vector<Vec>& arc) {
  return recognize_quadric(tower, 3, arc, tower->ext_order() + 1);
}

inline std::optional<Vec> recognize_ovoid_quadric(const TowerPtr& tower,
                                                  const std::vector<Vec>& cap_points) {
  std::uint64_t qn = tower->ext_order();
  return recognize_quadric(tower, 4, cap_points, qn * qn + 1);
}

// ---------------------------------------------------------------------------
// Deterministic corrupted fixtures
// ---------------------------------------------------------------------------

// Replace element 0 by the first line (in canonical enumeration order) that
// keeps the pseudo-cap property but makes the given predicate fire.
template <class Pred>
std::optional<PseudoCap> corrupt_first_element(const PseudoCap& cap, Pred&& interesting) {
  const Gf& F = cap.tower->base();
  SubspaceEnumerator en(F, cap.ambient(), cap.n - 1);
  while (auto candidate = en.next()) {
    bool ok = true;
    for (std::size_t i = 1; i < cap.elements.size() && ok; ++i)
      ok = disjoint(F, *candidate, cap.elements[i]) && *candidate != cap.elements[i];
    if (!ok) continue;
    std::vector<Subspace> els;
    els.push_back(*candidate);
    for (std::size_t i = 1; i < cap.elements.size(); ++i) els.push_back(cap.elements[i]);
    PseudoCap trial = make_pseudo_cap(cap.tower, cap.n, cap.m, std::move(els));
    if (trial.elements.size() != cap.elements.size()) continue;
    if (!is_pseudo_cap(trial)) continue;
    if (interesting(trial)) return trial;
  }
  return std::nullopt;
}

}  // namespace galgeo
