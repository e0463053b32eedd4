#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "galgeo/field.hpp"

using namespace galgeo;

#define CHECK_ERROR(expr, code_str)                  \
  do {                                               \
    bool thrown_ = false;                            \
    try {                                            \
      (void)(expr);                                  \
    } catch (const Error& e_) {                      \
      thrown_ = true;                                \
      CHECK(e_.code() == code_str);                  \
    }                                                \
    CHECK(thrown_);                                  \
  } while (0)

namespace {

// Independent oracle: polynomial arithmetic with a caller-supplied
// multiplication table, used to re-derive the deterministic moduli.
struct TinyField {
  int q;
  std::vector<std::vector<int>> mul;
  std::vector<std::vector<int>> add;
  int neg(int a) const {
    for (int b = 0; b < q; ++b)
      if (add[a][b] == 0) return b;
    return -1;
  }
};

TinyField prime_tiny(int p) {
  TinyField f;
  f.q = p;
  f.mul.assign(p, std::vector<int>(p));
  f.add.assign(p, std::vector<int>(p));
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      f.mul[a][b] = (a * b) % p;
      f.add[a][b] = (a + b) % p;
    }
  return f;
}

// GF(4) with elements 0, 1, w, w+1 (codes 0..3), w^2 = w+1
TinyField gf4_tiny() {
  TinyField f;
  f.q = 4;
  f.add = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  f.mul = {{0, 0, 0, 0}, {0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}};
  return f;
}

std::vector<int> tiny_poly_mul(const TinyField& f, const std::vector<int>& a,
                               const std::vector<int>& b) {
  std::vector<int> c(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      c[i + j] = f.add[c[i + j]][f.mul[a[i]][b[j]]];
  return c;
}

bool tiny_poly_equal_mod(std::vector<int> a, const std::vector<int>& b) {
  // is a == b as polynomials (after trimming)?
  auto deg = [](const std::vector<int>& p) {
    int d = -1;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i]) d = static_cast<int>(i);
    return d;
  };
  if (deg(a) != deg(b)) return false;
  for (int i = 0; i <= deg(a); ++i)
    if (a[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)]) return false;
  return true;
}

// exhaustive irreducibility over a tiny field: f (monic, degree d) is
// reducible iff it equals g*h for monic g,h of positive degree
bool tiny_irreducible(const TinyField& f, const std::vector<int>& poly) {
  int d = static_cast<int>(poly.size()) - 1;
  for (int dg = 1; dg <= d / 2; ++dg) {
    int dh = d - dg;
    std::vector<int> g(static_cast<std::size_t>(dg) + 1, 0), h(static_cast<std::size_t>(dh) + 1, 0);
    g[static_cast<std::size_t>(dg)] = 1;
    h[static_cast<std::size_t>(dh)] = 1;
    std::uint64_t gn = 1, hn = 1;
    for (int i = 0; i < dg; ++i) gn *= f.q;
    for (int i = 0; i < dh; ++i) hn *= f.q;
    for (std::uint64_t gi = 0; gi < gn; ++gi) {
      std::uint64_t v = gi;
      for (int i = 0; i < dg; ++i) {
        g[static_cast<std::size_t>(i)] = static_cast<int>(v % f.q);
        v /= f.q;
      }
      for (std::uint64_t hi = 0; hi < hn; ++hi) {
        std::uint64_t w = hi;
        for (int i = 0; i < dh; ++i) {
          h[static_cast<std::size_t>(i)] = static_cast<int>(w % f.q);
          w /= f.q;
        }
        if (tiny_poly_equal_mod(tiny_poly_mul(f, g, h), poly)) return false;
      }
    }
  }
  return true;
}

// first monic irreducible of degree d in lex order on (c_0,...,c_{d-1})
std::vector<int> tiny_smallest_irreducible(const TinyField& f, int d) {
  std::vector<int> c(static_cast<std::size_t>(d), 0);
  for (;;) {
    std::vector<int> poly(c.begin(), c.end());
    poly.push_back(1);
    if (tiny_irreducible(f, poly)) return poly;
    int i = d - 1;
    while (i >= 0 && ++c[static_cast<std::size_t>(i)] == f.q) c[static_cast<std::size_t>(i--)] = 0;
    REQUIRE(i >= 0);
  }
}

}  // namespace

TEST_CASE("tower moduli are the lexicographically smallest irreducibles") {
  auto t212 = make_tower(2, 1, 2);
  CHECK(t212->q() == 2);
  CHECK(t212->ext_order() == 4);
  CHECK(t212->base_modulus() == Poly{0, 1});  // x, the trivial degree-1 choice
  auto oracle2 = tiny_smallest_irreducible(prime_tiny(2), 2);
  CHECK(oracle2 == std::vector<int>{1, 1, 1});
  CHECK(t212->ext_modulus() == Poly{1, 1, 1});  // x^2+x+1

  auto t311 = make_tower(3, 1, 1);
  CHECK(t311->q() == 3);
  CHECK(t311->ext_order() == 3);
  CHECK(t311->ext_modulus() == Poly{0, 1});

  auto t222 = make_tower(2, 2, 2);
  CHECK(t222->q() == 4);
  CHECK(t222->ext_order() == 16);
  CHECK(t222->base_modulus() == Poly{1, 1, 1});
  auto oracle4 = tiny_smallest_irreducible(gf4_tiny(), 2);
  Poly got = t222->ext_modulus();
  REQUIRE(got.size() == oracle4.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(static_cast<int>(got[i]) == oracle4[i]);
}

TEST_CASE("tower construction errors") {
  CHECK_ERROR(make_tower(4, 1, 1), "NonPrime");
  CHECK_ERROR(make_tower(1, 1, 1), "NonPrime");
  CHECK_ERROR(make_tower(2, 0, 1), "DegreeZero");
  CHECK_ERROR(make_tower(2, 1, 0), "DegreeZero");
}

TEST_CASE("GF(4) multiplication matches the polynomial oracle") {
  auto t = make_tower(2, 2, 1);
  const Gf& F = t->base();
  auto tiny = gf4_tiny();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(F.mul(static_cast<code_t>(a), static_cast<code_t>(b)) == tiny.mul[a][b]);
      CHECK(F.add(static_cast<code_t>(a), static_cast<code_t>(b)) == tiny.add[a][b]);
    }
  CHECK(F.mul(2, 2) == 3);
  CHECK(F.mul(0, 3) == 0);
  CHECK(F.inv(1) == 1);
  CHECK_ERROR(F.inv(0), "DivisionByZero");
}

TEST_CASE("field axioms hold on random triples") {
  std::mt19937_64 rng(20240811);
  for (auto [p, h, n] : {std::tuple<int, int, int>{2, 1, 2}, {3, 1, 2}, {2, 2, 2}, {3, 2, 1}}) {
    auto t = make_tower(static_cast<std::uint32_t>(p), h, n);
    for (const Gf* Fp : {&t->base(), &t->ext()}) {
      const Gf& F = *Fp;
      for (int it = 0; it < 1200; ++it) {
        code_t a = static_cast<code_t>(rng() % F.order());
        code_t b = static_cast<code_t>(rng() % F.order());
        code_t c = static_cast<code_t>(rng() % F.order());
        REQUIRE(F.add(a, b) == F.add(b, a));
        REQUIRE(F.mul(a, b) == F.mul(b, a));
        REQUIRE(F.add(F.add(a, b), c) == F.add(a, F.add(b, c)));
        REQUIRE(F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c)));
        REQUIRE(F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c)));
        REQUIRE(F.add(a, F.neg(a)) == 0);
        if (a) REQUIRE(F.mul(a, F.inv(a)) == 1);
      }
    }
  }
}

TEST_CASE("Lagrange: every nonzero element has order dividing the group order") {
  auto t = make_tower(2, 2, 2);
  const Gf& B = t->base();
  const Gf& E = t->ext();
  for (code_t a = 1; a < B.order(); ++a) CHECK(B.pow(a, B.order() - 1) == 1);
  for (code_t a = 1; a < E.order(); ++a) CHECK(E.pow(a, E.order() - 1) == 1);
}

TEST_CASE("subfield embedding is a ring homomorphism") {
  // extension elements with coordinates (s,0,...,0) carry the code s itself
  for (auto [p, h, n] : {std::tuple<int, int, int>{2, 1, 2}, {3, 1, 2}, {2, 2, 2}}) {
    auto t = make_tower(static_cast<std::uint32_t>(p), h, n);
    for (code_t a = 0; a < t->q(); ++a) {
      auto va = t->ext_to_vector(a);
      CHECK(va[0] == a);
      for (std::size_t i = 1; i < va.size(); ++i) CHECK(va[i] == 0);
      for (code_t b = 0; b < t->q(); ++b) {
        CHECK(t->ext().mul(a, b) == t->base().mul(a, b));
        CHECK(t->ext().add(a, b) == t->base().add(a, b));
      }
    }
  }
}

TEST_CASE("extension coordinates are a linear bijection") {
  auto t = make_tower(2, 1, 2);
  CHECK(t->ext_to_vector(2) == std::vector<code_t>{0, 1});  // x
  CHECK(t->ext_to_vector(0) == std::vector<code_t>{0, 0});
  CHECK(t->ext_to_vector(3) == std::vector<code_t>{1, 1});  // x+1
  auto t93 = make_tower(3, 1, 3);
  std::mt19937_64 rng(7);
  for (int it = 0; it < 500; ++it) {
    code_t a = static_cast<code_t>(rng() % t93->ext_order());
    code_t b = static_cast<code_t>(rng() % t93->ext_order());
    code_t s = static_cast<code_t>(rng() % t93->q());
    CHECK(t93->vector_to_ext(t93->ext_to_vector(a)) == a);
    auto va = t93->ext_to_vector(a);
    auto vb = t93->ext_to_vector(b);
    auto vsum = t93->ext_to_vector(t93->ext().add(a, b));
    auto vscaled = t93->ext_to_vector(t93->ext().mul(s, a));
    for (int i = 0; i < 3; ++i) {
      CHECK(vsum[static_cast<std::size_t>(i)] ==
            t93->base().add(va[static_cast<std::size_t>(i)], vb[static_cast<std::size_t>(i)]));
      CHECK(vscaled[static_cast<std::size_t>(i)] ==
            t93->base().mul(s, va[static_cast<std::size_t>(i)]));
    }
  }
}

TEST_CASE("large prime fields skip the tables and still satisfy the axioms") {
  auto t = make_tower(257, 1, 1);
  const Gf& F = t->base();
  CHECK(F.order() == 257);
  std::mt19937_64 rng(11);
  for (int it = 0; it < 500; ++it) {
    code_t a = static_cast<code_t>(rng() % 257);
    code_t b = static_cast<code_t>(rng() % 257);
    CHECK(F.mul(a, b) == (a * b) % 257);
    if (a) CHECK(F.mul(a, F.inv(a)) == 1);
    CHECK(F.add(a, b) == (a + b) % 257);
  }
}
