#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "galgeo/errors.hpp"

namespace galgeo {

// Element codes. A field of order s = p^d stores its elements as integers in
// [0, s); the base-radix digits of a code are the coefficients (low degree
// first) of the representing polynomial.
using code_t = std::uint16_t;

constexpr std::uint32_t kFieldTableLimit = 256;  // log/antilog tables up to here
constexpr std::uint32_t kMaxFieldOrder = 65535;  // uint16 codes

// ---------------------------------------------------------------------------
// Polynomial helpers over an arbitrary field. Coefficient vectors are stored
// low degree first and are not required to be trimmed.
// ---------------------------------------------------------------------------

class Gf;

using Poly = std::vector<code_t>;

int poly_deg(const Poly& f);
Poly poly_trim(Poly f);
Poly poly_mul(const Gf& F, const Poly& a, const Poly& b);
Poly poly_mod(const Gf& F, Poly a, const Poly& m);
Poly poly_gcd(const Gf& F, Poly a, Poly b);
Poly poly_make_monic(const Gf& F, Poly f);
code_t poly_eval(const Gf& F, const Poly& f, code_t x);
bool poly_is_irreducible(const Gf& F, const Poly& f);

// ---------------------------------------------------------------------------
// Gf: one level of the tower. Either a prime field, or an extension of a
// coefficient field by a monic irreducible modulus. Instances are owned by
// FieldTower and referenced by pointer; they must outlive their users.
// ---------------------------------------------------------------------------

class Gf {
 public:
  explicit Gf(std::uint32_t p) : order_(p), p_(p), radix_(p), deg_(1) {
    build_tables();
  }

  Gf(const Gf* coeff, Poly modulus)
      : p_(coeff->characteristic()),
        radix_(coeff->order()),
        deg_(poly_deg(modulus)),
        coeff_(coeff),
        modulus_(std::move(modulus)) {
    std::uint64_t s = 1;
    for (int i = 0; i < deg_; ++i) s *= radix_;
    if (s > kMaxFieldOrder) fail("TooLarge", "field order exceeds 2^16-1");
    order_ = static_cast<std::uint32_t>(s);
    build_tables();
  }

  Gf(const Gf&) = delete;
  Gf& operator=(const Gf&) = delete;

  std::uint32_t order() const { return order_; }
  std::uint32_t characteristic() const { return p_; }
  // Degree over the coefficient field (1 for a prime field).
  int degree() const { return deg_; }
  std::uint32_t radix() const { return radix_; }
  const Poly& modulus() const { return modulus_; }

  code_t add(code_t a, code_t b) const {
    if (!coeff_) return static_cast<code_t>((a + b) % p_);
    code_t r = 0;
    std::uint32_t pw = 1;
    for (int i = 0; i < deg_; ++i) {
      code_t da = static_cast<code_t>((a / pw) % radix_);
      code_t db = static_cast<code_t>((b / pw) % radix_);
      r = static_cast<code_t>(r + coeff_->add(da, db) * pw);
      pw *= radix_;
    }
    return r;
  }

  code_t neg(code_t a) const {
    if (!coeff_) return static_cast<code_t>((p_ - a) % p_);
    code_t r = 0;
    std::uint32_t pw = 1;
    for (int i = 0; i < deg_; ++i) {
      r = static_cast<code_t>(r + coeff_->neg(static_cast<code_t>((a / pw) % radix_)) * pw);
      pw *= radix_;
    }
    return r;
  }

  code_t sub(code_t a, code_t b) const { return add(a, neg(b)); }

  code_t mul(code_t a, code_t b) const {
    if (tabled_) {
      if (a == 0 || b == 0) return 0;
      return exp_[log_[a] + log_[b]];
    }
    return mul_raw(a, b);
  }

  code_t inv(code_t a) const {
    if (a == 0) fail("DivisionByZero", "inverse of zero");
    if (tabled_) return exp_[(order_ - 1) - log_[a]];
    return pow(a, order_ - 2);
  }

  code_t div(code_t a, code_t b) const { return mul(a, inv(b)); }

  code_t pow(code_t a, std::uint64_t e) const {
    code_t r = 1;
    code_t base = a;
    while (e) {
      if (e & 1) r = tabled_ ? mul(r, base) : mul_raw(r, base);
      base = tabled_ ? mul(base, base) : mul_raw(base, base);
      e >>= 1;
    }
    return r;
  }

  // Digits of a code over the coefficient field, low degree first.
  std::vector<code_t> to_digits(code_t a) const {
    std::vector<code_t> d(static_cast<std::size_t>(deg_));
    for (int i = 0; i < deg_; ++i) {
      d[static_cast<std::size_t>(i)] = static_cast<code_t>(a % radix_);
      a = static_cast<code_t>(a / radix_);
    }
    return d;
  }

  code_t from_digits(const std::vector<code_t>& d) const {
    code_t a = 0;
    std::uint32_t pw = 1;
    for (int i = 0; i < deg_; ++i) {
      a = static_cast<code_t>(a + d[static_cast<std::size_t>(i)] * pw);
      pw *= radix_;
    }
    return a;
  }

 private:
  code_t mul_raw(code_t a, code_t b) const {
    if (!coeff_) return static_cast<code_t>((std::uint64_t(a) * b) % p_);
    // schoolbook product of the digit polynomials, reduced by the modulus
    std::vector<code_t> da = to_digits(a), db = to_digits(b);
    std::vector<code_t> c(static_cast<std::size_t>(2 * deg_ - 1), 0);
    for (int i = 0; i < deg_; ++i) {
      if (!da[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < deg_; ++j) {
        auto& slot = c[static_cast<std::size_t>(i + j)];
        slot = coeff_->add(slot, coeff_->mul(da[static_cast<std::size_t>(i)],
                                             db[static_cast<std::size_t>(j)]));
      }
    }
    for (int i = 2 * deg_ - 2; i >= deg_; --i) {
      code_t top = c[static_cast<std::size_t>(i)];
      if (!top) continue;
      c[static_cast<std::size_t>(i)] = 0;
      for (int j = 0; j < deg_; ++j) {
        auto& slot = c[static_cast<std::size_t>(i - deg_ + j)];
        slot = coeff_->sub(slot, coeff_->mul(top, modulus_[static_cast<std::size_t>(j)]));
      }
    }
    code_t r = 0;
    std::uint32_t pw = 1;
    for (int i = 0; i < deg_; ++i) {
      r = static_cast<code_t>(r + c[static_cast<std::size_t>(i)] * pw);
      pw *= radix_;
    }
    return r;
  }

  void build_tables() {
    if (order_ > kFieldTableLimit || order_ < 3) return;
    // find a multiplicative generator by brute force
    for (std::uint32_t g = 2; g < order_; ++g) {
      std::uint32_t ord = 1;
      code_t x = static_cast<code_t>(g);
      while (x != 1) {
        x = mul_raw(x, static_cast<code_t>(g));
        ++ord;
        if (ord > order_) fail("InternalCheckFailed", "generator search diverged");
      }
      if (ord == order_ - 1) {
        exp_.assign(2 * (order_ - 1), 0);
        log_.assign(order_, 0);
        code_t y = 1;
        for (std::uint32_t k = 0; k < order_ - 1; ++k) {
          exp_[k] = y;
          exp_[k + order_ - 1] = y;
          log_[y] = static_cast<code_t>(k);
          y = mul_raw(y, static_cast<code_t>(g));
        }
        tabled_ = true;
        return;
      }
    }
    fail("InternalCheckFailed", "no multiplicative generator found");
  }

  std::uint32_t order_ = 0;
  std::uint32_t p_ = 0;
  std::uint32_t radix_ = 0;
  int deg_ = 0;
  const Gf* coeff_ = nullptr;  // nullptr for a prime field
  Poly modulus_;               // monic, size deg_+1 (empty for a prime field)
  std::vector<code_t> exp_, log_;
  bool tabled_ = false;
};

// ---------------------------------------------------------------------------
// polynomial helper definitions
// ---------------------------------------------------------------------------

inline int poly_deg(const Poly& f) {
  for (int i = static_cast<int>(f.size()) - 1; i >= 0; --i)
    if (f[static_cast<std::size_t>(i)]) return i;
  return -1;
}

inline Poly poly_trim(Poly f) {
  f.resize(static_cast<std::size_t>(poly_deg(f) + 1));
  return f;
}

inline Poly poly_mul(const Gf& F, const Poly& a, const Poly& b) {
  int da = poly_deg(a), db = poly_deg(b);
  if (da < 0 || db < 0) return {};
  Poly c(static_cast<std::size_t>(da + db + 1), 0);
  for (int i = 0; i <= da; ++i) {
    if (!a[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j <= db; ++j)
      c[static_cast<std::size_t>(i + j)] =
          F.add(c[static_cast<std::size_t>(i + j)],
                F.mul(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]));
  }
  return c;
}

inline Poly poly_mod(const Gf& F, Poly a, const Poly& m) {
  int dm = poly_deg(m);
  if (dm < 0) fail("DivisionByZero", "polynomial modulus is zero");
  code_t lead_inv = F.inv(m[static_cast<std::size_t>(dm)]);
  for (int i = poly_deg(a); i >= dm; --i) {
    code_t c = a[static_cast<std::size_t>(i)];
    if (!c) continue;
    code_t f = F.mul(c, lead_inv);
    for (int j = 0; j <= dm; ++j)
      a[static_cast<std::size_t>(i - dm + j)] =
          F.sub(a[static_cast<std::size_t>(i - dm + j)], F.mul(f, m[static_cast<std::size_t>(j)]));
  }
  return poly_trim(std::move(a));
}

inline Poly poly_make_monic(const Gf& F, Poly f) {
  int d = poly_deg(f);
  if (d < 0) return f;
  code_t inv = F.inv(f[static_cast<std::size_t>(d)]);
  for (auto& c : f) c = F.mul(c, inv);
  return f;
}

inline Poly poly_gcd(const Gf& F, Poly a, Poly b) {
  a = poly_trim(std::move(a));
  b = poly_trim(std::move(b));
  while (poly_deg(b) >= 0) {
    Poly r = poly_mod(F, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return poly_make_monic(F, std::move(a));
}

inline code_t poly_eval(const Gf& F, const Poly& f, code_t x) {
  code_t r = 0;
  for (int i = poly_deg(f); i >= 0; --i) r = F.add(F.mul(r, x), f[static_cast<std::size_t>(i)]);
  return r;
}

// Trial division by every monic polynomial of degree 1..deg/2.
inline bool poly_is_irreducible(const Gf& F, const Poly& f) {
  int d = poly_deg(f);
  if (d <= 0) return false;
  if (d == 1) return true;
  std::uint64_t q = F.order();
  for (int e = 1; 2 * e <= d; ++e) {
    std::uint64_t count = 1;
    for (int i = 0; i < e; ++i) count *= q;
    for (std::uint64_t t = 0; t < count; ++t) {
      Poly g(static_cast<std::size_t>(e + 1), 0);
      std::uint64_t v = t;
      for (int i = 0; i < e; ++i) {
        g[static_cast<std::size_t>(i)] = static_cast<code_t>(v % q);
        v /= q;
      }
      g[static_cast<std::size_t>(e)] = 1;
      if (poly_deg(poly_mod(F, f, g)) < 0) return false;
    }
  }
  return true;
}

// Lexicographically smallest monic irreducible of the given degree, comparing
// coefficient tuples low degree first.
inline Poly smallest_irreducible(const Gf& F, int degree) {
  if (degree < 1) fail("DegreeZero", "modulus degree must be positive");
  std::uint64_t q = F.order();
  std::vector<code_t> c(static_cast<std::size_t>(degree), 0);
  for (;;) {
    Poly f(c.begin(), c.end());
    f.push_back(1);
    if (poly_is_irreducible(F, f)) return f;
    // odometer: last coefficient fastest, so tuples come out in lex order
    int i = degree - 1;
    while (i >= 0) {
      if (++c[static_cast<std::size_t>(i)] < q) break;
      c[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) fail("InternalCheckFailed", "no irreducible polynomial found");
  }
}

// ---------------------------------------------------------------------------
// FieldTower: GF(p) < GF(q = p^h) < GF(q^n) with deterministic moduli.
// ---------------------------------------------------------------------------

class FieldTower {
 public:
  static std::shared_ptr<const FieldTower> make(std::uint32_t p, int h, int n) {
    if (h < 1 || n < 1) fail("DegreeZero", "tower degrees must be positive");
    if (p < 2) fail("NonPrime", std::to_string(p) + " is not prime");
    for (std::uint32_t d = 2; d * d <= p; ++d)
      if (p % d == 0) fail("NonPrime", std::to_string(p) + " is not prime");
    return std::shared_ptr<const FieldTower>(new FieldTower(p, h, n));
  }

  std::uint32_t p() const { return p_; }
  int h() const { return h_; }
  int n() const { return n_; }
  std::uint32_t q() const { return base_->order(); }
  std::uint32_t ext_order() const { return ext_->order(); }

  const Gf& prime() const { return *prime_; }
  const Gf& base() const { return *base_; }
  const Gf& ext() const { return *ext_; }

  const Poly& base_modulus() const { return base_->modulus(); }
  const Poly& ext_modulus() const { return ext_->modulus(); }

  // Coordinates of an extension element over the basis {1, x, ..., x^(n-1)}.
  std::vector<code_t> ext_to_vector(code_t a) const { return ext_->to_digits(a); }
  code_t vector_to_ext(const std::vector<code_t>& v) const { return ext_->from_digits(v); }

 private:
  FieldTower(std::uint32_t p, int h, int n) : p_(p), h_(h), n_(n) {
    prime_ = std::make_unique<Gf>(p);
    base_ = std::make_unique<Gf>(prime_.get(), smallest_irreducible(*prime_, h));
    ext_ = std::make_unique<Gf>(base_.get(), smallest_irreducible(*base_, n));
  }

  std::uint32_t p_;
  int h_, n_;
  std::unique_ptr<Gf> prime_, base_, ext_;
};

using TowerPtr = std::shared_ptr<const FieldTower>;

inline TowerPtr make_tower(std::uint32_t p, int h, int n) { return FieldTower::make(p, h, n); }

}  // namespace galgeo
