#pragma once

// Schottky parameters, Moebius maps, generators, multipliers and free-group
// word enumeration.
//
// Signed handle indices a in I = {-g..-1, 1..g} are used throughout. The
// canonical order of I is -1 < 1 < -2 < 2 < ... (see letter_rank).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "schottky/errors.hpp"

namespace schottky {

/// Position of a signed index in the order -1 < 1 < -2 < 2 < ... .
inline int letter_rank(int a) { return 2 * (std::abs(a) - 1) + (a > 0 ? 1 : 0); }

/// Inverse of letter_rank.
inline int letter_from_rank(int r) { return (r % 2 == 0) ? -(r / 2 + 1) : (r / 2 + 1); }

/// Element of SL(2,C) acting on the Riemann sphere. Entries are normalized to
/// unit determinant on construction; the overall sign is not meaningful.
class MoebiusMap {
 public:
  MoebiusMap() : a_(1.0), b_(0.0), c_(0.0), d_(1.0) {}
  MoebiusMap(cplx a, cplx b, cplx c, cplx d) : a_(a), b_(b), c_(c), d_(d) {
    const cplx det = a_ * d_ - b_ * c_;
    if (std::abs(det) == 0.0) throw DomainError("MoebiusMap: singular matrix");
    const cplx s = std::sqrt(det);
    a_ /= s;
    b_ /= s;
    c_ /= s;
    d_ /= s;
  }

  static MoebiusMap identity() { return {}; }
  static MoebiusMap translation(cplx t) { return {1.0, t, 0.0, 1.0}; }
  static MoebiusMap scaling(cplx k) { return {k, 0.0, 0.0, 1.0}; }
  /// z -> 1/z
  static MoebiusMap inversion() { return {0.0, 1.0, 1.0, 0.0}; }

  cplx a() const { return a_; }
  cplx b() const { return b_; }
  cplx c() const { return c_; }
  cplx d() const { return d_; }
  cplx det() const { return a_ * d_ - b_ * c_; }
  cplx trace() const { return a_ + d_; }

  /// Image of a finite point. Returns an infinite value at the pole.
  cplx operator()(cplx z) const {
    const cplx den = c_ * z + d_;
    if (den == cplx(0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
    return (a_ * z + b_) / den;
  }

  /// d/dz of the map at z, i.e. 1/(cz+d)^2 for a unit-determinant matrix.
  cplx derivative(cplx z) const {
    const cplx den = c_ * z + d_;
    return 1.0 / (den * den);
  }

  bool maps_infinity_to_infinity() const { return c_ == cplx(0.0); }
  /// gamma(infinity) = a/c; infinite when c = 0.
  cplx image_of_infinity() const {
    if (c_ == cplx(0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
    return a_ / c_;
  }

  MoebiusMap inverse() const { return raw(d_, -b_, -c_, a_); }

  // Products of unit-determinant matrices are not renormalized; for long
  // words a*d - b*c cancels catastrophically.
  friend MoebiusMap operator*(const MoebiusMap& l, const MoebiusMap& r) {
    return raw(l.a_ * r.a_ + l.b_ * r.c_, l.a_ * r.b_ + l.b_ * r.d_, l.c_ * r.a_ + l.d_ * r.c_,
               l.c_ * r.b_ + l.d_ * r.d_);
  }

  /// Max entrywise distance, minimized over the sign ambiguity of SL(2).
  double distance(const MoebiusMap& o) const {
    auto dist = [&](double s) {
      return std::max({std::abs(a_ - s * o.a_), std::abs(b_ - s * o.b_), std::abs(c_ - s * o.c_),
                       std::abs(d_ - s * o.d_)});
    };
    return std::min(dist(1.0), dist(-1.0));
  }

 private:
  static MoebiusMap raw(cplx a, cplx b, cplx c, cplx d) {
    MoebiusMap m;
    m.a_ = a;
    m.b_ = b;
    m.c_ = c;
    m.d_ = d;
    return m;
  }

  cplx a_, b_, c_, d_;
};

/// Multiplier q (|q| <= 1) of a unit-determinant Moebius map: the ratio of
/// its eigenvalues with the smaller one on top.
inline cplx moebius_multiplier(const MoebiusMap& m) {
  const cplx t = m.trace();
  const cplx disc = std::sqrt(t * t - 4.0);
  cplx big = (t + disc) / 2.0;
  const cplx other = (t - disc) / 2.0;
  if (std::abs(other) > std::abs(big)) big = other;
  return 1.0 / (big * big);
}

struct HandleParams {
  cplx w_plus;   // w_a
  cplx w_minus;  // w_{-a}
  cplx rho;      // rho_a = rho_{-a}
};

struct SurfaceParams {
  std::vector<HandleParams> handles;
  int genus() const { return static_cast<int>(handles.size()); }
};

/// Pairs (a, b), a before b in letter order, violating
/// |w_a - w_b| > |rho_a|^{1/2} + |rho_b|^{1/2}. Also reports rho_a == 0 as (a, a).
inline std::vector<std::pair<int, int>> circle_condition_violations(const SurfaceParams& p) {
  const int g = p.genus();
  auto w = [&](int a) { return a > 0 ? p.handles[a - 1].w_plus : p.handles[-a - 1].w_minus; };
  auto r = [&](int a) { return std::sqrt(std::abs(p.handles[std::abs(a) - 1].rho)); };
  std::vector<std::pair<int, int>> bad;
  for (int j = 1; j <= g; ++j)
    if (p.handles[j - 1].rho == cplx(0.0)) bad.emplace_back(j, j);
  for (int ra = 0; ra < 2 * g; ++ra)
    for (int rb = ra + 1; rb < 2 * g; ++rb) {
      const int a = letter_from_rank(ra), b = letter_from_rank(rb);
      if (!(std::abs(w(a) - w(b)) > r(a) + r(b))) bad.emplace_back(a, b);
    }
  return bad;
}

/// Genus-g Schottky parameters validated against the disjoint-circle
/// condition. Immutable; the principal branch of rho^{1/2} is fixed here and
/// used for every half-integer power downstream.
class SchottkySurface {
 public:
  static SchottkySurface validate(SurfaceParams params) {
    if (params.genus() < 1) throw DomainError("SchottkySurface: genus must be >= 1");
    const auto bad = circle_condition_violations(params);
    if (!bad.empty()) {
      std::ostringstream os;
      os << "Schottky parameters violate the disjoint-circle condition for pairs:";
      for (const auto& [a, b] : bad) os << " (" << a << "," << b << ")";
      throw SurfaceValidationError(os.str(), bad);
    }
    SchottkySurface s;
    s.params_ = std::move(params);
    for (const auto& h : s.params_.handles) s.sqrt_rho_.push_back(std::sqrt(h.rho));
    return s;
  }

  int genus() const { return params_.genus(); }
  const SurfaceParams& params() const { return params_; }

  cplx w(int a) const {
    check_index(a);
    return a > 0 ? params_.handles[a - 1].w_plus : params_.handles[-a - 1].w_minus;
  }
  cplx rho(int a) const {
    check_index(a);
    return params_.handles[std::abs(a) - 1].rho;
  }
  cplx sqrt_rho(int a) const {
    check_index(a);
    return sqrt_rho_[std::abs(a) - 1];
  }
  /// |rho_a|^{1/2}, the radius of the circles C_a and C_{-a}.
  double radius(int a) const { return std::abs(sqrt_rho(a)); }

  /// Signed indices in canonical order -1, 1, -2, 2, ...
  std::vector<int> indices() const {
    std::vector<int> out;
    for (int r = 0; r < 2 * genus(); ++r) out.push_back(letter_from_rank(r));
    return out;
  }

  /// True when z lies outside every closed disk |z - w_a| <= |rho_a|^{1/2}.
  bool in_fundamental_domain(cplx z) const {
    for (int a : indices())
      if (std::abs(z - w(a)) <= radius(a)) return false;
    return true;
  }

 private:
  SchottkySurface() = default;
  void check_index(int a) const {
    if (a == 0 || std::abs(a) > genus()) throw DimensionError("SchottkySurface: handle index out of range");
  }

  SurfaceParams params_;
  std::vector<cplx> sqrt_rho_;
};

/// gamma_a z = w_{-a} + rho_a/(z - w_a), normalized to unit determinant.
inline MoebiusMap generator(const SchottkySurface& s, int a) {
  const cplx wa = s.w(a), wma = s.w(-a), rho = s.rho(a);
  return {wma, rho - wma * wa, 1.0, -wa};
}

/// c(x) = (1 - sqrt(1-4x))/(2x) - 1, evaluated as 4x/(1+sqrt(1-4x))^2 which
/// has no cancellation near x = 0. The series sum_{n>=1} (1/n) C(2n,n+1) x^n
/// agrees for |x| < 1/4.
inline cplx catalan_c(cplx x) {
  const cplx root = 1.0 + std::sqrt(1.0 - 4.0 * x);
  return 4.0 * x / (root * root);
}

inline bool catalan_series_converges(cplx x) { return std::abs(x) < 0.25; }

struct MultiplierData {
  cplx q;        // multiplier of gamma_a
  cplx W_plus;   // repelling fixed point W_a
  cplx W_minus;  // attracting fixed point W_{-a}
};

inline MultiplierData multiplier_and_fixed_points(const SchottkySurface& s, int a) {
  if (a < 1 || a > s.genus()) throw DimensionError("multiplier_and_fixed_points: index must be in 1..g");
  const cplx wa = s.w(a), wma = s.w(-a);
  const cplx diff = wa - wma;
  const cplx q = catalan_c(-s.rho(a) / (diff * diff));
  if (!(std::abs(q) < 1.0)) throw InternalError("multiplier_and_fixed_points: |q| >= 1");
  return {q, (wa + q * wma) / (1.0 + q), (wma + q * wa) / (1.0 + q)};
}

/// Reduced word gamma_{a_1} ... gamma_{a_n}; the empty word is the identity.
struct GroupWord {
  std::vector<int> letters;

  std::size_t length() const { return letters.size(); }

  bool is_reduced() const {
    for (std::size_t i = 1; i < letters.size(); ++i)
      if (letters[i] == -letters[i - 1]) return false;
    return true;
  }

  bool is_cyclically_reduced() const {
    return is_reduced() && (letters.size() < 2 || letters.front() != -letters.back());
  }

  GroupWord power(int m) const {
    GroupWord out;
    for (int i = 0; i < m; ++i) out.letters.insert(out.letters.end(), letters.begin(), letters.end());
    return out;
  }

  friend bool operator==(const GroupWord&, const GroupWord&) = default;
};

/// Product of generators, leftmost letter applied last.
inline MoebiusMap word_map(const SchottkySurface& s, const GroupWord& w) {
  MoebiusMap m;
  for (int a : w.letters) m = m * generator(s, a);
  return m;
}

/// Lexicographic comparison in letter_rank order.
inline bool word_less(const GroupWord& x, const GroupWord& y) {
  return std::lexicographical_compare(x.letters.begin(), x.letters.end(), y.letters.begin(), y.letters.end(),
                                      [](int p, int q) { return letter_rank(p) < letter_rank(q); });
}

/// Calls fn(word) for every reduced word of length n over g generators, in
/// lexicographic letter_rank order. 2g(2g-1)^{n-1} words for n >= 1.
template <class Fn>
void for_each_reduced_word(int g, std::size_t n, Fn&& fn) {
  GroupWord w;
  w.letters.resize(n);
  auto rec = [&](auto&& self, std::size_t pos) -> void {
    if (pos == n) {
      fn(static_cast<const GroupWord&>(w));
      return;
    }
    for (int r = 0; r < 2 * g; ++r) {
      const int a = letter_from_rank(r);
      if (pos > 0 && a == -w.letters[pos - 1]) continue;
      w.letters[pos] = a;
      self(self, pos + 1);
    }
  };
  rec(rec, 0);
}

inline std::vector<GroupWord> reduced_words(const SchottkySurface& s, std::size_t n) {
  std::vector<GroupWord> out;
  for_each_reduced_word(s.genus(), n, [&](const GroupWord& w) { out.push_back(w); });
  return out;
}

/// Lexicographically smallest cyclic rotation.
inline GroupWord canonical_rotation(const GroupWord& w) {
  GroupWord best = w;
  GroupWord rot = w;
  for (std::size_t i = 1; i < w.length(); ++i) {
    std::rotate(rot.letters.begin(), rot.letters.begin() + 1, rot.letters.end());
    if (word_less(rot, best)) best = rot;
  }
  return best;
}

/// A cyclically reduced word is primitive iff it is not d copies of its
/// length-n/d prefix for a divisor d > 1.
inline bool is_primitive(const GroupWord& w) {
  const std::size_t n = w.length();
  if (n == 0) return false;
  for (std::size_t d = 2; d <= n; ++d) {
    if (n % d != 0) continue;
    const std::size_t p = n / d;
    bool repeats = true;
    for (std::size_t i = p; i < n && repeats; ++i) repeats = w.letters[i] == w.letters[i - p];
    if (repeats) return false;
  }
  return true;
}

/// One representative (the canonical rotation) per primitive conjugacy class
/// of length 1..max_length, ordered by length then lexicographically.
inline std::vector<GroupWord> primitive_class_reps(const SchottkySurface& s, std::size_t max_length) {
  std::vector<GroupWord> out;
  for (std::size_t n = 1; n <= max_length; ++n)
    for_each_reduced_word(s.genus(), n, [&](const GroupWord& w) {
      if (!w.is_cyclically_reduced() || !is_primitive(w)) return;
      if (canonical_rotation(w) == w) out.push_back(w);
    });
  return out;
}

/// Parameters of the conjugated group sigma Gamma sigma^{-1}, read off from
/// the conjugated generators.
inline SchottkySurface transform_surface(const SchottkySurface& s, const MoebiusMap& sigma) {
  SurfaceParams p;
  const MoebiusMap inv = sigma.inverse();
  const double scale = [&] {
    double m = 1.0;
    for (int a : s.indices()) m = std::max(m, std::abs(s.w(a)));
    return m;
  }();
  for (int j = 1; j <= s.genus(); ++j) {
    const MoebiusMap conj = sigma * generator(s, j) * inv;
    const cplx c = conj.c();
    if (std::abs(c) <= 1e-14 / scale)
      throw DomainError("transform_surface: conjugated generator fixes infinity");
    p.handles.push_back({-conj.d() / c, conj.a() / c, -1.0 / (c * c)});
  }
  return SchottkySurface::validate(std::move(p));
}

}  // namespace schottky
