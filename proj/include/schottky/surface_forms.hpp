#pragma once

// Differentials on the Schottky surface in the global coordinate z. Every
// value returned is the coefficient of dx, dx dy, ... ; weights are carried
// as metadata.

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "schottky/errors.hpp"
#include "schottky/moment_kernel.hpp"
#include "schottky/schottky_group.hpp"

namespace schottky {

inline constexpr cplx kTwoPiI{0.0, 2.0 * std::numbers::pi};

struct FormValue {
  cplx value;
  int weight_x = 0;
  int weight_y = 0;
  // Set when an evaluation point lies inside a closed disk bounded by some C_a.
  bool outside_fundamental_domain = false;
};

namespace detail {

inline bool outside(const MomentSystem& sys, cplx z) { return !sys.surface().in_fundamental_domain(z); }

inline bool segments_cross(cplx p1, cplx p2, cplx q1, cplx q2) {
  auto orient = [](cplx a, cplx b, cplx c) {
    const double v = (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  return o1 * o2 <= 0 && o3 * o4 <= 0;
}

// Principal log with -0.0 imaginary parts folded to +0 so arguments on the
// negative real axis land on +i pi consistently.
inline cplx principal_log(cplx z, bool& on_cut) {
  if (z.imag() == 0.0) {
    z = {z.real(), 0.0};
    if (z.real() < 0.0) on_cut = true;
  }
  return std::log(z);
}

}  // namespace detail

/// Genus-zero bidifferential 1/(x - y)^2.
inline cplx omega0(cplx x, cplx y) {
  if (x == y) throw PoleError("omega: x = y lies on the diagonal pole");
  const cplx d = x - y;
  return 1.0 / (d * d);
}

/// omega(x, y) = 1/(x-y)^2 - L(x) (I-A)^{-1} R(y).
inline FormValue omega(const MomentSystem& sys, cplx x, cplx y) {
  const cplx w0 = omega0(x, y);
  const cplx corr = sys.sandwich(sys.L_vector(x).values, sys.R_vector(y).values);
  return {w0 - corr, 1, 1, detail::outside(sys, x) || detail::outside(sys, y)};
}

/// Sum over reduced words gamma of length <= max_word_length of
/// omega0(x, gamma y) gamma'(y). Uses only the group, not A.
inline FormValue omega_poincare(const SchottkySurface& s, cplx x, cplx y, int max_word_length) {
  if (max_word_length < 0) throw DomainError("omega_poincare: max_word_length must be >= 0");
  cplx sum = omega0(x, y);
  for (int n = 1; n <= max_word_length; ++n)
    for_each_reduced_word(s.genus(), static_cast<std::size_t>(n), [&](const GroupWord& w) {
      const MoebiusMap m = word_map(s, w);
      const cplx den = m.c() * y + m.d();
      const cplx gy = (m.a() * y + m.b()) / den;
      sum += omega0(x, gy) / (den * den);
    });
  return {sum, 1, 1, !s.in_fundamental_domain(x) || !s.in_fundamental_domain(y)};
}

inline FormValue omega_poincare(const MomentSystem& sys, cplx x, cplx y, int max_word_length) {
  return omega_poincare(sys.surface(), x, y, max_word_length);
}

inline void check_handle(const MomentSystem& sys, int b) {
  if (b < 1 || b > sys.surface().genus()) throw DimensionError("handle index must be in 1..g");
}

/// Normalized holomorphic 1-form nu_b(x) = 1/(x-w_b) - 1/(x-w_{-b}) - d_b (I-A)^{-1} R(x).
inline FormValue nu(const MomentSystem& sys, int b, cplx x) {
  check_handle(sys, b);
  const SchottkySurface& s = sys.surface();
  if (x == s.w(b) || x == s.w(-b)) throw PoleError("nu: evaluation at w_b or w_{-b}");
  const cplx base = 1.0 / (x - s.w(b)) - 1.0 / (x - s.w(-b));
  return {base - sys.sandwich(sys.d_vector(b).values, sys.R_vector(x).values), 1, 0, detail::outside(sys, x)};
}

/// Second expression -L(x) (I-A)^{-1} d-bar_b of the same correction.
inline FormValue nu_left(const MomentSystem& sys, int b, cplx x) {
  check_handle(sys, b);
  const SchottkySurface& s = sys.surface();
  if (x == s.w(b) || x == s.w(-b)) throw PoleError("nu: evaluation at w_b or w_{-b}");
  const cplx base = 1.0 / (x - s.w(b)) - 1.0 / (x - s.w(-b));
  return {base - sys.sandwich(sys.L_vector(x).values, sys.d_bar_vector(b).values), 1, 0, detail::outside(sys, x)};
}

struct PeriodMatrix {
  ComplexMatrix values;          // Omega, g x g
  double symmetry_residual = 0;  // max |Omega_ab - Omega_ba|
  bool branch_ambiguous = false; // some log argument sat on the negative real axis
  bool im_positive_definite = false;
};

inline bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

inline PeriodMatrix period_matrix(const MomentSystem& sys) {
  const SchottkySurface& s = sys.surface();
  const int g = s.genus();
  PeriodMatrix out{ComplexMatrix(g, g)};
  std::vector<ComplexVector> solved;
  for (int b = 1; b <= g; ++b) solved.push_back(sys.solve(sys.d_bar_vector(b).values));
  for (int a = 1; a <= g; ++a) {
    const ComplexVector da = sys.d_vector(a).values;
    for (int b = 1; b <= g; ++b) {
      cplx arg;
      if (a == b) {
        const cplx diff = s.w(a) - s.w(-a);
        arg = -s.rho(a) / (diff * diff);
      } else {
        arg = ((s.w(a) - s.w(b)) * (s.w(-a) - s.w(-b))) / ((s.w(-a) - s.w(b)) * (s.w(a) - s.w(-b)));
      }
      const cplx lg = detail::principal_log(arg, out.branch_ambiguous);
      out.values(a - 1, b - 1) = (lg - (da.transpose() * solved[static_cast<std::size_t>(b - 1)])(0)) / kTwoPiI;
    }
  }
  out.symmetry_residual = (out.values - out.values.transpose()).cwiseAbs().maxCoeff();
  out.im_positive_definite = is_positive_definite(0.5 * (out.values.imag() + out.values.imag().transpose()));
  return out;
}

/// Third-kind form omega_{p-q}(x) with residues +1 at p and -1 at q.
inline FormValue omega_third_kind(const MomentSystem& sys, cplx p, cplx q, cplx x) {
  if (x == p || x == q) throw PoleError("omega_third_kind: x coincides with p or q");
  const cplx base = 1.0 / (x - p) - 1.0 / (x - q);
  const ComplexVector diff = sys.R_anti(p).values - sys.R_anti(q).values;
  return {base - sys.sandwich(sys.L_vector(x).values, diff), 1, 0,
          detail::outside(sys, x) || detail::outside(sys, p) || detail::outside(sys, q)};
}

/// r(x, y) = -L~(x) (I-A)^{-1} R~(y), vanishing as either argument goes to infinity.
inline cplx prime_form_exponent(const MomentSystem& sys, cplx x, cplx y) {
  return -sys.sandwich(sys.L_anti(x).values, sys.R_anti(y).values);
}

/// Prime form K(x, y) = (x - y) exp(r(x, y)), weight (-1/2, -1/2).
inline FormValue prime_form_K(const MomentSystem& sys, cplx x, cplx y) {
  if (x == y) throw PoleError("prime_form_K: x = y");
  return {(x - y) * std::exp(prime_form_exponent(sys, x, y)), 0, 0,
          detail::outside(sys, x) || detail::outside(sys, y)};
}

struct AbelianIntegral {
  cplx value;
  bool branch_crossed = false;  // straight path q -> p crosses the log cut [w_b, w_{-b}]
};

/// int_q^p nu_b. The log part is a difference of principal logs, so the
/// result is exact for any path homotopic to the segment when no cut is hit.
inline AbelianIntegral abelian_integral(const MomentSystem& sys, int b, cplx p, cplx q) {
  check_handle(sys, b);
  if (p == q) return {0.0, false};
  const SchottkySurface& s = sys.surface();
  const cplx wb = s.w(b), wmb = s.w(-b);
  if (p == wb || p == wmb || q == wb || q == wmb) throw PoleError("abelian_integral: endpoint at w_b or w_{-b}");
  bool cut = false;
  const cplx lp = detail::principal_log((p - wb) / (p - wmb), cut);
  const cplx lq = detail::principal_log((q - wb) / (q - wmb), cut);
  const ComplexVector diff = sys.R_anti(p).values - sys.R_anti(q).values;
  const cplx corr = sys.sandwich(sys.d_vector(b).values, diff);
  return {lp - lq - corr, cut || detail::segments_cross(q, p, wb, wmb)};
}

/// s(x) = 6 lim_{y->x} (omega(x, y) - 1/(x-y)^2) = -6 L(x) (I-A)^{-1} R(x).
inline FormValue projective_connection(const MomentSystem& sys, cplx x) {
  return {-6.0 * sys.sandwich(sys.L_vector(x).values, sys.R_vector(x).values), 2, 0, detail::outside(sys, x)};
}

/// Trapezoid rule for the contour integral of f(z) dz on |z - c| = r.
/// Counter-clockwise unless clockwise is set.
template <class F>
cplx contour_integral(F&& f, cplx centre, double radius, int nodes = 256, bool clockwise = false) {
  cplx sum = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double t = 2.0 * std::numbers::pi * j / nodes;
    const cplx e = std::polar(1.0, t);
    sum += f(centre + radius * e) * (cplx(0.0, 1.0) * radius * e);
  }
  sum *= 2.0 * std::numbers::pi / nodes;
  return clockwise ? -sum : sum;
}

}  // namespace schottky
