#pragma once

// Genus-zero correlators and genus-g generating functions for the rank-1 and
// rank-2 Heisenberg algebra with charge insertions.

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "schottky/errors.hpp"
#include "schottky/heisenberg_partition.hpp"
#include "schottky/mmt.hpp"
#include "schottky/moment_kernel.hpp"
#include "schottky/surface_forms.hpp"

namespace schottky {

/// Two-cocycle section epsilon(alpha, beta). The default is identically 1,
/// which satisfies epsilon(alpha, 0) = epsilon(0, alpha) = epsilon(alpha, -alpha) = 1.
struct Cocycle {
  std::function<cplx(const Charge2&, const Charge2&)> eps = [](const Charge2&, const Charge2&) { return cplx(1.0); };

  /// epsilon_beta = prod_t epsilon(beta^t, sum_{u>t} beta^u).
  cplx sequence(const std::vector<Charge2>& beta) const {
    cplx out = 1.0;
    Charge2 tail;
    for (std::size_t t = beta.size(); t-- > 0;) {
      out *= eps(beta[t], tail);
      tail = tail + beta[t];
    }
    return out;
  }
};

namespace detail {

inline ComplexMatrix pole_matrix(const std::vector<cplx>& xp, const std::vector<cplx>& xm) {
  if (xp.size() != xm.size()) throw DimensionError("h_+ and h_- insertion counts differ");
  const auto n = static_cast<Eigen::Index>(xp.size());
  ComplexMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = omega0(xp[static_cast<std::size_t>(i)], xm[static_cast<std::size_t>(j)]);
  return m;
}

// z^c on the principal branch; flags a base on the negative real axis.
inline cplx principal_pow(cplx z, cplx c, bool& flag) {
  if (c == cplx(0.0)) return 1.0;
  if (z == cplx(0.0)) throw PoleError("power of zero");
  return std::exp(c * principal_log(z, flag));
}

}  // namespace detail

/// perm 1/(x_i^+ - x_j^-)^2.
inline cplx genus0_2npt(const std::vector<cplx>& x_plus, const std::vector<cplx>& x_minus) {
  return permanent(detail::pole_matrix(x_plus, x_minus));
}

struct CorrelatorResult {
  cplx value;
  bool branch_flag = false;
  cplx z0 = 0.0;
  int K_used = 0;
};

/// eps_alpha prod_{t<u} (z_t - z_u)^{alpha^t . alpha^u} pperm_{theta^-, theta^+} 1/(x_i^+ - x_j^-)^2,
/// zero unless the charges sum to zero.
inline CorrelatorResult genus0_charged(const std::vector<cplx>& x_plus, const std::vector<cplx>& x_minus,
                                       const std::vector<cplx>& z, const std::vector<Charge2>& alpha,
                                       const Cocycle& cocycle = {}) {
  if (z.size() != alpha.size()) throw DimensionError("genus0_charged: one charge per point");
  Charge2 total;
  for (const auto& a : alpha) total = total + a;
  if (std::abs(total.c1) + std::abs(total.c2) > 1e-12) return {0.0};
  CorrelatorResult out;
  cplx pref = cocycle.sequence(alpha);
  for (std::size_t t = 0; t < z.size(); ++t)
    for (std::size_t u = t + 1; u < z.size(); ++u)
      pref *= detail::principal_pow(z[t] - z[u], dot(alpha[t], alpha[u]), out.branch_flag);
  auto theta = [&](const std::vector<cplx>& x, bool plus) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t t = 0; t < z.size(); ++t) {
        if (x[i] == z[t]) throw PoleError("genus0_charged: h insertion at a charge point");
        v(static_cast<Eigen::Index>(i)) += (plus ? alpha[t].plus() : alpha[t].minus()) / (x[i] - z[t]);
      }
    return v;
  };
  out.value = pref * partial_permanent(detail::pole_matrix(x_plus, x_minus), theta(x_minus, false), theta(x_plus, true));
  return out;
}

/// Insertion data: h_+ at y_plus, h_- at y_minus, e^{beta^t} at z_t, basepoint z0.
struct InsertionSet {
  std::vector<cplx> y_plus;
  std::vector<cplx> y_minus;
  std::vector<cplx> z;
  std::vector<Charge2> beta;
  cplx z0 = 0.0;
};

namespace detail {

inline void check_total_charge(const std::vector<Charge2>& beta) {
  Charge2 total;
  for (const auto& b : beta) total = total + b;
  if (std::abs(total.c1) + std::abs(total.c2) > 1e-12)
    throw DomainError("generating function: insertion charges must sum to zero");
}

// prod_{t<u} K(z_t, z_u)^{c_tu} as (z_t - z_u)^c exp(c r(z_t, z_u)).
template <class Pair>
cplx prime_form_product(const MomentSystem& sys, const std::vector<cplx>& z, Pair&& exponent, bool& flag) {
  cplx out = 1.0;
  for (std::size_t t = 0; t < z.size(); ++t)
    for (std::size_t u = t + 1; u < z.size(); ++u) {
      const cplx c = exponent(t, u);
      if (c == cplx(0.0)) continue;
      if (z[t] == z[u]) throw PoleError("coincident charge insertions");
      out *= principal_pow(z[t] - z[u], c, flag) * std::exp(c * prime_form_exponent(sys, z[t], z[u]));
    }
  return out;
}

// int_{z0}^{z_t} nu_a for every handle a and insertion t.
inline ComplexMatrix insertion_integrals(const MomentSystem& sys, const std::vector<cplx>& z, cplx z0, bool& flag) {
  const int g = sys.surface().genus();
  ComplexMatrix out(g, static_cast<Eigen::Index>(z.size()));
  for (int a = 1; a <= g; ++a)
    for (std::size_t t = 0; t < z.size(); ++t) {
      const AbelianIntegral ai = abelian_integral(sys, a, z[t], z0);
      flag = flag || ai.branch_crossed;
      out(a - 1, static_cast<Eigen::Index>(t)) = ai.value;
    }
  return out;
}

}  // namespace detail

/// Rank-2 generating function with charged handles alpha and insertions:
///   eps_beta prod E(z_t,z_u)^{beta^t.beta^u} pperm_{th^-, th^+} omega(y_r^+, y_s^-)
///   * exp(i pi alpha.Omega.alpha + sum alpha^a.beta^t int_{z0}^{z_t} nu_a) / det(I - A)
/// with th^pm(y) = sum_a alpha_pm^a nu_a(y) + sum_t beta_pm^t omega_{z_t - z0}(y).
inline CorrelatorResult generating_rank2(const MomentSystem& sys, const InsertionSet& ins, const ChargeData& charges,
                                         const Cocycle& cocycle = {}) {
  const int g = sys.surface().genus();
  if (static_cast<int>(charges.alpha.size()) != g) throw DimensionError("generating_rank2: one charge per handle");
  if (ins.z.size() != ins.beta.size()) throw DimensionError("generating_rank2: one charge per insertion point");
  if (ins.y_plus.size() != ins.y_minus.size()) throw DimensionError("generating_rank2: h_+ and h_- counts differ");
  detail::check_total_charge(ins.beta);
  CorrelatorResult out;
  out.z0 = ins.z0;
  out.K_used = sys.K();

  cplx value = cocycle.sequence(ins.beta);
  value *= detail::prime_form_product(
      sys, ins.z, [&](std::size_t t, std::size_t u) { return dot(ins.beta[t], ins.beta[u]); }, out.branch_flag);

  const auto n = static_cast<Eigen::Index>(ins.y_plus.size());
  ComplexMatrix w(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index s = 0; s < n; ++s)
      w(r, s) = omega(sys, ins.y_plus[static_cast<std::size_t>(r)], ins.y_minus[static_cast<std::size_t>(s)]).value;
  auto theta = [&](const std::vector<cplx>& y, bool plus) {
    ComplexVector v = ComplexVector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx yi = y[static_cast<std::size_t>(i)];
      for (int a = 1; a <= g; ++a) {
        const Charge2 al = charges.at(a);
        const cplx c = plus ? al.plus() : al.minus();
        if (c != cplx(0.0)) v(i) += c * nu(sys, a, yi).value;
      }
      for (std::size_t t = 0; t < ins.z.size(); ++t) {
        const cplx c = plus ? ins.beta[t].plus() : ins.beta[t].minus();
        if (c != cplx(0.0)) v(i) += c * omega_third_kind(sys, ins.z[t], ins.z0, yi).value;
      }
    }
    return v;
  };
  value *= partial_permanent(w, theta(ins.y_minus, false), theta(ins.y_plus, true));

  const PeriodMatrix pm = period_matrix(sys);
  out.branch_flag = out.branch_flag || pm.branch_ambiguous;
  cplx ex = cplx(0.0, std::numbers::pi) * charge_quadratic_form(charges, pm.values);
  if (!ins.z.empty()) {
    const ComplexMatrix ints = detail::insertion_integrals(sys, ins.z, ins.z0, out.branch_flag);
    for (int a = 1; a <= g; ++a)
      for (std::size_t t = 0; t < ins.z.size(); ++t)
        ex += dot(charges.at(a), ins.beta[t]) * ints(a - 1, static_cast<Eigen::Index>(t));
  }
  out.value = value * std::exp(ex) / sys.det();
  return out;
}

/// Sum over involutions of {1..m}: fixed points contribute nu_q, pairs
/// contribute omega_rs. The diagonal of omega is unused.
inline cplx sym_m(const ComplexMatrix& omega_values, const ComplexVector& nu_values) {
  const auto m = static_cast<int>(nu_values.size());
  if (omega_values.rows() != m || omega_values.cols() != m) throw DimensionError("sym_m: size mismatch");
  // f(S) over subsets S of remaining indices: lowest index is a fixed point or pairs with another.
  if (m > 24) throw DimensionError("sym_m: m > 24 is not supported");
  std::vector<cplx> f(std::size_t{1} << m, cplx(0.0));
  f[0] = 1.0;
  for (std::size_t mask = 1; mask < f.size(); ++mask) {
    const int i = std::countr_zero(mask);
    const std::size_t rest = mask & ~(std::size_t{1} << i);
    cplx v = nu_values(i) * f[rest];
    for (int j = i + 1; j < m; ++j)
      if (rest & (std::size_t{1} << j)) v += omega_values(i, j) * f[rest & ~(std::size_t{1} << j)];
    f[mask] = v;
  }
  return f.back();
}

/// Rank-1 insertion data: h at y, e^{beta^t} at z_t with scalar beta.
struct Rank1InsertionSet {
  std::vector<cplx> y;
  std::vector<cplx> z;
  std::vector<cplx> beta;
  cplx z0 = 0.0;
};

/// Rank-1 generating function:
///   eps_beta prod E(z_t,z_u)^{beta^t beta^u} Sym_m(omega, nu_{alpha,beta})
///   * exp(i pi alpha.Omega.alpha + sum alpha^a beta^t int_{z0}^{z_t} nu_a) det(I - A)^{-1/2}.
inline CorrelatorResult generating_rank1(const MomentSystem& sys, const Rank1InsertionSet& ins,
                                         const std::vector<cplx>& alpha, const Cocycle& cocycle = {}) {
  const int g = sys.surface().genus();
  if (static_cast<int>(alpha.size()) != g) throw DimensionError("generating_rank1: one charge per handle");
  if (ins.z.size() != ins.beta.size()) throw DimensionError("generating_rank1: one charge per insertion point");
  std::vector<Charge2> beta2;
  for (cplx b : ins.beta) beta2.push_back({b, 0.0});
  detail::check_total_charge(beta2);
  CorrelatorResult out;
  out.z0 = ins.z0;
  out.K_used = sys.K();

  cplx value = cocycle.sequence(beta2);
  value *= detail::prime_form_product(
      sys, ins.z, [&](std::size_t t, std::size_t u) { return ins.beta[t] * ins.beta[u]; }, out.branch_flag);

  const auto m = static_cast<Eigen::Index>(ins.y.size());
  ComplexMatrix w = ComplexMatrix::Zero(m, m);
  ComplexVector nv = ComplexVector::Zero(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const cplx yr = ins.y[static_cast<std::size_t>(r)];
    for (Eigen::Index s = r + 1; s < m; ++s) w(r, s) = w(s, r) = omega(sys, yr, ins.y[static_cast<std::size_t>(s)]).value;
    for (int a = 1; a <= g; ++a)
      if (alpha[static_cast<std::size_t>(a - 1)] != cplx(0.0)) nv(r) += alpha[static_cast<std::size_t>(a - 1)] * nu(sys, a, yr).value;
    for (std::size_t t = 0; t < ins.z.size(); ++t)
      if (ins.beta[t] != cplx(0.0)) nv(r) += ins.beta[t] * omega_third_kind(sys, ins.z[t], ins.z0, yr).value;
  }
  value *= sym_m(w, nv);

  const PeriodMatrix pm = period_matrix(sys);
  out.branch_flag = out.branch_flag || pm.branch_ambiguous;
  cplx quad = 0.0;
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) quad += alpha[static_cast<std::size_t>(a)] * alpha[static_cast<std::size_t>(b)] * pm.values(a, b);
  cplx ex = cplx(0.0, std::numbers::pi) * quad;
  if (!ins.z.empty()) {
    const ComplexMatrix ints = detail::insertion_integrals(sys, ins.z, ins.z0, out.branch_flag);
    for (int a = 0; a < g; ++a)
      for (std::size_t t = 0; t < ins.z.size(); ++t)
        ex += alpha[static_cast<std::size_t>(a)] * ins.beta[t] * ints(a, static_cast<Eigen::Index>(t));
  }
  out.value = value * std::exp(ex) / std::sqrt(sys.det());
  return out;
}

/// Genus-g 1-point function of the rank-2 Virasoro vector h_+(-1)h_-(-1)1
/// in the charged module:
///   (s(z)/6 + sum_{a,b} alpha_+^a alpha_-^b nu_a(z) nu_b(z)) exp(i pi alpha.Omega.alpha) / det(I - A).
inline cplx virasoro_1pt(const MomentSystem& sys, const ChargeData& charges, cplx z) {
  const int g = sys.surface().genus();
  if (static_cast<int>(charges.alpha.size()) != g) throw DimensionError("virasoro_1pt: one charge per handle");
  cplx nplus = 0.0, nminus = 0.0;
  for (int a = 1; a <= g; ++a) {
    const Charge2 al = charges.at(a);
    if (al.is_zero()) continue;
    const cplx v = nu(sys, a, z).value;
    nplus += al.plus() * v;
    nminus += al.minus() * v;
  }
  return (projective_connection(sys, z).value / 6.0 + nplus * nminus) * charged_from(sys, charges);
}

/// Fermionic generating function
///   prod_{i<j} E(x_i,x_j) E(y_i,y_j) / prod_{i,j} E(x_i,y_j) * Theta[alpha](Omega, zeta) / det(I - A)^{1/2}
/// with zeta_a = sum_i int_{y_i}^{x_i} nu_a.
inline CorrelatorResult fermion_generating(const MomentSystem& sys, const std::vector<cplx>& x,
                                           const std::vector<cplx>& y, const Eigen::VectorXd& alpha_shift,
                                           int theta_cutoff) {
  const int g = sys.surface().genus();
  if (x.size() != y.size()) throw DimensionError("fermion_generating: x and y counts differ");
  if (alpha_shift.size() != g) throw DimensionError("fermion_generating: one shift per handle");
  CorrelatorResult out;
  out.K_used = sys.K();
  cplx pref = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      pref *= prime_form_K(sys, x[i], x[j]).value * prime_form_K(sys, y[i], y[j]).value;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) pref /= prime_form_K(sys, x[i], y[j]).value;
  ComplexVector zeta = ComplexVector::Zero(g);
  for (int a = 1; a <= g; ++a)
    for (std::size_t i = 0; i < x.size(); ++i) {
      const AbelianIntegral ai = abelian_integral(sys, a, x[i], y[i]);
      out.branch_flag = out.branch_flag || ai.branch_crossed;
      zeta(a - 1) += ai.value;
    }
  const PeriodMatrix pm = period_matrix(sys);
  out.branch_flag = out.branch_flag || pm.branch_ambiguous;
  const ThetaResult th = riemann_theta(pm.values, alpha_shift, zeta, theta_cutoff);
  out.value = pref * th.value / std::sqrt(sys.det());
  return out;
}

}  // namespace schottky
