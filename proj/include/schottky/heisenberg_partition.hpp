#pragma once

// Genus-g partition functions of the rank-1 and rank-2 Heisenberg algebra,
// their charged modules and lattice specializations.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "schottky/errors.hpp"
#include "schottky/mmt.hpp"
#include "schottky/moment_kernel.hpp"
#include "schottky/schottky_group.hpp"
#include "schottky/surface_forms.hpp"

namespace schottky {

/// Rank-2 charge alpha = (alpha_1, alpha_2) in C^2.
struct Charge2 {
  cplx c1 = 0.0;
  cplx c2 = 0.0;

  cplx plus() const { return (c1 + cplx(0.0, 1.0) * c2) / std::numbers::sqrt2; }
  cplx minus() const { return (c1 - cplx(0.0, 1.0) * c2) / std::numbers::sqrt2; }
  Charge2 operator-() const { return {-c1, -c2}; }
  Charge2 operator+(const Charge2& o) const { return {c1 + o.c1, c2 + o.c2}; }
  bool is_zero() const { return c1 == cplx(0.0) && c2 == cplx(0.0); }
};

/// alpha.beta = alpha_+ beta_- + alpha_- beta_+ = alpha_1 beta_1 + alpha_2 beta_2.
inline cplx dot(const Charge2& a, const Charge2& b) { return a.c1 * b.c1 + a.c2 * b.c2; }

/// Per-handle charges alpha^a, a = 1..g; alpha^{-a} = -alpha^a is implied.
struct ChargeData {
  std::vector<Charge2> alpha;

  static ChargeData zero(int g) { return {std::vector<Charge2>(static_cast<std::size_t>(g))}; }
  Charge2 at(int a) const {
    const Charge2& c = alpha.at(static_cast<std::size_t>(std::abs(a) - 1));
    return a > 0 ? c : -c;
  }
};

struct PartitionResult {
  cplx value;
  int K_used = 0;
  double rel_change = 0.0;
  bool branch_flag = false;  // det^{-1/2}: det crossed the negative real axis during escalation
};

inline PartitionResult partition_rank2(const SchottkySurface& s, int K, double tol) {
  const DetResult d = det_I_minus_A(s, K, tol);
  return {1.0 / d.value, d.K_used, d.rel_change, false};
}

/// det^{-1/2} on the principal branch, with the branch flag raised when two
/// successive escalation iterates straddle the cut.
inline PartitionResult rank1_from(const ConvergedSystem& c) {
  bool flag = false;
  for (std::size_t i = 0; i < c.det_history.size(); ++i) {
    const cplx d = c.det_history[i];
    if (d.real() < 0.0 && d.imag() == 0.0) flag = true;
    if (i > 0) {
      const cplx p = c.det_history[i - 1];
      if (p.real() < 0.0 && d.real() < 0.0 && (p.imag() >= 0.0) != (d.imag() >= 0.0)) flag = true;
    }
  }
  return {1.0 / std::sqrt(c.system.det()), c.K_used, c.rel_change, flag};
}

inline PartitionResult partition_rank1(const SchottkySurface& s, int K, double tol) {
  return rank1_from(escalate(s, K, tol));
}

/// alpha.Omega.alpha = sum_{a,b} (alpha^a . alpha^b) Omega_ab.
inline cplx charge_quadratic_form(const ChargeData& q, const ComplexMatrix& omega) {
  const int g = static_cast<int>(omega.rows());
  if (static_cast<int>(q.alpha.size()) != g) throw DimensionError("charges must have one entry per handle");
  cplx sum = 0.0;
  for (int a = 1; a <= g; ++a)
    for (int b = 1; b <= g; ++b) sum += dot(q.at(a), q.at(b)) * omega(a - 1, b - 1);
  return sum;
}

inline cplx charged_from(const MomentSystem& sys, const ChargeData& q) {
  const PeriodMatrix pm = period_matrix(sys);
  return std::exp(cplx(0.0, std::numbers::pi) * charge_quadratic_form(q, pm.values)) / sys.det();
}

/// exp(i pi alpha.Omega.alpha) / det(I - A).
inline PartitionResult partition_charged(const SchottkySurface& s, const ChargeData& q, int K, double tol) {
  const ConvergedSystem c = escalate(s, K, tol);
  return {charged_from(c.system, q), c.K_used, c.rel_change, false};
}

/// prod over primitive classes of length <= max_word_length and
/// k <= max_multiplier_power of (1 - q^k).
inline cplx montonen_zograf(const SchottkySurface& s, int max_multiplier_power, int max_word_length) {
  if (max_multiplier_power < 1 || max_word_length < 1) throw DomainError("montonen_zograf: cutoffs must be >= 1");
  cplx prod = 1.0;
  for (const GroupWord& w : primitive_class_reps(s, static_cast<std::size_t>(max_word_length))) {
    const cplx q = moebius_multiplier(word_map(s, w));
    if (!(std::abs(q) < 1.0)) throw InternalError("montonen_zograf: non-loxodromic word");
    cplx qk = 1.0;
    for (int k = 1; k <= max_multiplier_power; ++k) {
      qk *= q;
      prod *= 1.0 - qk;
    }
  }
  return prod;
}

/// sum over multisets i of (a, k) with total weight sum k <= max_weight of
/// perm A(i, i) / r(i)!, using A truncated at K = max_weight.
inline cplx fock_oracle(const SchottkySurface& s, int max_weight) {
  if (max_weight < 0 || max_weight > 8) throw DomainError("fock_oracle: max_weight must be in 0..8");
  if (max_weight == 0) return 1.0;
  const MomentSystem sys = MomentSystem::build(s, max_weight);
  std::vector<int> weights(static_cast<std::size_t>(sys.dim()));
  for (int a : s.indices())
    for (int k = 1; k <= max_weight; ++k) weights[static_cast<std::size_t>(sys.index(a, k))] = k;
  cplx sum = 0.0;
  for_each_weighted_multiset(weights, max_weight, [&](const Multiset& m) {
    const ComplexMatrix sub = submatrix(sys.A(), m, m);
    sum += (m.size() <= 8 ? permanent_naive(sub) : permanent(sub)) / m.factorial_weight();
  });
  return sum;
}

/// Direct lattice sum for the Riemann theta function with characteristic.
struct ThetaResult {
  cplx value;
  double tail_estimate;  // largest |term| on the outer shell ||m||_inf = cutoff
};

inline bool imag_positive_definite(const ComplexMatrix& omega) {
  const Eigen::MatrixXd im = omega.imag();
  return is_positive_definite(0.5 * (im + im.transpose()));
}

inline ThetaResult riemann_theta(const ComplexMatrix& omega, const Eigen::VectorXd& alpha_shift,
                                 const ComplexVector& zeta, int cutoff) {
  const int g = static_cast<int>(omega.rows());
  if (omega.cols() != g || alpha_shift.size() != g || zeta.size() != g)
    throw DimensionError("riemann_theta: dimension mismatch");
  if (!imag_positive_definite(omega)) throw DomainError("riemann_theta: Im(Omega) is not positive definite");
  if (cutoff < 0) throw DomainError("riemann_theta: cutoff must be >= 0");
  std::vector<int> m(static_cast<std::size_t>(g), -cutoff);
  Eigen::VectorXcd v(g);
  cplx sum = 0.0;
  double tail = 0.0;
  const cplx ipi(0.0, std::numbers::pi);
  while (true) {
    bool shell = false;
    for (int i = 0; i < g; ++i) {
      v(i) = m[static_cast<std::size_t>(i)] + alpha_shift(i);
      shell = shell || std::abs(m[static_cast<std::size_t>(i)]) == cutoff;
    }
    const cplx term = std::exp(ipi * (v.transpose() * omega * v)(0) + (v.transpose() * zeta)(0));
    sum += term;
    if (shell) tail = std::max(tail, std::abs(term));
    int i = 0;
    while (i < g && ++m[static_cast<std::size_t>(i)] > cutoff) m[static_cast<std::size_t>(i++)] = -cutoff;
    if (i == g) break;
  }
  return {sum, tail};
}

struct LatticeResult {
  cplx value;
  cplx theta;
  double tail_estimate;
  int K_used;
};

/// Theta_L(Omega) / det(I - A)^{d/2} for the lattice with Gram matrix `gram`
/// (d x d), summing over g-tuples of lattice vectors with
/// sum_a lambda^a . lambda^a <= norm_cutoff.
inline LatticeResult lattice_partition(const SchottkySurface& s, const Eigen::MatrixXd& gram, double norm_cutoff,
                                       int K, double tol) {
  const int d = static_cast<int>(gram.rows());
  if (gram.cols() != d || d < 1) throw DimensionError("lattice_partition: Gram matrix must be square");
  if (!is_positive_definite(gram)) throw DomainError("lattice_partition: Gram matrix is not positive definite");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (gram(i, j) != std::round(gram(i, j))) throw DomainError("lattice_partition: lattice must be integral");
  const ConvergedSystem c = escalate(s, K, tol);
  const PeriodMatrix pm = period_matrix(c.system);
  const int g = s.genus();
  const Eigen::MatrixXd sym_im = 0.5 * (pm.values.imag() + pm.values.imag().transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym_im);
  const double lam_min = es.eigenvalues().minCoeff();
  if (!(lam_min > 0.0)) throw DomainError("lattice_partition: Im(Omega) is not positive definite");
  const double tail = std::exp(-std::numbers::pi * lam_min * norm_cutoff);
  if (tail > tol) throw DomainError("lattice_partition: norm cutoff too small for the requested tolerance");

  // Coefficient box from n^T G n <= N  =>  |n_i| <= sqrt(N (G^{-1})_ii).
  const Eigen::MatrixXd ginv = gram.inverse();
  const int n_coeff = g * d;
  std::vector<int> bound(static_cast<std::size_t>(n_coeff));
  for (int a = 0; a < g; ++a)
    for (int i = 0; i < d; ++i)
      bound[static_cast<std::size_t>(a * d + i)] = static_cast<int>(std::floor(std::sqrt(norm_cutoff * ginv(i, i)) + 1e-9));
  std::vector<int> n(static_cast<std::size_t>(n_coeff));
  for (int j = 0; j < n_coeff; ++j) n[static_cast<std::size_t>(j)] = -bound[static_cast<std::size_t>(j)];
  Eigen::MatrixXd lam(d, g);
  cplx theta = 0.0;
  const cplx ipi(0.0, std::numbers::pi);
  while (true) {
    for (int a = 0; a < g; ++a)
      for (int i = 0; i < d; ++i) lam(i, a) = n[static_cast<std::size_t>(a * d + i)];
    const Eigen::MatrixXd inner = lam.transpose() * gram * lam;  // (lambda^a . lambda^b)
    if (inner.trace() <= norm_cutoff + 1e-9) {
      cplx ex = 0.0;
      for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) ex += inner(a, b) * pm.values(a, b);
      theta += std::exp(ipi * ex);
    }
    int j = 0;
    while (j < n_coeff && ++n[static_cast<std::size_t>(j)] > bound[static_cast<std::size_t>(j)]) {
      n[static_cast<std::size_t>(j)] = -bound[static_cast<std::size_t>(j)];
      ++j;
    }
    if (j == n_coeff) break;
  }
  const cplx det_power = std::pow(c.system.det(), 0.5 * d);
  return {theta / det_power, theta, tail, c.K_used};
}

}  // namespace schottky
