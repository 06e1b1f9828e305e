#pragma once

// Truncated moment matrix A, the form vectors L, R, d and their termwise
// antiderivatives, the resolvent (I - A)^{-1}, det(I - A) with truncation
// escalation, and the D(gamma) matrices.
//
// Flattened index of (a, k), a in I and 1 <= k <= K:
//   letter_rank(a) * K + (k - 1)
// so a runs -1, 1, -2, 2, ... and k is fastest.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "schottky/errors.hpp"
#include "schottky/mmt.hpp"
#include "schottky/schottky_group.hpp"

namespace schottky {

inline constexpr int kMaxTruncation = 200;

enum class FormKind { L, R, d, d_bar, L_anti, R_anti };

/// Length-2gK vector of mode components, tagged with what it represents.
struct FormVector {
  ComplexVector values;
  FormKind kind;
};

class MomentSystem {
 public:
  static MomentSystem build(const SchottkySurface& surface, int K) {
    if (K < 1 || K > kMaxTruncation) throw DomainError("build_moment_system: K must be in 1..200");
    MomentSystem sys(surface, K);
    sys.fill();
    sys.factorize();
    return sys;
  }

  const SchottkySurface& surface() const { return surface_; }
  int K() const { return K_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(2 * surface_.genus() * K_); }
  const ComplexMatrix& A() const { return A_; }
  cplx det() const { return det_; }

  Eigen::Index index(int a, int k) const {
    if (k < 1 || k > K_) throw DimensionError("MomentSystem::index: mode out of range");
    return static_cast<Eigen::Index>(letter_rank(a) * K_ + (k - 1));
  }

  /// L_a(k, x) = sqrt(k) rho_a^{k/2} / (x - w_a)^{k+1}.
  FormVector L_vector(cplx x) const { return {pole_series(x, false, false), FormKind::L}; }
  /// Component (a, k) is L_{-a}(k, y).
  FormVector R_vector(cplx y) const { return {pole_series(y, true, false), FormKind::R}; }
  /// Termwise antiderivative of L normalized to vanish at infinity:
  /// -(rho_a^{k/2}/sqrt(k)) (x - w_a)^{-k}.
  FormVector L_anti(cplx x) const { return {pole_series(x, false, true), FormKind::L_anti}; }
  FormVector R_anti(cplx y) const { return {pole_series(y, true, true), FormKind::R_anti}; }

  /// d_b indexed by (a, k), b in 1..g.
  FormVector d_vector(int b) const {
    check_positive(b);
    ComplexVector v(dim());
    for (int a : surface_.indices()) {
      const cplx wa = surface_.w(a);
      const cplx s = surface_.sqrt_rho(a);
      if (std::abs(a) != b) {
        const cplx u1 = s / (surface_.w(-b) - wa);
        const cplx u2 = s / (surface_.w(b) - wa);
        cplx p1 = 1.0, p2 = 1.0;
        for (int k = 1; k <= K_; ++k) {
          p1 *= u1;
          p2 *= u2;
          v(index(a, k)) = (p1 - p2) / std::sqrt(static_cast<double>(k));
        }
      } else {
        const double sgn = a > 0 ? 1.0 : -1.0;
        const cplx u = s / (surface_.w(a > 0 ? -b : b) - wa);
        cplx p = 1.0;
        for (int k = 1; k <= K_; ++k) {
          p *= u;
          v(index(a, k)) = sgn * p / std::sqrt(static_cast<double>(k));
        }
      }
    }
    return {std::move(v), FormKind::d};
  }

  /// d-bar_b: component (a, k) equals d_b at (-a, k).
  FormVector d_bar_vector(int b) const { return {swap_sign_blocks(d_vector(b).values), FormKind::d_bar}; }

  /// (I - A)^{-1} v.
  ComplexVector solve(const ComplexVector& v) const {
    check_len(v);
    return lu_.solve(v);
  }
  /// v (I - A)^{-1}, returned as a column vector.
  ComplexVector solve_left(const ComplexVector& v) const {
    check_len(v);
    return lu_.transpose().solve(v);
  }

  /// u (I - A)^{-1} v for a row vector u and column vector v.
  cplx sandwich(const ComplexVector& u, const ComplexVector& v) const {
    return (u.transpose() * solve(v))(0);
  }

 private:
  MomentSystem(const SchottkySurface& s, int K) : surface_(s), K_(K) {}

  void check_positive(int b) const {
    if (b < 1 || b > surface_.genus()) throw DimensionError("d_vector: index must be in 1..g");
  }
  void check_len(const ComplexVector& v) const {
    if (v.size() != dim()) throw DimensionError("MomentSystem: vector length must be 2gK");
  }

  ComplexVector swap_sign_blocks(const ComplexVector& v) const {
    ComplexVector out(dim());
    for (int a : surface_.indices())
      out.segment(index(a, 1), K_) = v.segment(index(-a, 1), K_);
    return out;
  }

  ComplexVector pole_series(cplx x, bool reflected, bool antiderivative) const {
    ComplexVector v(dim());
    for (int a : surface_.indices()) {
      const int pole = reflected ? -a : a;
      const cplx dx = x - surface_.w(pole);
      if (dx == cplx(0.0)) throw PoleError("form vector evaluated at a circle centre");
      const cplx u = surface_.sqrt_rho(a) / dx;
      cplx p = 1.0;
      for (int k = 1; k <= K_; ++k) {
        p *= u;
        const double sk = std::sqrt(static_cast<double>(k));
        v(index(a, k)) = antiderivative ? -p / sk : sk * p / dx;
      }
    }
    return v;
  }

  // A_{ab}(k,l) = (-1)^k (k+l-1)!/(sqrt(kl)(k-1)!(l-1)!) rho_a^{k/2} rho_b^{l/2}
  //               / (w_{-a} - w_b)^{k+l},  zero when a = -b.
  void fill() {
    const Eigen::Index n = dim();
    A_ = ComplexMatrix::Zero(n, n);
    std::vector<cplx> pa(static_cast<std::size_t>(K_) + 1), pb(static_cast<std::size_t>(K_) + 1);
    for (int a : surface_.indices())
      for (int b : surface_.indices()) {
        if (a == -b) continue;
        const cplx delta = surface_.w(-a) - surface_.w(b);
        const cplx ua = surface_.sqrt_rho(a) / delta;
        const cplx ub = surface_.sqrt_rho(b) / delta;
        pa[0] = pb[0] = 1.0;
        for (int k = 1; k <= K_; ++k) {
          pa[k] = pa[k - 1] * ua;
          pb[k] = pb[k - 1] * ub;
        }
        for (int k = 1; k <= K_; ++k) {
          // coefficient (k+l-1)!/((k-1)!(l-1)!) by recurrence in l
          double coeff = k;
          const double sign = (k % 2 == 0) ? 1.0 : -1.0;
          for (int l = 1; l <= K_; ++l) {
            if (l > 1) coeff *= static_cast<double>(k + l - 1) / static_cast<double>(l - 1);
            A_(index(a, k), index(b, l)) =
                sign * (coeff * pa[k]) * pb[l] / std::sqrt(static_cast<double>(k) * l);
          }
        }
      }
  }

  void factorize() {
    const ComplexMatrix ia = ComplexMatrix::Identity(dim(), dim()) - A_;
    lu_ = Eigen::PartialPivLU<ComplexMatrix>(ia);
    det_ = lu_.determinant();
    if (!(std::abs(det_) > 0.0) || !std::isfinite(std::abs(det_)))
      throw FactorizationError("build_moment_system: I - A is singular");
    // PartialPivLU does not flag singularity; a zero pivot shows up in det.
  }

  SchottkySurface surface_;
  int K_;
  ComplexMatrix A_;
  Eigen::PartialPivLU<ComplexMatrix> lu_;
  cplx det_ = 1.0;
};

inline MomentSystem build_moment_system(const SchottkySurface& s, int K) { return MomentSystem::build(s, K); }

/// Resolvent application through the cached factorization.
enum class Side { left, right };
inline FormVector resolvent_apply(const MomentSystem& sys, const FormVector& v, Side side) {
  return {side == Side::right ? sys.solve(v.values) : sys.solve_left(v.values), v.kind};
}

/// Result of truncation escalation.
struct ConvergedSystem {
  MomentSystem system;
  int K_used;
  double rel_change;  // relative change of det between the last two truncations
  std::vector<cplx> det_history;
};

/// Doubles K (capped at 200) until det(I - A) changes by less than tol
/// relative between successive truncations.
inline ConvergedSystem escalate(const SchottkySurface& s, int K0, double tol) {
  if (!(tol > 0.0)) throw DomainError("det_I_minus_A: tol must be positive");
  int K = std::clamp(K0, 1, kMaxTruncation);
  MomentSystem prev = MomentSystem::build(s, K);
  std::vector<cplx> history{prev.det()};
  while (true) {
    if (K >= kMaxTruncation)
      throw ConvergenceError("det_I_minus_A: no convergence by K = 200", prev.det(), prev.det());
    const int next_K = std::min(2 * K, kMaxTruncation);
    MomentSystem next = MomentSystem::build(s, next_K);
    history.push_back(next.det());
    const double rel = std::abs(next.det() - prev.det()) / std::abs(next.det());
    if (rel < tol) return {std::move(next), next_K, rel, std::move(history)};
    if (next_K >= kMaxTruncation)
      throw ConvergenceError("det_I_minus_A: no convergence by K = 200", prev.det(), next.det());
    prev = std::move(next);
    K = next_K;
  }
}

struct DetResult {
  cplx value;
  int K_used;
  double rel_change;
};

inline DetResult det_I_minus_A(const SchottkySurface& s, int K, double tol) {
  auto c = escalate(s, K, tol);
  if (c.system.det() == cplx(0.0)) throw InternalError("det_I_minus_A: determinant vanished");
  return {c.system.det(), c.K_used, c.rel_change};
}

/// log det(I - A) by the trace series -sum_{n<=terms} Tr(A^n)/n.
inline cplx log_det_trace_series(const ComplexMatrix& a, int terms) {
  ComplexMatrix power = a;
  cplx sum = 0.0;
  for (int n = 1; n <= terms; ++n) {
    sum -= power.trace() / static_cast<double>(n);
    if (n < terms) power = power * a;
  }
  return sum;
}

struct DMatrix {
  ComplexMatrix values;  // K x K, entry (k-1, l-1) holds D_{kl}
};

/// D_{kl}(gamma) = sqrt(l/k) [y^l] (gamma y)^k, zero matrix when gamma(0) = inf.
inline DMatrix d_matrix(const MoebiusMap& gamma, int K) {
  if (K < 1 || K > kMaxTruncation) throw DomainError("d_matrix: K must be in 1..200");
  DMatrix out{ComplexMatrix::Zero(K, K)};
  if (gamma.d() == cplx(0.0)) return out;
  // Taylor series of gamma(y) = b/d + (det/d^2) y / (1 + (c/d) y) to order K.
  std::vector<cplx> f(static_cast<std::size_t>(K) + 1);
  f[0] = gamma.b() / gamma.d();
  const cplx ratio = -gamma.c() / gamma.d();
  cplx term = gamma.det() / (gamma.d() * gamma.d());
  for (int j = 1; j <= K; ++j) {
    f[static_cast<std::size_t>(j)] = term;
    term *= ratio;
  }
  std::vector<cplx> power(static_cast<std::size_t>(K) + 1, cplx(0.0)), next(power.size());
  power[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    std::fill(next.begin(), next.end(), cplx(0.0));
    for (int i = 0; i <= K; ++i) {
      if (power[static_cast<std::size_t>(i)] == cplx(0.0)) continue;
      for (int j = 0; i + j <= K; ++j)
        next[static_cast<std::size_t>(i + j)] += power[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(j)];
    }
    power.swap(next);
    for (int l = 1; l <= K; ++l)
      out.values(k - 1, l - 1) = std::sqrt(static_cast<double>(l) / k) * power[static_cast<std::size_t>(l)];
  }
  return out;
}

/// lambda_a = diag(rho_a^{-1/2}, 1) [[1, -w_a], [0, 1]],
/// mu_a     = diag(rho_a^{1/2}, 1)  [[0, 1], [1, -w_{-a}]].
/// With these, gamma_{-a} = lambda_a^{-1} mu_a and A_{ab} = D(mu_a lambda_b^{-1}).
struct LambdaMu {
  MoebiusMap lambda;
  MoebiusMap mu;
};

inline LambdaMu lambda_mu(const SchottkySurface& s, int a) {
  const cplx sr = s.sqrt_rho(a);
  return {MoebiusMap(1.0 / sr, -s.w(a) / sr, 0.0, 1.0), MoebiusMap(0.0, sr, 1.0, -s.w(-a))};
}

// Binary regression dump: 16-byte header (8-byte magic, int32 genus,
// int32 K), det(I - A) as two float64, then A row-major as (re, im) float64
// pairs. Little-endian throughout.
inline constexpr std::array<char, 8> kDumpMagic{'S', 'K', 'Y', 'M', 'O', 'M', 'A', '1'};

inline void write_moment_dump(const MomentSystem& sys, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_moment_dump: cannot open " + path);
  const std::int32_t g = sys.surface().genus(), K = sys.K();
  os.write(kDumpMagic.data(), 8);
  os.write(reinterpret_cast<const char*>(&g), 4);
  os.write(reinterpret_cast<const char*>(&K), 4);
  const double det[2] = {sys.det().real(), sys.det().imag()};
  os.write(reinterpret_cast<const char*>(det), sizeof det);
  for (Eigen::Index i = 0; i < sys.dim(); ++i)
    for (Eigen::Index j = 0; j < sys.dim(); ++j) {
      const double v[2] = {sys.A()(i, j).real(), sys.A()(i, j).imag()};
      os.write(reinterpret_cast<const char*>(v), sizeof v);
    }
}

struct MomentDump {
  int genus;
  int K;
  cplx det;
  ComplexMatrix A;
};

inline MomentDump read_moment_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_moment_dump: cannot open " + path);
  std::array<char, 8> magic{};
  std::int32_t g = 0, K = 0;
  is.read(magic.data(), 8);
  is.read(reinterpret_cast<char*>(&g), 4);
  is.read(reinterpret_cast<char*>(&K), 4);
  if (!is || magic != kDumpMagic) throw Error("read_moment_dump: bad header in " + path);
  double det[2];
  is.read(reinterpret_cast<char*>(det), sizeof det);
  const Eigen::Index n = 2 * g * K;
  MomentDump out{g, K, {det[0], det[1]}, ComplexMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double v[2];
      is.read(reinterpret_cast<char*>(v), sizeof v);
      out.A(i, j) = {v[0], v[1]};
    }
  if (!is) throw Error("read_moment_dump: truncated file " + path);
  return out;
}

}  // namespace schottky
