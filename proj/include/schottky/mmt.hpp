#pragma once

// Permanents, partial permanents, multiset enumeration and the four
// MacMahon Master Theorem identities evaluated as truncated sums against
// their closed forms.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "schottky/errors.hpp"

namespace schottky {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Multiset over the index range {0, ..., n-1}, stored as dense repetition
/// counts. A zero count means the index is absent.
class Multiset {
 public:
  Multiset() = default;
  explicit Multiset(std::size_t range) : counts_(range, 0) {}
  explicit Multiset(std::vector<int> counts) : counts_(std::move(counts)) {
    for (int c : counts_)
      if (c < 0) throw DimensionError("Multiset: negative repetition count");
  }

  std::size_t range() const { return counts_.size(); }
  int count(std::size_t i) const { return counts_.at(i); }
  const std::vector<int>& counts() const { return counts_; }

  /// N = sum of counts.
  int size() const {
    int n = 0;
    for (int c : counts_) n += c;
    return n;
  }

  bool empty() const { return size() == 0; }

  /// prod_i r(i)!, the order of the label symmetry group.
  double factorial_weight() const {
    double w = 1.0;
    for (int c : counts_)
      for (int j = 2; j <= c; ++j) w *= j;
    return w;
  }

  /// Elements with multiplicity, in increasing index order.
  std::vector<int> elements() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (std::size_t i = 0; i < counts_.size(); ++i)
      for (int j = 0; j < counts_[i]; ++j) out.push_back(static_cast<int>(i));
    return out;
  }

  friend bool operator==(const Multiset&, const Multiset&) = default;

 private:
  std::vector<int> counts_;
};

/// Produces every multiset over {0..n-1} with size <= max_size exactly once.
/// Order: graded by size, then by count vectors in descending lexicographic
/// order, so {0} precedes {1} and {0,0} precedes {0,1}.
class MultisetEnumerator {
 public:
  MultisetEnumerator(std::size_t n, int max_size) : n_(n), max_size_(max_size) {}

  std::optional<Multiset> next() {
    if (done_) return std::nullopt;
    if (!started_) {
      started_ = true;
      current_.assign(n_, 0);
      grade_ = 0;
      if (max_size_ < 0) {
        done_ = true;
        return std::nullopt;
      }
      return Multiset(current_);
    }
    if (advance_within_grade()) return Multiset(current_);
    // next grade
    ++grade_;
    if (grade_ > max_size_ || n_ == 0) {
      done_ = true;
      return std::nullopt;
    }
    std::fill(current_.begin(), current_.end(), 0);
    current_[0] = grade_;
    return Multiset(current_);
  }

 private:
  // Moves to the lexicographic predecessor among count vectors with the
  // same sum. Returns false when the grade is exhausted.
  bool advance_within_grade() {
    if (grade_ == 0 || n_ <= 1) return false;
    // rightmost position p < n-1 with a nonzero count
    std::size_t p = n_ - 1;
    int tail = current_[n_ - 1];
    bool found = false;
    while (p > 0) {
      --p;
      if (current_[p] > 0) {
        found = true;
        break;
      }
    }
    if (!found) return false;
    current_[p] -= 1;
    current_[n_ - 1] = 0;
    current_[p + 1] = tail + 1;
    return true;
  }

  std::size_t n_;
  int max_size_;
  int grade_ = 0;
  bool started_ = false;
  bool done_ = false;
  std::vector<int> current_;
};

inline std::vector<Multiset> enumerate_multisets(std::size_t n, int max_size) {
  std::vector<Multiset> out;
  MultisetEnumerator it(n, max_size);
  while (auto m = it.next()) out.push_back(std::move(*m));
  return out;
}

/// Enumerates multisets whose weighted size sum_i weight[i]*r(i) is at most
/// max_weight. Weights must be positive. Visits in depth-first order over
/// the index range.
template <class Fn>
void for_each_weighted_multiset(const std::vector<int>& weights, int max_weight, Fn&& fn) {
  for (int w : weights)
    if (w <= 0) throw DimensionError("for_each_weighted_multiset: weights must be positive");
  std::vector<int> counts(weights.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, int budget) -> void {
    if (i == weights.size()) {
      fn(Multiset(counts));
      return;
    }
    for (int r = 0; r * weights[i] <= budget; ++r) {
      counts[i] = r;
      self(self, i + 1, budget - r * weights[i]);
    }
    counts[i] = 0;
  };
  if (max_weight >= 0) rec(rec, 0, max_weight);
}

/// Entry (p,q) = M(i_p, j_q) where i_p, j_q run over the multiset elements
/// with multiplicity.
inline ComplexMatrix submatrix(const ComplexMatrix& m, const Multiset& rows, const Multiset& cols) {
  if (rows.range() > static_cast<std::size_t>(m.rows()) ||
      cols.range() > static_cast<std::size_t>(m.cols()))
    throw DimensionError("submatrix: multiset index range exceeds matrix dimension");
  const auto ri = rows.elements();
  const auto ci = cols.elements();
  ComplexMatrix out(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t p = 0; p < ri.size(); ++p)
    for (std::size_t q = 0; q < ci.size(); ++q)
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = m(ri[p], ci[q]);
  return out;
}

/// Rows of v picked by the multiset elements, with multiplicity.
inline ComplexMatrix select_rows(const ComplexMatrix& v, const Multiset& rows) {
  const auto ri = rows.elements();
  ComplexMatrix out(static_cast<Eigen::Index>(ri.size()), v.cols());
  for (std::size_t p = 0; p < ri.size(); ++p) out.row(static_cast<Eigen::Index>(p)) = v.row(ri[p]);
  return out;
}

inline ComplexMatrix select_cols(const ComplexMatrix& u, const Multiset& cols) {
  const auto ci = cols.elements();
  ComplexMatrix out(u.rows(), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t q = 0; q < ci.size(); ++q) out.col(static_cast<Eigen::Index>(q)) = u.col(ci[q]);
  return out;
}

inline ComplexVector select_entries(const ComplexVector& v, const Multiset& idx) {
  const auto ii = idx.elements();
  ComplexVector out(static_cast<Eigen::Index>(ii.size()));
  for (std::size_t p = 0; p < ii.size(); ++p) out(static_cast<Eigen::Index>(p)) = v(ii[p]);
  return out;
}

/// Permanent by direct enumeration of S_n. Kept as the reference path.
inline cplx permanent_naive(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("permanent: matrix is not square");
  const auto n = static_cast<int>(m.rows());
  if (n > 10) throw DimensionError("permanent_naive: n > 10 is not supported");
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  cplx total = 0.0;
  do {
    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= m(i, perm[static_cast<std::size_t>(i)]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// Ryser inclusion-exclusion with Gray-code column updates, O(2^n n).
inline cplx permanent(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("permanent: matrix is not square");
  const auto n = static_cast<int>(m.rows());
  if (n == 0) return 1.0;
  if (n > 20) throw DimensionError("permanent: n > 20 is not supported");
  if (n == 1) return m(0, 0);

  std::vector<cplx> row_sum(static_cast<std::size_t>(n), cplx(0.0));
  cplx total = 0.0;
  std::uint32_t gray_prev = 0;
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t s = 1; s < limit; ++s) {
    const std::uint32_t gray = s ^ (s >> 1);
    const std::uint32_t diff = gray ^ gray_prev;
    const int col = std::countr_zero(diff);
    const double sign_col = (gray & diff) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) row_sum[static_cast<std::size_t>(i)] += sign_col * m(i, col);
    gray_prev = gray;

    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= row_sum[static_cast<std::size_t>(i)];
    const int popcount = std::popcount(gray);
    total += ((n - popcount) % 2 == 0) ? prod : -prod;
  }
  return total;
}

/// (theta, phi)-extended partial permanent:
///   sum over injective partial maps psi of prod_{i in dom} M(i, psi i)
///   * prod_{j not in image} theta_j * prod_{k not in dom} phi_k.
/// Evaluated row by row over subsets of used columns, O(n^2 2^n).
inline cplx partial_permanent(const ComplexMatrix& m, const ComplexVector& theta,
                              const ComplexVector& phi) {
  if (m.rows() != m.cols()) throw DimensionError("partial_permanent: matrix is not square");
  const auto n = static_cast<int>(m.rows());
  if (theta.size() != n || phi.size() != n)
    throw DimensionError("partial_permanent: weight vector length mismatch");
  if (n == 0) return 1.0;
  if (n > 20) throw DimensionError("partial_permanent: n > 20 is not supported");

  const std::size_t states = std::size_t{1} << n;
  std::vector<cplx> dp(states, cplx(0.0)), next(states);
  dp[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    std::fill(next.begin(), next.end(), cplx(0.0));
    for (std::size_t mask = 0; mask < states; ++mask) {
      const cplx v = dp[mask];
      if (v == cplx(0.0)) continue;
      next[mask] += v * phi(i);
      for (int j = 0; j < n; ++j)
        if (!(mask & (std::size_t{1} << j))) next[mask | (std::size_t{1} << j)] += v * m(i, j);
    }
    dp.swap(next);
  }
  cplx total = 0.0;
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (dp[mask] == cplx(0.0)) continue;
    cplx w = dp[mask];
    for (int j = 0; j < n; ++j)
      if (!(mask & (std::size_t{1} << j))) w *= theta(j);
    total += w;
  }
  return total;
}

enum class MmtVariant { basic, submatrix, pperm, general };

/// Auxiliary data for the block-matrix and partial-permutation variants.
/// B is n'xn', U is n'xn, V is nxn'. theta/phi are n-vectors, theta_prime
/// and phi_prime are n'-vectors. Unused members may be left empty.
struct MmtAux {
  ComplexMatrix B, U, V;
  ComplexVector theta, phi, theta_prime, phi_prime;
};

struct MmtCheck {
  cplx lhs;
  cplx rhs;
  double spectral_radius_estimate = 0.0;
  bool divergence_warning = false;
};

/// Power-iteration estimate of the spectral radius.
inline double spectral_radius_estimate(const ComplexMatrix& a, int iterations = 50, double tol = 1e-10) {
  if (a.rows() == 0) return 0.0;
  ComplexVector v = ComplexVector::Constant(a.rows(), cplx(1.0, 0.5));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ComplexVector w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double prev = est;
    est = norm;
    v = w / norm;
    if (it > 0 && std::abs(est - prev) <= tol * std::max(1.0, est)) break;
  }
  return est;
}

namespace detail {

inline ComplexMatrix block_matrix(const ComplexMatrix& b, const ComplexMatrix& u, const ComplexMatrix& v,
                                  const ComplexMatrix& a) {
  const auto np = b.rows();
  const auto n = a.rows();
  ComplexMatrix out(np + n, np + n);
  out.topLeftCorner(np, np) = b;
  out.topRightCorner(np, n) = u;
  out.bottomLeftCorner(n, np) = v;
  out.bottomRightCorner(n, n) = a;
  return out;
}

inline void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace detail

/// Truncated multiset sum (multisets of size <= max_size) against the exact
/// closed form of the selected identity.
inline MmtCheck mmt_identity_check(const ComplexMatrix& a, MmtVariant variant, const MmtAux& aux,
                                   int max_size) {
  detail::require(a.rows() == a.cols(), "mmt_identity_check: A must be square");
  const auto n = a.rows();
  const bool block = variant == MmtVariant::submatrix || variant == MmtVariant::general;
  const bool weighted = variant == MmtVariant::pperm || variant == MmtVariant::general;
  const auto np = block ? aux.B.rows() : Eigen::Index{0};
  if (block) {
    detail::require(aux.B.cols() == np && aux.U.rows() == np && aux.U.cols() == n && aux.V.rows() == n &&
                        aux.V.cols() == np,
                    "mmt_identity_check: inconsistent B, U, V shapes");
  }
  if (weighted) {
    detail::require(aux.theta.size() == n && aux.phi.size() == n, "mmt_identity_check: theta/phi length");
  }
  if (variant == MmtVariant::general) {
    detail::require(aux.theta_prime.size() == np && aux.phi_prime.size() == np,
                    "mmt_identity_check: theta'/phi' length");
  }

  MmtCheck out;
  out.spectral_radius_estimate = spectral_radius_estimate(a);
  out.divergence_warning = out.spectral_radius_estimate >= 1.0;

  const ComplexMatrix ia = ComplexMatrix::Identity(n, n) - a;
  Eigen::PartialPivLU<ComplexMatrix> lu(ia);
  const cplx det = n == 0 ? cplx(1.0) : lu.determinant();
  if (std::abs(det) == 0.0 || !std::isfinite(std::abs(det)))
    throw FactorizationError("mmt_identity_check: I - A is singular");

  cplx lhs = 0.0;
  MultisetEnumerator it(static_cast<std::size_t>(n), max_size);
  while (auto ms = it.next()) {
    const ComplexMatrix sub = submatrix(a, *ms, *ms);
    cplx term;
    switch (variant) {
      case MmtVariant::basic:
        term = permanent(sub);
        break;
      case MmtVariant::submatrix:
        term = permanent(detail::block_matrix(aux.B, select_cols(aux.U, *ms), select_rows(aux.V, *ms), sub));
        break;
      case MmtVariant::pperm:
        term = partial_permanent(sub, select_entries(aux.theta, *ms), select_entries(aux.phi, *ms));
        break;
      case MmtVariant::general: {
        const ComplexVector th = select_entries(aux.theta, *ms);
        const ComplexVector ph = select_entries(aux.phi, *ms);
        ComplexVector big_theta(np + th.size()), big_phi(np + ph.size());
        big_theta << aux.theta_prime, th;
        big_phi << aux.phi_prime, ph;
        term = partial_permanent(
            detail::block_matrix(aux.B, select_cols(aux.U, *ms), select_rows(aux.V, *ms), sub), big_theta,
            big_phi);
        break;
      }
    }
    lhs += term / ms->factorial_weight();
  }
  out.lhs = lhs;

  switch (variant) {
    case MmtVariant::basic:
      out.rhs = 1.0 / det;
      break;
    case MmtVariant::submatrix: {
      const ComplexMatrix bt = aux.B + aux.U * lu.solve(aux.V);
      out.rhs = permanent(bt) / det;
      break;
    }
    case MmtVariant::pperm: {
      const cplx expo = n == 0 ? cplx(0.0) : cplx((aux.theta.transpose() * lu.solve(aux.phi))(0));
      out.rhs = std::exp(expo) / det;
      break;
    }
    case MmtVariant::general: {
      const cplx expo = n == 0 ? cplx(0.0) : cplx((aux.theta.transpose() * lu.solve(aux.phi))(0));
      const ComplexMatrix bt = aux.B + aux.U * lu.solve(aux.V);
      ComplexVector theta_t = aux.theta_prime;
      ComplexVector phi_t = aux.phi_prime;
      if (n > 0) {
        // theta (I-A)^{-1} V as a row vector; U (I-A)^{-1} phi^T as a column.
        const ComplexVector left = lu.transpose().solve(aux.theta);
        theta_t += aux.V.transpose() * left;
        phi_t += aux.U * lu.solve(aux.phi);
      }
      out.rhs = std::exp(expo) / det * partial_permanent(bt, theta_t, phi_t);
      break;
    }
  }
  return out;
}

}  // namespace schottky
