#include <gtest/gtest.h>

#include <numbers>

#include "schottky/heisenberg_partition.hpp"
#include "test_helpers.hpp"

using namespace schottky;
using testing_helpers::genus1;
using testing_helpers::genus2;
using testing_helpers::genus2_generic;
using testing_helpers::genus3;
using testing_helpers::rel_err;

namespace {

constexpr double kPi = std::numbers::pi;

cplx eta_like_product(cplx q, int power) {
  cplx p = 1.0;
  for (int k = 1; k <= 200; ++k) p *= std::pow(1.0 - std::pow(q, k), power);
  return p;
}

// F(w, rho) exp(phi^- (I-A)^{-1} phi^+) / det(I-A), with
// phi^+ = -sum_b alpha_+^b dbar_b, phi^- = +sum_b alpha_-^b d_b.
cplx charged_by_moment_route(const MomentSystem& sys, const ChargeData& q) {
  const SchottkySurface& s = sys.surface();
  const int g = s.genus();
  cplx log_f = 0.0;
  for (int a = 1; a <= g; ++a) {
    const cplx diff = s.w(a) - s.w(-a);
    cplx arg = -s.rho(a) / (diff * diff);
    arg.imag(arg.imag() + 0.0);  // -0 -> +0
    log_f += 0.5 * dot(q.at(a), q.at(a)) * std::log(arg);
    for (int b = 1; b <= g; ++b) {
      if (a == b) continue;
      const cplx cross =
          ((s.w(a) - s.w(b)) * (s.w(-a) - s.w(-b))) / ((s.w(-a) - s.w(b)) * (s.w(a) - s.w(-b)));
      log_f += 0.5 * dot(q.at(a), q.at(b)) * std::log(cross);
    }
  }
  ComplexVector phi_plus = ComplexVector::Zero(sys.dim()), phi_minus = ComplexVector::Zero(sys.dim());
  for (int b = 1; b <= g; ++b) {
    phi_plus -= q.at(b).plus() * sys.d_bar_vector(b).values;
    phi_minus += q.at(b).minus() * sys.d_vector(b).values;
  }
  return std::exp(log_f + sys.sandwich(phi_minus, phi_plus)) / sys.det();
}

SchottkySurface scaled_genus2(double rho) {
  SurfaceParams p;
  p.handles.push_back({cplx(1.2, 0.3), cplx(-0.9, -0.2), cplx(rho, 0.3 * rho)});
  p.handles.push_back({cplx(0.4, 3.5), cplx(-0.3, -3.1), cplx(rho, -0.5 * rho)});
  return SchottkySurface::validate(p);
}

}  // namespace

TEST(Rank2, SmallRhoLimit) {
  EXPECT_LT(std::abs(partition_rank2(genus1(1e-10), 8, 1e-12).value - 1.0), 1e-9);
}

TEST(Rank2, GenusOneProduct) {
  const SchottkySurface s = genus1();
  const cplx q = multiplier_and_fixed_points(s, 1).q;
  const PartitionResult z = partition_rank2(s, 8, 1e-13);
  EXPECT_LT(rel_err(z.value, 1.0 / eta_like_product(q, 2)), 1e-8);
  EXPECT_GE(z.K_used, 8);
}

TEST(Rank2, MoebiusInvariance) {
  const SchottkySurface s = genus2_generic();
  const MoebiusMap sigma = MoebiusMap::translation(cplx(-0.4, 0.3)) * MoebiusMap::scaling(cplx(1.3, -0.4)) *
                           MoebiusMap::inversion() * MoebiusMap::translation(cplx(0.3, 1.9));
  EXPECT_LT(rel_err(partition_rank2(transform_surface(s, sigma), 8, 1e-12).value,
                    partition_rank2(s, 8, 1e-12).value),
            1e-6);
}

TEST(Rank1, SquareAndProduct) {
  const SchottkySurface s = genus1();
  const PartitionResult z1 = partition_rank1(s, 8, 1e-13);
  const ConvergedSystem c = escalate(s, 8, 1e-13);
  EXPECT_EQ(z1.value * z1.value, rank1_from(c).value * rank1_from(c).value);
  EXPECT_LT(rel_err(z1.value * z1.value, 1.0 / c.system.det()), 1e-15);
  const cplx q = multiplier_and_fixed_points(s, 1).q;
  EXPECT_LT(rel_err(z1.value, 1.0 / eta_like_product(q, 1)), 1e-8);
  EXPECT_FALSE(z1.branch_flag);
  EXPECT_LT(std::abs(partition_rank1(genus1(1e-10), 8, 1e-12).value - 1.0), 1e-9);
}

TEST(Charged, ZeroChargeIsUncharged) {
  const SchottkySurface s = genus2_generic();
  EXPECT_LT(rel_err(partition_charged(s, ChargeData::zero(2), 8, 1e-12).value, partition_rank2(s, 8, 1e-12).value),
            1e-14);
}

TEST(Charged, EvenInCharge) {
  const SchottkySurface s = genus3();
  ChargeData q{{{cplx(0.3, 0.1), 0.7}, {-0.4, cplx(0.0, 0.2)}, {1.1, 0.5}}};
  ChargeData mq{{-q.alpha[0], -q.alpha[1], -q.alpha[2]}};
  const ConvergedSystem c = escalate(s, 8, 1e-12);
  EXPECT_EQ(charged_from(c.system, q), charged_from(c.system, mq));
}

TEST(Charged, GenusOneRatio) {
  const SchottkySurface s = genus1();
  const ConvergedSystem c = escalate(s, 8, 1e-13);
  const ChargeData q{{{0.8, 0.0}}};
  const cplx omega11 = period_matrix(c.system).values(0, 0);
  const cplx ratio = charged_from(c.system, q) * c.system.det();
  EXPECT_LT(rel_err(ratio, std::exp(cplx(0.0, kPi) * 0.64 * omega11)), 1e-12);
  EXPECT_LT(rel_err(charged_from(c.system, q), charged_by_moment_route(c.system, q)), 1e-8);
}

TEST(Charged, MomentRouteAgreesOnGenericSurfaces) {
  for (const SchottkySurface& s : {genus2_generic(), genus3()}) {
    const ConvergedSystem c = escalate(s, 8, 1e-13);
    ChargeData q = ChargeData::zero(s.genus());
    for (int a = 0; a < s.genus(); ++a) q.alpha[static_cast<std::size_t>(a)] = {cplx(0.3 * (a + 1), 0.1), cplx(-0.2, 0.15 * a)};
    EXPECT_LT(rel_err(charged_from(c.system, q), charged_by_moment_route(c.system, q)), 1e-8);
  }
}

TEST(Charged, QuadraticFormShape) {
  ComplexMatrix om(2, 2);
  om << cplx(0.1, 1.0), cplx(0.2, 0.1), cplx(0.2, 0.1), cplx(0.0, 2.0);
  const ChargeData q{{{1.0, 0.0}, {0.0, 2.0}}};
  EXPECT_EQ(charge_quadratic_form(q, om), om(0, 0) + 4.0 * om(1, 1));
  EXPECT_THROW(charge_quadratic_form(ChargeData::zero(3), om), DimensionError);
}

TEST(MontonenZograf, GenusOneTwoClasses) {
  const SchottkySurface s = genus1();
  const cplx q = multiplier_and_fixed_points(s, 1).q;
  EXPECT_LT(rel_err(montonen_zograf(s, 40, 4), eta_like_product(q, 2)), 1e-12);
  EXPECT_THROW(montonen_zograf(s, 0, 4), DomainError);
}

TEST(MontonenZograf, AgreesWithDeterminant) {
  const SchottkySurface s = genus2();
  EXPECT_LT(rel_err(montonen_zograf(s, 40, 6), det_I_minus_A(s, 8, 1e-13).value), 1e-6);
  EXPECT_LT(std::abs(montonen_zograf(genus1(1e-12), 10, 3) - 1.0), 1e-10);
}

TEST(FockOracle, WeightZeroIsOne) { EXPECT_EQ(fock_oracle(genus2(), 0), cplx(1.0)); }

TEST(FockOracle, CoefficientsMatchDeterminantSeries) {
  // truncating at weight w leaves an O(rho^{w+1}) remainder
  for (int w = 1; w <= 2; ++w) {
    const double r1 = 2e-3, r2 = 1e-3;
    const double e1 = std::abs(fock_oracle(genus1(r1), w) - 1.0 / det_I_minus_A(genus1(r1), 8, 1e-14).value);
    const double e2 = std::abs(fock_oracle(genus1(r2), w) - 1.0 / det_I_minus_A(genus1(r2), 8, 1e-14).value);
    EXPECT_NEAR(std::log2(e1 / e2), w + 1, 0.1) << w;
  }
}

TEST(FockOracle, AgreesWithDeterminantAtSmallRho) {
  EXPECT_LT(rel_err(fock_oracle(genus1(1e-3), 8), partition_rank2(genus1(1e-3), 8, 1e-14).value), 1e-8);
  const SchottkySurface s = scaled_genus2(1e-3);
  EXPECT_LT(rel_err(fock_oracle(s, 8), partition_rank2(s, 8, 1e-14).value), 1e-8);
  EXPECT_THROW(fock_oracle(s, 9), DomainError);
}

TEST(ThreeRoutes, PairwiseAgreement) {
  const SchottkySurface s = scaled_genus2(2e-3);
  const cplx det = det_I_minus_A(s, 8, 1e-14).value;
  const cplx mz = montonen_zograf(s, 40, 6);
  const cplx fock = fock_oracle(s, 6);
  EXPECT_LT(rel_err(mz, det), 1e-6);
  EXPECT_LT(rel_err(fock, 1.0 / det), 1e-6);
  EXPECT_LT(rel_err(fock * mz, 1.0), 1e-6);
}

TEST(Theta, GenusOneLeadingTerms) {
  ComplexMatrix om(1, 1);
  om(0, 0) = cplx(0.0, 3.0);
  const cplx e = std::exp(cplx(0.0, kPi) * om(0, 0));
  const ThetaResult t = riemann_theta(om, Eigen::VectorXd::Zero(1), ComplexVector::Zero(1), 5);
  EXPECT_LT(std::abs(t.value - (1.0 + 2.0 * e + 2.0 * std::pow(e, 4))), 1e-15);
  EXPECT_LT(t.tail_estimate, 1e-100);
}

TEST(Theta, QuasiPeriodicity) {
  ComplexMatrix om(2, 2);
  om << cplx(0.1, 1.1), cplx(0.2, 0.3), cplx(0.2, 0.3), cplx(-0.3, 0.9);
  Eigen::VectorXd alpha(2);
  alpha << 0.25, -0.1;
  ComplexVector zeta(2);
  zeta << cplx(0.2, 0.1), cplx(-0.3, 0.4);
  const int cutoff = 12;
  const cplx base = riemann_theta(om, alpha, zeta, cutoff).value;
  const cplx twopii(0.0, 2 * kPi);
  for (int j = 0; j < 2; ++j) {
    ComplexVector shifted = zeta + twopii * om.col(j);
    const cplx lhs = riemann_theta(om, alpha, shifted, cutoff).value;
    EXPECT_LT(rel_err(lhs, std::exp(-cplx(0.0, kPi) * om(j, j) - zeta(j)) * base), 1e-10);
    shifted = zeta;
    shifted(j) += twopii;
    EXPECT_LT(rel_err(riemann_theta(om, alpha, shifted, cutoff).value, std::exp(twopii * alpha(j)) * base), 1e-10);
  }
}

TEST(Theta, IntegerCharacteristicShift) {
  ComplexMatrix om(1, 1);
  om(0, 0) = cplx(0.2, 0.8);
  Eigen::VectorXd a(1), b(1);
  a << 0.3;
  b << 2.3;
  ComplexVector zeta(1);
  zeta << cplx(0.1, -0.2);
  EXPECT_LT(rel_err(riemann_theta(om, b, zeta, 20).value, riemann_theta(om, a, zeta, 20).value), 1e-12);
}

TEST(Theta, RejectsNonPositiveImaginaryPart) {
  ComplexMatrix om(1, 1);
  om(0, 0) = cplx(0.0, -1.0);
  EXPECT_THROW(riemann_theta(om, Eigen::VectorXd::Zero(1), ComplexVector::Zero(1), 3), DomainError);
}

TEST(Lattice, Sqrt2ZGenusOneMatchesChargeSum) {
  const SchottkySurface s = genus1();
  Eigen::MatrixXd gram(1, 1);
  gram << 2.0;
  const LatticeResult z = lattice_partition(s, gram, 40.0, 8, 1e-12);
  const ConvergedSystem c = escalate(s, 8, 1e-12);
  // rank-2 charged modules carry det^{-1}; one rank-1 Heisenberg factor is det^{-1/2}
  cplx sum = 0.0;
  for (int m = -6; m <= 6; ++m) sum += charged_from(c.system, ChargeData{{{std::sqrt(2.0) * m, 0.0}}});
  EXPECT_LT(rel_err(z.value, sum * std::sqrt(c.system.det())), 1e-10);
  EXPECT_LT(z.tail_estimate, 1e-12);
}

TEST(Lattice, ZeroCutoffIsDeterminantPower) {
  const SchottkySurface s = genus2_generic();
  Eigen::MatrixXd gram(2, 2);
  gram << 2.0, -1.0, -1.0, 2.0;
  const LatticeResult z = lattice_partition(s, gram, 0.0, 8, 1.0);
  EXPECT_EQ(z.theta, cplx(1.0));
  const cplx det = MomentSystem::build(s, z.K_used).det();
  EXPECT_LT(rel_err(z.value, 1.0 / det), 1e-14);
}

TEST(Lattice, ReflectionSymmetricAndValidated) {
  const SchottkySurface s = genus2_generic();
  Eigen::MatrixXd gram(1, 1);
  gram << 2.0;
  const LatticeResult z = lattice_partition(s, gram, 30.0, 8, 1e-12);
  // Theta over the box is real-coefficient symmetric: recompute from the period matrix directly.
  const ComplexMatrix om = period_matrix(escalate(s, 8, 1e-12).system).values;
  cplx theta = 0.0;
  for (int m1 = -4; m1 <= 4; ++m1)
    for (int m2 = -4; m2 <= 4; ++m2)
      if (2 * (m1 * m1 + m2 * m2) <= 30)
        theta += std::exp(cplx(0.0, kPi) * 2.0 * (double(m1 * m1) * om(0, 0) + 2.0 * m1 * m2 * om(0, 1) + double(m2 * m2) * om(1, 1)));
  EXPECT_LT(rel_err(z.theta, theta), 1e-12);
  Eigen::MatrixXd bad(1, 1);
  bad << 1.5;
  EXPECT_THROW(lattice_partition(s, bad, 30.0, 8, 1e-12), DomainError);
  EXPECT_THROW(lattice_partition(s, gram, 1.0, 8, 1e-12), DomainError);
}
