#include <gtest/gtest.h>

#include <numbers>

#include "schottky/surface_forms.hpp"
#include "test_helpers.hpp"

using namespace schottky;
using testing_helpers::genus1;
using testing_helpers::genus2;
using testing_helpers::genus2_generic;
using testing_helpers::genus3;
using testing_helpers::random_point;
using testing_helpers::rel_err;

namespace {

constexpr double kPi = std::numbers::pi;

// Distance of z from the lattice 2 pi i Z.
double distance_mod_2pi_i(cplx z) {
  const double im = std::remainder(z.imag(), 2 * kPi);
  return std::abs(cplx(z.real(), im));
}

cplx on_circle(const SchottkySurface& s, int a, double angle) { return s.w(a) + s.radius(a) * std::polar(1.0, angle); }

}  // namespace

TEST(Omega, GenusZeroLimit) {
  const SchottkySurface s = genus2_generic();
  SurfaceParams p;
  for (int a = 1; a <= 2; ++a) p.handles.push_back({s.w(a), s.w(-a), 1e-8});
  const MomentSystem sys = MomentSystem::build(SchottkySurface::validate(p), 8);
  const cplx x(0.3, 1.2), y(-1.5, 0.4);
  EXPECT_LT(rel_err(omega(sys, x, y).value, omega0(x, y)), 1e-6);
  EXPECT_THROW(omega(sys, x, x), PoleError);
}

TEST(Omega, Symmetric) {
  std::mt19937_64 rng(5);
  for (const SchottkySurface& s : {genus2_generic(), genus3()}) {
    const MomentSystem sys = escalate(s, 8, 1e-12).system;
    for (int i = 0; i < 10; ++i) {
      const cplx x = random_point(rng, s), y = random_point(rng, s);
      EXPECT_LT(rel_err(omega(sys, x, y).value, omega(sys, y, x).value), 1e-10);
    }
  }
}

TEST(Omega, MatchesPoincareSeries) {
  const SchottkySurface s = genus2();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  for (const auto& [x, y] : {std::pair{cplx(0.3, 1.2), cplx(-1.5, 0.4)}, std::pair{cplx(2.0, -2.0), cplx(0.1, 0.2)}}) {
    const FormValue sewn = omega(sys, x, y);
    const FormValue series = omega_poincare(sys, x, y, 8);
    EXPECT_LT(rel_err(series.value, sewn.value), 1e-6);
    EXPECT_FALSE(sewn.outside_fundamental_domain);
    EXPECT_EQ(sewn.weight_x, 1);
    EXPECT_EQ(sewn.weight_y, 1);
  }
}

TEST(Omega, PoincarePartialSums) {
  const SchottkySurface s = genus2();
  const cplx x(0.3, 1.2), y(-1.5, 0.4);
  EXPECT_LT(rel_err(omega_poincare(s, x, y, 0).value, omega0(x, y)), 1e-15);
  std::vector<double> increments;
  for (int n = 1; n <= 6; ++n)
    increments.push_back(std::abs(omega_poincare(s, x, y, n).value - omega_poincare(s, x, y, n - 1).value));
  for (std::size_t i = 1; i < increments.size(); ++i) EXPECT_LT(increments[i], increments[i - 1]);
  EXPECT_THROW(omega_poincare(s, x, y, -1), DomainError);
}

TEST(Omega, AlphaPeriodsVanish) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx x(0.2, 1.6);
  for (int a = 1; a <= 2; ++a) {
    const cplx integral =
        contour_integral([&](cplx y) { return omega(sys, x, y).value; }, s.w(-a), 1.1 * s.radius(a), 256, true);
    EXPECT_LT(std::abs(integral), 1e-8);
  }
}

TEST(Nu, TwoExpressionsAgree) {
  std::mt19937_64 rng(9);
  for (const SchottkySurface& s : {genus2_generic(), genus3()}) {
    const MomentSystem sys = escalate(s, 8, 1e-13).system;
    for (int b = 1; b <= s.genus(); ++b)
      for (int i = 0; i < 5; ++i) {
        const cplx x = random_point(rng, s);
        EXPECT_LT(std::abs(nu(sys, b, x).value - nu_left(sys, b, x).value), 1e-10);
      }
  }
}

TEST(Nu, GenusZeroLimitAndPoles) {
  const SchottkySurface s = genus1(1e-8);
  const MomentSystem sys = MomentSystem::build(s, 8);
  const cplx x(0.4, 0.9);
  EXPECT_LT(rel_err(nu(sys, 1, x).value, 1.0 / (x - s.w(1)) - 1.0 / (x - s.w(-1))), 1e-6);
  EXPECT_THROW(nu(sys, 1, s.w(-1)), PoleError);
  EXPECT_THROW(nu(sys, 2, x), DimensionError);
}

TEST(Nu, AlphaNormalization) {
  for (const SchottkySurface& s : {genus2_generic(), genus3()}) {
    const MomentSystem sys = escalate(s, 8, 1e-13).system;
    for (int a = 1; a <= s.genus(); ++a)
      for (int b = 1; b <= s.genus(); ++b) {
        const cplx integral =
            contour_integral([&](cplx x) { return nu(sys, b, x).value; }, s.w(-a), 1.1 * s.radius(a), 256, true);
        EXPECT_LT(std::abs(integral - (a == b ? kTwoPiI : cplx(0.0))), 1e-8) << a << "," << b;
      }
  }
}

TEST(Nu, BetaPeriodsGivePeriodMatrix) {
  // beta_a runs from gamma_a z0 on C_{-a} back to z0 on C_a; periods agree modulo 2 pi i.
  for (const SchottkySurface& s : {genus1(), genus2_generic(), genus3()}) {
    const MomentSystem sys = escalate(s, 8, 1e-13).system;
    const PeriodMatrix om = period_matrix(sys);
    for (int a = 1; a <= s.genus(); ++a) {
      const cplx z0 = on_circle(s, a, 0.7);
      const cplx z1 = generator(s, a)(z0);
      for (int b = 1; b <= s.genus(); ++b) {
        const AbelianIntegral ai = abelian_integral(sys, b, z0, z1);
        EXPECT_LT(distance_mod_2pi_i(ai.value - kTwoPiI * om.values(a - 1, b - 1)), 1e-6) << a << "," << b;
      }
    }
  }
}

TEST(Nu, BetaPeriodOfOmegaIsNu) {
  for (const SchottkySurface& s : {genus2_generic(), genus3()}) {
    const MomentSystem sys = escalate(s, 8, 1e-13).system;
    const cplx x(0.25, 1.7);
    for (int a = 1; a <= s.genus(); ++a) {
      const cplx z0 = on_circle(s, a, 2.1);
      const cplx z1 = generator(s, a)(z0);
      EXPECT_LT(rel_err(omega_third_kind(sys, z0, z1, x).value, nu(sys, a, x).value), 1e-6) << a;
    }
  }
}

TEST(PeriodMatrix, GenusOneMultiplier) {
  const SchottkySurface s = genus1();
  const PeriodMatrix om = period_matrix(escalate(s, 8, 1e-13).system);
  const cplx q = multiplier_and_fixed_points(s, 1).q;
  EXPECT_LT(rel_err(std::exp(kTwoPiI * om.values(0, 0)), q), 1e-8);
  EXPECT_TRUE(om.im_positive_definite);
}

TEST(PeriodMatrix, GenusOneSmallRho) {
  const SchottkySurface s = genus1(1e-8);
  const PeriodMatrix om = period_matrix(MomentSystem::build(s, 4));
  const cplx diff = s.w(1) - s.w(-1);
  EXPECT_LT(rel_err(kTwoPiI * om.values(0, 0), std::log(-s.rho(1) / (diff * diff))), 1e-6);
}

TEST(PeriodMatrix, SymmetricOnRandomSurfaces) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int g = 2 + trial % 2;
    SurfaceParams p;
    for (int a = 0; a < g; ++a) {
      const cplx centre(4.0 * a, 3.0 * (a % 2));
      p.handles.push_back({centre + cplx(1.0 + 0.2 * u(rng), 0.2 * u(rng)), centre - cplx(1.0, 0.2 * u(rng)),
                           cplx(0.02 + 0.01 * u(rng), 0.01 * u(rng))});
    }
    const SchottkySurface s = SchottkySurface::validate(p);
    const PeriodMatrix om = period_matrix(escalate(s, 8, 1e-13).system);
    EXPECT_LT(om.symmetry_residual, 1e-9);
    EXPECT_LT((om.values - om.values.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(om.im_positive_definite);
  }
}

TEST(PeriodMatrix, BranchFlagOnNegativeAxis) {
  // Real positive rho with real centres puts -rho/(w - w')^2 on the negative axis.
  const PeriodMatrix om = period_matrix(MomentSystem::build(genus1(), 4));
  EXPECT_TRUE(om.branch_ambiguous);
  const PeriodMatrix generic = period_matrix(MomentSystem::build(genus2_generic(), 4));
  EXPECT_FALSE(generic.branch_ambiguous);
}

TEST(ThirdKind, Residues) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx p(0.3, 1.5), q(-1.8, 1.0);
  auto f = [&](cplx x) { return omega_third_kind(sys, p, q, x).value; };
  EXPECT_LT(std::abs(contour_integral(f, p, 0.05, 128) / kTwoPiI - 1.0), 1e-8);
  EXPECT_LT(std::abs(contour_integral(f, q, 0.05, 128) / kTwoPiI + 1.0), 1e-8);
  EXPECT_THROW(omega_third_kind(sys, p, q, p), PoleError);
}

TEST(ThirdKind, DerivativeInP) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx p(0.3, 1.5), q(-1.8, 1.0), x(2.0, -1.0);
  const double h = 1e-5;
  const cplx fd = (omega_third_kind(sys, p + h, q, x).value - omega_third_kind(sys, p - h, q, x).value) / (2 * h);
  EXPECT_LT(rel_err(fd, omega(sys, x, p).value), 1e-6);
}

TEST(ThirdKind, GenusZeroLimit) {
  const MomentSystem sys = MomentSystem::build(genus1(1e-8), 6);
  const cplx p(0.3, 1.5), q(-1.8, 1.0), x(2.0, -1.0);
  EXPECT_LT(rel_err(omega_third_kind(sys, p, q, x).value, 1.0 / (x - p) - 1.0 / (x - q)), 1e-6);
}

TEST(PrimeForm, MixedLogDerivativeIsOmega) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx x(0.3, 1.5), y(-1.2, -0.8);
  const double h = 1e-4;
  auto lk = [&](cplx u, cplx v) { return std::log(prime_form_K(sys, u, v).value); };
  const cplx mixed = (lk(x + h, y + h) - lk(x + h, y - h) - lk(x - h, y + h) + lk(x - h, y - h)) / (4 * h * h);
  EXPECT_LT(rel_err(mixed, omega(sys, x, y).value), 1e-5);
}

TEST(PrimeForm, Antisymmetric) {
  std::mt19937_64 rng(3);
  const SchottkySurface s = genus3();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  for (int i = 0; i < 8; ++i) {
    const cplx x = random_point(rng, s), y = random_point(rng, s);
    EXPECT_LT(rel_err(prime_form_K(sys, x, y).value, -prime_form_K(sys, y, x).value), 1e-10);
  }
  EXPECT_THROW(prime_form_K(sys, cplx(0.1, 0.1), cplx(0.1, 0.1)), PoleError);
}

TEST(PrimeForm, GenusZeroLimit) {
  const MomentSystem sys = MomentSystem::build(genus1(1e-8), 6);
  const cplx x(0.3, 1.5), y(-1.2, -0.8);
  EXPECT_LT(rel_err(prime_form_K(sys, x, y).value, x - y), 1e-6);
}

TEST(AbelianIntegral, Basics) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx p(0.3, 1.5), q(-1.2, 1.8);
  EXPECT_EQ(abelian_integral(sys, 1, p, p).value, cplx(0.0));
  const double h = 1e-5;
  for (int b = 1; b <= 2; ++b) {
    const cplx fd = (abelian_integral(sys, b, p + h, q).value - abelian_integral(sys, b, p - h, q).value) / (2 * h);
    EXPECT_LT(rel_err(fd, nu(sys, b, p).value), 1e-6);
  }
  EXPECT_THROW(abelian_integral(sys, 1, s.w(1), q), PoleError);
}

TEST(AbelianIntegral, GenusZeroLimitAndCutFlag) {
  const SchottkySurface s = genus1(1e-8);
  const MomentSystem sys = MomentSystem::build(s, 6);
  const cplx p(0.3, 1.5), q(-0.2, 2.5);
  const AbelianIntegral ai = abelian_integral(sys, 1, p, q);
  EXPECT_LT(std::abs(ai.value - (std::log((p - 1.0) / (p + 1.0)) - std::log((q - 1.0) / (q + 1.0)))), 1e-6);
  EXPECT_FALSE(ai.branch_crossed);
  EXPECT_TRUE(abelian_integral(sys, 1, cplx(0.0, 1.0), cplx(0.0, -1.0)).branch_crossed);
}

TEST(ProjectiveConnection, LimitOracle) {
  const SchottkySurface s = genus2_generic();
  const MomentSystem sys = escalate(s, 8, 1e-13).system;
  const cplx x(0.3, 1.5);
  const double h = 1e-4;
  // symmetric pair of offsets cancels the O(h) term
  auto near = [&](cplx y) { return 6.0 * (omega(sys, x, y).value - omega0(x, y)); };
  const cplx limit = 0.5 * (near(x + h) + near(x - h));
  EXPECT_LT(rel_err(projective_connection(sys, x).value, near(x + h)), 1e-3);
  EXPECT_LT(rel_err(projective_connection(sys, x).value, limit), 1e-5);
  EXPECT_EQ(projective_connection(sys, x).weight_x, 2);
}

TEST(ProjectiveConnection, GenusZeroLimit) {
  const MomentSystem sys = MomentSystem::build(genus1(1e-8), 6);
  EXPECT_LT(std::abs(projective_connection(sys, cplx(0.3, 1.5)).value), 1e-7);
}

TEST(Forms, OutsideFlag) {
  const SchottkySurface s = genus1();
  const MomentSystem sys = MomentSystem::build(s, 6);
  EXPECT_TRUE(omega(sys, cplx(1.05, 0.0), cplx(0.0, 1.0)).outside_fundamental_domain);
  EXPECT_TRUE(nu(sys, 1, cplx(-1.05, 0.0)).outside_fundamental_domain);
}
