#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracle_values.hpp"
#include "../support/test_support.hpp"
#include "irs/special_functions.hpp"

using namespace irs;
using sf::cplx;

TEST(Legendre, ClosedForms) {
  EXPECT_DOUBLE_EQ(sf::legendre(0, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(sf::legendre(1, 0.5), 0.5);
  EXPECT_NEAR(sf::legendre(3, 0.5), oracle::kLegendre3At05, 1e-15);
}

TEST(Legendre, BoundedOnInterval) {
  for (int n = 0; n <= 40; ++n) {
    for (int i = 0; i <= 400; ++i) {
      const double x = -1.0 + i / 200.0;
      EXPECT_LE(std::abs(sf::legendre(n, x)), 1.0 + 1e-12) << "n=" << n << " x=" << x;
    }
  }
}

TEST(Legendre, DomainErrors) {
  EXPECT_THROW(sf::legendre(2, 1.5), std::domain_error);
  EXPECT_THROW(sf::assoc_legendre(1, 2, 0.1), std::domain_error);
  EXPECT_THROW(sf::assoc_legendre(1, 0, -1.01), std::domain_error);
}

TEST(AssocLegendre, ReducesAndMatchesClosedForms) {
  for (double x : {-0.9, -0.2, 0.0, 0.33, 0.8}) EXPECT_NEAR(sf::assoc_legendre(1, 0, x), sf::legendre(1, x), 1e-15);
  EXPECT_NEAR(sf::assoc_legendre(1, 1, 0.0), -1.0, 1e-15);
  EXPECT_NEAR(sf::assoc_legendre(2, 1, 0.5), oracle::kAssoc21At05, 1e-14);
}

TEST(SphHarmonic, ConstantModeAndConjugation) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto d = test::random_direction(rng);
    EXPECT_NEAR(std::abs(sf::sph_harmonic(0, 0, d) - cplx(0.28209479177387814, 0)), 0.0, 1e-15);
    for (int n = 0; n <= 6; ++n) {
      for (int m = 1; m <= n; ++m) {
        const cplx a = sf::sph_harmonic(n, -m, d);
        const cplx b = (m % 2 ? -1.0 : 1.0) * std::conj(sf::sph_harmonic(n, m, d));
        EXPECT_NEAR(std::abs(a - b), 0.0, 1e-13);
      }
    }
  }
}

TEST(SphHarmonic, DiscreteOrthonormality) {
  const auto quad = test::sphere_quadrature(40, 60);
  ASSERT_EQ(quad.size(), 2400u);
  double max_err = 0.0;
  for (int n = 0; n <= 4; ++n) {
    for (int m = -n; m <= n; ++m) {
      for (int n2 = 0; n2 <= 4; ++n2) {
        for (int m2 = -n2; m2 <= n2; ++m2) {
          cplx s = 0.0;
          for (const auto& q : quad) s += q.weight * sf::sph_harmonic(n, m, q.dir) * std::conj(sf::sph_harmonic(n2, m2, q.dir));
          const double want = (n == n2 && m == m2) ? 1.0 : 0.0;
          max_err = std::max(max_err, std::abs(s - want));
        }
      }
    }
  }
  EXPECT_LT(max_err, 1e-6);
}

TEST(Hankel, OracleValues) {
  for (const auto& p : oracle::kHankel) {
    const cplx want(p.re, p.im), dwant(p.dre, p.dim);
    EXPECT_LT(std::abs(sf::sph_hankel1(p.n, p.z) - want) / std::abs(want), 1e-10) << "n=" << p.n << " z=" << p.z;
    EXPECT_LT(std::abs(sf::sph_hankel1_deriv(p.n, p.z) - dwant) / std::abs(dwant), 1e-10)
        << "n=" << p.n << " z=" << p.z;
  }
}

TEST(Hankel, ClosedFormAndFiniteDifference) {
  const cplx h0 = sf::sph_hankel1(0, 1.0);
  EXPECT_NEAR(h0.real(), std::sin(1.0), 1e-15);
  EXPECT_NEAR(h0.imag(), -std::cos(1.0), 1e-15);
  const double eps = 1e-5;
  const cplx fd = (sf::sph_hankel1(0, 1.0 + eps) - sf::sph_hankel1(0, 1.0 - eps)) / (2 * eps);
  EXPECT_LT(std::abs(fd - sf::sph_hankel1_deriv(0, 1.0)), 1e-6);
  EXPECT_THROW(sf::sph_hankel1(1, 0.0), std::domain_error);
  EXPECT_THROW(sf::sph_hankel1_deriv(1, -1.0), std::domain_error);
}

TEST(Hankel, Wronskian) {
  for (double z : {0.5, 1.0, 5.0, 20.0}) {
    for (int n = 0; n <= 20; ++n) {
      const double w = sf::sph_bessel_j(n, z) * sf::sph_bessel_y_deriv(n, z) -
                       sf::sph_bessel_j_deriv(n, z) * sf::sph_bessel_y(n, z);
      EXPECT_LT(std::abs(w * z * z - 1.0), 1e-9) << "n=" << n << " z=" << z;
    }
  }
}

TEST(Direction, PolarArgAndAngles) {
  EXPECT_NEAR(sf::polar_arg({0.3, 0.0}), sf::kPi / 2, 1e-15);
  EXPECT_NEAR(sf::polar_arg({0.0, sf::kPi / 2}), 0.0, 1e-15);
  const auto a = sf::SphDirection::from_degrees(0, 0), b = sf::SphDirection::from_degrees(90, 0);
  EXPECT_NEAR(sf::angle_between(a, b), sf::kPi / 2, 1e-12);
  const auto n = sf::normalized({3.5, 0.1});
  EXPECT_GE(n.azimuth, -sf::kPi);
  EXPECT_LT(n.azimuth, sf::kPi);
  EXPECT_THROW(sf::normalized({0.0, 2.0}), std::domain_error);
}
