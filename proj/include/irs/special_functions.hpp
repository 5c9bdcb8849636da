// Scalar special functions used by the rigid-sphere array model.
//
// All functions are pure and thread-safe. Domain violations throw
// std::domain_error.

#pragma once

#include <complex>
#include <vector>

namespace irs::sf {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Direction on the unit sphere. Azimuth is measured counter-clockwise from
/// +x in the horizontal plane, elevation upwards from the horizontal plane.
struct SphDirection {
  double azimuth = 0.0;    // radians, [-pi, pi)
  double elevation = 0.0;  // radians, [-pi/2, pi/2]

  static SphDirection from_degrees(double az_deg, double el_deg);
  static SphDirection from_vector(double x, double y, double z);
  void to_vector(double& x, double& y, double& z) const;
};

/// Wraps azimuth into [-pi, pi) and validates the elevation range.
SphDirection normalized(SphDirection dir);

/// Polar argument (inclination from +z) fed to P_nm(cos .) in the spherical
/// harmonics. The only place where elevation is turned into a polar angle.
double polar_arg(const SphDirection& dir);

/// Great-circle angle between two directions, radians.
double angle_between(const SphDirection& a, const SphDirection& b);

/// Legendre polynomial P_n(x) by the three-term recurrence. n <= 60.
double legendre(int n, double x);

/// Fills out[0..n_max] with P_0(x)..P_n_max(x).
void legendre_all(int n_max, double x, std::vector<double>& out);

/// Associated Legendre function P_n^m(x) with the Condon-Shortley phase.
/// Negative m uses P_n^{-m} = (-1)^m (n-m)!/(n+m)! P_n^m.
double assoc_legendre(int n, int m, double x);

/// Complex orthonormal spherical harmonic Y_n^m. |m| <= n <= 10.
cplx sph_harmonic(int n, int m, const SphDirection& dir);

/// Spherical Bessel functions of the first and second kind.
double sph_bessel_j(int n, double z);
double sph_bessel_y(int n, double z);
double sph_bessel_j_deriv(int n, double z);
double sph_bessel_y_deriv(int n, double z);

/// Spherical Hankel function of the first kind h_n = j_n + i y_n and its
/// derivative, for z > 0 and n <= 60.
cplx sph_hankel1(int n, double z);
cplx sph_hankel1_deriv(int n, double z);

/// h_0'..h_n_max' in one pass. out has n_max + 1 entries.
void sph_hankel1_deriv_all(int n_max, double z, std::vector<cplx>& out);

}  // namespace irs::sf
