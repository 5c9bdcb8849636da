#include "irs/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace irs::sf {

namespace {

constexpr int kMaxDegree = 60;
constexpr int kMaxHarmonicDegree = 10;
// Rounding slack accepted on |x| <= 1 before declaring a domain error.
constexpr double kUnitSlack = 1e-12;

double checked_unit(double x, const char* what) {
  if (!(std::abs(x) <= 1.0 + kUnitSlack)) {
    throw std::domain_error(std::string(what) + ": |x| > 1 (x = " + std::to_string(x) + ")");
  }
  return std::clamp(x, -1.0, 1.0);
}

void check_degree(int n, int max_n, const char* what) {
  if (n < 0 || n > max_n) {
    throw std::domain_error(std::string(what) + ": degree " + std::to_string(n) +
                            " outside [0, " + std::to_string(max_n) + "]");
  }
}

void check_positive(double z, const char* what) {
  if (!(z > 0.0)) {
    throw std::domain_error(std::string(what) + ": argument must be > 0");
  }
}

// (n - m)! / (n + m)! for |m| <= n, as a running product.
double factorial_ratio(int n, int m) {
  double r = 1.0;
  if (m >= 0) {
    for (int k = n - m + 1; k <= n + m; ++k) r /= k;
  } else {
    for (int k = n + m + 1; k <= n - m; ++k) r *= k;
  }
  return r;
}

// j_0..j_n_max. Upward recurrence is stable while n < z; below that the
// values come from Miller's downward recurrence, scaled against whichever
// of j_0, j_1 is better conditioned.
void bessel_j_all(int n_max, double z, std::vector<double>& out) {
  out.assign(static_cast<size_t>(n_max) + 1, 0.0);
  const double s = std::sin(z);
  const double c = std::cos(z);
  const double j0 = s / z;
  const double j1 = s / (z * z) - c / z;
  if (z > n_max) {
    out[0] = j0;
    if (n_max >= 1) out[1] = j1;
    for (int k = 1; k < n_max; ++k) {
      out[k + 1] = (2 * k + 1) / z * out[k] - out[k - 1];
    }
    return;
  }
  const int start = n_max + 30 + static_cast<int>(std::sqrt(40.0 * (n_max + 1)));
  std::vector<double> f(static_cast<size_t>(start) + 2, 0.0);
  f[start] = 1.0;
  for (int k = start; k >= 1; --k) {
    f[k - 1] = (2 * k + 1) / z * f[k] - f[k + 1];
    if (std::abs(f[k - 1]) > 1e100) {
      for (int i = k - 1; i <= start; ++i) f[i] *= 1e-100;
    }
  }
  const double scale = std::abs(j0) >= std::abs(j1) ? j0 / f[0] : j1 / f[1];
  for (int k = 0; k <= n_max; ++k) out[k] = f[k];
  for (auto& v : out) v *= scale;
}

void bessel_y_all(int n_max, double z, std::vector<double>& out) {
  out.assign(static_cast<size_t>(n_max) + 1, 0.0);
  const double s = std::sin(z);
  const double c = std::cos(z);
  out[0] = -c / z;
  if (n_max >= 1) out[1] = -c / (z * z) - s / z;
  for (int k = 1; k < n_max; ++k) {
    out[k + 1] = (2 * k + 1) / z * out[k] - out[k - 1];
  }
}

template <typename T>
T deriv_from_values(const std::vector<T>& f, int n, double z) {
  if (n == 0) return -f[1];
  return f[n - 1] - static_cast<double>(n + 1) / z * f[n];
}

}  // namespace

SphDirection SphDirection::from_degrees(double az_deg, double el_deg) {
  return normalized({az_deg * kPi / 180.0, el_deg * kPi / 180.0});
}

SphDirection SphDirection::from_vector(double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (!(r > 0.0)) throw std::domain_error("SphDirection::from_vector: zero vector");
  SphDirection d;
  d.azimuth = std::atan2(y, x);
  d.elevation = std::asin(std::clamp(z / r, -1.0, 1.0));
  return normalized(d);
}

void SphDirection::to_vector(double& x, double& y, double& z) const {
  const double ce = std::cos(elevation);
  x = ce * std::cos(azimuth);
  y = ce * std::sin(azimuth);
  z = std::sin(elevation);
}

SphDirection normalized(SphDirection dir) {
  if (!(std::abs(dir.elevation) <= kPi / 2 + 1e-12)) {
    throw std::domain_error("SphDirection: elevation outside [-pi/2, pi/2]");
  }
  dir.elevation = std::clamp(dir.elevation, -kPi / 2, kPi / 2);
  double az = std::fmod(dir.azimuth + kPi, 2 * kPi);
  if (az < 0) az += 2 * kPi;
  dir.azimuth = az - kPi;
  if (dir.azimuth >= kPi) dir.azimuth -= 2 * kPi;
  return dir;
}

double polar_arg(const SphDirection& dir) { return kPi / 2 - dir.elevation; }

double angle_between(const SphDirection& a, const SphDirection& b) {
  double ax, ay, az, bx, by, bz;
  a.to_vector(ax, ay, az);
  b.to_vector(bx, by, bz);
  // atan2 form keeps resolution for nearly parallel vectors.
  const double cx = ay * bz - az * by;
  const double cy = az * bx - ax * bz;
  const double cz = ax * by - ay * bx;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz);
}

double legendre(int n, double x) {
  check_degree(n, kMaxDegree, "legendre");
  x = checked_unit(x, "legendre");
  if (n == 0) return 1.0;
  double p_prev = 1.0;
  double p = x;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
    p_prev = p;
    p = p_next;
  }
  return p;
}

void legendre_all(int n_max, double x, std::vector<double>& out) {
  check_degree(n_max, kMaxDegree, "legendre_all");
  x = checked_unit(x, "legendre_all");
  out.resize(static_cast<size_t>(n_max) + 1);
  out[0] = 1.0;
  if (n_max >= 1) out[1] = x;
  for (int k = 1; k < n_max; ++k) {
    out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1);
  }
}

double assoc_legendre(int n, int m, double x) {
  check_degree(n, kMaxDegree, "assoc_legendre");
  if (std::abs(m) > n) throw std::domain_error("assoc_legendre: |m| > n");
  x = checked_unit(x, "assoc_legendre");
  const int am = std::abs(m);
  double pmm = 1.0;
  const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
  double fact = 1.0;
  for (int i = 1; i <= am; ++i) {
    pmm *= -fact * somx2;
    fact += 2.0;
  }
  double result = pmm;
  if (n > am) {
    double pmmp1 = x * (2 * am + 1) * pmm;
    result = pmmp1;
    for (int l = am + 2; l <= n; ++l) {
      const double pll = (x * (2 * l - 1) * pmmp1 - (l + am - 1) * pmm) / (l - am);
      pmm = pmmp1;
      pmmp1 = pll;
      result = pll;
    }
  }
  if (m < 0) {
    const double sign = (am % 2 == 0) ? 1.0 : -1.0;
    result *= sign * factorial_ratio(n, am);
  }
  return result;
}

cplx sph_harmonic(int n, int m, const SphDirection& dir) {
  check_degree(n, kMaxHarmonicDegree, "sph_harmonic");
  if (std::abs(m) > n) throw std::domain_error("sph_harmonic: |m| > n");
  const double norm = std::sqrt((2 * n + 1) / (4 * kPi) * factorial_ratio(n, m));
  const double p = assoc_legendre(n, m, std::cos(polar_arg(dir)));
  return norm * p * std::polar(1.0, m * dir.azimuth);
}

double sph_bessel_j(int n, double z) {
  check_degree(n, kMaxDegree, "sph_bessel_j");
  check_positive(z, "sph_bessel_j");
  std::vector<double> v;
  bessel_j_all(n, z, v);
  return v[n];
}

double sph_bessel_y(int n, double z) {
  check_degree(n, kMaxDegree, "sph_bessel_y");
  check_positive(z, "sph_bessel_y");
  std::vector<double> v;
  bessel_y_all(n, z, v);
  return v[n];
}

double sph_bessel_j_deriv(int n, double z) {
  check_degree(n, kMaxDegree, "sph_bessel_j_deriv");
  check_positive(z, "sph_bessel_j_deriv");
  std::vector<double> v;
  bessel_j_all(std::max(n, 1), z, v);
  return deriv_from_values(v, n, z);
}

double sph_bessel_y_deriv(int n, double z) {
  check_degree(n, kMaxDegree, "sph_bessel_y_deriv");
  check_positive(z, "sph_bessel_y_deriv");
  std::vector<double> v;
  bessel_y_all(std::max(n, 1), z, v);
  return deriv_from_values(v, n, z);
}

cplx sph_hankel1(int n, double z) {
  check_degree(n, kMaxDegree, "sph_hankel1");
  check_positive(z, "sph_hankel1");
  std::vector<double> j, y;
  bessel_j_all(n, z, j);
  bessel_y_all(n, z, y);
  return {j[n], y[n]};
}

cplx sph_hankel1_deriv(int n, double z) {
  check_degree(n, kMaxDegree, "sph_hankel1_deriv");
  check_positive(z, "sph_hankel1_deriv");
  std::vector<cplx> d;
  sph_hankel1_deriv_all(n, z, d);
  return d[n];
}

void sph_hankel1_deriv_all(int n_max, double z, std::vector<cplx>& out) {
  check_degree(n_max, kMaxDegree, "sph_hankel1_deriv_all");
  check_positive(z, "sph_hankel1_deriv_all");
  const int top = std::max(n_max, 1);
  std::vector<double> j, y;
  bessel_j_all(top, z, j);
  bessel_y_all(top, z, y);
  std::vector<cplx> h(static_cast<size_t>(top) + 1);
  for (int k = 0; k <= top; ++k) h[k] = {j[k], y[k]};
  out.resize(static_cast<size_t>(n_max) + 1);
  for (int k = 0; k <= n_max; ++k) out[k] = deriv_from_values(h, k, z);
}

}  // namespace irs::sf
