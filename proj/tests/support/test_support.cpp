#include "test_support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>

namespace irs::test {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Plain radix-2 FFT so the band-pass oracle does not depend on the library.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2 * kPi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& v : a) v /= static_cast<double>(n);
  }
}
}  // namespace

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

std::vector<QuadPoint> sphere_quadrature(int n_theta, int n_phi) {
  std::vector<double> x, w;
  gauss_legendre(n_theta, x, w);
  std::vector<QuadPoint> out;
  for (int i = 0; i < n_theta; ++i) {
    const double elevation = kPi / 2 - std::acos(x[i]);
    for (int j = 0; j < n_phi; ++j) {
      const double az = -kPi + 2 * kPi * j / n_phi;
      out.push_back({{az, elevation}, w[i] * 2 * kPi / n_phi});
    }
  }
  return out;
}

double schroeder_t30(std::span<const double> h, double fs) {
  std::vector<double> edc(h.size() + 1, 0.0);
  for (std::size_t i = h.size(); i-- > 0;) edc[i] = edc[i + 1] + h[i] * h[i];
  if (!(edc[0] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool reached = false;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / edc[0] + 1e-300);
    if (db < -35.0) {
      reached = true;
      break;
    }
    if (db <= -5.0) {
      const double t = i / fs;
      sx += t;
      sy += db;
      sxx += t * t;
      sxy += t * db;
      ++n;
    }
  }
  if (!reached || n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -60.0 / slope;
}

void unit(const sf::SphDirection& d, double& x, double& y, double& z) {
  x = std::cos(d.elevation) * std::cos(d.azimuth);
  y = std::cos(d.elevation) * std::sin(d.azimuth);
  z = std::sin(d.elevation);
}

double angle_deg(const sf::SphDirection& a, const sf::SphDirection& b) {
  double ax, ay, az, bx, by, bz;
  unit(a, ax, ay, az);
  unit(b, bx, by, bz);
  const double c = std::clamp(ax * bx + ay * by + az * bz, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

std::array<double, 4> foa_gains_sn3d(const sf::SphDirection& d) {
  double x, y, z;
  unit(d, x, y, z);
  return {1.0, y, z, x};
}

void add_plane_wave(Signal& out, std::span<const double> s, const sf::SphDirection& d, std::size_t offset) {
  const auto g = foa_gains_sn3d(d);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < s.size() && offset + i < out.frames(); ++i) out(c, offset + i) += g[c] * s[i];
  }
}

sf::SphDirection intensity_doa(const Signal& foa, std::size_t begin, std::size_t end) {
  double ix = 0, iy = 0, iz = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double w = foa(0, i);
    iy += w * foa(1, i);
    iz += w * foa(2, i);
    ix += w * foa(3, i);
  }
  const double r = std::hypot(ix, iy);
  return {std::atan2(iy, ix), std::atan2(iz, r)};
}

Signal bandpass(const Signal& x, double f_lo, double f_hi) {
  std::size_t n = 1;
  while (n < x.frames()) n <<= 1;
  Signal out(x.channels(), x.frames(), x.sample_rate());
  std::vector<std::complex<double>> a(n);
  for (int c = 0; c < x.channels(); ++c) {
    std::fill(a.begin(), a.end(), 0.0);
    for (std::size_t i = 0; i < x.frames(); ++i) a[i] = x(c, i);
    fft(a, false);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t kk = std::min(k, n - k);
      const double f = kk * x.sample_rate() / n;
      if (f < f_lo || f > f_hi) a[k] = 0.0;
    }
    fft(a, true);
    for (std::size_t i = 0; i < x.frames(); ++i) out(c, i) = a[i].real();
  }
  return out;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std);
  std::vector<double> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

sf::SphDirection random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double az = kPi * u(rng);
  const double el = std::asin(u(rng));
  return {az >= kPi ? -kPi : az, el};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("irs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace irs::test
