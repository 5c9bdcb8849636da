// Oracles and fixtures shared by the unit and acceptance tests. Nothing
// here calls into the library's numerical kernels.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "irs/signal.hpp"
#include "irs/special_functions.hpp"

namespace irs::test {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the recurrence).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

struct QuadPoint {
  sf::SphDirection dir;
  double weight;
};
/// n_theta Gauss-Legendre rings in cos(polar) times n_phi equiangular
/// azimuths; weights sum to 4 pi. Exact for degree < min(2 n_theta, n_phi).
std::vector<QuadPoint> sphere_quadrature(int n_theta = 40, int n_phi = 60);

/// Backward-integrated decay, line fit on [-5, -35] dB, extrapolated to 60 dB.
/// NaN if the decay never reaches -35 dB.
double schroeder_t30(std::span<const double> h, double fs);

/// Unit vector of a direction, (x, y, z).
void unit(const sf::SphDirection& d, double& x, double& y, double& z);
double angle_deg(const sf::SphDirection& a, const sf::SphDirection& b);

/// FOA gains (ACN W, Y, Z, X) of a plane wave, SN3D, no Condon-Shortley phase.
std::array<double, 4> foa_gains_sn3d(const sf::SphDirection& d);

/// Adds s * gains(d) to the first four channels of out starting at offset.
void add_plane_wave(Signal& out, std::span<const double> s, const sf::SphDirection& d, std::size_t offset = 0);

/// Time-domain active intensity direction over [begin, end) of an SN3D FOA
/// signal: sum of W * (X, Y, Z).
sf::SphDirection intensity_doa(const Signal& foa, std::size_t begin, std::size_t end);

/// Same but restricted to [f_lo, f_hi] through a brick-wall FFT band-pass
/// of the whole signal first.
Signal bandpass(const Signal& x, double f_lo, double f_hi);

std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double std = 1.0);

/// Uniform direction on the sphere.
sf::SphDirection random_direction(std::mt19937_64& rng);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::string read_file(const std::filesystem::path& p);

}  // namespace irs::test
