// Rigid-sphere microphone array: plane-wave responses, radial functions and
// the spherical-harmonic encoder that turns M microphone spectra into
// Ambisonics channels.
//
// Internal SH channels are complex, orthonormal and in ACN order
// (index n*n + n + m). A unit plane wave from direction D with spectrum s
// encodes to a_nm = s * conj(Y_nm(D)). real_sh_conversion() maps these to the
// real-valued exported convention (ACN/SN3D by default, W = s for a plane
// wave).
//
// Time convention: spectra multiply e^{+i w t}; a delay tau is e^{-i k c tau}.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irs/special_functions.hpp"

namespace irs::array {

using cplx = std::complex<double>;

struct ArraySpec {
  std::string name = "array";
  double radius = 0.042;  // meters
  std::vector<sf::SphDirection> mic_dirs;
  double sample_rate = 24000.0;

  int num_mics() const { return static_cast<int>(mic_dirs.size()); }
  /// Throws std::invalid_argument on a non-positive radius, an empty or
  /// duplicated microphone set, or a non-positive sample rate.
  void validate() const;
};

enum class ShConvention { n3d, sn3d };

std::string to_string(ShConvention c);
ShConvention sh_convention_from_string(const std::string& s);

struct EncodingConfig {
  int order = 1;
  double reg_max_gain_db = 20.0;
  std::optional<int> trunc_order;  // nullopt = auto (ceil(kR) + 10, capped at 60)
  ShConvention export_convention = ShConvention::sn3d;

  void validate(const ArraySpec& array) const;
  bool operator==(const EncodingConfig&) const = default;
};

struct MicSpectrum {
  Eigen::VectorXcd values;
  double k = 0.0;  // wave number, 1/m
};

struct ShSpectrum {
  Eigen::VectorXcd values;  // (N+1)^2, ACN, complex orthonormal
  double k = 0.0;
};

inline constexpr double kKrFloor = 1e-6;
inline constexpr int kMaxTruncOrder = 60;

inline int num_sh_channels(int order) { return (order + 1) * (order + 1); }
inline int acn_index(int n, int m) { return n * n + n + m; }
/// Degree of an ACN channel index.
int acn_degree(int acn);

int auto_trunc_order(double kr);

/// b_n(kR) = i / ((kR)^2 h_n'(kR)). Below kKrFloor returns the leading
/// small-argument term (kR)^n / ((n+1)(2n-1)!!), i.e. 1 for n = 0.
cplx radial_fn(int n, double kr);
void radial_fn_all(int n_max, double kr, std::vector<cplx>& out);

/// H(k, psi) = sum_{n=0}^{trunc} i^n (2n+1) b_n(kR) P_n(cos psi), the series as
/// written with the e^{-i w t} Hankel convention.
cplx plane_wave_response(double k, double psi, double radius, int trunc);

/// Pressure on the sphere surface, in this library's e^{+i w t} convention,
/// for a unit plane wave arriving from a direction at angle psi from the
/// microphone. Equals conj(plane_wave_response(k, pi - psi, ...)); phase is
/// referenced to the sphere center.
cplx mic_response(double k, double psi, double radius, int trunc);

/// Modal strength d_n(k) = 4 pi i^n conj(b_n(kR)) linking the plane-wave SH
/// coefficients to what the microphones observe.
cplx modal_strength(int n, double kr);

/// M x (N+1)^2; row m holds Y_nm(mic_m) in ACN order.
Eigen::MatrixXcd sh_matrix(const ArraySpec& array, int order);

/// Moore-Penrose pseudoinverse via SVD.
Eigen::MatrixXcd pseudo_inverse(const Eigen::MatrixXcd& a, double rcond = 1e-12);

/// Ratio of the largest to the smallest singular value.
double condition_number(const Eigen::MatrixXcd& a);

/// Per-order equalizer 1/d_n(k), with orders n >= 1 soft-limited to
/// reg_max_gain_db above |1/d_0(k)|. Returns N+1 gains.
std::vector<cplx> regularized_inverse_modal(double kr, int order, double reg_max_gain_db);

/// Caches Y and Y^+ for one (array, order) pair. Immutable after
/// construction, so shared use across threads is safe.
class Encoder {
 public:
  Encoder(ArraySpec array, EncodingConfig cfg);

  const ArraySpec& array() const { return array_; }
  const EncodingConfig& config() const { return cfg_; }
  int channels() const { return num_sh_channels(cfg_.order); }
  const Eigen::MatrixXcd& sh() const { return y_; }
  const Eigen::MatrixXcd& sh_pinv() const { return y_pinv_; }

  /// (N+1)^2 x M encoding matrix B_reg(k)^-1 Y^+.
  Eigen::MatrixXcd matrix(double k) const;
  ShSpectrum encode(const MicSpectrum& x) const;

 private:
  ArraySpec array_;
  EncodingConfig cfg_;
  Eigen::MatrixXcd y_;
  Eigen::MatrixXcd y_pinv_;
};

/// a(k) = B_reg(k)^-1 Y^+ x(k). Rejects (N+1)^2 > M and length mismatches.
ShSpectrum encode_sh(const MicSpectrum& x, const ArraySpec& array, const EncodingConfig& cfg);

/// Square matrix T such that T * a gives the real-valued exported channels
/// (ACN order) for the complex orthonormal coefficients a.
Eigen::MatrixXcd real_sh_conversion(int order, ShConvention convention);

/// Real SH basis value for direction dir in the given convention (ACN index).
double real_sh(int n, int m, const sf::SphDirection& dir, ShConvention convention);

/// 32-capsule rigid sphere, radius 4.2 cm, em32-style layout.
ArraySpec default_em32(double sample_rate = 24000.0);

/// Geometry file: header line `radius_m=<float>`, then rows
/// `index azimuth_deg elevation_deg` with indices 1..M in order. Blank lines
/// and lines starting with '#' are ignored.
ArraySpec load_array_file(const std::filesystem::path& path, double sample_rate);
ArraySpec parse_array_text(const std::string& text, double sample_rate,
                           const std::string& name = "array");
void save_array_file(const std::filesystem::path& path, const ArraySpec& spec);

}  // namespace irs::array
