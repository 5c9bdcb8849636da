// Shoebox image-source model and RIR assembly for a rigid spherical array.
//
// Every image source is treated as a plane wave at the array, weighted by
// its reflection gain and 1/(4 pi d) spreading, and delayed by exactly d/c
// in the frequency domain. The microphone RIRs are band-limited by a smooth
// taper above taper_start * Nyquist so that the fractional-delay kernels
// decay quickly in time, then high-passed: with all-positive reflection
// coefficients the image sum carries a slowly varying mean that otherwise
// lengthens the measured decay.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irs/array_model.hpp"
#include "irs/dsp.hpp"
#include "irs/signal.hpp"

namespace irs::room {

using Vec3 = Eigen::Vector3d;

/// How a target RT60 is turned into a uniform wall absorption coefficient.
/// sabine and eyring are the closed-form inversions. calibrated solves for
/// the alpha whose image-source energy decay, Schroeder-integrated over
/// 1.2 rt60, has a T30-extrapolated T60 equal to rt60; a shoebox image
/// field is not diffuse, so both closed forms give tails that are too long.
enum class AbsorptionModel { sabine, eyring, calibrated };

std::string to_string(AbsorptionModel m);
AbsorptionModel absorption_model_from_string(const std::string& s);

struct RoomSpec {
  Vec3 dims{8.0, 6.0, 4.0};  // meters
  double rt60 = 0.3;         // seconds
  double speed_of_sound = 343.0;
  AbsorptionModel absorption_model = AbsorptionModel::calibrated;

  double volume() const { return dims.prod(); }
  double surface() const { return 2.0 * (dims.x() * dims.y() + dims.x() * dims.z() + dims.y() * dims.z()); }
  void validate() const;
};

struct Placement {
  Vec3 source_pos{2.0, 2.0, 1.5};
  Vec3 array_pos{4.0, 3.0, 1.5};
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();  // array frame -> room frame

  double distance() const { return (source_pos - array_pos).norm(); }
  /// Source direction in the array frame.
  sf::SphDirection source_doa() const;
  void validate(const RoomSpec& room) const;
};

struct ImageSource {
  Vec3 position;
  int order = 0;
  double gain = 1.0;  // product of amplitude reflection coefficients
  double distance = 0.0;
  double delay = 0.0;  // seconds
};

/// Sabine inversion 0.161 V / (S rt60). Throws if the value exceeds 0.99.
double rt60_to_absorption(const RoomSpec& room);
/// Eyring inversion 1 - exp(-0.161 V / (S rt60)), same 0.99 limit.
double rt60_to_absorption_eyring(const RoomSpec& room);
/// T60 from an energy envelope sampled every bin_width seconds: Schroeder
/// backward integration, least-squares line over the -5..-35 dB range,
/// extrapolated to -60 dB. Returns NaN when the decay never reaches -35 dB
/// and 0 when it falls past -35 dB with fewer than two points in range.
double schroeder_t60(std::span<const double> energy, double bin_width);

inline constexpr int kMaxOrderCap = 100;
inline constexpr double kDefaultMinGain = 1e-4;

/// Smallest order whose residual energy (1 - alpha)^K is below -60 dB,
/// capped at kMaxOrderCap.
int default_max_order(double absorption);

/// All mirror images with order <= max_order, gain >= min_gain and distance
/// to the array <= max_distance, sorted by delay (ties by order, then
/// position). absorption defaults to wall_absorption(room, placement) with
/// these max_order and min_gain.
std::vector<ImageSource> enumerate_image_sources(
    const RoomSpec& room, const Placement& placement, int max_order, double min_gain,
    double max_distance = std::numeric_limits<double>::infinity(),
    std::optional<double> absorption = std::nullopt);

struct SynthesisOptions {
  std::optional<int> max_order;   // default_max_order(absorption)
  double min_gain = kDefaultMinGain;
  std::optional<int> trunc_order; // auto per frequency
  double taper_start = 0.7;       // fraction of Nyquist where the band-limit taper begins
  double highpass_hz = 50.0;      // 0 disables
  dsp::Exec exec = dsp::Exec::parallel;
};

/// Absorption for the room's configured model. The calibrated model depends
/// on the placement and the synthesis options: alpha is first solved on the
/// incoherent image energy envelope, then refined against the T60 of a
/// band-limited omnidirectional RIR at the array center. Throws
/// std::domain_error when no alpha in (0, 0.99] reaches the requested rt60.
double wall_absorption(const RoomSpec& room, const Placement& placement, const SynthesisOptions& opts = {},
                       double sample_rate = 24000.0);

/// Smooth band-limit taper: 1 below start, 0 at Nyquist, C-infinity in
/// between. f_norm is frequency / Nyquist.
double band_limit_taper(double f_norm, double start);

/// ceil(1.2 * rt60 * fs): the shortest RIR accepted by the simulators.
std::size_t min_rir_length(const RoomSpec& room, double sample_rate);

/// M microphone RIRs of length_samples (phase referenced to the array
/// center). Images are assembled block-wise: each 128-sample block of
/// arrival times is synthesized in a 256-point frame and overlap-added.
/// Throws if an image is closer than 0.1 m to the array center or
/// length_samples < min_rir_length().
Signal simulate_mic_rirs(const RoomSpec& room, const Placement& placement,
                         const array::ArraySpec& array, std::size_t length_samples,
                         const SynthesisOptions& opts = {});

/// Direct evaluation of the same sum on the full-length FFT grid with no
/// tabulation. Serial and slow; kept as the reference for tests.
Signal simulate_mic_rirs_reference(const RoomSpec& room, const Placement& placement,
                                   const array::ArraySpec& array, std::size_t length_samples,
                                   const SynthesisOptions& opts = {});

/// Applies the encoder bin by bin to time-domain microphone signals and
/// returns the real-valued SH channels in the encoder's export convention.
Signal encode_mic_signals(const Signal& mics, const array::Encoder& encoder, double speed_of_sound);

struct ShIR {
  Signal channels;  // (N+1)^2 channels, ACN, export convention
  RoomSpec room;
  Placement placement;
  std::uint64_t seed = 0;
  sf::SphDirection doa;  // source direction in the array frame
  double distance = 0.0;
  int order = 1;
  array::ShConvention convention = array::ShConvention::sn3d;

  double sample_rate() const { return channels.sample_rate(); }
  std::size_t length() const { return channels.frames(); }
};

ShIR simulate_sh_rir(const RoomSpec& room, const Placement& placement, const array::Encoder& encoder,
                     std::size_t length_samples, const SynthesisOptions& opts = {});

}  // namespace irs::room
