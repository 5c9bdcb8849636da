// Shared signal plumbing: STFT/iSTFT, per-bin spatial covariance,
// normalized eigenvalues and FFT convolution.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "irs/signal.hpp"

namespace irs::dsp {

using cplx = std::complex<double>;

/// Selects the OpenMP kernel or its serial reference. Both produce
/// bit-identical results; the serial path is kept for tests and benchmarks.
enum class Exec { serial, parallel };

struct StftConfig {
  int frame_len = 480;
  int hop = 240;
};

/// Frame/hop in samples from milliseconds (20 ms / 10 ms at 24 kHz -> 480/240).
StftConfig stft_config_from_ms(double sample_rate, double frame_ms, double hop_ms);

/// Periodic Hann window; sums to 1 at 50% overlap.
std::vector<double> periodic_hann(int n);

/// Complex tensor [channel][frame][bin], bins = frame_len / 2 + 1.
struct Spectrogram {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  int frame_len = 0;
  int hop = 0;
  double sample_rate = 0.0;
  std::vector<cplx> data;

  Spectrogram() = default;
  Spectrogram(int c, int t, int frame_len, int hop, double fs);

  cplx& at(int c, int t, int f) { return data[index(c, t, f)]; }
  cplx at(int c, int t, int f) const { return data[index(c, t, f)]; }
  /// Channel vector at one time-frequency point.
  Eigen::VectorXcd vec(int t, int f) const;
  double bin_frequency(int f) const { return f * sample_rate / frame_len; }

 private:
  std::size_t index(int c, int t, int f) const {
    return (static_cast<std::size_t>(c) * frames + t) * bins + f;
  }
};

/// Frames start at multiples of hop with no padding. Throws if the signal is
/// shorter than one frame or hop is not in [1, frame_len].
Spectrogram stft(const Signal& signal, int frame_len, int hop);

/// Weighted overlap-add inverse: every frame is windowed again and the sum
/// is divided by the accumulated squared window, floored at kWolaFloor of its
/// maximum. Samples covered by two or more 50%-overlapping frames are
/// reconstructed exactly; in the first and last half-frame the floor keeps a
/// modified spectrum from being amplified by the vanishing window. Output
/// length defaults to (frames - 1) * hop + frame_len.
inline constexpr double kWolaFloor = 1e-2;
Signal istft(const Spectrogram& spec, std::optional<std::size_t> length = std::nullopt);

struct CovariancePerBin {
  std::vector<Eigen::MatrixXcd> values;  // one C x C matrix per bin
  int frame_count = 0;
};

/// Per bin f: (1/|frames|) sum_t x_tf x_tf^H over frames [frame_begin,
/// frame_end). Result is symmetrized so each matrix is exactly Hermitian.
CovariancePerBin spatial_covariance(const Spectrogram& spec, int frame_begin, int frame_end,
                                    Exec exec = Exec::parallel);

struct HermitianEig {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXcd vectors; // columns; first non-negligible entry real positive
};

HermitianEig hermitian_eig(const Eigen::MatrixXcd& a);

/// Eigenvalues sorted descending and divided by the largest, so the first
/// entry is exactly 1. The zero matrix yields all zeros.
Eigen::VectorXd normalized_eigenvalues(const Eigen::MatrixXcd& cov);

/// In-place causal 2nd-order Butterworth high-pass (bilinear transform,
/// zero initial state).
void highpass_butter2(std::span<double> x, double cutoff_hz, double sample_rate);

/// Linear convolution of a mono signal with every channel of ir; output has
/// ir.channels() channels and signal.size() + ir.frames() - 1 frames.
Signal fft_convolve(std::span<const double> signal, const Signal& ir);

}  // namespace irs::dsp
