#include "irs/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "irs/fft.hpp"

namespace irs::dsp {

StftConfig stft_config_from_ms(double sample_rate, double frame_ms, double hop_ms) {
  StftConfig cfg;
  cfg.frame_len = static_cast<int>(std::lround(sample_rate * frame_ms / 1000.0));
  cfg.hop = static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
  if (cfg.frame_len < 2 || cfg.hop < 1 || cfg.hop > cfg.frame_len) {
    throw std::invalid_argument("stft config: need 1 <= hop <= frame_len and frame_len >= 2");
  }
  return cfg;
}

std::vector<double> periodic_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

Spectrogram::Spectrogram(int c, int t, int frame_len_, int hop_, double fs)
    : channels(c), frames(t), bins(frame_len_ / 2 + 1), frame_len(frame_len_), hop(hop_),
      sample_rate(fs), data(static_cast<std::size_t>(c) * t * (frame_len_ / 2 + 1)) {}

Eigen::VectorXcd Spectrogram::vec(int t, int f) const {
  Eigen::VectorXcd v(channels);
  for (int c = 0; c < channels; ++c) v(c) = at(c, t, f);
  return v;
}

Spectrogram stft(const Signal& signal, int frame_len, int hop) {
  if (frame_len < 2 || hop < 1 || hop > frame_len) {
    throw std::invalid_argument("stft: need 1 <= hop <= frame_len and frame_len >= 2");
  }
  if (signal.frames() < static_cast<std::size_t>(frame_len)) {
    throw std::invalid_argument("stft: signal shorter than one frame (" +
                                std::to_string(signal.frames()) + " < " + std::to_string(frame_len) +
                                ")");
  }
  const int frames = static_cast<int>((signal.frames() - frame_len) / hop) + 1;
  Spectrogram spec(signal.channels(), frames, frame_len, hop, signal.sample_rate());
  const auto window = periodic_hann(frame_len);
  RealFft fft(frame_len);
  std::vector<double> buf(frame_len);
  std::vector<cplx> out(spec.bins);
  for (int c = 0; c < signal.channels(); ++c) {
    auto x = signal.channel(c);
    for (int t = 0; t < frames; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * hop;
      for (int i = 0; i < frame_len; ++i) buf[i] = x[start + i] * window[i];
      fft.forward(buf, out);
      std::copy(out.begin(), out.end(), spec.data.begin() + ((static_cast<std::size_t>(c) * frames + t) * spec.bins));
    }
  }
  return spec;
}

Signal istft(const Spectrogram& spec, std::optional<std::size_t> length) {
  const std::size_t natural =
      spec.frames > 0 ? static_cast<std::size_t>(spec.frames - 1) * spec.hop + spec.frame_len : 0;
  const std::size_t n_out = length.value_or(natural);
  Signal out(spec.channels, n_out, spec.sample_rate);
  const auto window = periodic_hann(spec.frame_len);
  std::vector<double> wsum(std::max(natural, n_out), 0.0);
  for (int t = 0; t < spec.frames; ++t) {
    for (int i = 0; i < spec.frame_len; ++i) wsum[static_cast<std::size_t>(t) * spec.hop + i] += window[i] * window[i];
  }
  const double floor = kWolaFloor * *std::max_element(wsum.begin(), wsum.end());
  RealFft fft(spec.frame_len);
  std::vector<double> frame(spec.frame_len);
  std::vector<double> acc(std::max(natural, n_out));
  for (int c = 0; c < spec.channels; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = 0; t < spec.frames; ++t) {
      const auto first = spec.data.begin() + ((static_cast<std::size_t>(c) * spec.frames + t) * spec.bins);
      fft.inverse(std::span<const cplx>(&*first, spec.bins), frame);
      const std::size_t start = static_cast<std::size_t>(t) * spec.hop;
      for (int i = 0; i < spec.frame_len; ++i) acc[start + i] += window[i] * frame[i];
    }
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < n_out; ++i) dst[i] = wsum[i] > 0.0 ? acc[i] / std::max(wsum[i], floor) : 0.0;
  }
  return out;
}

namespace {

void covariance_bin(const Spectrogram& spec, int f, int t0, int t1, Eigen::MatrixXcd& r) {
  const int c = spec.channels;
  r.setZero(c, c);
  Eigen::VectorXcd x(c);
  for (int t = t0; t < t1; ++t) {
    for (int ch = 0; ch < c; ++ch) x(ch) = spec.at(ch, t, f);
    r.noalias() += x * x.adjoint();
  }
  r /= static_cast<double>(t1 - t0);
  r = 0.5 * (r + r.adjoint()).eval();
}

}  // namespace

CovariancePerBin spatial_covariance(const Spectrogram& spec, int frame_begin, int frame_end, Exec exec) {
  if (frame_begin < 0 || frame_end > spec.frames || frame_begin >= frame_end) {
    throw std::invalid_argument("spatial_covariance: empty or out-of-range frame range");
  }
  CovariancePerBin out;
  out.frame_count = frame_end - frame_begin;
  out.values.resize(spec.bins);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < spec.bins; ++f) covariance_bin(spec, f, frame_begin, frame_end, out.values[f]);
  } else {
    for (int f = 0; f < spec.bins; ++f) covariance_bin(spec, f, frame_begin, frame_end, out.values[f]);
  }
  return out;
}

HermitianEig hermitian_eig(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: solver failed");
  const Eigen::Index n = a.rows();
  HermitianEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    Eigen::VectorXcd v = solver.eigenvectors().col(n - 1 - i);
    const double tol = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(v(k)) > tol) {
        v *= std::conj(v(k)) / std::abs(v(k));
        break;
      }
    }
    out.vectors.col(i) = v;
  }
  return out;
}

Eigen::VectorXd normalized_eigenvalues(const Eigen::MatrixXcd& cov) {
  const Eigen::Index n = cov.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("normalized_eigenvalues: solver failed");
  Eigen::VectorXd ev = solver.eigenvalues().reverse();
  const double top = n > 0 ? ev(0) : 0.0;
  if (!(top > 0.0)) return Eigen::VectorXd::Zero(n);
  ev /= top;
  ev(0) = 1.0;
  return ev;
}

void highpass_butter2(std::span<double> x, double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate)) {
    throw std::invalid_argument("highpass_butter2: cutoff must be in (0, fs/2)");
  }
  const double w0 = 2.0 * M_PI * cutoff_hz / sample_rate;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / std::sqrt(2.0);
  const double a0 = 1.0 + alpha;
  const double b0 = 0.5 * (1.0 + c) / a0, b1 = -(1.0 + c) / a0, b2 = b0;
  const double a1 = -2.0 * c / a0, a2 = (1.0 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& v : x) {
    const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

Signal fft_convolve(std::span<const double> signal, const Signal& ir) {
  const std::size_t s = signal.size();
  const std::size_t l = ir.frames();
  if (s == 0 || l == 0) return Signal(ir.channels(), 0, ir.sample_rate());
  const std::size_t n_out = s + l - 1;
  const int n_fft = next_pow2(static_cast<long long>(n_out));
  RealFft fft(n_fft);
  std::vector<double> buf(n_fft, 0.0);
  std::copy(signal.begin(), signal.end(), buf.begin());
  std::vector<cplx> sig_spec(fft.bins()), ir_spec(fft.bins());
  fft.forward(buf, sig_spec);
  Signal out(ir.channels(), n_out, ir.sample_rate());
  for (int c = 0; c < ir.channels(); ++c) {
    std::fill(buf.begin(), buf.end(), 0.0);
    auto h = ir.channel(c);
    std::copy(h.begin(), h.end(), buf.begin());
    fft.forward(buf, ir_spec);
    for (int k = 0; k < fft.bins(); ++k) ir_spec[k] *= sig_spec[k];
    fft.inverse(ir_spec, buf);
    auto dst = out.channel(c);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n_out), dst.begin());
  }
  return out;
}

}  // namespace irs::dsp
