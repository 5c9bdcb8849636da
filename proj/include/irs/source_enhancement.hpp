// CGMM time-frequency masks and a mask-driven MVDR beamformer that turn a
// multichannel segment into an enhanced mono source.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "irs/dsp.hpp"
#include "irs/event_extraction.hpp"

namespace irs::enhance {

struct TfMasks {
  int frames = 0;
  int bins = 0;
  std::vector<double> target;  // [t][f]
  std::vector<double> noise;

  TfMasks() = default;
  TfMasks(int t, int f) : frames(t), bins(f), target(static_cast<std::size_t>(t) * f), noise(target.size()) {}
  double& target_at(int t, int f) { return target[static_cast<std::size_t>(t) * bins + f]; }
  double target_at(int t, int f) const { return target[static_cast<std::size_t>(t) * bins + f]; }
  double& noise_at(int t, int f) { return noise[static_cast<std::size_t>(t) * bins + f]; }
  double noise_at(int t, int f) const { return noise[static_cast<std::size_t>(t) * bins + f]; }
};

struct CgmmConfig {
  int iters = 10;
  double noise_init_ms = 100.0;       // leading and trailing span used for the noise class
  double target_init_fraction = 0.1;  // share of highest-energy frames used for the target class

  void validate() const;
  bool operator==(const CgmmConfig&) const = default;
};

struct CgmmResult {
  TfMasks masks;
  /// Observed-data log-likelihood before the first iteration and after
  /// each one (iters + 1 values).
  std::vector<double> log_likelihood;
  int loading_events = 0;  // covariance re-regularizations
};

/// Two-class complex Gaussian mixture per bin, x ~ sum_k pi_k N(0, phi_k,t R_k),
/// fit by expectation / conditional maximization. Requires C >= 2.
CgmmResult cgmm(const dsp::Spectrogram& spec, const CgmmConfig& cfg = {}, dsp::Exec exec = dsp::Exec::parallel);
TfMasks cgmm_masks(const dsp::Spectrogram& spec, int iters);

struct MvdrConfig {
  int ref_channel = 0;
  double loading = 1e-3;       // times trace / C
  double max_condition = 1e8;  // R_n above this is loaded

  bool operator==(const MvdrConfig&) const = default;
};

/// Souden MVDR w = (R_n^-1 R_x / tr(R_n^-1 R_x)) e_ref. R_n is diagonally
/// loaded when ill-conditioned or zero (falling back to R_x's trace for the
/// loading level); *loaded reports whether that happened.
Eigen::VectorXcd mvdr_weights(const Eigen::MatrixXcd& rx, const Eigen::MatrixXcd& rn, const MvdrConfig& cfg,
                              bool* loaded = nullptr);

struct EnhancedSource {
  std::vector<double> audio;
  double sample_rate = 0.0;
  int class_id = 0;
  std::string provenance;
  std::vector<Eigen::MatrixXcd> target_cov;  // per bin
  std::vector<Eigen::MatrixXcd> noise_cov;
  int loaded_bins = 0;
};

/// Mask-weighted covariances, per-bin weights, iSTFT of w^H x trimmed or
/// padded to out_length.
EnhancedSource mvdr_enhance(const dsp::Spectrogram& spec, const TfMasks& masks, std::size_t out_length,
                            const MvdrConfig& cfg = {}, dsp::Exec exec = dsp::Exec::parallel);

struct EnhanceConfig {
  int frame_len = 480;
  int hop = 240;
  CgmmConfig cgmm;
  MvdrConfig mvdr;

  bool operator==(const EnhanceConfig&) const = default;
};

/// Full chain on one segment. The segment is zero-padded by one frame on
/// both sides so every sample is covered by two windows.
EnhancedSource enhance_segment(const events::EventSegment& seg, const EnhanceConfig& cfg = {},
                               dsp::Exec exec = dsp::Exec::parallel);

}  // namespace irs::enhance
