#include "irs/source_enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace irs::enhance {

using cplx = std::complex<double>;

void CgmmConfig::validate() const {
  if (iters < 1) throw std::invalid_argument("cgmm: iters must be >= 1");
  if (!(noise_init_ms > 0.0)) throw std::invalid_argument("cgmm: noise_init_ms must be > 0");
  if (!(target_init_fraction > 0.0 && target_init_fraction <= 1.0)) {
    throw std::invalid_argument("cgmm: target_init_fraction must be in (0, 1]");
  }
}

namespace {

constexpr double kLogPi = 1.1447298858494002;

// Inverse and log-determinant of a Hermitian PD matrix; loads the diagonal
// until the smallest eigenvalue is at least 1e-10 of the largest.
struct Factor {
  Eigen::MatrixXcd inv;
  double logdet = 0.0;
};

Factor factor_loaded(Eigen::MatrixXcd r, int& loading_events) {
  const Eigen::Index c = r.rows();
  const double tr = r.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw std::runtime_error("cgmm: covariance with non-positive trace");
  double delta = 1e-8 * tr / c;
  for (;;) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    const auto& ev = es.eigenvalues();
    if (es.info() == Eigen::Success && ev(0) >= 1e-10 * ev(c - 1) && ev(0) > 0.0) {
      Factor f;
      f.inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
      f.logdet = ev.array().log().sum();
      return f;
    }
    if (delta > tr) throw std::runtime_error("cgmm: diagonal loading exceeded the covariance trace");
    r.diagonal().array() += delta;
    ++loading_events;
    delta *= 10.0;
  }
}

struct BinState {
  Eigen::MatrixXcd r[2];
  Factor fac[2];
  double prior[2] = {0.5, 0.5};
  std::vector<double> phi[2];
  std::vector<double> resp[2];
};

// Fills phi from the current R and returns the observed log-likelihood,
// updating responsibilities.
double e_step(const Eigen::MatrixXcd& x, BinState& s, double eps) {
  const Eigen::Index c = x.rows();
  const Eigen::Index t_count = x.cols();
  double ll = 0.0;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    double lp[2];
    for (int k = 0; k < 2; ++k) {
      const double q = std::max((x.col(t).adjoint() * s.fac[k].inv * x.col(t))(0, 0).real(), 0.0);
      const double phi = std::max(q / c, eps);
      s.phi[k][t] = phi;
      lp[k] = std::log(s.prior[k]) - c * (kLogPi + std::log(phi)) - s.fac[k].logdet - q / phi;
    }
    const double m = std::max(lp[0], lp[1]);
    const double lse = m + std::log(std::exp(lp[0] - m) + std::exp(lp[1] - m));
    ll += lse;
    for (int k = 0; k < 2; ++k) s.resp[k][t] = std::exp(lp[k] - lse);
  }
  return ll;
}

}  // namespace

CgmmResult cgmm(const dsp::Spectrogram& spec, const CgmmConfig& cfg, dsp::Exec exec) {
  cfg.validate();
  const int c = spec.channels;
  const int t_count = spec.frames;
  if (c < 2) throw std::invalid_argument("cgmm: need at least 2 channels");
  if (t_count < 2) throw std::invalid_argument("cgmm: need at least 2 frames");

  // Initialization frames, shared by all bins.
  std::vector<double> energy(t_count, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int t = 0; t < t_count; ++t) {
      for (int f = 0; f < spec.bins; ++f) energy[t] += std::norm(spec.at(ch, t, f));
    }
  }
  const double frame_s = spec.hop / spec.sample_rate;
  const int n_edge = std::clamp(static_cast<int>(std::lround(cfg.noise_init_ms / 1000.0 / frame_s)), 1,
                                std::max(1, t_count / 2));
  std::vector<int> noise_frames;
  for (int t = 0; t < n_edge; ++t) noise_frames.push_back(t);
  for (int t = std::max(n_edge, t_count - n_edge); t < t_count; ++t) noise_frames.push_back(t);
  std::vector<int> order(t_count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return energy[a] > energy[b]; });
  const int n_peak = std::max(1, static_cast<int>(std::ceil(cfg.target_init_fraction * t_count)));
  const std::vector<int> target_frames(order.begin(), order.begin() + n_peak);

  const int n_ll = cfg.iters + 1;
  std::vector<double> ll(static_cast<std::size_t>(n_ll) * spec.bins, 0.0);
  std::vector<int> loads(spec.bins, 0);
  CgmmResult res;
  res.masks = TfMasks(t_count, spec.bins);
  std::vector<std::string> errors(spec.bins);

  auto run_bin = [&](int f) {
    Eigen::MatrixXcd x(c, t_count);
    for (int ch = 0; ch < c; ++ch) {
      for (int t = 0; t < t_count; ++t) x(ch, t) = spec.at(ch, t, f);
    }
    const double power = x.squaredNorm() / (static_cast<double>(c) * t_count);
    if (!(power > 0.0)) {
      for (int t = 0; t < t_count; ++t) {
        res.masks.target_at(t, f) = 0.5;
        res.masks.noise_at(t, f) = 0.5;
      }
      return;
    }
    const double eps = 1e-10 * power;
    auto mean_cov = [&](const std::vector<int>& frames) {
      Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(c, c);
      for (int t : frames) r.noalias() += x.col(t) * x.col(t).adjoint();
      r /= static_cast<double>(frames.size());
      if (!(r.trace().real() > 1e-12 * power * c)) r = x * x.adjoint() / static_cast<double>(t_count);
      return Eigen::MatrixXcd(0.5 * (r + r.adjoint()));
    };
    BinState s;
    s.r[0] = mean_cov(target_frames);
    s.r[1] = mean_cov(noise_frames);
    for (int k = 0; k < 2; ++k) {
      s.r[k] *= c / s.r[k].trace().real();
      s.fac[k] = factor_loaded(s.r[k], loads[f]);
      s.phi[k].assign(t_count, 1.0);
      s.resp[k].assign(t_count, 0.5);
    }
    ll[f] = e_step(x, s, eps);
    for (int it = 1; it <= cfg.iters; ++it) {
      for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(c, c);
        double wsum = 0.0;
        for (int t = 0; t < t_count; ++t) {
          const double w = s.resp[k][t];
          wsum += w;
          acc.noalias() += (w / s.phi[k][t]) * x.col(t) * x.col(t).adjoint();
        }
        s.prior[k] = std::clamp(wsum / t_count, 1e-12, 1.0);
        if (wsum > 0.0 && acc.trace().real() > 0.0) {
          acc = 0.5 * (acc + acc.adjoint()).eval();
          s.r[k] = acc * (c / acc.trace().real());
          s.fac[k] = factor_loaded(s.r[k], loads[f]);
        }
      }
      ll[static_cast<std::size_t>(it) * spec.bins + f] = e_step(x, s, eps);
    }
    for (int t = 0; t < t_count; ++t) {
      res.masks.target_at(t, f) = s.resp[0][t];
      res.masks.noise_at(t, f) = 1.0 - s.resp[0][t];
    }
  };
  auto guarded = [&](int f) {
    try {
      run_bin(f);
    } catch (const std::exception& e) {
      errors[f] = e.what();
    }
  };
  if (exec == dsp::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int f = 0; f < spec.bins; ++f) guarded(f);
  } else {
    for (int f = 0; f < spec.bins; ++f) guarded(f);
  }
  for (int f = 0; f < spec.bins; ++f) {
    if (!errors[f].empty()) throw std::runtime_error("bin " + std::to_string(f) + ": " + errors[f]);
  }
  res.log_likelihood.assign(n_ll, 0.0);
  for (int i = 0; i < n_ll; ++i) {
    for (int f = 0; f < spec.bins; ++f) res.log_likelihood[i] += ll[static_cast<std::size_t>(i) * spec.bins + f];
  }
  res.loading_events = std::accumulate(loads.begin(), loads.end(), 0);
  return res;
}

TfMasks cgmm_masks(const dsp::Spectrogram& spec, int iters) {
  CgmmConfig cfg;
  cfg.iters = iters;
  return cgmm(spec, cfg).masks;
}

Eigen::VectorXcd mvdr_weights(const Eigen::MatrixXcd& rx, const Eigen::MatrixXcd& rn, const MvdrConfig& cfg,
                              bool* loaded) {
  const Eigen::Index c = rx.rows();
  if (rx.cols() != c || rn.rows() != c || rn.cols() != c) throw std::invalid_argument("mvdr: shape mismatch");
  if (cfg.ref_channel < 0 || cfg.ref_channel >= c) throw std::invalid_argument("mvdr: reference channel out of range");
  Eigen::VectorXcd e_ref = Eigen::VectorXcd::Zero(c);
  e_ref(cfg.ref_channel) = 1.0;
  if (loaded) *loaded = false;

  const double tr_n = rn.trace().real();
  const double tr_x = rx.trace().real();
  bool need_load = !(tr_n > 0.0);
  if (!need_load) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rn, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    need_load = !(ev(0) > 0.0) || ev(c - 1) / ev(0) > cfg.max_condition;
  }
  Eigen::MatrixXcd rn_l = rn;
  if (need_load) {
    const double level = cfg.loading * (tr_n > 0.0 ? tr_n : tr_x) / c;
    if (!(level > 0.0)) return e_ref;
    rn_l.diagonal().array() += level;
    if (loaded) *loaded = true;
  }
  const Eigen::MatrixXcd m = rn_l.ldlt().solve(rx);
  const cplx tr = m.trace();
  if (!(std::abs(tr) > 0.0) || !std::isfinite(std::abs(tr))) return e_ref;
  return m.col(cfg.ref_channel) / tr;
}

EnhancedSource mvdr_enhance(const dsp::Spectrogram& spec, const TfMasks& masks, std::size_t out_length,
                            const MvdrConfig& cfg, dsp::Exec exec) {
  if (masks.frames != spec.frames || masks.bins != spec.bins) {
    throw std::invalid_argument("mvdr_enhance: masks are " + std::to_string(masks.frames) + "x" +
                                std::to_string(masks.bins) + ", spectrogram is " + std::to_string(spec.frames) +
                                "x" + std::to_string(spec.bins));
  }
  const int c = spec.channels;
  EnhancedSource out;
  out.sample_rate = spec.sample_rate;
  out.target_cov.resize(spec.bins);
  out.noise_cov.resize(spec.bins);
  dsp::Spectrogram y(1, spec.frames, spec.frame_len, spec.hop, spec.sample_rate);
  std::vector<char> loaded(spec.bins, 0);

  auto run_bin = [&](int f) {
    Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(c, c), rn = Eigen::MatrixXcd::Zero(c, c);
    double sx = 0.0, sn = 0.0;
    for (int t = 0; t < spec.frames; ++t) {
      const Eigen::VectorXcd v = spec.vec(t, f);
      const Eigen::MatrixXcd o = v * v.adjoint();
      rx.noalias() += masks.target_at(t, f) * o;
      rn.noalias() += masks.noise_at(t, f) * o;
      sx += masks.target_at(t, f);
      sn += masks.noise_at(t, f);
    }
    if (sx > 0.0) rx /= sx;
    if (sn > 0.0) rn /= sn;
    rx = 0.5 * (rx + rx.adjoint()).eval();
    rn = 0.5 * (rn + rn.adjoint()).eval();
    bool l = false;
    const Eigen::VectorXcd w = mvdr_weights(rx, rn, cfg, &l);
    loaded[f] = l ? 1 : 0;
    for (int t = 0; t < spec.frames; ++t) y.at(0, t, f) = w.dot(spec.vec(t, f));
    out.target_cov[f] = std::move(rx);
    out.noise_cov[f] = std::move(rn);
  };
  if (exec == dsp::Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < spec.bins; ++f) run_bin(f);
  } else {
    for (int f = 0; f < spec.bins; ++f) run_bin(f);
  }
  out.loaded_bins = std::accumulate(loaded.begin(), loaded.end(), 0);
  const Signal sig = dsp::istft(y, out_length);
  out.audio.assign(sig.channel(0).begin(), sig.channel(0).end());
  return out;
}

EnhancedSource enhance_segment(const events::EventSegment& seg, const EnhanceConfig& cfg, dsp::Exec exec) {
  const std::size_t n = seg.audio.frames();
  const std::size_t pad = static_cast<std::size_t>(cfg.frame_len);
  Signal padded(seg.audio.channels(), n + 2 * pad, seg.audio.sample_rate());
  for (int ch = 0; ch < seg.audio.channels(); ++ch) {
    auto src = seg.audio.channel(ch);
    std::copy(src.begin(), src.end(), padded.channel(ch).begin() + static_cast<std::ptrdiff_t>(pad));
  }
  const auto spec = dsp::stft(padded, cfg.frame_len, cfg.hop);
  const auto masks = cgmm(spec, cfg.cgmm, exec).masks;
  auto out = mvdr_enhance(spec, masks, padded.frames(), cfg.mvdr, exec);
  out.audio = std::vector<double>(out.audio.begin() + static_cast<std::ptrdiff_t>(pad),
                                  out.audio.begin() + static_cast<std::ptrdiff_t>(pad + n));
  out.class_id = seg.class_id;
  out.provenance = seg.id;
  return out;
}

}  // namespace irs::enhance
