#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/test_support.hpp"
#include "irs/dsp.hpp"

using namespace irs;
using dsp::cplx;

namespace {

Signal random_signal(int c, std::size_t n, std::uint64_t seed) {
  Signal s(c, n, 24000.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  for (auto& v : s.data()) v = d(rng);
  return s;
}

}  // namespace

TEST(Stft, DefaultFrameSizes) {
  const auto c = dsp::stft_config_from_ms(24000.0, 20.0, 10.0);
  EXPECT_EQ(c.frame_len, 480);
  EXPECT_EQ(c.hop, 240);
  const auto spec = dsp::stft(random_signal(1, 4800, 1), c.frame_len, c.hop);
  EXPECT_EQ(spec.bins, 241);
}

TEST(Stft, RoundTripInterior) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = random_signal(2, 6000, seed);
    const auto y = dsp::istft(dsp::stft(x, 480, 240), x.frames());
    double err = 0.0;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 240; i + 480 < x.frames(); ++i) err = std::max(err, std::abs(x(c, i) - y(c, i)));
    }
    EXPECT_LT(err, 1e-10) << "seed " << seed;
  }
}

TEST(Stft, ToneAtBinCenterIsConcentrated) {
  const int n = 480, bin = 37;
  Signal x(1, 24000, 24000.0);
  for (std::size_t i = 0; i < x.frames(); ++i) x(0, i) = std::cos(2 * sf::kPi * bin * static_cast<double>(i) / n + 0.3);
  const auto spec = dsp::stft(x, n, 240);
  double near = 0.0, total = 0.0;
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      const double e = std::norm(spec.at(0, t, f));
      total += e;
      if (std::abs(f - bin) <= 1) near += e;
    }
  }
  EXPECT_GT(near / total, 0.99);
}

TEST(Stft, Errors) {
  EXPECT_THROW(dsp::stft(random_signal(1, 100, 1), 480, 240), std::invalid_argument);
  EXPECT_THROW(dsp::stft(random_signal(1, 1000, 1), 480, 481), std::invalid_argument);
  EXPECT_THROW(dsp::stft(random_signal(1, 1000, 1), 480, 0), std::invalid_argument);
}

TEST(Covariance, SingleChannelIsMeanPower) {
  const auto spec = dsp::stft(random_signal(1, 4800, 3), 480, 240);
  const auto cov = dsp::spatial_covariance(spec, 0, spec.frames);
  for (int f = 0; f < spec.bins; f += 17) {
    double p = 0.0;
    for (int t = 0; t < spec.frames; ++t) p += std::norm(spec.at(0, t, f));
    EXPECT_NEAR(cov.values[f](0, 0).real(), p / spec.frames, 1e-12 * (1 + p));
  }
}

TEST(Covariance, RankOneAndLinearity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto s = test::white_noise(4800, seed + 100);
    const double g[4] = {1.0, -0.4, 0.7, 0.2};
    Signal x(4, s.size(), 24000.0);
    for (int c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < s.size(); ++i) x(c, i) = g[c] * s[i];
    }
    const auto spec = dsp::stft(x, 480, 240);
    const auto cov = dsp::spatial_covariance(spec, 0, spec.frames);
    for (int f = 1; f < spec.bins; f += 20) {
      const auto e = dsp::normalized_eigenvalues(cov.values[f]);
      EXPECT_LT(e(1), 1e-10);
    }
    const int split = spec.frames / 3;
    const auto a = dsp::spatial_covariance(spec, 0, split);
    const auto b = dsp::spatial_covariance(spec, split, spec.frames);
    for (int f = 0; f < spec.bins; f += 30) {
      const Eigen::MatrixXcd mix =
          (split * a.values[f] + (spec.frames - split) * b.values[f]) / static_cast<double>(spec.frames);
      EXPECT_LT((mix - cov.values[f]).norm(), 1e-10 * (1 + cov.values[f].norm()));
    }
  }
}

TEST(Covariance, HermitianPsdOverManyFrames) {
  const auto x = random_signal(4, 16 * 10050, 8);
  const auto spec = dsp::stft(x, 32, 16);
  ASSERT_GE(spec.frames, 10000);
  const auto cov = dsp::spatial_covariance(spec, 0, spec.frames);
  for (const auto& m : cov.values) {
    EXPECT_LT((m - m.adjoint()).norm(), 1e-12 * m.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * m.trace().real());
  }
}

TEST(Covariance, SerialAndParallelAgreeBitwise) {
  const auto spec = dsp::stft(random_signal(4, 24000, 2), 480, 240);
  const auto a = dsp::spatial_covariance(spec, 0, spec.frames, dsp::Exec::serial);
  const auto b = dsp::spatial_covariance(spec, 0, spec.frames, dsp::Exec::parallel);
  for (std::size_t f = 0; f < a.values.size(); ++f) EXPECT_TRUE(a.values[f] == b.values[f]);
}

TEST(Eigen, NormalizedEigenvalues) {
  const auto id = dsp::normalized_eigenvalues(Eigen::MatrixXcd::Identity(4, 4));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(id(i), 1.0, 1e-15);
  Eigen::VectorXcd v(4);
  v << cplx(1, 2), cplx(0, -1), cplx(0.5, 0), cplx(-1, 1);
  const Eigen::MatrixXcd r1 = v * v.adjoint();
  const auto e = dsp::normalized_eigenvalues(r1);
  EXPECT_EQ(e(0), 1.0);
  for (int i = 1; i < 4; ++i) EXPECT_LT(std::abs(e(i)), 1e-10);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd a(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = {d(rng), d(rng)};
  }
  const Eigen::MatrixXcd psd = a * a.adjoint();
  const auto e1 = dsp::normalized_eigenvalues(psd);
  const auto e2 = dsp::normalized_eigenvalues(7.5 * psd);
  EXPECT_LT((e1 - e2).norm(), 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_LE(e1(i), e1(i - 1));
  EXPECT_EQ(dsp::normalized_eigenvalues(Eigen::MatrixXcd::Zero(3, 3)).norm(), 0.0);
}

TEST(Eigen, DeterministicVectorPhase) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd a(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = {d(rng), d(rng)};
  }
  const Eigen::MatrixXcd h = a * a.adjoint();
  const auto eig = dsp::hermitian_eig(h);
  for (int k = 0; k < 3; ++k) {
    int first = 0;
    while (std::abs(eig.vectors(first, k)) < 1e-12) ++first;
    EXPECT_NEAR(eig.vectors(first, k).imag(), 0.0, 1e-14);
    EXPECT_GT(eig.vectors(first, k).real(), 0.0);
    EXPECT_LT((h * eig.vectors.col(k) - eig.values(k) * eig.vectors.col(k)).norm(), 1e-10 * h.norm());
  }
}

TEST(FftConvolve, DelayAndBruteForce) {
  const auto s = test::white_noise(1000, 1);
  Signal ir(2, 50, 24000.0);
  ir(0, 7) = 1.0;
  ir(1, 0) = 1.0;
  const auto y = dsp::fft_convolve(s, ir);
  ASSERT_EQ(y.frames(), 1049u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(y(0, i + 7), s[i], 1e-12);
    EXPECT_NEAR(y(1, i), s[i], 1e-12);
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = test::white_noise(1000, seed);
    const auto hv = test::white_noise(200, seed + 1000);
    Signal h(1, 200, 24000.0);
    std::copy(hv.begin(), hv.end(), h.channel(0).begin());
    const auto fast = dsp::fft_convolve(a, h);
    double err = 0.0;
    for (std::size_t n = 0; n < 1199; ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 200; ++k) {
        if (n >= k && n - k < 1000) acc += hv[k] * a[n - k];
      }
      err = std::max(err, std::abs(acc - fast(0, n)));
    }
    EXPECT_LT(err, 1e-9) << "seed " << seed;
  }
}

TEST(FftConvolve, Linearity) {
  const auto a = test::white_noise(300, 2), b = test::white_noise(300, 3);
  const auto hv = test::white_noise(64, 4);
  Signal h(1, 64, 24000.0);
  std::copy(hv.begin(), hv.end(), h.channel(0).begin());
  std::vector<double> mix(300);
  for (int i = 0; i < 300; ++i) mix[i] = 2.5 * a[i] - b[i];
  const auto ya = dsp::fft_convolve(a, h), yb = dsp::fft_convolve(b, h), ym = dsp::fft_convolve(mix, h);
  for (std::size_t i = 0; i < ym.frames(); ++i) EXPECT_NEAR(ym(0, i), 2.5 * ya(0, i) - yb(0, i), 1e-11);
}

TEST(Highpass, RemovesDcPassesMidband) {
  std::vector<double> step(24000, 1.0);
  dsp::highpass_butter2(step, 50.0, 24000.0);
  EXPECT_LT(std::abs(step.back()), 1e-6);
  std::vector<double> tone(24000);
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = std::sin(2 * sf::kPi * 1000.0 * i / 24000.0);
  auto out = tone;
  dsp::highpass_butter2(out, 50.0, 24000.0);
  double e_in = 0, e_out = 0;
  for (std::size_t i = 12000; i < tone.size(); ++i) {
    e_in += tone[i] * tone[i];
    e_out += out[i] * out[i];
  }
  EXPECT_NEAR(e_out / e_in, 1.0, 1e-3);
}
