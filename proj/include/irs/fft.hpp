// Thin FFTW wrapper. Plans are created once per size under a global lock and
// executed through the new-array interface, so one RealFft can be shared by
// any number of threads.

#pragma once

#include <complex>
#include <span>

namespace irs::dsp {

class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// out has bins() entries. Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// in has bins() entries; imaginary parts of DC and Nyquist are ignored.
  /// Scaled by 1/n so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

int next_pow2(long long n);

}  // namespace irs::dsp
