#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace irs {

/// Multichannel real signal, channel-major and contiguous.
class Signal {
 public:
  Signal() = default;
  Signal(int channels, std::size_t frames, double sample_rate = 0.0)
      : channels_(channels), frames_(frames), sample_rate_(sample_rate),
        data_(static_cast<std::size_t>(channels) * frames, 0.0) {
    if (channels < 0) throw std::invalid_argument("Signal: negative channel count");
  }

  int channels() const { return channels_; }
  std::size_t frames() const { return frames_; }
  double sample_rate() const { return sample_rate_; }
  void set_sample_rate(double fs) { sample_rate_ = fs; }
  bool empty() const { return data_.empty(); }

  std::span<double> channel(int c) { return {data_.data() + offset(c), frames_}; }
  std::span<const double> channel(int c) const { return {data_.data() + offset(c), frames_}; }

  double& operator()(int c, std::size_t i) { return data_[offset(c) + i]; }
  double operator()(int c, std::size_t i) const { return data_[offset(c) + i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Copy of frames [begin, end) of every channel.
  Signal slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > frames_) throw std::out_of_range("Signal::slice: bad range");
    Signal out(channels_, end - begin, sample_rate_);
    for (int c = 0; c < channels_; ++c) {
      auto src = channel(c);
      auto dst = out.channel(c);
      for (std::size_t i = begin; i < end; ++i) dst[i - begin] = src[i];
    }
    return out;
  }

  bool operator==(const Signal&) const = default;

 private:
  std::size_t offset(int c) const { return static_cast<std::size_t>(c) * frames_; }

  int channels_ = 0;
  std::size_t frames_ = 0;
  double sample_rate_ = 0.0;
  std::vector<double> data_;
};

}  // namespace irs
