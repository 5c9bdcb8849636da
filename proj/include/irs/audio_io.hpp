// RIFF/WAVE reading and writing: PCM 16/24-bit and IEEE float32.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "irs/signal.hpp"

namespace irs::io {

enum class WavFormat { pcm16, pcm24, float32 };

inline constexpr int kMaxWavChannels = 64;

/// Parse failure; offset is the byte position where the problem was found.
class WavError : public std::runtime_error {
 public:
  WavError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Integer formats are scaled by 1 / 2^(bits-1), so full-scale positive
/// 16-bit maps to 32767/32768.
Signal parse_wav(std::span<const std::uint8_t> bytes, std::optional<int> expected_channels = std::nullopt);
Signal read_wav(const std::filesystem::path& path, std::optional<int> expected_channels = std::nullopt);

/// Header of a file without decoding samples.
struct WavInfo {
  int channels = 0;
  double sample_rate = 0.0;
  std::size_t frames = 0;
  WavFormat format = WavFormat::float32;
};
WavInfo read_wav_info(const std::filesystem::path& path);

/// Integer formats clip to [-1, 1) and round to nearest.
std::vector<std::uint8_t> encode_wav(const Signal& audio, WavFormat format = WavFormat::float32);
/// Writes through a temporary file and renames, so a reader never sees a
/// partial file.
void write_wav(const std::filesystem::path& path, const Signal& audio, WavFormat format = WavFormat::float32);

/// Atomic text write used by every bank index and manifest.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace irs::io
