#include "irs/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace irs::io {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kFloat = 3;
constexpr std::uint16_t kExtensible = 0xFFFE;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw WavError(std::string("truncated file: expected ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, b_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v;
    std::memcpy(&v, b_.data() + pos_, 2);
    pos_ += 2;
    return v;
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }
  const std::uint8_t* here() const { return b_.data() + pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

struct Header {
  WavInfo info;
  std::size_t data_offset = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes, bool need_data) {
  Reader r(bytes);
  if (r.tag("RIFF tag") != "RIFF") throw WavError("not a RIFF file", 0);
  r.u32("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw WavError("RIFF form is not WAVE", 8);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  for (;;) {
    if (r.remaining() == 0) {
      if (!have_fmt) throw WavError("missing fmt chunk", r.pos());
      throw WavError("missing data chunk", r.pos());
    }
    const std::size_t chunk_at = r.pos();
    const std::string id = r.tag("chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw WavError("fmt chunk too small", chunk_at);
      r.need(size, "fmt chunk body");
      const std::size_t body = r.pos();
      format = r.u16("format tag");
      channels = r.u16("channel count");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      block_align = r.u16("block align");
      bits = r.u16("bits per sample");
      if (format == kExtensible) {
        if (size < 40) throw WavError("extensible fmt chunk too small", chunk_at);
        r.u16("extension size");
        r.u16("valid bits");
        r.u32("channel mask");
        format = r.u16("sub-format");
        r.skip(14, "sub-format GUID");
      }
      r.skip(size - (r.pos() - body), "fmt chunk tail");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw WavError("data chunk before fmt chunk", chunk_at);
      Header h;
      h.data_offset = r.pos();
      if (channels == 0 || channels > kMaxWavChannels) {
        throw WavError("unsupported channel count " + std::to_string(channels), chunk_at);
      }
      if (rate == 0) throw WavError("sample rate is zero", chunk_at);
      if (format == kPcm && bits == 16) {
        h.info.format = WavFormat::pcm16;
      } else if (format == kPcm && bits == 24) {
        h.info.format = WavFormat::pcm24;
      } else if (format == kFloat && bits == 32) {
        h.info.format = WavFormat::float32;
      } else {
        throw WavError("unsupported codec: format tag " + std::to_string(format) + " with " + std::to_string(bits) +
                           " bits",
                       chunk_at);
      }
      if (block_align != channels * (bits / 8)) throw WavError("inconsistent block align", chunk_at);
      if (need_data && r.remaining() < size) {
        throw WavError("truncated data chunk: " + std::to_string(size) + " bytes declared, " +
                           std::to_string(r.remaining()) + " present",
                       bytes.size());
      }
      if (size % block_align != 0) throw WavError("data size is not a whole number of frames", chunk_at);
      h.info.channels = channels;
      h.info.sample_rate = rate;
      h.info.frames = size / block_align;
      return h;
    } else {
      r.skip(size + (size & 1u), "chunk body");
    }
  }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* t) { out.insert(out.end(), t, t + 4); }

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

Signal parse_wav(std::span<const std::uint8_t> bytes, std::optional<int> expected_channels) {
  const Header h = parse_header(bytes, true);
  const int c = h.info.channels;
  if (expected_channels && *expected_channels != c) {
    throw WavError("expected " + std::to_string(*expected_channels) + " channels, file has " + std::to_string(c), 22);
  }
  Signal out(c, h.info.frames, h.info.sample_rate);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < h.info.frames; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      double v = 0.0;
      switch (h.info.format) {
        case WavFormat::pcm16: {
          std::int16_t s;
          std::memcpy(&s, p, 2);
          v = s / 32768.0;
          p += 2;
          break;
        }
        case WavFormat::pcm24: {
          std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
          p += 3;
          break;
        }
        case WavFormat::float32: {
          float s;
          std::memcpy(&s, p, 4);
          v = s;
          p += 4;
          break;
        }
      }
      out(ch, i) = v;
    }
  }
  return out;
}

Signal read_wav(const std::filesystem::path& path, std::optional<int> expected_channels) {
  const auto bytes = read_bytes(path);
  try {
    return parse_wav(bytes, expected_channels);
  } catch (const WavError& e) {
    throw WavError(path.string() + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" (")),
                   e.offset());
  }
}

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> head(4096);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(head, false).info;
}

std::vector<std::uint8_t> encode_wav(const Signal& audio, WavFormat format) {
  const int c = audio.channels();
  if (c < 1 || c > kMaxWavChannels) throw std::invalid_argument("write_wav: channel count " + std::to_string(c));
  if (!(audio.sample_rate() > 0.0) || audio.sample_rate() != std::round(audio.sample_rate())) {
    throw std::invalid_argument("write_wav: sample rate must be a positive integer");
  }
  const int bytes_per = format == WavFormat::pcm16 ? 2 : format == WavFormat::pcm24 ? 3 : 4;
  const std::uint64_t data_size = static_cast<std::uint64_t>(audio.frames()) * c * bytes_per;
  if (data_size > 0xFFFFFFFFull - 64) throw std::invalid_argument("write_wav: data exceeds 4 GiB");
  const std::uint16_t tag = format == WavFormat::float32 ? kFloat : kPcm;
  const std::uint32_t fmt_size = format == WavFormat::float32 ? 18 : 16;

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(data_size) + 64);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(4 + 8 + fmt_size + 8 + data_size));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, fmt_size);
  put_u16(out, tag);
  put_u16(out, static_cast<std::uint16_t>(c));
  const auto rate = static_cast<std::uint32_t>(audio.sample_rate());
  put_u32(out, rate);
  put_u32(out, rate * c * bytes_per);
  put_u16(out, static_cast<std::uint16_t>(c * bytes_per));
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));
  if (fmt_size == 18) put_u16(out, 0);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t i = 0; i < audio.frames(); ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const double v = audio(ch, i);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("write_wav: non-finite sample at channel " + std::to_string(ch) + " frame " +
                                    std::to_string(i));
      }
      if (format == WavFormat::float32) {
        const float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
      } else {
        const double scale = format == WavFormat::pcm16 ? 32768.0 : 8388608.0;
        const double q = std::clamp(std::round(v * scale), -scale, scale - 1.0);
        const auto s = static_cast<std::int32_t>(q);
        out.push_back(static_cast<std::uint8_t>(s & 0xFF));
        out.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
        if (format == WavFormat::pcm24) out.push_back(static_cast<std::uint8_t>((s >> 16) & 0xFF));
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Signal& audio, WavFormat format) {
  const auto bytes = encode_wav(audio, format);
  write_text_atomic(path, std::string(bytes.begin(), bytes.end()));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace irs::io
