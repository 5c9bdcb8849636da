#include "fixtures.hpp"

#include <cmath>
#include <random>

#include "irs/audio_io.hpp"
#include "irs/dataset_io.hpp"
#include "test_support.hpp"

namespace irs::test {

augment::SourceBank synthetic_sources(int classes, int per_class, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dur(0.5, 2.0), level(0.05, 0.2);
  std::vector<augment::Source> out;
  const auto fade = static_cast<std::size_t>(0.01 * fs);
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < per_class; ++k) {
      augment::Source s;
      s.id = "src" + std::to_string(c) + "_" + std::to_string(k);
      s.class_id = c;
      s.provenance = "synthetic";
      const auto n = static_cast<std::size_t>(dur(rng) * fs);
      s.audio = white_noise(n, rng(), level(rng));
      for (std::size_t i = 0; i < fade; ++i) {
        const double g = 0.5 - 0.5 * std::cos(sf::kPi * static_cast<double>(i) / fade);
        s.audio[i] *= g;
        s.audio[n - 1 - i] *= g;
      }
      out.push_back(std::move(s));
    }
  }
  return augment::SourceBank(fs, std::move(out));
}

room::ShIR plane_wave_ir(const sf::SphDirection& dir, std::size_t length, double fs, std::size_t delay,
                         double distance) {
  room::ShIR ir;
  ir.channels = Signal(4, length, fs);
  const auto g = foa_gains_sn3d(dir);
  for (int c = 0; c < 4; ++c) ir.channels(c, delay) = g[c] / (4.0 * sf::kPi * distance);
  ir.doa = dir;
  ir.distance = distance;
  ir.order = 1;
  ir.convention = array::ShConvention::sn3d;
  return ir;
}

augment::RirBank plane_wave_rirs(const std::vector<std::vector<sf::SphDirection>>& rooms, std::size_t length,
                                 double fs) {
  std::vector<augment::RirEntry> entries;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    for (std::size_t k = 0; k < rooms[r].size(); ++k) {
      augment::RirEntry e;
      e.id = "room" + std::to_string(r) + "_rir" + std::to_string(k);
      e.room = static_cast<int>(r);
      e.ir = plane_wave_ir(rooms[r][k], length, fs);
      entries.push_back(std::move(e));
    }
  }
  return augment::RirBank(std::move(entries));
}

void write_mini_clip(const std::filesystem::path& root, const std::string& stem, double seconds,
                     const std::vector<MiniEvent>& events, std::uint64_t seed, double fs) {
  const auto frame = static_cast<std::size_t>(0.1 * fs);
  Signal audio(4, static_cast<std::size_t>(seconds * fs), fs);
  std::vector<events::LabelFrame> labels;
  std::uint64_t k = seed;
  for (const auto& e : events) {
    const std::size_t a = static_cast<std::size_t>(e.first_frame) * frame;
    const std::size_t b = static_cast<std::size_t>(e.last_frame) * frame;
    const auto s = white_noise(b - a, ++k, 0.1);
    add_plane_wave(audio, s, sf::SphDirection::from_degrees(e.azimuth_deg, e.elevation_deg), a);
    for (int f = e.first_frame; f < e.last_frame; ++f) {
      labels.push_back({f, e.class_id, e.track, e.azimuth_deg, e.elevation_deg});
    }
  }
  const auto floor = white_noise(audio.frames(), seed + 1000, 1e-4);
  for (std::size_t i = 0; i < audio.frames(); ++i) audio(0, i) += floor[i];
  std::filesystem::create_directories(root / "foa_dev" / "dev-train");
  std::filesystem::create_directories(root / "metadata_dev" / "dev-train");
  io::write_wav(root / "foa_dev" / "dev-train" / (stem + ".wav"), audio);
  io::emit_metadata(root / "metadata_dev" / "dev-train" / (stem + ".csv"), labels);
}

void write_mini_dataset(const std::filesystem::path& root) {
  write_mini_clip(root, "fold1_room1_mix001", 8.0,
                  {{5, 15, 0, 0, 40, 0}, {20, 32, 1, 0, -90, 10}, {40, 55, 2, 0, 150, -20},
                   {48, 60, 3, 1, 0, 30}},
                  1);
  write_mini_clip(root, "fold2_room1_mix002", 6.0, {{3, 12, 4, 0, 120, 0}, {20, 30, 5, 0, -30, 0}}, 2);
  // azimuth sweeps 40 degrees: excluded as moving
  std::vector<MiniEvent> sweep;
  for (int f = 10; f < 30; ++f) sweep.push_back({f, f + 1, 1, 0, -20 + 2 * (f - 10), 0});
  write_mini_clip(root, "fold2_room2_mix003", 4.0, sweep, 3);
  write_mini_clip(root, "fold5_room1_mix001", 4.0, {{5, 15, 0, 0, 10, 0}}, 4);
}

}  // namespace irs::test
