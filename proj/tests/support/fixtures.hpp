// Synthetic banks and a miniature annotated dataset for tests that exercise
// the augmentation, pipeline and CLI layers.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "irs/augmentation.hpp"

namespace irs::test {

/// classes x per_class white-noise bursts of 0.5-2 s with 10 ms fades and
/// per-source levels between 0.05 and 0.2.
augment::SourceBank synthetic_sources(int classes, int per_class, double fs, std::uint64_t seed);

/// FOA (ACN/SN3D) RIR of a single plane wave: a unit impulse at `delay`
/// samples scaled by 1 / (4 pi distance).
room::ShIR plane_wave_ir(const sf::SphDirection& dir, std::size_t length, double fs, std::size_t delay = 24,
                         double distance = 1.0);

/// One room per inner vector, one plane-wave RIR per direction.
augment::RirBank plane_wave_rirs(const std::vector<std::vector<sf::SphDirection>>& rooms, std::size_t length,
                                 double fs);

struct MiniEvent {
  int first_frame;
  int last_frame;  // exclusive
  int class_id;
  int track;
  int azimuth_deg;
  int elevation_deg;
};

/// Writes root/foa_dev/dev-train/<stem>.wav and root/metadata_dev/dev-train/<stem>.csv
/// with plane-wave noise events rendered at their label frames.
void write_mini_clip(const std::filesystem::path& root, const std::string& stem, double seconds,
                     const std::vector<MiniEvent>& events, std::uint64_t seed, double fs = 24000.0);

/// Three training clips (folds 1 and 2) and one fold-5 clip, with isolated,
/// overlapping and moving events.
void write_mini_dataset(const std::filesystem::path& root);

}  // namespace irs::test
