// Label-based extraction of non-overlapping, static event segments.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irs/signal.hpp"
#include "irs/special_functions.hpp"

namespace irs::events {

/// One metadata row. frame_index counts label frames (100 ms by default).
struct LabelFrame {
  int frame_index = 0;
  int class_id = 0;
  int track_id = 0;
  int azimuth_deg = 0;    // [-180, 180)
  int elevation_deg = 0;  // [-90, 90]

  sf::SphDirection direction() const {
    return sf::SphDirection::from_degrees(azimuth_deg, elevation_deg);
  }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const LabelFrame&) const = default;
};

struct Verdicts {
  bool label_ok = true;
  std::optional<bool> detection_kept;
  std::optional<bool> eigen_kept;
};

struct EventSegment {
  std::string id;
  std::string source_clip;
  Signal audio;  // C x (end - start)
  int class_id = 0;
  int track_id = 0;
  sf::SphDirection doa;
  std::size_t start = 0;  // samples in the source clip
  std::size_t end = 0;
  int first_frame = 0;  // label frames of the run, [first_frame, last_frame)
  int last_frame = 0;
  Verdicts verdicts;
  std::optional<double> overlap_ratio;

  int run_frames() const { return last_frame - first_frame; }
};

struct ExtractionConfig {
  double staticity_tol_deg = 10.0;
  int min_frames = 3;
  int guard_frames = 1;
  double label_frame_s = 0.1;
  int min_samples = 480;  // one STFT frame

  void validate() const;
  bool operator==(const ExtractionConfig&) const = default;
};

/// Unit-vector mean of the directions, renormalized. Falls back to the first
/// direction when the vectors cancel.
sf::SphDirection mean_direction(std::span<const sf::SphDirection> dirs);

/// Maximal runs of frames with exactly one active (class, track), DOA within
/// staticity_tol of the run mean and at least min_frames long. Audio is
/// sliced with up to guard_frames of silent frames on each side; guards
/// never enter another event's frames and are split at the midpoint when two
/// segments compete for the same silence. Labels must be sorted by frame.
std::vector<EventSegment> extract_events(const Signal& clip, const std::string& clip_id,
                                         std::span<const LabelFrame> labels, const ExtractionConfig& cfg = {});

}  // namespace irs::events
