#include "irs/event_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace irs::events {

void LabelFrame::validate() const {
  if (frame_index < 0) throw std::invalid_argument("frame index " + std::to_string(frame_index) + " is negative");
  if (class_id < 0) throw std::invalid_argument("class " + std::to_string(class_id) + " is negative");
  if (track_id < 0) throw std::invalid_argument("track " + std::to_string(track_id) + " is negative");
  if (azimuth_deg < -180 || azimuth_deg >= 180) {
    throw std::invalid_argument("azimuth " + std::to_string(azimuth_deg) + " outside [-180, 180)");
  }
  if (elevation_deg < -90 || elevation_deg > 90) {
    throw std::invalid_argument("elevation " + std::to_string(elevation_deg) + " outside [-90, 90]");
  }
}

void ExtractionConfig::validate() const {
  if (!(staticity_tol_deg >= 0.0)) throw std::invalid_argument("extraction: staticity_tol_deg must be >= 0");
  if (min_frames < 1) throw std::invalid_argument("extraction: min_frames must be >= 1");
  if (guard_frames < 0) throw std::invalid_argument("extraction: guard_frames must be >= 0");
  if (!(label_frame_s > 0.0)) throw std::invalid_argument("extraction: label_frame_s must be > 0");
  if (min_samples < 1) throw std::invalid_argument("extraction: min_samples must be >= 1");
}

sf::SphDirection mean_direction(std::span<const sf::SphDirection> dirs) {
  if (dirs.empty()) throw std::invalid_argument("mean_direction: no directions");
  double sx = 0, sy = 0, sz = 0;
  for (const auto& d : dirs) {
    double x, y, z;
    d.to_vector(x, y, z);
    sx += x;
    sy += y;
    sz += z;
  }
  const double n = std::sqrt(sx * sx + sy * sy + sz * sz);
  if (n < 1e-9 * static_cast<double>(dirs.size())) return dirs.front();
  return sf::SphDirection::from_vector(sx, sy, sz);
}

namespace {

struct Run {
  int first;
  int last;  // exclusive
  int class_id;
  int track_id;
  sf::SphDirection doa;
};

}  // namespace

std::vector<EventSegment> extract_events(const Signal& clip, const std::string& clip_id,
                                         std::span<const LabelFrame> labels, const ExtractionConfig& cfg) {
  cfg.validate();
  if (!(clip.sample_rate() > 0.0)) throw std::invalid_argument("extract_events: clip has no sample rate");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    try {
      labels[i].validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("extract_events: label row " + std::to_string(i + 1) + ": " + e.what());
    }
    if (i > 0 && labels[i].frame_index < labels[i - 1].frame_index) {
      throw std::invalid_argument("extract_events: label row " + std::to_string(i + 1) + " is out of frame order");
    }
  }

  const std::size_t frame_samples = static_cast<std::size_t>(std::lround(cfg.label_frame_s * clip.sample_rate()));
  const int clip_frames = static_cast<int>((clip.frames() + frame_samples - 1) / frame_samples);
  int n_frames = clip_frames;
  if (!labels.empty()) n_frames = std::max(n_frames, labels.back().frame_index + 1);

  // Rows per frame.
  std::vector<std::vector<const LabelFrame*>> active(n_frames);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& slot = active[labels[i].frame_index];
    for (const auto* other : slot) {
      if (other->class_id == labels[i].class_id && other->track_id == labels[i].track_id) {
        throw std::invalid_argument("extract_events: label row " + std::to_string(i + 1) + " repeats class " +
                                    std::to_string(labels[i].class_id) + " track " +
                                    std::to_string(labels[i].track_id) + " in frame " +
                                    std::to_string(labels[i].frame_index));
      }
    }
    slot.push_back(&labels[i]);
  }

  std::vector<Run> runs;
  const double tol = cfg.staticity_tol_deg * sf::kPi / 180.0;
  int f = 0;
  while (f < n_frames) {
    if (active[f].size() != 1) {
      ++f;
      continue;
    }
    const int cls = active[f][0]->class_id;
    const int trk = active[f][0]->track_id;
    int g = f;
    std::vector<sf::SphDirection> dirs;
    while (g < n_frames && active[g].size() == 1 && active[g][0]->class_id == cls && active[g][0]->track_id == trk) {
      dirs.push_back(active[g][0]->direction());
      ++g;
    }
    if (g - f >= cfg.min_frames) {
      const auto mean = mean_direction(dirs);
      bool is_static = true;
      for (const auto& d : dirs) {
        if (sf::angle_between(d, mean) > tol + 1e-12) {
          is_static = false;
          break;
        }
      }
      if (is_static) runs.push_back({f, g, cls, trk, mean});
    }
    f = g;
  }

  // Guards extend into silent frames only.
  std::vector<int> lo(runs.size()), hi(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    lo[r] = runs[r].first;
    for (int k = 0; k < cfg.guard_frames && lo[r] > 0 && active[lo[r] - 1].empty(); ++k) --lo[r];
    hi[r] = runs[r].last;
    for (int k = 0; k < cfg.guard_frames && hi[r] < n_frames && active[hi[r]].empty(); ++k) ++hi[r];
  }
  std::vector<std::size_t> start(runs.size()), end(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    start[r] = std::min(static_cast<std::size_t>(lo[r]) * frame_samples, clip.frames());
    end[r] = std::min(static_cast<std::size_t>(hi[r]) * frame_samples, clip.frames());
  }
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (start[r] < end[r - 1]) {
      const std::size_t a = static_cast<std::size_t>(runs[r - 1].last) * frame_samples;
      const std::size_t b = static_cast<std::size_t>(runs[r].first) * frame_samples;
      const std::size_t mid = std::min((a + b) / 2, clip.frames());
      end[r - 1] = mid;
      start[r] = mid;
    }
  }

  std::vector<EventSegment> out;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (end[r] <= start[r] || end[r] - start[r] < static_cast<std::size_t>(cfg.min_samples)) continue;
    EventSegment seg;
    char buf[32];
    std::snprintf(buf, sizeof buf, "_seg%03zu", out.size());
    seg.id = clip_id + buf;
    seg.source_clip = clip_id;
    seg.audio = clip.slice(start[r], end[r]);
    seg.class_id = runs[r].class_id;
    seg.track_id = runs[r].track_id;
    seg.doa = runs[r].doa;
    seg.start = start[r];
    seg.end = end[r];
    seg.first_frame = runs[r].first;
    seg.last_frame = runs[r].last;
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace irs::events
