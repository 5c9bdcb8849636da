// Fold generation: enhanced sources and simulated SH RIRs are drawn
// independently, convolved, mixed into clip-length scenes and written with
// labels in the dataset layout.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irs/dsp.hpp"
#include "irs/event_extraction.hpp"
#include "irs/room_acoustics.hpp"

namespace irs::augment {

struct Source {
  std::string id;
  int class_id = 0;
  std::string provenance;
  std::vector<double> audio;
  double rms = 0.0;
};

class SourceBank {
 public:
  /// Rejects empty, silent or non-finite sources.
  SourceBank(double sample_rate, std::vector<Source> sources);

  double sample_rate() const { return fs_; }
  std::size_t size() const { return sources_.size(); }
  bool empty() const { return sources_.empty(); }
  const Source& at(std::size_t i) const { return sources_.at(i); }
  double class_median_rms(int class_id) const;
  std::uint64_t hash() const;

  /// index.csv plus one mono wav per source.
  static SourceBank load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

 private:
  double fs_;
  std::vector<Source> sources_;
  std::map<int, double> median_rms_;
};

struct RirEntry {
  std::string id;
  int room = 0;
  room::ShIR ir;
};

class RirBank {
 public:
  /// All entries must share sample rate and channel count.
  explicit RirBank(std::vector<RirEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const RirEntry& at(std::size_t i) const { return entries_.at(i); }
  double sample_rate() const;
  int channels() const;
  /// Distinct room ids, ascending, and the entries of each.
  const std::vector<int>& rooms() const { return rooms_; }
  const std::vector<std::size_t>& entries_of(int room) const { return by_room_.at(room); }
  std::uint64_t hash() const;

  static RirBank load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

 private:
  std::vector<RirEntry> entries_;
  std::vector<int> rooms_;
  std::map<int, std::vector<std::size_t>> by_room_;
};

struct FoldSpec {
  int fold_id = 7;
  int clip_count = 100;
  double clip_duration_s = 60.0;
  int events_min = 15;  // events per clip, uniform
  int events_max = 30;
  int polyphony_cap = 3;

  void validate() const;
  bool operator==(const FoldSpec&) const = default;
};

struct AugmentConfig {
  std::vector<FoldSpec> folds{FoldSpec{7}, FoldSpec{8}};
  double gain_db_min = -6.0;  // around the class-median RMS
  double gain_db_max = 6.0;
  bool noise = true;
  double snr_db_min = 6.0;
  double snr_db_max = 30.0;
  double higher_order_noise_db = -3.0;  // channels n >= 1 relative to W
  double headroom_db = 1.0;             // peak ceiling below full scale
  double label_frame_s = 0.1;

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

struct PlannedEvent {
  std::size_t source = 0;  // bank indices
  std::size_t rir = 0;
  std::size_t onset = 0;  // samples, a multiple of the label frame
  double gain_db = 0.0;
  int first_frame = 0;  // label frames [first_frame, end_frame)
  int end_frame = 0;
  int track = 0;
};

struct NoisePlan {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
};

struct MixturePlan {
  std::string clip_id;
  std::uint64_t seed = 0;
  int room = 0;
  std::size_t duration = 0;  // samples
  std::vector<PlannedEvent> events;
  std::optional<NoisePlan> noise;
};

/// One room per clip; every event draws a source uniformly from the whole
/// bank and an RIR uniformly from that room. Onsets sit on the label-frame
/// grid and never push the frame polyphony above the cap; an event that
/// finds no slot after a bounded number of draws is dropped.
MixturePlan sample_plan(std::uint64_t seed, const std::string& clip_id, const SourceBank& sources,
                        const RirBank& rirs, const FoldSpec& fold, const AugmentConfig& cfg);

struct RenderedClip {
  Signal audio;
  std::vector<events::LabelFrame> labels;
  double trim_db = 0.0;  // gain applied to respect the headroom, <= 0
};

/// Each event is the gain-scaled source convolved with the RIR, times 4*pi so
/// a source at 1 m keeps roughly its level in W.
RenderedClip render_clip(const MixturePlan& plan, const SourceBank& sources, const RirBank& rirs,
                         const AugmentConfig& cfg);

/// Directory layout under out_dir: foa/foldX_roomY_mixZZZ.wav,
/// metadata/foldX_roomY_mixZZZ.csv and manifest_foldX.json, the manifest
/// written last. A fold whose manifest matches seed, bank hashes and
/// config_fingerprint and whose files hash as recorded is skipped.
struct FoldOutcome {
  int fold_id = 0;
  bool skipped = false;
  std::vector<std::string> clips;  // file stems
};

std::vector<FoldOutcome> generate_folds(const std::filesystem::path& out_dir, const SourceBank& sources,
                                        const RirBank& rirs, const AugmentConfig& cfg, std::uint64_t master_seed,
                                        const std::string& config_fingerprint,
                                        dsp::Exec exec = dsp::Exec::parallel);

std::string clip_stem(int fold_id, int room, int mix);

}  // namespace irs::augment
