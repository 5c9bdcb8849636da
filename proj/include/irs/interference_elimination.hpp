// Two-stage purge of segments contaminated by interference: a detector
// pass (segments the detector cannot find are dropped) followed by the
// eigenvalue pass (segments whose focused bins are mostly multi-source are
// dropped).

#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "irs/array_model.hpp"
#include "irs/dsp.hpp"
#include "irs/event_extraction.hpp"

namespace irs::elim {

struct EliminationConfig {
  double alpha = 0.3;
  double beta = 0.4;
  double f_min = 100.0;
  double f_max = 4000.0;
  std::string detector = "accept-all";
  double detect_keep_fraction = 0.5;
  int frame_len = 480;
  int hop = 240;
  int min_frames = 3;  // STFT frames
  /// Convention of the segment channels. SN3D input is rescaled to N3D
  /// before the covariance so that every order carries equal weight.
  array::ShConvention input_convention = array::ShConvention::sn3d;

  void validate(double sample_rate) const;
  bool operator==(const EliminationConfig&) const = default;
};

/// Per-frame class sets over a segment's label frames.
using Detections = std::vector<std::set<int>>;

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;
  /// One entry per label frame of the segment (seg.run_frames()).
  virtual Detections detect(const events::EventSegment& seg) const = 0;
  /// Whether detect() may run concurrently.
  virtual bool thread_safe() const { return true; }
};

class AcceptAllDetector final : public Detector {
 public:
  std::string name() const override { return "accept-all"; }
  Detections detect(const events::EventSegment& seg) const override;
};

class RejectAllDetector final : public Detector {
 public:
  std::string name() const override { return "reject-all"; }
  Detections detect(const events::EventSegment& seg) const override;
};

/// Frame-level class sets exported by an external model, rows
/// `clip_id,frame_index,class_id`.
class PredictionsFileDetector final : public Detector {
 public:
  explicit PredictionsFileDetector(std::map<std::pair<std::string, int>, std::set<int>> table);
  static PredictionsFileDetector load(const std::string& path);
  std::string name() const override { return "predictions"; }
  Detections detect(const events::EventSegment& seg) const override;

 private:
  std::map<std::pair<std::string, int>, std::set<int>> table_;
};

/// Reports the labelled class in every label frame whose W-channel energy is
/// within threshold_db of the segment's loudest frame.
class EnergyThresholdDetector final : public Detector {
 public:
  EnergyThresholdDetector(double threshold_db, double label_frame_s);
  std::string name() const override { return "energy-threshold"; }
  Detections detect(const events::EventSegment& seg) const override;

 private:
  double threshold_db_;
  double label_frame_s_;
};

/// "accept-all", "reject-all", "energy-threshold[:<dB>]" or
/// "predictions:<path>".
std::unique_ptr<Detector> make_detector(const std::string& spec, double label_frame_s = 0.1);

/// K_overlap / K_focus over bins with f_min <= f <= f_max, using one
/// covariance per bin over the whole signal.
double overlap_ratio(const Signal& audio, const EliminationConfig& cfg, dsp::Exec exec = dsp::Exec::parallel);
double overlap_ratio(const events::EventSegment& seg, const EliminationConfig& cfg,
                     dsp::Exec exec = dsp::Exec::parallel);

struct Partition {
  std::vector<events::EventSegment> kept;
  std::vector<events::EventSegment> eliminated;
};

/// Eliminates segments with overlap_ratio > beta; stores the ratio and the
/// eigen verdict on every segment. Order-stable.
Partition eigenvalue_eliminate(std::vector<events::EventSegment> segments, const EliminationConfig& cfg,
                               dsp::Exec exec = dsp::Exec::parallel);

/// Keeps a segment iff its class is detected in at least
/// detect_keep_fraction of its label frames. Order-stable. A detector
/// exception is rethrown as std::runtime_error naming the segment.
Partition detection_eliminate(std::vector<events::EventSegment> segments, const Detector& detector,
                              const EliminationConfig& cfg);

struct EliminationReport {
  int extracted = 0;
  int detection_eliminated = 0;
  int eigen_eliminated = 0;
  int kept = 0;
  struct Row {
    std::string id;
    int class_id;
    std::optional<bool> detection_kept;
    std::optional<bool> eigen_kept;
    std::optional<double> overlap_ratio;
  };
  std::vector<Row> rows;

  std::string to_text() const;
};

struct EliminationResult {
  std::vector<events::EventSegment> kept;
  std::vector<events::EventSegment> eliminated;
  EliminationReport report;
};

/// Detection first, then eigenvalue elimination on the survivors.
EliminationResult run_elimination(std::vector<events::EventSegment> segments, const Detector& detector,
                                  const EliminationConfig& cfg, dsp::Exec exec = dsp::Exec::parallel);

}  // namespace irs::elim
