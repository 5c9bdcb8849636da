#include "irs/interference_elimination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irs::elim {

void EliminationConfig::validate(double sample_rate) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("elimination: alpha must be in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("elimination: beta must be in (0, 1)");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= 0.5 * sample_rate)) {
    throw std::invalid_argument("elimination: need 0 <= f_min < f_max <= Nyquist");
  }
  if (!(detect_keep_fraction > 0.0 && detect_keep_fraction <= 1.0)) {
    throw std::invalid_argument("elimination: detect_keep_fraction must be in (0, 1]");
  }
  if (frame_len < 2 || hop < 1 || hop > frame_len) {
    throw std::invalid_argument("elimination: need 1 <= hop <= frame_len");
  }
  if (min_frames < 1) throw std::invalid_argument("elimination: min_frames must be >= 1");
}

Detections AcceptAllDetector::detect(const events::EventSegment& seg) const {
  return Detections(seg.run_frames(), std::set<int>{seg.class_id});
}

Detections RejectAllDetector::detect(const events::EventSegment& seg) const {
  return Detections(seg.run_frames());
}

PredictionsFileDetector::PredictionsFileDetector(std::map<std::pair<std::string, int>, std::set<int>> table)
    : table_(std::move(table)) {}

PredictionsFileDetector PredictionsFileDetector::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file " + path);
  std::map<std::pair<std::string, int>, std::set<int>> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string clip, frame_s, class_s, extra;
    if (!std::getline(ss, clip, ',') || !std::getline(ss, frame_s, ',') || !std::getline(ss, class_s, ',') ||
        std::getline(ss, extra, ',')) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected clip_id,frame_index,class_id");
    }
    try {
      std::size_t p1 = 0, p2 = 0;
      const int frame = std::stoi(frame_s, &p1);
      const int cls = std::stoi(class_s, &p2);
      if (p1 != frame_s.size() || p2 != class_s.size() || frame < 0 || cls < 0) throw std::invalid_argument("");
      table[{clip, frame}].insert(cls);
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": bad frame or class in '" + line + "'");
    }
  }
  return PredictionsFileDetector(std::move(table));
}

Detections PredictionsFileDetector::detect(const events::EventSegment& seg) const {
  Detections out(seg.run_frames());
  for (int f = seg.first_frame; f < seg.last_frame; ++f) {
    auto it = table_.find({seg.source_clip, f});
    if (it != table_.end()) out[f - seg.first_frame] = it->second;
  }
  return out;
}

EnergyThresholdDetector::EnergyThresholdDetector(double threshold_db, double label_frame_s)
    : threshold_db_(threshold_db), label_frame_s_(label_frame_s) {
  if (!(threshold_db > 0.0)) throw std::invalid_argument("energy-threshold: threshold must be > 0 dB");
  if (!(label_frame_s > 0.0)) throw std::invalid_argument("energy-threshold: label frame must be > 0 s");
}

Detections EnergyThresholdDetector::detect(const events::EventSegment& seg) const {
  const std::size_t fl = static_cast<std::size_t>(std::lround(label_frame_s_ * seg.audio.sample_rate()));
  const int n = seg.run_frames();
  std::vector<double> energy(n, 0.0);
  if (seg.audio.channels() > 0 && fl > 0) {
    auto w = seg.audio.channel(0);
    for (int k = 0; k < n; ++k) {
      const std::size_t a = (static_cast<std::size_t>(seg.first_frame + k)) * fl;
      const std::size_t b = a + fl;
      for (std::size_t i = std::max(a, seg.start); i < std::min(b, seg.end); ++i) {
        const double v = w[i - seg.start];
        energy[k] += v * v;
      }
    }
  }
  const double peak = n > 0 ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  Detections out(n);
  const double floor = peak * std::pow(10.0, -threshold_db_ / 10.0);
  for (int k = 0; k < n; ++k) {
    if (peak > 0.0 && energy[k] >= floor) out[k].insert(seg.class_id);
  }
  return out;
}

std::unique_ptr<Detector> make_detector(const std::string& spec, double label_frame_s) {
  if (spec == "accept-all") return std::make_unique<AcceptAllDetector>();
  if (spec == "reject-all") return std::make_unique<RejectAllDetector>();
  if (spec.rfind("energy-threshold", 0) == 0) {
    double db = 30.0;
    if (spec.size() > 16) {
      if (spec[16] != ':') throw std::invalid_argument("unknown detector '" + spec + "'");
      db = std::stod(spec.substr(17));
    }
    return std::make_unique<EnergyThresholdDetector>(db, label_frame_s);
  }
  if (spec.rfind("predictions:", 0) == 0) {
    return std::make_unique<PredictionsFileDetector>(PredictionsFileDetector::load(spec.substr(12)));
  }
  throw std::invalid_argument("unknown detector '" + spec +
                              "' (expected accept-all, reject-all, energy-threshold[:dB], predictions:<path>)");
}

double overlap_ratio(const Signal& audio, const EliminationConfig& cfg, dsp::Exec exec) {
  cfg.validate(audio.sample_rate());
  if (audio.frames() < static_cast<std::size_t>(cfg.frame_len) ||
      static_cast<int>((audio.frames() - cfg.frame_len) / cfg.hop) + 1 < cfg.min_frames) {
    throw std::invalid_argument("overlap_ratio: segment of " + std::to_string(audio.frames()) +
                                " samples is shorter than " + std::to_string(cfg.min_frames) + " STFT frames");
  }
  Signal weighted = audio;
  if (cfg.input_convention == array::ShConvention::sn3d) {
    for (int c = 0; c < weighted.channels(); ++c) {
      const double g = std::sqrt(2.0 * array::acn_degree(c) + 1.0);
      if (g != 1.0) {
        for (double& v : weighted.channel(c)) v *= g;
      }
    }
  }
  const auto spec = dsp::stft(weighted, cfg.frame_len, cfg.hop);
  std::vector<int> focus;
  for (int f = 0; f < spec.bins; ++f) {
    const double hz = spec.bin_frequency(f);
    if (hz >= cfg.f_min && hz <= cfg.f_max) focus.push_back(f);
  }
  if (focus.empty()) throw std::invalid_argument("overlap_ratio: no bins in [f_min, f_max]");
  const auto cov = dsp::spatial_covariance(spec, 0, spec.frames, exec);
  std::vector<char> overlapped(focus.size(), 0);
  auto eval = [&](std::size_t i) {
    const auto gamma = dsp::normalized_eigenvalues(cov.values[focus[i]]);
    int count = 0;
    for (Eigen::Index c = 0; c < gamma.size(); ++c) count += gamma(c) > cfg.alpha ? 1 : 0;
    overlapped[i] = count >= 2 ? 1 : 0;
  };
  const long long n = static_cast<long long>(focus.size());
  if (exec == dsp::Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) eval(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < n; ++i) eval(static_cast<std::size_t>(i));
  }
  int k_overlap = 0;
  for (char o : overlapped) k_overlap += o;
  return static_cast<double>(k_overlap) / static_cast<double>(focus.size());
}

double overlap_ratio(const events::EventSegment& seg, const EliminationConfig& cfg, dsp::Exec exec) {
  try {
    return overlap_ratio(seg.audio, cfg, exec);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("segment " + seg.id + ": " + e.what());
  }
}

Partition eigenvalue_eliminate(std::vector<events::EventSegment> segments, const EliminationConfig& cfg,
                               dsp::Exec exec) {
  Partition out;
  for (auto& seg : segments) {
    const double r = overlap_ratio(seg, cfg, exec);
    seg.overlap_ratio = r;
    const bool keep = !(r > cfg.beta);
    seg.verdicts.eigen_kept = keep;
    (keep ? out.kept : out.eliminated).push_back(std::move(seg));
  }
  return out;
}

Partition detection_eliminate(std::vector<events::EventSegment> segments, const Detector& detector,
                              const EliminationConfig& cfg) {
  if (!(cfg.detect_keep_fraction > 0.0 && cfg.detect_keep_fraction <= 1.0)) {
    throw std::invalid_argument("detection_eliminate: detect_keep_fraction must be in (0, 1]");
  }
  Partition out;
  for (auto& seg : segments) {
    Detections det;
    try {
      det = detector.detect(seg);
    } catch (const std::exception& e) {
      throw std::runtime_error("detector " + detector.name() + " failed on segment " + seg.id + ": " + e.what());
    }
    if (static_cast<int>(det.size()) != seg.run_frames()) {
      throw std::runtime_error("detector " + detector.name() + " returned " + std::to_string(det.size()) +
                               " frames for segment " + seg.id + " (expected " + std::to_string(seg.run_frames()) +
                               ")");
    }
    int hits = 0;
    for (const auto& s : det) hits += s.count(seg.class_id) ? 1 : 0;
    const int n = seg.run_frames();
    const bool keep = n > 0 && static_cast<double>(hits) >= cfg.detect_keep_fraction * n - 1e-9;
    seg.verdicts.detection_kept = keep;
    (keep ? out.kept : out.eliminated).push_back(std::move(seg));
  }
  return out;
}

std::string EliminationReport::to_text() const {
  std::ostringstream os;
  os << "extracted " << extracted << "\n";
  os << "detection-eliminated " << detection_eliminated << "\n";
  os << "eigen-eliminated " << eigen_eliminated << "\n";
  os << "kept " << kept << "\n";
  os << "\n";
  os << "segment_id\tclass\tdetection\teigen\toverlap_ratio\n";
  auto verdict = [](const std::optional<bool>& v) { return v ? (*v ? "kept" : "eliminated") : "-"; };
  for (const auto& r : rows) {
    char ratio[32] = "-";
    if (r.overlap_ratio) std::snprintf(ratio, sizeof ratio, "%.4f", *r.overlap_ratio);
    os << r.id << '\t' << r.class_id << '\t' << verdict(r.detection_kept) << '\t' << verdict(r.eigen_kept) << '\t'
       << ratio << "\n";
  }
  return os.str();
}

EliminationResult run_elimination(std::vector<events::EventSegment> segments, const Detector& detector,
                                  const EliminationConfig& cfg, dsp::Exec exec) {
  EliminationResult res;
  res.report.extracted = static_cast<int>(segments.size());
  auto det = detection_eliminate(std::move(segments), detector, cfg);
  res.report.detection_eliminated = static_cast<int>(det.eliminated.size());
  auto eig = eigenvalue_eliminate(std::move(det.kept), cfg, exec);
  res.report.eigen_eliminated = static_cast<int>(eig.eliminated.size());
  res.report.kept = static_cast<int>(eig.kept.size());
  res.kept = std::move(eig.kept);
  res.eliminated = std::move(det.eliminated);
  for (auto& s : eig.eliminated) res.eliminated.push_back(std::move(s));
  std::vector<const events::EventSegment*> all;
  for (const auto& s : res.kept) all.push_back(&s);
  for (const auto& s : res.eliminated) all.push_back(&s);
  std::sort(all.begin(), all.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto* s : all) {
    res.report.rows.push_back({s->id, s->class_id, s->verdicts.detection_kept, s->verdicts.eigen_kept, s->overlap_ratio});
  }
  return res;
}

}  // namespace irs::elim
