#include "irs/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "irs/audio_io.hpp"
#include "irs/dataset_io.hpp"
#include "irs/hash.hpp"

namespace irs::augment {

namespace {

double rms_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

std::uint64_t hash_doubles(std::span<const double> x, std::uint64_t h) {
  return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(x.data()), x.size() * sizeof(double)), h);
}

int round_deg(double rad) { return static_cast<int>(std::lround(rad * 180.0 / sf::kPi)); }

}  // namespace

SourceBank::SourceBank(double sample_rate, std::vector<Source> sources) : fs_(sample_rate), sources_(std::move(sources)) {
  if (!(fs_ > 0.0)) throw std::invalid_argument("SourceBank: sample rate must be > 0");
  std::map<int, std::vector<double>> per_class;
  for (auto& s : sources_) {
    if (s.audio.empty()) throw std::invalid_argument("SourceBank: source " + s.id + " is empty");
    for (double v : s.audio) {
      if (!std::isfinite(v)) throw std::invalid_argument("SourceBank: source " + s.id + " has non-finite samples");
    }
    s.rms = rms_of(s.audio);
    if (!(s.rms > 0.0)) throw std::invalid_argument("SourceBank: source " + s.id + " is silent");
    per_class[s.class_id].push_back(s.rms);
  }
  for (auto& [c, v] : per_class) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    median_rms_[c] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
}

double SourceBank::class_median_rms(int class_id) const {
  const auto it = median_rms_.find(class_id);
  if (it == median_rms_.end()) throw std::out_of_range("SourceBank: no sources of class " + std::to_string(class_id));
  return it->second;
}

std::uint64_t SourceBank::hash() const {
  std::uint64_t h = fnv1a(io::fmt_double(fs_));
  for (const auto& s : sources_) {
    h = fnv1a(s.id + "/" + std::to_string(s.class_id), h);
    h = hash_doubles(s.audio, h);
  }
  return h;
}

SourceBank SourceBank::load(const std::filesystem::path& dir) {
  const auto rows = io::read_source_index(dir / "index.csv");
  std::vector<Source> out;
  double fs = 0.0;
  for (const auto& r : rows) {
    const Signal sig = io::read_wav(dir / r.file, 1);
    if (fs == 0.0) fs = sig.sample_rate();
    if (sig.sample_rate() != fs) throw std::runtime_error("source bank: mixed sample rates at " + r.file);
    Source s;
    s.id = r.id;
    s.class_id = r.class_id;
    s.provenance = r.provenance;
    s.audio.assign(sig.channel(0).begin(), sig.channel(0).end());
    out.push_back(std::move(s));
  }
  if (out.empty()) throw std::runtime_error("source bank at " + dir.string() + " is empty");
  return SourceBank(fs, std::move(out));
}

void SourceBank::save(const std::filesystem::path& dir) const {
  std::vector<io::SourceIndexRow> rows;
  for (const auto& s : sources_) {
    Signal sig(1, s.audio.size(), fs_);
    std::copy(s.audio.begin(), s.audio.end(), sig.channel(0).begin());
    const std::string file = s.id + ".wav";
    io::write_wav(dir / file, sig);
    rows.push_back({s.id, s.class_id, s.provenance, s.rms, file});
  }
  io::write_source_index(dir / "index.csv", rows);
}

RirBank::RirBank(std::vector<RirEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.ir.channels.frames() == 0) throw std::invalid_argument("RirBank: entry " + e.id + " is empty");
    if (e.ir.sample_rate() != entries_[0].ir.sample_rate() ||
        e.ir.channels.channels() != entries_[0].ir.channels.channels()) {
      throw std::invalid_argument("RirBank: entry " + e.id + " differs in sample rate or channel count");
    }
    by_room_[e.room].push_back(i);
  }
  for (const auto& [r, v] : by_room_) rooms_.push_back(r);
}

double RirBank::sample_rate() const { return entries_.empty() ? 0.0 : entries_[0].ir.sample_rate(); }
int RirBank::channels() const { return entries_.empty() ? 0 : entries_[0].ir.channels.channels(); }

std::uint64_t RirBank::hash() const {
  std::uint64_t h = fnv1a("rir");
  for (const auto& e : entries_) {
    h = fnv1a(e.id + "/" + std::to_string(e.room), h);
    h = hash_doubles(e.ir.channels.data(), h);
  }
  return h;
}

RirBank RirBank::load(const std::filesystem::path& dir) {
  const auto rows = io::read_rir_index(dir / "index.csv");
  std::vector<RirEntry> out;
  for (const auto& r : rows) {
    RirEntry e;
    e.id = r.id;
    e.room = r.room;
    e.ir.channels = io::read_wav(dir / r.file);
    const int c = e.ir.channels.channels();
    const int order = static_cast<int>(std::lround(std::sqrt(c))) - 1;
    if ((order + 1) * (order + 1) != c) {
      throw std::runtime_error("rir bank: " + r.file + " has " + std::to_string(c) + " channels, not (N+1)^2");
    }
    e.ir.order = order;
    e.ir.room.dims = {r.dims[0], r.dims[1], r.dims[2]};
    e.ir.room.rt60 = r.rt60;
    e.ir.doa = sf::SphDirection::from_degrees(r.azimuth_deg, r.elevation_deg);
    e.ir.distance = r.distance;
    e.ir.seed = r.seed;
    out.push_back(std::move(e));
  }
  if (out.empty()) throw std::runtime_error("rir bank at " + dir.string() + " is empty");
  return RirBank(std::move(out));
}

void RirBank::save(const std::filesystem::path& dir) const {
  std::vector<io::RirIndexRow> rows;
  for (const auto& e : entries_) {
    io::RirIndexRow r;
    r.id = e.id;
    r.room = e.room;
    for (int i = 0; i < 3; ++i) r.dims[i] = e.ir.room.dims[i];
    r.rt60 = e.ir.room.rt60;
    r.azimuth_deg = e.ir.doa.azimuth * 180.0 / sf::kPi;
    r.elevation_deg = e.ir.doa.elevation * 180.0 / sf::kPi;
    r.distance = e.ir.distance;
    r.seed = e.ir.seed;
    r.file = e.id + ".wav";
    io::write_wav(dir / r.file, e.ir.channels);
    rows.push_back(r);
  }
  io::write_rir_index(dir / "index.csv", rows);
}

void FoldSpec::validate() const {
  if (fold_id < 0) throw std::invalid_argument("fold: fold_id must be >= 0");
  if (clip_count < 1) throw std::invalid_argument("fold " + std::to_string(fold_id) + ": clip_count must be >= 1");
  if (!(clip_duration_s > 0.0)) throw std::invalid_argument("fold: clip_duration_s must be > 0");
  if (events_min < 0 || events_max < events_min) throw std::invalid_argument("fold: need 0 <= events_min <= events_max");
  if (polyphony_cap < 1) throw std::invalid_argument("fold: polyphony_cap must be >= 1");
}

void AugmentConfig::validate() const {
  if (folds.empty()) throw std::invalid_argument("augment: no folds");
  std::set<int> ids;
  for (const auto& f : folds) {
    f.validate();
    if (!ids.insert(f.fold_id).second) throw std::invalid_argument("augment: duplicate fold id " + std::to_string(f.fold_id));
  }
  if (!(gain_db_min <= gain_db_max)) throw std::invalid_argument("augment: gain_db_min > gain_db_max");
  if (!(snr_db_min <= snr_db_max)) throw std::invalid_argument("augment: snr_db_min > snr_db_max");
  if (!(headroom_db >= 0.0)) throw std::invalid_argument("augment: headroom_db must be >= 0");
  if (!(label_frame_s > 0.0)) throw std::invalid_argument("augment: label_frame_s must be > 0");
}

MixturePlan sample_plan(std::uint64_t seed, const std::string& clip_id, const SourceBank& sources,
                        const RirBank& rirs, const FoldSpec& fold, const AugmentConfig& cfg) {
  fold.validate();
  cfg.validate();
  if (sources.empty()) throw std::invalid_argument("sample_plan: source bank is empty");
  if (rirs.empty()) throw std::invalid_argument("sample_plan: RIR bank is empty");
  if (sources.sample_rate() != rirs.sample_rate()) {
    throw std::invalid_argument("sample_plan: source bank at " + io::fmt_double(sources.sample_rate()) +
                                " Hz, RIR bank at " + io::fmt_double(rirs.sample_rate()) + " Hz");
  }
  const double fs = sources.sample_rate();
  std::mt19937_64 rng(seed);
  auto uniform_index = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  MixturePlan plan;
  plan.clip_id = clip_id;
  plan.seed = seed;
  plan.duration = static_cast<std::size_t>(std::llround(fold.clip_duration_s * fs));
  const auto frame = static_cast<std::size_t>(std::llround(cfg.label_frame_s * fs));
  const int n_frames = static_cast<int>((plan.duration + frame - 1) / frame);
  plan.room = rirs.rooms()[uniform_index(rirs.rooms().size())];
  const auto& room_entries = rirs.entries_of(plan.room);

  const int n_events = std::uniform_int_distribution<int>(fold.events_min, fold.events_max)(rng);
  std::vector<int> load(n_frames, 0);
  constexpr int kDraws = 50;
  for (int e = 0; e < n_events; ++e) {
    const std::size_t src = uniform_index(sources.size());
    const std::size_t rir = room_entries[uniform_index(room_entries.size())];
    const double gain_db = std::uniform_real_distribution<double>(cfg.gain_db_min, cfg.gain_db_max)(rng);
    const std::size_t len = sources.at(src).audio.size();
    const std::size_t rendered = len + rirs.at(rir).ir.length() - 1;
    const int active = static_cast<int>((len + frame - 1) / frame);
    if (rendered > plan.duration) continue;
    const int last_onset = static_cast<int>((plan.duration - rendered) / frame);
    for (int d = 0; d < kDraws; ++d) {
      const int o = std::uniform_int_distribution<int>(0, last_onset)(rng);
      const int end = std::min(o + active, n_frames);
      bool fits = true;
      for (int f = o; f < end && fits; ++f) fits = load[f] < fold.polyphony_cap;
      if (!fits) continue;
      for (int f = o; f < end; ++f) ++load[f];
      plan.events.push_back({src, rir, static_cast<std::size_t>(o) * frame, gain_db, o, end, 0});
      break;
    }
  }
  // Lowest free track in onset order uses no more tracks than the peak load.
  std::stable_sort(plan.events.begin(), plan.events.end(),
                   [](const PlannedEvent& a, const PlannedEvent& b) { return a.first_frame < b.first_frame; });
  for (std::size_t i = 0; i < plan.events.size(); ++i) {
    std::set<int> busy;
    for (std::size_t j = 0; j < i; ++j) {
      if (plan.events[j].end_frame > plan.events[i].first_frame) busy.insert(plan.events[j].track);
    }
    int track = 0;
    while (busy.count(track)) ++track;
    plan.events[i].track = track;
  }
  if (cfg.noise) {
    NoisePlan n;
    n.seed = rng();
    n.snr_db = std::uniform_real_distribution<double>(cfg.snr_db_min, cfg.snr_db_max)(rng);
    plan.noise = n;
  }
  return plan;
}

RenderedClip render_clip(const MixturePlan& plan, const SourceBank& sources, const RirBank& rirs,
                         const AugmentConfig& cfg) {
  const double fs = rirs.sample_rate();
  const int c = rirs.channels();
  RenderedClip out;
  out.audio = Signal(c, plan.duration, fs);
  std::vector<char> active(plan.duration, 0);
  const double ref_gain = 4.0 * sf::kPi;
  for (const auto& ev : plan.events) {
    if (ev.source >= sources.size() || ev.rir >= rirs.size()) {
      throw std::out_of_range("render_clip: " + plan.clip_id + " references an entry outside the banks");
    }
    const auto& src = sources.at(ev.source);
    const auto& rir = rirs.at(ev.rir);
    const double g = ref_gain * std::pow(10.0, ev.gain_db / 20.0) * sources.class_median_rms(src.class_id) / src.rms;
    std::vector<double> scaled(src.audio.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = g * src.audio[i];
    const Signal wet = dsp::fft_convolve(scaled, rir.ir.channels);
    if (ev.onset + wet.frames() > plan.duration) {
      throw std::invalid_argument("render_clip: " + plan.clip_id + " event at " + std::to_string(ev.onset) +
                                  " overruns the clip");
    }
    for (int ch = 0; ch < c; ++ch) {
      auto dst = out.audio.channel(ch);
      auto w = wet.channel(ch);
      for (std::size_t i = 0; i < w.size(); ++i) dst[ev.onset + i] += w[i];
    }
    std::fill(active.begin() + static_cast<std::ptrdiff_t>(ev.onset),
              active.begin() + static_cast<std::ptrdiff_t>(ev.onset + src.audio.size()), 1);
    const auto& d = rir.ir.doa;
    int az = round_deg(d.azimuth);
    if (az >= 180) az -= 360;
    if (az < -180) az += 360;
    const int el = std::clamp(round_deg(d.elevation), -90, 90);
    for (int f = ev.first_frame; f < ev.end_frame; ++f) out.labels.push_back({f, src.class_id, ev.track, az, el});
  }

  if (plan.noise) {
    double p = 0.0;
    std::size_t n_active = 0;
    auto w = out.audio.channel(0);
    for (std::size_t i = 0; i < plan.duration; ++i) {
      if (active[i]) {
        p += w[i] * w[i];
        ++n_active;
      }
    }
    if (n_active > 0 && p > 0.0) {
      const double sigma = std::sqrt(p / n_active / std::pow(10.0, plan.noise->snr_db / 10.0));
      const double hi = std::pow(10.0, cfg.higher_order_noise_db / 20.0);
      std::mt19937_64 rng(plan.noise->seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int ch = 0; ch < c; ++ch) {
        const double s = ch == 0 ? sigma : sigma * hi;
        for (auto& v : out.audio.channel(ch)) v += s * normal(rng);
      }
    }
  }

  double peak = 0.0;
  for (double v : out.audio.data()) peak = std::max(peak, std::abs(v));
  const double ceiling = std::pow(10.0, -cfg.headroom_db / 20.0);
  if (peak > ceiling) {
    const double s = ceiling / peak;
    for (auto& v : out.audio.data()) v *= s;
    out.trim_db = 20.0 * std::log10(s);
  }
  std::sort(out.labels.begin(), out.labels.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame_index, a.track_id) < std::tie(b.frame_index, b.track_id);
  });
  return out;
}

std::string clip_stem(int fold_id, int room, int mix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "fold%d_room%d_mix%03d", fold_id, room, mix);
  return buf;
}

namespace {

std::uint64_t file_hash(const std::filesystem::path& p) {
  const std::string s = io::read_text(p);
  return fnv1a(s);
}

bool manifest_matches(const std::filesystem::path& path, const nlohmann::json& want, const std::filesystem::path& dir) {
  if (!std::filesystem::exists(path)) return false;
  nlohmann::json have;
  try {
    have = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  for (const char* key : {"fold", "master_seed", "source_bank", "rir_bank", "config"}) {
    if (!have.contains(key) || have[key] != want[key]) return false;
  }
  if (!have.contains("clips")) return false;
  for (const auto& clip : have["clips"]) {
    for (const char* kind : {"wav", "csv"}) {
      const auto f = dir / clip[kind].get<std::string>();
      if (!std::filesystem::exists(f) || hex64(file_hash(f)) != clip[std::string(kind) + "_fnv1a"]) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<FoldOutcome> generate_folds(const std::filesystem::path& out_dir, const SourceBank& sources,
                                        const RirBank& rirs, const AugmentConfig& cfg, std::uint64_t master_seed,
                                        const std::string& config_fingerprint, dsp::Exec exec) {
  cfg.validate();
  if (sources.empty() || rirs.empty()) throw std::invalid_argument("generate_folds: banks must be nonempty");
  const std::string src_hash = hex64(sources.hash());
  const std::string rir_hash = hex64(rirs.hash());
  std::vector<FoldOutcome> outcomes;
  for (const auto& fold : cfg.folds) {
    const auto manifest_path = out_dir / ("manifest_fold" + std::to_string(fold.fold_id) + ".json");
    nlohmann::json manifest = {{"fold", fold.fold_id},
                               {"master_seed", std::to_string(master_seed)},
                               {"source_bank", src_hash},
                               {"rir_bank", rir_hash},
                               {"config", config_fingerprint}};
    FoldOutcome outcome;
    outcome.fold_id = fold.fold_id;
    if (manifest_matches(manifest_path, manifest, out_dir)) {
      for (const auto& clip : nlohmann::json::parse(io::read_text(manifest_path))["clips"]) {
        outcome.clips.push_back(clip["id"].get<std::string>());
      }
      outcome.skipped = true;
      outcomes.push_back(std::move(outcome));
      continue;
    }
    std::filesystem::remove(manifest_path);

    const int n = fold.clip_count;
    std::vector<nlohmann::json> records(n);
    std::vector<std::string> errors(n);
    auto run = [&](int i) {
      try {
        char key[64];
        std::snprintf(key, sizeof key, "fold%d/mix%03d", fold.fold_id, i + 1);
        const std::uint64_t seed = derive_seed(master_seed, key);
        const auto plan = sample_plan(seed, key, sources, rirs, fold, cfg);
        const auto clip = render_clip(plan, sources, rirs, cfg);
        const std::string stem = clip_stem(fold.fold_id, plan.room + 1, i + 1);
        const std::string wav = "foa/" + stem + ".wav";
        const std::string csv = "metadata/" + stem + ".csv";
        const auto bytes = io::encode_wav(clip.audio);
        io::write_text_atomic(out_dir / wav, std::string(bytes.begin(), bytes.end()));
        const std::string meta = io::format_metadata(clip.labels);
        io::write_text_atomic(out_dir / csv, meta);
        nlohmann::json rec = {{"id", stem},
                              {"seed", std::to_string(seed)},
                              {"room", plan.room},
                              {"events", plan.events.size()},
                              {"trim_db", clip.trim_db},
                              {"wav", wav},
                              {"csv", csv},
                              {"wav_fnv1a", hex64(fnv1a(bytes))},
                              {"csv_fnv1a", hex64(fnv1a(meta))}};
        if (plan.noise) rec["snr_db"] = plan.noise->snr_db;
        records[i] = std::move(rec);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    };
    if (exec == dsp::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (int i = 0; i < n; ++i) run(i);
    } else {
      for (int i = 0; i < n; ++i) run(i);
    }
    for (int i = 0; i < n; ++i) {
      if (!errors[i].empty()) {
        throw std::runtime_error("fold " + std::to_string(fold.fold_id) + " clip " + std::to_string(i + 1) + ": " +
                                 errors[i]);
      }
    }
    manifest["clips"] = records;
    for (const auto& r : records) outcome.clips.push_back(r["id"].get<std::string>());
    io::write_text_atomic(manifest_path, manifest.dump(2) + "\n");
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace irs::augment
