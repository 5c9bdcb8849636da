#include "irs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "irs/audio_io.hpp"
#include "irs/dataset_io.hpp"
#include "irs/hash.hpp"

namespace irs::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string file_fnv(const fs::path& p) { return hex64(fnv1a(io::read_text(p))); }

std::string key_of(const json& inputs, const std::string& id) { return hex64(fnv1a(config::fingerprint(inputs) + "#" + id)); }

void say(const Context& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << "\n";
}

std::string numbered(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

}  // namespace

BankManifest BankManifest::load(const fs::path& dir) {
  BankManifest m;
  m.dir_ = dir;
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) return m;
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception&) {
    return m;  // unreadable manifest: everything is rebuilt
  }
  const json entries = j.value("entries", json::object());
  for (const auto& [id, e] : entries.items()) {
    Entry entry;
    entry.key = e.value("key", "");
    const json files = e.value("files", json::object());
    for (const auto& [f, h] : files.items()) entry.files[f] = h.get<std::string>();
    m.entries_[id] = std::move(entry);
  }
  return m;
}

bool BankManifest::up_to_date(const std::string& id, const std::string& key) const {
  const auto it = entries_.find(id);
  if (it == entries_.end() || it->second.key != key) return false;
  for (const auto& [f, h] : it->second.files) {
    const auto p = dir_ / f;
    if (!fs::exists(p) || file_fnv(p) != h) return false;
  }
  return true;
}

void BankManifest::set(const std::string& id, const std::string& key, const std::vector<std::string>& files) {
  Entry e;
  e.key = key;
  for (const auto& f : files) e.files[f] = file_fnv(dir_ / f);
  entries_[id] = std::move(e);
}

void BankManifest::erase(const std::string& id) { entries_.erase(id); }

void BankManifest::save() const {
  json entries = json::object();
  for (const auto& [id, e] : entries_) entries[id] = {{"key", e.key}, {"files", e.files}};
  io::write_text_atomic(dir_ / "manifest.json", json{{"entries", entries}}.dump(1) + "\n");
}

array::ArraySpec load_array(const config::PipelineConfig& cfg) {
  if (cfg.array_file.empty()) return array::default_em32(cfg.sample_rate);
  return array::load_array_file(cfg.array_file, cfg.sample_rate);
}

RoomDraw draw_room(std::uint64_t seed, const config::RoomSampling& s, int placements, int attempt) {
  s.validate();
  RoomDraw d;
  std::mt19937_64 base(seed);
  d.room.rt60 = std::uniform_real_distribution<double>(s.rt60_min, s.rt60_max)(base);
  d.room.speed_of_sound = s.speed_of_sound;
  d.room.absorption_model = s.absorption;
  std::mt19937_64 rng(derive_seed(seed, "attempt/" + std::to_string(attempt)));
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  for (int i = 0; i < 3; ++i) d.room.dims[i] = u(s.dims_min[i], s.dims_max[i]);
  const double m = s.wall_margin;
  auto inside = [&](const Eigen::Vector3d& p) {
    for (int i = 0; i < 3; ++i) {
      if (p[i] < m || p[i] > d.room.dims[i] - m) return false;
    }
    return true;
  };
  for (int p = 0; p < placements; ++p) {
    bool done = false;
    for (int tries = 0; tries < 10000 && !done; ++tries) {
      room::Placement pl;
      for (int i = 0; i < 3; ++i) pl.array_pos[i] = u(m, d.room.dims[i] - m);
      const double dist = u(s.distance_min, s.distance_max);
      const double az = u(-sf::kPi, sf::kPi);
      const double el = std::asin(u(-1.0, 1.0));
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      pl.source_pos = pl.array_pos + dist * dir;
      if (!inside(pl.source_pos)) continue;
      d.placements.push_back(pl);
      done = true;
    }
    if (!done) throw std::runtime_error("draw_room: cannot fit the source distance range inside the wall margin");
  }
  return d;
}

StageResult simulate_rirs(const Context& ctx, int count) {
  if (count < 1) throw std::invalid_argument("simulate-rir: count must be >= 1, got " + std::to_string(count));
  const auto& cfg = ctx.cfg;
  cfg.validate();
  const auto arr = load_array(cfg);
  const array::Encoder encoder(arr, cfg.encoding);
  const int ppr = cfg.rooms.placements_per_room;
  const int n_rooms = (count + ppr - 1) / ppr;
  const fs::path dir = ctx.rir_dir();
  fs::create_directories(dir);
  auto manifest = BankManifest::load(dir);
  const json inputs = {{"rooms", config::to_json(cfg)["rooms"]},
                       {"encoding", config::to_json(cfg)["encoding"]},
                       {"array", hex64(fnv1a(array::to_string(cfg.encoding.export_convention) + arr.name +
                                             io::fmt_double(arr.radius) + std::to_string(arr.num_mics())))},
                       {"array_file", cfg.array_file.empty() ? std::string() : file_fnv(cfg.array_file)},
                       {"sample_rate", cfg.sample_rate},
                       {"master_seed", cfg.master_seed}};

  StageResult res;
  std::vector<io::RirIndexRow> all_rows;
  for (int r = 0; r < n_rooms; ++r) {
    const int n_place = std::min(ppr, count - r * ppr);
    const std::string room_id = numbered("room", r);
    const std::string key = key_of(inputs, room_id + "/" + std::to_string(n_place));
    const std::string room_index = "rooms/" + room_id + ".csv";
    if (manifest.up_to_date(room_id, key)) {
      const auto rows = io::read_rir_index(dir / room_index);
      all_rows.insert(all_rows.end(), rows.begin(), rows.end());
      res.skipped += n_place;
      continue;
    }
    const std::uint64_t seed = derive_seed(cfg.master_seed, room_id);
    std::vector<augment::RirEntry> entries;
    std::string last_error;
    for (int attempt = 0; attempt < 100 && entries.empty(); ++attempt) {
      const auto d = draw_room(seed, cfg.rooms, n_place, attempt);
      try {
        room::rt60_to_absorption(d.room);
      } catch (const std::domain_error& e) {
        last_error = e.what();
        continue;
      }
      try {
        room::SynthesisOptions opts;
        opts.exec = ctx.exec;
        const std::size_t len = room::min_rir_length(d.room, cfg.sample_rate);
        std::vector<augment::RirEntry> tmp;
        for (int p = 0; p < n_place; ++p) {
          augment::RirEntry e;
          e.id = room_id + "_" + numbered("rir", p);
          e.room = r;
          e.ir = room::simulate_sh_rir(d.room, d.placements[p], encoder, len, opts);
          e.ir.seed = seed;
          tmp.push_back(std::move(e));
        }
        entries = std::move(tmp);
      } catch (const std::domain_error& e) {
        last_error = e.what();
      }
    }
    if (entries.empty()) throw std::runtime_error("simulate-rir: " + room_id + " unreachable: " + last_error);
    std::vector<io::RirIndexRow> rows;
    std::vector<std::string> files{room_index};
    for (const auto& e : entries) {
      io::RirIndexRow row;
      row.id = e.id;
      row.room = e.room;
      for (int i = 0; i < 3; ++i) row.dims[i] = e.ir.room.dims[i];
      row.rt60 = e.ir.room.rt60;
      row.azimuth_deg = e.ir.doa.azimuth * 180.0 / sf::kPi;
      row.elevation_deg = e.ir.doa.elevation * 180.0 / sf::kPi;
      row.distance = e.ir.distance;
      row.seed = e.ir.seed;
      row.file = e.id + ".wav";
      io::write_wav(dir / row.file, e.ir.channels);
      files.push_back(row.file);
      rows.push_back(row);
    }
    io::write_rir_index(dir / room_index, rows);
    manifest.set(room_id, key, files);
    manifest.save();
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    res.written += n_place;
    say(ctx, "simulate-rir: " + room_id + " rt60 " + io::fmt_double(entries[0].ir.room.rt60) + " s, " +
                 std::to_string(n_place) + " placements");
  }
  io::write_rir_index(dir / "index.csv", all_rows);
  return res;
}

namespace {

fs::path require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw std::invalid_argument(std::string(what) + " is not set");
  if (!fs::is_directory(path)) throw std::invalid_argument(std::string(what) + " '" + path + "' is not a directory");
  return path;
}

std::map<std::string, fs::path> files_by_stem(const fs::path& root, const std::string& ext) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ext) out[e.path().stem().string()] = e.path();
  }
  return out;
}

bool in_folds(const std::string& stem, const std::vector<int>& folds) {
  for (int f : folds) {
    const std::string p = "fold" + std::to_string(f) + "_";
    if (stem.rfind(p, 0) == 0) return true;
  }
  return false;
}

io::SegmentIndexRow row_of(const events::EventSegment& s) {
  return {s.id,
          s.source_clip,
          s.class_id,
          s.track_id,
          s.doa.azimuth * 180.0 / sf::kPi,
          s.doa.elevation * 180.0 / sf::kPi,
          s.start,
          s.end,
          s.first_frame,
          s.last_frame,
          s.id + ".wav"};
}

std::vector<events::EventSegment> load_segments(const fs::path& dir, const std::vector<io::SegmentIndexRow>& rows) {
  std::vector<events::EventSegment> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    events::EventSegment s;
    s.id = r.id;
    s.source_clip = r.source_clip;
    s.audio = io::read_wav(dir / r.file);
    s.class_id = r.class_id;
    s.track_id = r.track_id;
    s.doa = sf::SphDirection::from_degrees(r.azimuth_deg, r.elevation_deg);
    s.start = r.start;
    s.end = r.end;
    s.first_frame = r.first_frame;
    s.last_frame = r.last_frame;
    out.push_back(std::move(s));
  }
  return out;
}

json report_to_json(const elim::EliminationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"id", row.id}, {"class", row.class_id}};
    j["detection_kept"] = row.detection_kept ? json(*row.detection_kept) : json(nullptr);
    j["eigen_kept"] = row.eigen_kept ? json(*row.eigen_kept) : json(nullptr);
    j["overlap_ratio"] = row.overlap_ratio ? json(*row.overlap_ratio) : json(nullptr);
    rows.push_back(j);
  }
  return {{"extracted", r.extracted},
          {"detection_eliminated", r.detection_eliminated},
          {"eigen_eliminated", r.eigen_eliminated},
          {"kept", r.kept},
          {"rows", rows}};
}

elim::EliminationReport report_from_json(const json& j) {
  elim::EliminationReport r;
  r.extracted = j.at("extracted");
  r.detection_eliminated = j.at("detection_eliminated");
  r.eigen_eliminated = j.at("eigen_eliminated");
  r.kept = j.at("kept");
  for (const auto& row : j.at("rows")) {
    elim::EliminationReport::Row x{row.at("id"), row.at("class"), std::nullopt, std::nullopt, std::nullopt};
    if (!row.at("detection_kept").is_null()) x.detection_kept = row.at("detection_kept").get<bool>();
    if (!row.at("eigen_kept").is_null()) x.eigen_kept = row.at("eigen_kept").get<bool>();
    if (!row.at("overlap_ratio").is_null()) x.overlap_ratio = row.at("overlap_ratio").get<double>();
    r.rows.push_back(std::move(x));
  }
  return r;
}

}  // namespace

StageResult extract(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  cfg.validate();
  const fs::path root = require_dir(cfg.paths.dataset_root, "paths.dataset_root");
  const fs::path foa = require_dir((root / "foa_dev").string(), "audio directory");
  const fs::path meta = require_dir((root / "metadata_dev").string(), "metadata directory");
  const auto wavs = files_by_stem(foa, ".wav");
  const auto csvs = files_by_stem(meta, ".csv");
  const fs::path dir = ctx.segment_dir();
  fs::create_directories(dir / "clips");
  auto manifest = BankManifest::load(dir);
  const json inputs = {{"extraction", config::to_json(cfg)["extraction"]}, {"stft", config::to_json(cfg)["stft"]}};

  StageResult res;
  std::vector<io::SegmentIndexRow> all_rows;
  for (const auto& [stem, wav] : wavs) {
    if (!in_folds(stem, cfg.train_folds)) continue;
    const auto it = csvs.find(stem);
    if (it == csvs.end()) throw std::runtime_error("extract: no metadata file for " + wav.string());
    const std::string meta_text = io::read_text(it->second);
    const std::string key =
        key_of(inputs, stem + "/" + hex64(fnv1a(meta_text)) + "/" + std::to_string(fs::file_size(wav)));
    const std::string clip_index = "clips/" + stem + ".csv";
    if (manifest.up_to_date(stem, key)) {
      const auto rows = io::read_segment_index(dir / clip_index);
      all_rows.insert(all_rows.end(), rows.begin(), rows.end());
      ++res.skipped;
      continue;
    }
    const Signal clip = io::read_wav(wav);
    if (clip.sample_rate() != cfg.sample_rate) {
      throw std::runtime_error("extract: " + wav.string() + " is at " + io::fmt_double(clip.sample_rate()) +
                               " Hz, config expects " + io::fmt_double(cfg.sample_rate));
    }
    const auto labels = io::parse_metadata_text(meta_text, it->second.string());
    const auto segs = events::extract_events(clip, stem, labels, cfg.extraction);
    std::vector<io::SegmentIndexRow> rows;
    std::vector<std::string> files{clip_index};
    for (const auto& s : segs) {
      rows.push_back(row_of(s));
      io::write_wav(dir / rows.back().file, s.audio);
      files.push_back(rows.back().file);
    }
    io::write_segment_index(dir / clip_index, rows);
    manifest.set(stem, key, files);
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    ++res.written;
    say(ctx, "extract: " + stem + " -> " + std::to_string(segs.size()) + " segments");
  }
  manifest.save();
  io::write_segment_index(dir / "index.csv", all_rows);
  say(ctx, "extract: " + std::to_string(all_rows.size()) + " segments in total");
  return res;
}

EliminateOutcome eliminate(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  cfg.validate();
  const fs::path seg_dir = ctx.segment_dir();
  if (!fs::exists(seg_dir / "index.csv")) throw std::runtime_error("eliminate: no segment bank at " + seg_dir.string());
  const fs::path dir = ctx.elimination_dir();
  fs::create_directories(dir);
  auto manifest = BankManifest::load(dir);
  const std::string index_text = io::read_text(seg_dir / "index.csv");
  std::string detector_input = cfg.elimination.detector;
  if (detector_input.rfind("predictions:", 0) == 0) detector_input += "/" + file_fnv(detector_input.substr(12));
  const json inputs = {{"elimination", config::to_json(cfg)["elimination"]},
                       {"stft", config::to_json(cfg)["stft"]},
                       {"detector", detector_input}};
  const std::string key = key_of(inputs, hex64(fnv1a(index_text)));

  EliminateOutcome out;
  if (manifest.up_to_date("elimination", key)) {
    out.report = report_from_json(json::parse(io::read_text(dir / "report.json")));
    out.result.skipped = 1;
    return out;
  }
  const auto rows = io::read_segment_index(seg_dir / "index.csv");
  auto segs = load_segments(seg_dir, rows);
  const auto detector = elim::make_detector(cfg.elimination.detector, cfg.extraction.label_frame_s);
  auto result = elim::run_elimination(std::move(segs), *detector, cfg.elimination, ctx.exec);
  std::vector<io::SegmentIndexRow> kept;
  std::set<std::string> kept_ids;
  for (const auto& s : result.kept) kept_ids.insert(s.id);
  for (const auto& r : rows) {
    if (kept_ids.count(r.id)) {
      auto k = r;
      k.file = "../segments/" + r.file;
      kept.push_back(k);
    }
  }
  io::write_segment_index(dir / "kept.csv", kept);
  io::write_text_atomic(dir / "report.txt", result.report.to_text());
  io::write_text_atomic(dir / "report.json", report_to_json(result.report).dump(1) + "\n");
  manifest.set("elimination", key, {"kept.csv", "report.txt", "report.json"});
  manifest.save();
  out.report = result.report;
  out.result.written = 1;
  return out;
}

StageResult enhance(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  cfg.validate();
  const fs::path kept_path = ctx.elimination_dir() / "kept.csv";
  if (!fs::exists(kept_path)) throw std::runtime_error("enhance: no elimination output at " + kept_path.string());
  const auto rows = io::read_segment_index(kept_path);
  const fs::path dir = ctx.source_dir();
  fs::create_directories(dir);
  auto manifest = BankManifest::load(dir);
  const json inputs = {{"enhancement", config::to_json(cfg)["enhancement"]}, {"stft", config::to_json(cfg)["stft"]}};

  StageResult res;
  std::vector<io::SourceIndexRow> index;
  for (const auto& r : rows) {
    const fs::path wav = ctx.elimination_dir() / r.file;
    const std::string key = key_of(inputs, r.id + "/" + file_fnv(wav));
    const std::string file = r.id + ".wav";
    Signal mono;
    if (manifest.up_to_date(r.id, key)) {
      mono = io::read_wav(dir / file, 1);
      ++res.skipped;
    } else {
      events::EventSegment seg = load_segments(ctx.elimination_dir(), {r}).front();
      const auto src = enhance::enhance_segment(seg, cfg.enhancement, ctx.exec);
      mono = Signal(1, src.audio.size(), src.sample_rate);
      std::transform(src.audio.begin(), src.audio.end(), mono.channel(0).begin(),
                     [](double v) { return static_cast<double>(static_cast<float>(v)); });
      io::write_wav(dir / file, mono);
      manifest.set(r.id, key, {file});
      ++res.written;
    }
    double e = 0.0;
    for (double v : mono.channel(0)) e += v * v;
    index.push_back({r.id, r.class_id, r.id, std::sqrt(e / std::max<std::size_t>(1, mono.frames())), file});
  }
  manifest.save();
  io::write_source_index(dir / "index.csv", index);
  say(ctx, "enhance: " + std::to_string(index.size()) + " sources");
  return res;
}

StageResult augment(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  cfg.validate();
  const auto sources = augment::SourceBank::load(ctx.source_dir());
  const auto rirs = augment::RirBank::load(ctx.rir_dir());
  const json inputs = {{"augment", config::to_json(cfg)["augment"]}, {"sample_rate", cfg.sample_rate}};
  const auto outcomes = augment::generate_folds(cfg.paths.output_dir, sources, rirs, cfg.augment, cfg.master_seed,
                                                config::fingerprint(inputs), ctx.exec);
  StageResult res;
  for (const auto& o : outcomes) {
    (o.skipped ? res.skipped : res.written) += static_cast<int>(o.clips.size());
    say(ctx, "augment: fold " + std::to_string(o.fold_id) + (o.skipped ? " up to date, " : " written, ") +
                 std::to_string(o.clips.size()) + " clips");
  }
  return res;
}

std::string inspect(const Context& ctx) {
  std::ostringstream out;
  if (fs::exists(ctx.rir_dir() / "index.csv")) {
    const auto rows = io::read_rir_index(ctx.rir_dir() / "index.csv");
    std::set<int> rooms;
    double lo = 1e9, hi = 0.0;
    for (const auto& r : rows) {
      rooms.insert(r.room);
      lo = std::min(lo, r.rt60);
      hi = std::max(hi, r.rt60);
    }
    out << "rir bank: " << rows.size() << " rirs in " << rooms.size() << " rooms";
    if (!rows.empty()) out << ", rt60 " << io::fmt_double(lo) << " to " << io::fmt_double(hi) << " s";
    out << "\n";
  } else {
    out << "rir bank: absent\n";
  }
  auto per_class = [&](const std::vector<int>& classes) {
    std::map<int, int> n;
    for (int c : classes) ++n[c];
    std::string s;
    for (const auto& [c, k] : n) s += " " + std::to_string(c) + ":" + std::to_string(k);
    return s;
  };
  if (fs::exists(ctx.segment_dir() / "index.csv")) {
    const auto rows = io::read_segment_index(ctx.segment_dir() / "index.csv");
    std::vector<int> cls;
    for (const auto& r : rows) cls.push_back(r.class_id);
    out << "segment bank: " << rows.size() << " segments, per class" << per_class(cls) << "\n";
  } else {
    out << "segment bank: absent\n";
  }
  if (fs::exists(ctx.elimination_dir() / "report.txt")) {
    out << "elimination report:\n" << io::read_text(ctx.elimination_dir() / "report.txt");
  }
  if (fs::exists(ctx.source_dir() / "index.csv")) {
    const auto rows = io::read_source_index(ctx.source_dir() / "index.csv");
    std::vector<int> cls;
    for (const auto& r : rows) cls.push_back(r.class_id);
    out << "source bank: " << rows.size() << " sources, per class" << per_class(cls) << "\n";
  } else {
    out << "source bank: absent\n";
  }
  for (const auto& f : ctx.cfg.augment.folds) {
    const auto m = fs::path(ctx.cfg.paths.output_dir) / ("manifest_fold" + std::to_string(f.fold_id) + ".json");
    if (fs::exists(m)) {
      const auto j = json::parse(io::read_text(m));
      out << "fold " << f.fold_id << ": " << j["clips"].size() << " clips\n";
    } else {
      out << "fold " << f.fold_id << ": absent\n";
    }
  }
  return out.str();
}

void run_all(const Context& ctx, int rir_count) {
  const auto& cfg = ctx.cfg;
  cfg.validate();
  require_dir(cfg.paths.dataset_root, "paths.dataset_root");
  fs::create_directories(cfg.paths.work_dir);
  json status = json::object();
  auto stage = [&](const char* name, auto fn) {
    fn();
    status[name] = "done";
    io::write_text_atomic(ctx.work() / "run_manifest.json",
                          json{{"config", config::to_json(cfg)}, {"stages", status}}.dump(1) + "\n");
  };
  stage("simulate-rir", [&] { simulate_rirs(ctx, rir_count); });
  stage("extract", [&] { extract(ctx); });
  stage("eliminate", [&] {
    const auto o = eliminate(ctx);
    say(ctx, o.report.to_text());
  });
  stage("enhance", [&] { enhance(ctx); });
  stage("augment", [&] { augment(ctx); });
}

}  // namespace irs::pipeline
