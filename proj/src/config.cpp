#include "irs/config.hpp"

#include <set>
#include <stdexcept>

#include "irs/audio_io.hpp"

namespace irs::config {

using nlohmann::json;

void RoomSampling::validate() const {
  if (!(rt60_min > 0.0 && rt60_min <= rt60_max)) throw std::invalid_argument("rooms: need 0 < rt60_min <= rt60_max");
  if (rt60_min < 0.05 || rt60_max > 2.0) throw std::invalid_argument("rooms: rt60 range must lie within [0.05, 2] s");
  for (int i = 0; i < 3; ++i) {
    if (!(dims_min[i] > 0.0 && dims_min[i] <= dims_max[i])) {
      throw std::invalid_argument("rooms: need 0 < dims_min <= dims_max on axis " + std::to_string(i));
    }
  }
  if (!(distance_min >= 0.3 && distance_min <= distance_max)) {
    throw std::invalid_argument("rooms: need 0.3 <= distance_min <= distance_max");
  }
  if (!(wall_margin > 0.0)) throw std::invalid_argument("rooms: wall_margin must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (!(dims_min[i] > 2.0 * wall_margin)) {
      throw std::invalid_argument("rooms: dims_min leaves no space inside the wall margin on axis " + std::to_string(i));
    }
  }
  if (rooms < 1 || placements_per_room < 1) throw std::invalid_argument("rooms: counts must be >= 1");
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("rooms: speed_of_sound must be > 0");
}

void PipelineConfig::validate() const {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample_rate must be > 0");
  if (!(stft.frame_ms > 0.0 && stft.hop_ms > 0.0 && stft.hop_ms <= stft.frame_ms)) {
    throw std::invalid_argument("stft: need 0 < hop_ms <= frame_ms");
  }
  extraction.validate();
  if (train_folds.empty()) throw std::invalid_argument("train_folds is empty");
  elimination.validate(sample_rate);
  enhancement.cgmm.validate();
  if (enhancement.mvdr.ref_channel < 0) throw std::invalid_argument("enhancement: ref_channel must be >= 0");
  if (encoding.order < 1) throw std::invalid_argument("encoding: order must be >= 1");
  rooms.validate();
  augment.validate();
}

namespace {

const json kEmpty = json::object();

// Reads keys from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where(key) + ": " + e.what());
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  template <class E, class Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (!present) return;
    try {
      out = parse(s);
    } catch (const std::exception& e) {
      throw std::invalid_argument(where(key) + ": " + e.what());
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, where(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? j_.at(key) : kEmpty;
  }
  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw std::invalid_argument(where(k.c_str()) + ": unknown key");
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    return key ? p + "." + key : p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

PipelineConfig from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "");
  {
    auto s = root.sub("paths");
    s.get("dataset_root", c.paths.dataset_root);
    s.get("work_dir", c.paths.work_dir);
    s.get("output_dir", c.paths.output_dir);
    s.finish();
  }
  root.get("array_file", c.array_file);
  root.get("sample_rate", c.sample_rate);
  {
    auto s = root.sub("stft");
    s.get("frame_ms", c.stft.frame_ms);
    s.get("hop_ms", c.stft.hop_ms);
    s.finish();
  }
  {
    auto s = root.sub("encoding");
    s.get("order", c.encoding.order);
    s.get("reg_max_gain_db", c.encoding.reg_max_gain_db);
    s.get_optional("trunc_order", c.encoding.trunc_order);
    s.get_enum("export_convention", c.encoding.export_convention, array::sh_convention_from_string);
    s.finish();
  }
  {
    auto s = root.sub("extraction");
    s.get("staticity_tol_deg", c.extraction.staticity_tol_deg);
    s.get("min_frames", c.extraction.min_frames);
    s.get("guard_frames", c.extraction.guard_frames);
    s.get("label_frame_s", c.extraction.label_frame_s);
    s.finish();
  }
  root.get("train_folds", c.train_folds);
  {
    auto s = root.sub("elimination");
    s.get("alpha", c.elimination.alpha);
    s.get("beta", c.elimination.beta);
    s.get("f_min", c.elimination.f_min);
    s.get("f_max", c.elimination.f_max);
    s.get("detector", c.elimination.detector);
    s.get("detect_keep_fraction", c.elimination.detect_keep_fraction);
    s.get("min_frames", c.elimination.min_frames);
    s.get_enum("input_convention", c.elimination.input_convention, array::sh_convention_from_string);
    s.finish();
  }
  {
    auto s = root.sub("enhancement");
    s.get("cgmm_iters", c.enhancement.cgmm.iters);
    s.get("noise_init_ms", c.enhancement.cgmm.noise_init_ms);
    s.get("target_init_fraction", c.enhancement.cgmm.target_init_fraction);
    s.get("ref_channel", c.enhancement.mvdr.ref_channel);
    s.get("loading", c.enhancement.mvdr.loading);
    s.get("max_condition", c.enhancement.mvdr.max_condition);
    s.finish();
  }
  {
    auto s = root.sub("rooms");
    auto& r = c.rooms;
    s.get("rt60_min", r.rt60_min);
    s.get("rt60_max", r.rt60_max);
    s.get("dims_min", r.dims_min);
    s.get("dims_max", r.dims_max);
    s.get("distance_min", r.distance_min);
    s.get("distance_max", r.distance_max);
    s.get("wall_margin", r.wall_margin);
    s.get("rooms", r.rooms);
    s.get("placements_per_room", r.placements_per_room);
    s.get("speed_of_sound", r.speed_of_sound);
    s.get_enum("absorption", r.absorption, room::absorption_model_from_string);
    s.finish();
  }
  {
    auto s = root.sub("augment");
    auto& a = c.augment;
    if (s.has("folds")) {
      const json& folds = s.raw("folds");
      if (!folds.is_array()) throw std::invalid_argument("config.augment.folds: expected an array");
      a.folds.clear();
      for (std::size_t i = 0; i < folds.size(); ++i) {
        Section f(folds[i], "config.augment.folds[" + std::to_string(i) + "]");
        augment::FoldSpec spec;
        f.get("fold_id", spec.fold_id);
        f.get("clip_count", spec.clip_count);
        f.get("clip_duration_s", spec.clip_duration_s);
        f.get("events_min", spec.events_min);
        f.get("events_max", spec.events_max);
        f.get("polyphony_cap", spec.polyphony_cap);
        f.finish();
        a.folds.push_back(spec);
      }
    } else {
      s.raw("folds");
    }
    s.get("gain_db_min", a.gain_db_min);
    s.get("gain_db_max", a.gain_db_max);
    s.get("noise", a.noise);
    s.get("snr_db_min", a.snr_db_min);
    s.get("snr_db_max", a.snr_db_max);
    s.get("higher_order_noise_db", a.higher_order_noise_db);
    s.get("headroom_db", a.headroom_db);
    s.get("label_frame_s", a.label_frame_s);
    s.finish();
  }
  root.get("master_seed", c.master_seed);
  root.finish();

  const auto st = dsp::stft_config_from_ms(c.sample_rate, c.stft.frame_ms, c.stft.hop_ms);
  c.elimination.frame_len = c.enhancement.frame_len = st.frame_len;
  c.elimination.hop = c.enhancement.hop = st.hop;
  c.extraction.min_samples = st.frame_len;
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  json folds = json::array();
  for (const auto& f : c.augment.folds) {
    folds.push_back({{"fold_id", f.fold_id},
                     {"clip_count", f.clip_count},
                     {"clip_duration_s", f.clip_duration_s},
                     {"events_min", f.events_min},
                     {"events_max", f.events_max},
                     {"polyphony_cap", f.polyphony_cap}});
  }
  const auto& r = c.rooms;
  const auto& a = c.augment;
  return {
      {"paths",
       {{"dataset_root", c.paths.dataset_root},
        {"work_dir", c.paths.work_dir},
        {"output_dir", c.paths.output_dir}}},
      {"array_file", c.array_file},
      {"sample_rate", c.sample_rate},
      {"stft", {{"frame_ms", c.stft.frame_ms}, {"hop_ms", c.stft.hop_ms}}},
      {"encoding",
       {{"order", c.encoding.order},
        {"reg_max_gain_db", c.encoding.reg_max_gain_db},
        {"trunc_order", c.encoding.trunc_order ? json(*c.encoding.trunc_order) : json(nullptr)},
        {"export_convention", array::to_string(c.encoding.export_convention)}}},
      {"extraction",
       {{"staticity_tol_deg", c.extraction.staticity_tol_deg},
        {"min_frames", c.extraction.min_frames},
        {"guard_frames", c.extraction.guard_frames},
        {"label_frame_s", c.extraction.label_frame_s}}},
      {"train_folds", c.train_folds},
      {"elimination",
       {{"alpha", c.elimination.alpha},
        {"beta", c.elimination.beta},
        {"f_min", c.elimination.f_min},
        {"f_max", c.elimination.f_max},
        {"detector", c.elimination.detector},
        {"detect_keep_fraction", c.elimination.detect_keep_fraction},
        {"min_frames", c.elimination.min_frames},
        {"input_convention", array::to_string(c.elimination.input_convention)}}},
      {"enhancement",
       {{"cgmm_iters", c.enhancement.cgmm.iters},
        {"noise_init_ms", c.enhancement.cgmm.noise_init_ms},
        {"target_init_fraction", c.enhancement.cgmm.target_init_fraction},
        {"ref_channel", c.enhancement.mvdr.ref_channel},
        {"loading", c.enhancement.mvdr.loading},
        {"max_condition", c.enhancement.mvdr.max_condition}}},
      {"rooms",
       {{"rt60_min", r.rt60_min},
        {"rt60_max", r.rt60_max},
        {"dims_min", r.dims_min},
        {"dims_max", r.dims_max},
        {"distance_min", r.distance_min},
        {"distance_max", r.distance_max},
        {"wall_margin", r.wall_margin},
        {"rooms", r.rooms},
        {"placements_per_room", r.placements_per_room},
        {"speed_of_sound", r.speed_of_sound},
        {"absorption", room::to_string(r.absorption)}}},
      {"augment",
       {{"folds", folds},
        {"gain_db_min", a.gain_db_min},
        {"gain_db_max", a.gain_db_max},
        {"noise", a.noise},
        {"snr_db_min", a.snr_db_min},
        {"snr_db_max", a.snr_db_max},
        {"higher_order_noise_db", a.higher_order_noise_db},
        {"headroom_db", a.headroom_db},
        {"label_frame_s", a.label_frame_s}}},
      {"master_seed", c.master_seed},
  };
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  io::write_text_atomic(path, to_json(cfg).dump(2) + "\n");
}

std::string fingerprint(const json& j) { return j.dump(); }

}  // namespace irs::config
