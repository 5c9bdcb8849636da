#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "../support/fixtures.hpp"
#include "../support/test_support.hpp"
#include "irs/audio_io.hpp"
#include "irs/dataset_io.hpp"
#include "irs/hash.hpp"
#include "irs/interference_elimination.hpp"

using namespace irs;
using augment::AugmentConfig;
using augment::FoldSpec;

namespace {

constexpr double kFs = 24000.0;

const augment::SourceBank& sources() {
  static const auto bank = test::synthetic_sources(4, 5, kFs, 1);
  return bank;
}

const augment::RirBank& rirs() {
  static const auto bank = test::plane_wave_rirs(
      {{sf::SphDirection::from_degrees(45, 0), sf::SphDirection::from_degrees(135, 10),
        sf::SphDirection::from_degrees(-135, -10), sf::SphDirection::from_degrees(-45, 20)},
       {sf::SphDirection::from_degrees(30, 0), sf::SphDirection::from_degrees(120, 0),
        sf::SphDirection::from_degrees(-150, 0), sf::SphDirection::from_degrees(-60, 0)}},
      2400, kFs);
  return bank;
}

FoldSpec small_fold(int id = 7, int clips = 3, double seconds = 10.0) {
  FoldSpec f;
  f.fold_id = id;
  f.clip_count = clips;
  f.clip_duration_s = seconds;
  f.events_min = 4;
  f.events_max = 8;
  return f;
}

bool same_plan(const augment::MixturePlan& a, const augment::MixturePlan& b) {
  if (a.room != b.room || a.duration != b.duration || a.events.size() != b.events.size()) return false;
  if (a.noise.has_value() != b.noise.has_value()) return false;
  if (a.noise && (a.noise->seed != b.noise->seed || a.noise->snr_db != b.noise->snr_db)) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const auto &x = a.events[i], &y = b.events[i];
    if (x.source != y.source || x.rir != y.rir || x.onset != y.onset || x.gain_db != y.gain_db ||
        x.track != y.track)
      return false;
  }
  return true;
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

TEST(Plan, DeterministicPerSeed) {
  const AugmentConfig cfg;
  const auto fold = small_fold();
  const auto a = augment::sample_plan(11, "m", sources(), rirs(), fold, cfg);
  const auto b = augment::sample_plan(11, "m", sources(), rirs(), fold, cfg);
  const auto c = augment::sample_plan(12, "m", sources(), rirs(), fold, cfg);
  EXPECT_TRUE(same_plan(a, b));
  EXPECT_FALSE(same_plan(a, c));
  EXPECT_EQ(a.duration, 240000u);
}

TEST(Plan, EventsStayInsideOneRoomAndClip) {
  const AugmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = augment::sample_plan(seed, "m", sources(), rirs(), small_fold(), cfg);
    EXPECT_GE(p.events.size(), 1u);
    EXPECT_LE(p.events.size(), 8u);
    for (const auto& e : p.events) {
      EXPECT_EQ(rirs().at(e.rir).room, p.room);
      EXPECT_EQ(e.onset % 2400, 0u);
      EXPECT_LE(e.onset + sources().at(e.source).audio.size() + 2400 - 1, p.duration);
      EXPECT_GE(e.gain_db, -6.0);
      EXPECT_LE(e.gain_db, 6.0);
      ASSERT_TRUE(p.noise.has_value());
      EXPECT_GE(p.noise->snr_db, 6.0);
      EXPECT_LE(p.noise->snr_db, 30.0);
    }
  }
}

TEST(Plan, PolyphonyCapHoldsAtEverySample) {
  AugmentConfig cfg;
  for (int cap : {1, 2, 3}) {
    auto fold = small_fold();
    fold.polyphony_cap = cap;
    fold.events_min = fold.events_max = 20;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = augment::sample_plan(seed, "m", sources(), rirs(), fold, cfg);
      std::vector<int> load(p.duration, 0);
      for (const auto& e : p.events) {
        for (std::size_t i = e.onset; i < e.onset + sources().at(e.source).audio.size(); ++i) ++load[i];
      }
      EXPECT_LE(*std::max_element(load.begin(), load.end()), cap) << "cap " << cap << " seed " << seed;
      for (const auto& e : p.events) EXPECT_LT(e.track, cap);
    }
  }
}

TEST(Plan, EmptyBankAndBadConfig) {
  EXPECT_THROW(augment::RirBank({}).rooms().at(0), std::out_of_range);
  EXPECT_THROW(augment::sample_plan(1, "m", sources(), augment::RirBank({}), small_fold(), {}), std::invalid_argument);
  EXPECT_THROW(augment::SourceBank(kFs, {}).class_median_rms(0), std::out_of_range);
  auto bad = small_fold();
  bad.clip_count = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  AugmentConfig cfg;
  cfg.snr_db_min = 40;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

// Class of the drawn source against the RIR direction (quadrant), 10^4 draws.
TEST(Plan, SourceClassIndependentOfRirDirection) {
  AugmentConfig cfg;
  cfg.noise = false;
  auto fold = small_fold();
  fold.clip_duration_s = 60.0;
  fold.events_min = fold.events_max = 30;
  fold.polyphony_cap = 30;
  double table[4][4] = {};
  int n = 0;
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    const auto p = augment::sample_plan(seed, "m", sources(), rirs(), fold, cfg);
    for (const auto& e : p.events) {
      const double az = rirs().at(e.rir).ir.doa.azimuth;
      const int q = static_cast<int>(std::floor((az + sf::kPi) / (sf::kPi / 2))) % 4;
      table[sources().at(e.source).class_id][q] += 1;
      if (++n == 10000) break;
    }
  }
  double rows[4] = {}, cols[4] = {};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      rows[i] += table[i][j];
      cols[j] += table[i][j];
    }
  }
  double chi2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double expect = rows[i] * cols[j] / n;
      chi2 += (table[i][j] - expect) * (table[i][j] - expect) / expect;
    }
  }
  EXPECT_LT(chi2, 21.6659943334619);  // 99th percentile, 9 degrees of freedom
}

TEST(Render, DefaultClipLength) {
  AugmentConfig cfg;
  const FoldSpec fold;
  EXPECT_EQ(cfg.folds.size(), 2u);
  const auto p = augment::sample_plan(3, "m", sources(), rirs(), fold, cfg);
  EXPECT_EQ(p.duration, 1440000u);
  const auto clip = augment::render_clip(p, sources(), rirs(), cfg);
  EXPECT_EQ(clip.audio.frames(), 1440000u);
  EXPECT_EQ(clip.audio.channels(), 4);
  for (double v : clip.audio.data()) ASSERT_TRUE(std::isfinite(v));
  // two added folds of 100 one-minute clips against four original folds of 100
  double added = 0.0;
  for (const auto& f : cfg.folds) added += f.clip_count * f.clip_duration_s;
  EXPECT_DOUBLE_EQ(added / (4 * 100 * 60.0), 0.5);
}

TEST(Render, SingleEventDoaAndLabels) {
  const auto bank = test::plane_wave_rirs({{sf::SphDirection::from_degrees(90, 0)}}, 2400, kFs);
  AugmentConfig cfg;
  cfg.noise = false;
  augment::MixturePlan p;
  p.clip_id = "one";
  p.duration = 5 * 24000;
  p.events.push_back({0, 0, 12 * 2400, 0.0, 12, 12 + static_cast<int>((sources().at(0).audio.size() + 2399) / 2400), 0});
  const auto clip = augment::render_clip(p, sources(), bank, cfg);
  ASSERT_FALSE(clip.labels.empty());
  for (const auto& l : clip.labels) {
    EXPECT_EQ(l.azimuth_deg, 90);
    EXPECT_EQ(l.elevation_deg, 0);
    EXPECT_EQ(l.class_id, 0);
  }
  const auto& e = p.events[0];
  const auto doa = test::intensity_doa(clip.audio, e.onset, e.onset + sources().at(0).audio.size());
  EXPECT_LT(test::angle_deg(doa, sf::SphDirection::from_degrees(90, 0)), 10.0);
}

TEST(Render, LabelActivityMatchesAudio) {
  AugmentConfig cfg;
  cfg.noise = false;
  room::RoomSpec r;
  r.dims = {6, 5, 3};
  r.rt60 = 0.2;
  room::Placement pl;
  pl.source_pos = {2, 2, 1.5};
  pl.array_pos = {4, 3, 1.5};
  const array::Encoder enc(array::default_em32(), {});
  augment::RirEntry e;
  e.id = "r0";
  e.ir = room::simulate_sh_rir(r, pl, enc, room::min_rir_length(r, kFs));
  const augment::RirBank bank({e});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = augment::sample_plan(seed, "m", sources(), bank, small_fold(), cfg);
    const auto clip = augment::render_clip(p, sources(), bank, cfg);
    std::vector<char> labelled(100, 0);
    for (const auto& l : clip.labels) labelled[l.frame_index] = 1;
    double on = 0, off = 0;
    int n_on = 0, n_off = 0;
    const auto w = clip.audio.channel(0);
    for (int f = 0; f < 100; ++f) {
      const double en = energy(w.subspan(static_cast<std::size_t>(f) * 2400, 2400));
      (labelled[f] ? on : off) += en;
      ++(labelled[f] ? n_on : n_off);
    }
    ASSERT_GT(n_on, 0);
    if (n_off == 0) continue;
    EXPECT_GE(10 * std::log10((on / n_on) / (off / n_off)), 20.0) << "seed " << seed;
  }
}

TEST(Render, NoiseLevelAndHeadroom) {
  const auto bank = test::plane_wave_rirs({{sf::SphDirection::from_degrees(0, 0)}}, 2400, kFs);
  AugmentConfig cfg;
  augment::MixturePlan p;
  p.clip_id = "n";
  p.duration = 10 * 24000;
  const std::size_t len = sources().at(0).audio.size();
  p.events.push_back({0, 0, 24000, 0.0, 10, 10 + static_cast<int>((len + 2399) / 2400), 0});
  p.noise = augment::NoisePlan{77, 12.0};
  const auto clip = augment::render_clip(p, sources(), bank, cfg);
  ASSERT_EQ(clip.trim_db, 0.0);
  const auto w = clip.audio.channel(0), x = clip.audio.channel(3);
  const double noise_w = energy(w.subspan(6 * 24000, 3 * 24000)) / (3 * 24000);
  const double noise_x = energy(x.subspan(6 * 24000, 3 * 24000)) / (3 * 24000);
  const double sig = energy(w.subspan(24000 + 24, len)) / len;
  EXPECT_NEAR(10 * std::log10(sig / noise_w), 12.0, 0.5);
  EXPECT_NEAR(10 * std::log10(noise_x / noise_w), -3.0, 0.2);

  p.events[0].gain_db = 60.0;
  p.noise.reset();
  const auto loud = augment::render_clip(p, sources(), bank, cfg);
  EXPECT_LT(loud.trim_db, 0.0);
  double peak = 0.0;
  for (double v : loud.audio.data()) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(20 * std::log10(peak), -1.0, 1e-9);
}

TEST(Folds, ByteIdenticalRerunAndSkip) {
  AugmentConfig cfg;
  cfg.folds = {small_fold(7, 3, 6.0), small_fold(8, 2, 6.0)};
  const auto a = test::temp_dir("folds_a"), b = test::temp_dir("folds_b");
  const auto ra = augment::generate_folds(a, sources(), rirs(), cfg, 5, "fp");
  const auto rb = augment::generate_folds(b, sources(), rirs(), cfg, 5, "fp", dsp::Exec::serial);
  ASSERT_EQ(ra.size(), 2u);
  EXPECT_FALSE(ra[0].skipped);
  ASSERT_EQ(ra[0].clips.size(), 3u);
  for (const auto& f : ra) {
    for (const auto& stem : f.clips) {
      EXPECT_EQ(stem.rfind("fold" + std::to_string(f.fold_id) + "_room", 0), 0u) << stem;
      const auto wav_a = test::read_file(a / "foa" / (stem + ".wav"));
      EXPECT_EQ(wav_a, test::read_file(b / "foa" / (stem + ".wav"))) << stem;
      EXPECT_EQ(test::read_file(a / "metadata" / (stem + ".csv")), test::read_file(b / "metadata" / (stem + ".csv")));
      const auto audio = io::read_wav(a / "foa" / (stem + ".wav"), 4);
      EXPECT_EQ(audio.sample_rate(), kFs);
      for (double v : audio.data()) ASSERT_TRUE(std::isfinite(v));
      EXPECT_NO_THROW(io::parse_metadata(a / "metadata" / (stem + ".csv")));
    }
  }
  EXPECT_EQ(test::read_file(a / "manifest_fold7.json"), test::read_file(b / "manifest_fold7.json"));
  const auto m = nlohmann::json::parse(test::read_file(a / "manifest_fold7.json"));
  EXPECT_EQ(m["master_seed"], "5");
  EXPECT_EQ(m["clips"].size(), 3u);

  const auto again = augment::generate_folds(a, sources(), rirs(), cfg, 5, "fp");
  EXPECT_TRUE(again[0].skipped);
  EXPECT_TRUE(again[1].skipped);
  const auto other = augment::generate_folds(a, sources(), rirs(), cfg, 6, "fp");
  EXPECT_FALSE(other[0].skipped);

  // a damaged clip invalidates the fold
  augment::generate_folds(a, sources(), rirs(), cfg, 5, "fp");
  const auto victim = a / "foa" / (ra[0].clips[0] + ".wav");
  { std::ofstream(victim, std::ios::binary | std::ios::app) << "x"; }
  EXPECT_FALSE(augment::generate_folds(a, sources(), rirs(), cfg, 5, "fp")[0].skipped);
  EXPECT_EQ(test::read_file(victim), test::read_file(b / "foa" / (ra[0].clips[0] + ".wav")));
}

TEST(Folds, SeedsDeriveFromClipId) {
  EXPECT_NE(derive_seed(5, "fold7/mix001"), derive_seed(5, "fold7/mix002"));
  EXPECT_EQ(augment::clip_stem(7, 3, 12), "fold7_room3_mix012");
}

// 1243 extracted segments, 16 missed by the detector and 244 with a strong
// second source leave 983 sources to draw from.
TEST(Pool, PublishedEliminationCountsLeave983) {
  std::vector<events::EventSegment> segs;
  std::map<std::pair<std::string, int>, std::set<int>> detected;
  for (int i = 0; i < 1243; ++i) {
    events::EventSegment s;
    char id[32];
    std::snprintf(id, sizeof id, "clip%04d_seg000", i);
    s.id = id;
    s.source_clip = id;
    s.class_id = i % 13;
    s.first_frame = 0;
    s.last_frame = 3;
    s.audio = Signal(4, 7200, kFs);
    std::mt19937_64 rng(i);
    test::add_plane_wave(s.audio, test::white_noise(7200, 2 * i), test::random_direction(rng));
    if (i % 5 == 1 && i < 5 * 244) {
      s.audio = Signal(4, 7200, kFs);
      test::add_plane_wave(s.audio, test::white_noise(7200, 2 * i), sf::SphDirection::from_degrees(0, 0));
      test::add_plane_wave(s.audio, test::white_noise(7200, 2 * i + 1), sf::SphDirection::from_degrees(150, 0));
    }
    const bool missed = i % 5 == 2 && i < 5 * 16;
    for (int f = 0; f < 3; ++f) {
      if (!missed) detected[{s.source_clip, f}] = {s.class_id};
    }
    segs.push_back(std::move(s));
  }
  const elim::PredictionsFileDetector det(detected);
  const auto res = elim::run_elimination(std::move(segs), det, {});
  EXPECT_EQ(res.report.extracted, 1243);
  EXPECT_EQ(res.report.detection_eliminated, 16);
  EXPECT_EQ(res.report.eigen_eliminated, 244);
  std::vector<augment::Source> pool;
  for (const auto& s : res.kept) {
    augment::Source src;
    src.id = s.id;
    src.class_id = s.class_id;
    src.audio.assign(s.audio.channel(0).begin(), s.audio.channel(0).end());
    pool.push_back(std::move(src));
  }
  EXPECT_EQ(augment::SourceBank(kFs, std::move(pool)).size(), 983u);
}
