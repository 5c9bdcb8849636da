#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "../support/test_support.hpp"
#include "irs/interference_elimination.hpp"

using namespace irs;

namespace {

Signal foa_mix(std::size_t n, std::uint64_t seed, const std::vector<std::pair<sf::SphDirection, double>>& waves,
               double noise_std = 0.0) {
  Signal out(4, n, 24000.0);
  for (std::size_t k = 0; k < waves.size(); ++k) {
    const auto s = test::white_noise(n, seed * 31 + k, waves[k].second);
    test::add_plane_wave(out, s, waves[k].first);
  }
  if (noise_std > 0) {
    for (int c = 0; c < 4; ++c) {
      const auto e = test::white_noise(n, seed * 31 + 100 + c, noise_std);
      for (std::size_t i = 0; i < n; ++i) out(c, i) += e[i];
    }
  }
  return out;
}

events::EventSegment segment(std::string id, Signal audio, int cls = 1, int first = 0, int frames = 10) {
  events::EventSegment s;
  s.id = std::move(id);
  s.source_clip = "clip";
  s.class_id = cls;
  s.first_frame = first;
  s.last_frame = first + frames;
  s.start = static_cast<std::size_t>(first) * 2400;
  s.end = s.start + audio.frames();
  s.audio = std::move(audio);
  return s;
}

class ThrowingDetector final : public elim::Detector {
 public:
  std::string name() const override { return "throws"; }
  elim::Detections detect(const events::EventSegment&) const override { throw std::runtime_error("boom"); }
};

}  // namespace

TEST(OverlapRatio, SinglePlaneWaveIsClean) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto sig = foa_mix(24000, seed, {{test::random_direction(rng), 1.0}});
    EXPECT_LT(elim::overlap_ratio(sig, {}), 0.05);
  }
}

TEST(OverlapRatio, TwoSeparatedWavesOverlap) {
  const auto sig = foa_mix(24000, 3, {{sf::SphDirection::from_degrees(0, 0), 1.0},
                                      {sf::SphDirection::from_degrees(120, 20), 1.0}});
  EXPECT_GT(elim::overlap_ratio(sig, {}), 0.9);
  elim::EliminationConfig one;
  one.alpha = 1.0 - 1e-12;
  EXPECT_EQ(elim::overlap_ratio(sig, one), 0.0);
}

TEST(OverlapRatio, GainInvariant) {
  const auto sig = foa_mix(24000, 5, {{sf::SphDirection::from_degrees(10, 0), 1.0},
                                      {sf::SphDirection::from_degrees(100, 0), 0.5}}, 0.1);
  const double r = elim::overlap_ratio(sig, {});
  for (double g : {0.25, 8.0, 1024.0}) {
    Signal s = sig;
    for (double& v : s.data()) v *= g;
    EXPECT_EQ(elim::overlap_ratio(s, {}), r);
  }
  Signal s = sig;
  for (double& v : s.data()) v *= 0.37;
  EXPECT_NEAR(elim::overlap_ratio(s, {}), r, 0.01);
}

TEST(OverlapRatio, SerialMatchesParallel) {
  const auto sig = foa_mix(12000, 6, {{sf::SphDirection::from_degrees(10, 0), 1.0},
                                      {sf::SphDirection::from_degrees(80, 0), 0.7}}, 0.05);
  EXPECT_EQ(elim::overlap_ratio(sig, {}, dsp::Exec::serial), elim::overlap_ratio(sig, {}, dsp::Exec::parallel));
}

TEST(OverlapRatio, TooShortAndBadConfig) {
  EXPECT_THROW(elim::overlap_ratio(Signal(4, 600, 24000.0), {}), std::invalid_argument);
  elim::EliminationConfig bad;
  bad.f_max = 20000.0;
  EXPECT_THROW(elim::overlap_ratio(Signal(4, 24000, 24000.0), bad), std::invalid_argument);
}

TEST(EigenElimination, PartitionStoresRatios) {
  EXPECT_TRUE(elim::eigenvalue_eliminate({}, {}).kept.empty());
  std::vector<events::EventSegment> segs;
  segs.push_back(segment("a", foa_mix(12000, 1, {{sf::SphDirection::from_degrees(0, 0), 1.0}})));
  segs.push_back(segment("b", foa_mix(12000, 2, {{sf::SphDirection::from_degrees(0, 0), 1.0},
                                                 {sf::SphDirection::from_degrees(180, 0), 1.0}})));
  segs.push_back(segment("c", foa_mix(12000, 3, {{sf::SphDirection::from_degrees(40, 30), 1.0}})));
  const auto p = elim::eigenvalue_eliminate(segs, {});
  ASSERT_EQ(p.kept.size(), 2u);
  ASSERT_EQ(p.eliminated.size(), 1u);
  EXPECT_EQ(p.kept[0].id, "a");
  EXPECT_EQ(p.kept[1].id, "c");
  EXPECT_EQ(p.eliminated[0].id, "b");
  for (const auto& s : p.kept) EXPECT_TRUE(s.overlap_ratio && *s.verdicts.eigen_kept);
  EXPECT_FALSE(*p.eliminated[0].verdicts.eigen_kept);
  EXPECT_GT(*p.eliminated[0].overlap_ratio, 0.4);
}

TEST(DetectionElimination, Stubs) {
  std::vector<events::EventSegment> segs;
  for (int i = 0; i < 4; ++i) segs.push_back(segment("s" + std::to_string(i), Signal(4, 4800, 24000.0)));
  const auto acc = elim::detection_eliminate(segs, elim::AcceptAllDetector{}, {});
  EXPECT_EQ(acc.kept.size(), 4u);
  const auto rej = elim::detection_eliminate(segs, elim::RejectAllDetector{}, {});
  EXPECT_EQ(rej.eliminated.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(rej.eliminated[i].id, segs[i].id);
  try {
    elim::detection_eliminate(segs, ThrowingDetector{}, {});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("s0"), std::string::npos);
  }
}

TEST(DetectionElimination, PredictionsFileFraction) {
  const auto dir = test::temp_dir("predictions");
  const auto path = dir / "pred.csv";
  {
    std::ofstream out(path);
    out << "# clip_id,frame_index,class_id\n";
    for (int f = 10; f < 18; ++f) out << "clip," << f << ",3\n";   // 8 of 10 frames
    for (int f = 30; f < 34; ++f) out << "clip," << f << ",3\n";   // 4 of 10 frames
    out << "clip,31,5\n";
  }
  const auto det = elim::make_detector("predictions:" + path.string());
  std::vector<events::EventSegment> segs{segment("hit", Signal(4, 24000, 24000.0), 3, 10),
                                         segment("miss", Signal(4, 24000, 24000.0), 3, 30)};
  const auto p = elim::detection_eliminate(segs, *det, {});
  ASSERT_EQ(p.kept.size(), 1u);
  EXPECT_EQ(p.kept[0].id, "hit");
  EXPECT_EQ(p.eliminated[0].id, "miss");
  elim::EliminationConfig loose;
  loose.detect_keep_fraction = 0.4;
  EXPECT_EQ(elim::detection_eliminate(segs, *det, loose).kept.size(), 2u);

  {
    std::ofstream out(dir / "bad.csv");
    out << "clip,1,2\nclip,x,2\n";
  }
  try {
    elim::make_detector("predictions:" + (dir / "bad.csv").string());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(elim::make_detector("oracle"), std::invalid_argument);
}

TEST(DetectionElimination, EnergyThreshold) {
  Signal audio(4, 10 * 2400, 24000.0);
  const auto s = test::white_noise(audio.frames(), 9);
  for (std::size_t i = 0; i < audio.frames(); ++i) audio(0, i) = i < 3 * 2400 ? s[i] : 1e-4 * s[i];
  const auto det = elim::make_detector("energy-threshold:20");
  const auto d = det->detect(segment("e", audio, 2, 0, 10));
  ASSERT_EQ(d.size(), 10u);
  for (int f = 0; f < 10; ++f) EXPECT_EQ(d[f].count(2), f < 3 ? 1u : 0u) << f;
}

TEST(RunElimination, DetectionFirstThenEigen) {
  std::vector<events::EventSegment> segs;
  segs.push_back(segment("a", foa_mix(12000, 1, {{sf::SphDirection::from_degrees(0, 0), 1.0}}), 1, 0));
  segs.push_back(segment("b", foa_mix(12000, 2, {{sf::SphDirection::from_degrees(0, 0), 1.0},
                                                 {sf::SphDirection::from_degrees(180, 0), 1.0}}), 1, 20));
  segs.push_back(segment("c", foa_mix(12000, 3, {{sf::SphDirection::from_degrees(0, 0), 1.0}}), 2, 40));
  std::map<std::pair<std::string, int>, std::set<int>> table;
  for (int f = 0; f < 60; ++f) table[{"clip", f}] = {1};
  const elim::PredictionsFileDetector det(table);
  const auto res = elim::run_elimination(segs, det, {});
  EXPECT_EQ(res.report.extracted, 3);
  EXPECT_EQ(res.report.detection_eliminated, 1);
  EXPECT_EQ(res.report.eigen_eliminated, 1);
  EXPECT_EQ(res.report.kept, 1);
  ASSERT_EQ(res.kept.size(), 1u);
  EXPECT_EQ(res.kept[0].id, "a");
  ASSERT_EQ(res.report.rows.size(), 3u);
  EXPECT_FALSE(res.report.rows[2].eigen_kept.has_value());  // "c" never reached the eigen stage
  const auto text = res.report.to_text();
  EXPECT_NE(text.find("kept 1"), std::string::npos);
  EXPECT_NE(text.find("b\t1\tkept\teliminated\t"), std::string::npos) << text;
  EXPECT_NE(text.find("c\t2\teliminated\t-\t-"), std::string::npos) << text;
}
