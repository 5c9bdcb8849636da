// Pipeline stages. Each stage reads and writes only its bank directories
// under work_dir (rirs/, segments/, elimination/, sources/) or the fold
// output directory, and skips entries whose manifest key still matches.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "irs/config.hpp"
#include "irs/dsp.hpp"

namespace irs::pipeline {

/// manifest.json of one bank: per entry, a key over its inputs and the hash
/// of every file it produced.
class BankManifest {
 public:
  static BankManifest load(const std::filesystem::path& dir);
  bool up_to_date(const std::string& id, const std::string& key) const;
  void set(const std::string& id, const std::string& key, const std::vector<std::string>& files);
  void erase(const std::string& id);
  void save() const;

 private:
  std::filesystem::path dir_;
  struct Entry {
    std::string key;
    std::map<std::string, std::string> files;  // relative path -> fnv1a hex
  };
  std::map<std::string, Entry> entries_;
};

struct StageResult {
  int written = 0;
  int skipped = 0;
};

struct Context {
  config::PipelineConfig cfg;
  dsp::Exec exec = dsp::Exec::parallel;
  std::ostream* log = nullptr;

  std::filesystem::path work() const { return cfg.paths.work_dir; }
  std::filesystem::path rir_dir() const { return work() / "rirs"; }
  std::filesystem::path segment_dir() const { return work() / "segments"; }
  std::filesystem::path elimination_dir() const { return work() / "elimination"; }
  std::filesystem::path source_dir() const { return work() / "sources"; }
};

/// Array used everywhere: cfg.array_file or the built-in 32-capsule sphere.
array::ArraySpec load_array(const config::PipelineConfig& cfg);

/// Draws a room with rt60 in the configured range; dims are redrawn (rt60
/// kept) while the room cannot reach the rt60 with absorption <= 0.99.
struct RoomDraw {
  room::RoomSpec room;
  std::vector<room::Placement> placements;
};
RoomDraw draw_room(std::uint64_t seed, const config::RoomSampling& s, int placements, int attempt);

/// `count` RIRs, placements_per_room per room (the last room may get
/// fewer). count < 1 is an error and writes nothing.
StageResult simulate_rirs(const Context& ctx, int count);

/// Training-fold clips under dataset_root/foa_dev paired by stem with
/// dataset_root/metadata_dev.
StageResult extract(const Context& ctx);

/// Writes elimination/kept.csv and elimination/report.txt.
struct EliminateOutcome {
  StageResult result;
  elim::EliminationReport report;
};
EliminateOutcome eliminate(const Context& ctx);

StageResult enhance(const Context& ctx);

StageResult augment(const Context& ctx);

/// Human-readable statistics of every bank present.
std::string inspect(const Context& ctx);

/// All stages in order. The dataset-dependent stages run only when
/// dataset_root is set.
void run_all(const Context& ctx, int rir_count);

}  // namespace irs::pipeline
