// Pipeline configuration: one JSON document with full defaulting. Every
// algorithm constant is a key whose default is the published value.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irs/array_model.hpp"
#include "irs/augmentation.hpp"
#include "irs/event_extraction.hpp"
#include "irs/interference_elimination.hpp"
#include "irs/room_acoustics.hpp"
#include "irs/source_enhancement.hpp"

namespace irs::config {

struct Paths {
  std::string dataset_root;  // holds foa_dev/ and metadata_dev/
  std::string work_dir = "irs_work";  // banks
  std::string output_dir = "irs_out";  // generated folds

  bool operator==(const Paths&) const = default;
};

struct RoomSampling {
  double rt60_min = 0.1;
  double rt60_max = 0.5;
  std::array<double, 3> dims_min{4.0, 4.0, 2.5};
  std::array<double, 3> dims_max{12.0, 12.0, 5.0};
  double distance_min = 1.0;
  double distance_max = 3.0;
  double wall_margin = 0.5;  // minimum clearance of array and source from walls
  int rooms = 10;
  int placements_per_room = 20;
  double speed_of_sound = 343.0;
  room::AbsorptionModel absorption = room::AbsorptionModel::calibrated;

  void validate() const;
  bool operator==(const RoomSampling&) const = default;
};

struct StftSettings {
  double frame_ms = 20.0;
  double hop_ms = 10.0;

  bool operator==(const StftSettings&) const = default;
};

struct PipelineConfig {
  Paths paths;
  std::string array_file;  // empty: built-in 32-capsule rigid sphere
  double sample_rate = 24000.0;
  StftSettings stft;
  array::EncodingConfig encoding;
  events::ExtractionConfig extraction;
  std::vector<int> train_folds{1, 2, 3, 4};
  elim::EliminationConfig elimination;
  enhance::EnhanceConfig enhancement;
  RoomSampling rooms;
  augment::AugmentConfig augment;
  std::uint64_t master_seed = 1;

  /// Value checks only; path existence is checked by the stage that needs it.
  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Missing keys take defaults; unknown keys and wrong types throw
/// std::invalid_argument naming the key path.
PipelineConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Stable text of a config subset, used in manifests.
std::string fingerprint(const nlohmann::json& j);

}  // namespace irs::config
