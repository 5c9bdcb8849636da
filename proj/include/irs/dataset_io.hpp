// Dataset metadata CSV and the on-disk bank indexes (RIR, segment and
// enhanced-source banks).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irs/event_extraction.hpp"

namespace irs::io {

/// Rows `frame,class,track,azimuth,elevation`, integers. Blank lines are
/// ignored; anything else malformed throws std::invalid_argument naming the
/// line.
std::vector<events::LabelFrame> parse_metadata_text(const std::string& text, const std::string& source = "<text>");
std::vector<events::LabelFrame> parse_metadata(const std::filesystem::path& path);
/// Sorted by (frame, track, class).
std::string format_metadata(std::vector<events::LabelFrame> frames);
void emit_metadata(const std::filesystem::path& path, const std::vector<events::LabelFrame>& frames);

/// Header-keyed CSV with typed accessors whose errors carry the line number.
class CsvTable {
 public:
  static CsvTable parse(const std::string& text, const std::string& source,
                        const std::vector<std::string>& required_columns);
  static CsvTable load(const std::filesystem::path& path, const std::vector<std::string>& required_columns);

  std::size_t size() const { return rows_.size(); }
  const std::string& str(std::size_t row, const std::string& col) const;
  double num(std::size_t row, const std::string& col) const;
  long long integer(std::size_t row, const std::string& col) const;
  int line(std::size_t row) const { return lines_[row]; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<int> lines_;
  std::size_t column(const std::string& col) const;
};

/// Shortest representation that reads back to the same double.
std::string fmt_double(double v);

struct RirIndexRow {
  std::string id;
  int room = 0;
  double dims[3] = {0, 0, 0};
  double rt60 = 0.0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double distance = 0.0;
  std::uint64_t seed = 0;
  std::string file;  // relative to the index

  bool operator==(const RirIndexRow&) const = default;
};
void write_rir_index(const std::filesystem::path& path, const std::vector<RirIndexRow>& rows);
std::vector<RirIndexRow> read_rir_index(const std::filesystem::path& path);

struct SegmentIndexRow {
  std::string id;
  std::string source_clip;
  int class_id = 0;
  int track_id = 0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  std::size_t start = 0;
  std::size_t end = 0;
  int first_frame = 0;
  int last_frame = 0;
  std::string file;

  bool operator==(const SegmentIndexRow&) const = default;
};
void write_segment_index(const std::filesystem::path& path, const std::vector<SegmentIndexRow>& rows);
std::vector<SegmentIndexRow> read_segment_index(const std::filesystem::path& path);

struct SourceIndexRow {
  std::string id;
  int class_id = 0;
  std::string provenance;
  double rms = 0.0;
  std::string file;

  bool operator==(const SourceIndexRow&) const = default;
};
void write_source_index(const std::filesystem::path& path, const std::vector<SourceIndexRow>& rows);
std::vector<SourceIndexRow> read_source_index(const std::filesystem::path& path);

}  // namespace irs::io
