#include "irs/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "irs/audio_io.hpp"

namespace irs::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

std::vector<std::pair<int, std::string>> lines_of(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.emplace_back(n, line);
  }
  return out;
}

bool to_int(const std::string& s, long long& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

bool to_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, p);
}

std::vector<events::LabelFrame> parse_metadata_text(const std::string& text, const std::string& source) {
  std::vector<events::LabelFrame> out;
  for (const auto& [n, line] : lines_of(text)) {
    const std::string where = source + ":" + std::to_string(n) + ": ";
    const auto f = split(line);
    if (f.size() != 5) {
      throw std::invalid_argument(where + "expected 5 fields frame,class,track,azimuth,elevation, got " +
                                  std::to_string(f.size()));
    }
    long long v[5];
    static const char* names[5] = {"frame", "class", "track", "azimuth", "elevation"};
    for (int i = 0; i < 5; ++i) {
      if (!to_int(f[i], v[i]) || v[i] < -100000 || v[i] > 100000000) {
        throw std::invalid_argument(where + names[i] + " '" + f[i] + "' is not an integer");
      }
    }
    events::LabelFrame lf{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                          static_cast<int>(v[3]), static_cast<int>(v[4])};
    try {
      lf.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
    out.push_back(lf);
  }
  return out;
}

std::vector<events::LabelFrame> parse_metadata(const std::filesystem::path& path) {
  return parse_metadata_text(read_text(path), path.string());
}

std::string format_metadata(std::vector<events::LabelFrame> frames) {
  std::stable_sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame_index, a.track_id, a.class_id) < std::tie(b.frame_index, b.track_id, b.class_id);
  });
  std::string out;
  for (const auto& f : frames) {
    out += std::to_string(f.frame_index) + "," + std::to_string(f.class_id) + "," + std::to_string(f.track_id) + "," +
           std::to_string(f.azimuth_deg) + "," + std::to_string(f.elevation_deg) + "\n";
  }
  return out;
}

void emit_metadata(const std::filesystem::path& path, const std::vector<events::LabelFrame>& frames) {
  for (const auto& f : frames) f.validate();
  write_text_atomic(path, format_metadata(frames));
}

CsvTable CsvTable::parse(const std::string& text, const std::string& source,
                         const std::vector<std::string>& required_columns) {
  CsvTable t;
  t.source_ = source;
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::invalid_argument(source + ": missing header line");
  t.header_ = split(lines[0].second);
  for (const auto& c : required_columns) {
    if (std::find(t.header_.begin(), t.header_.end(), c) == t.header_.end()) {
      throw std::invalid_argument(source + ":" + std::to_string(lines[0].first) + ": header lacks column '" + c + "'");
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split(lines[i].second);
    if (f.size() != t.header_.size()) {
      throw std::invalid_argument(source + ":" + std::to_string(lines[i].first) + ": expected " +
                                  std::to_string(t.header_.size()) + " fields, got " + std::to_string(f.size()));
    }
    t.rows_.push_back(std::move(f));
    t.lines_.push_back(lines[i].first);
  }
  return t;
}

CsvTable CsvTable::load(const std::filesystem::path& path, const std::vector<std::string>& required_columns) {
  return parse(read_text(path), path.string(), required_columns);
}

std::size_t CsvTable::column(const std::string& col) const {
  const auto it = std::find(header_.begin(), header_.end(), col);
  if (it == header_.end()) throw std::invalid_argument(source_ + ": no column '" + col + "'");
  return static_cast<std::size_t>(it - header_.begin());
}

const std::string& CsvTable::str(std::size_t row, const std::string& col) const { return rows_.at(row)[column(col)]; }

double CsvTable::num(std::size_t row, const std::string& col) const {
  double v;
  const auto& s = str(row, col);
  if (!to_double(s, v)) {
    throw std::invalid_argument(source_ + ":" + std::to_string(lines_[row]) + ": " + col + " '" + s +
                                "' is not a number");
  }
  return v;
}

long long CsvTable::integer(std::size_t row, const std::string& col) const {
  long long v;
  const auto& s = str(row, col);
  if (!to_int(s, v)) {
    throw std::invalid_argument(source_ + ":" + std::to_string(lines_[row]) + ": " + col + " '" + s +
                                "' is not an integer");
  }
  return v;
}

void write_rir_index(const std::filesystem::path& path, const std::vector<RirIndexRow>& rows) {
  std::string out = "id,room,lx,ly,lz,rt60,azimuth,elevation,distance,seed,file\n";
  for (const auto& r : rows) {
    out += r.id + "," + std::to_string(r.room) + "," + fmt_double(r.dims[0]) + "," + fmt_double(r.dims[1]) + "," +
           fmt_double(r.dims[2]) + "," + fmt_double(r.rt60) + "," + fmt_double(r.azimuth_deg) + "," +
           fmt_double(r.elevation_deg) + "," + fmt_double(r.distance) + "," + std::to_string(r.seed) + "," + r.file +
           "\n";
  }
  write_text_atomic(path, out);
}

std::vector<RirIndexRow> read_rir_index(const std::filesystem::path& path) {
  const auto t = CsvTable::load(
      path, {"id", "room", "lx", "ly", "lz", "rt60", "azimuth", "elevation", "distance", "seed", "file"});
  std::vector<RirIndexRow> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto& r = out[i];
    r.id = t.str(i, "id");
    r.room = static_cast<int>(t.integer(i, "room"));
    r.dims[0] = t.num(i, "lx");
    r.dims[1] = t.num(i, "ly");
    r.dims[2] = t.num(i, "lz");
    r.rt60 = t.num(i, "rt60");
    r.azimuth_deg = t.num(i, "azimuth");
    r.elevation_deg = t.num(i, "elevation");
    r.distance = t.num(i, "distance");
    const auto& s = t.str(i, "seed");
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), r.seed);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(t.line(i)) + ": bad seed '" + s + "'");
    }
    r.file = t.str(i, "file");
  }
  return out;
}

void write_segment_index(const std::filesystem::path& path, const std::vector<SegmentIndexRow>& rows) {
  std::string out = "id,source_clip,class,track,azimuth,elevation,start,end,first_frame,last_frame,file\n";
  for (const auto& r : rows) {
    out += r.id + "," + r.source_clip + "," + std::to_string(r.class_id) + "," + std::to_string(r.track_id) + "," +
           fmt_double(r.azimuth_deg) + "," + fmt_double(r.elevation_deg) + "," + std::to_string(r.start) + "," +
           std::to_string(r.end) + "," + std::to_string(r.first_frame) + "," + std::to_string(r.last_frame) + "," +
           r.file + "\n";
  }
  write_text_atomic(path, out);
}

std::vector<SegmentIndexRow> read_segment_index(const std::filesystem::path& path) {
  const auto t = CsvTable::load(path, {"id", "source_clip", "class", "track", "azimuth", "elevation", "start", "end",
                                       "first_frame", "last_frame", "file"});
  std::vector<SegmentIndexRow> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto& r = out[i];
    r.id = t.str(i, "id");
    r.source_clip = t.str(i, "source_clip");
    r.class_id = static_cast<int>(t.integer(i, "class"));
    r.track_id = static_cast<int>(t.integer(i, "track"));
    r.azimuth_deg = t.num(i, "azimuth");
    r.elevation_deg = t.num(i, "elevation");
    r.start = static_cast<std::size_t>(t.integer(i, "start"));
    r.end = static_cast<std::size_t>(t.integer(i, "end"));
    r.first_frame = static_cast<int>(t.integer(i, "first_frame"));
    r.last_frame = static_cast<int>(t.integer(i, "last_frame"));
    r.file = t.str(i, "file");
  }
  return out;
}

void write_source_index(const std::filesystem::path& path, const std::vector<SourceIndexRow>& rows) {
  std::string out = "id,class,provenance,rms,file\n";
  for (const auto& r : rows) {
    out += r.id + "," + std::to_string(r.class_id) + "," + r.provenance + "," + fmt_double(r.rms) + "," + r.file + "\n";
  }
  write_text_atomic(path, out);
}

std::vector<SourceIndexRow> read_source_index(const std::filesystem::path& path) {
  const auto t = CsvTable::load(path, {"id", "class", "provenance", "rms", "file"});
  std::vector<SourceIndexRow> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i].id = t.str(i, "id");
    out[i].class_id = static_cast<int>(t.integer(i, "class"));
    out[i].provenance = t.str(i, "provenance");
    out[i].rms = t.num(i, "rms");
    out[i].file = t.str(i, "file");
  }
  return out;
}

}  // namespace irs::io
