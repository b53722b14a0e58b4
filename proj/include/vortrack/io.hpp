#pragma once

#include <json.hpp>

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"
#include "vortrack/signal.hpp"

namespace vortrack {

using Json = nlohmann::json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, std::size_t line, const std::string& what) {
  fail(ErrorCode::SchemaError, path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(std::string_view s, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) schema_error(path, line, "not a number: '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, const std::string& path, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) schema_error(path, line, "not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto w : split(s, ' ')) {
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(ErrorCode::IoError, "cannot create directory '" + p.parent_path().string() + "'");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

/// Line cursor that tracks 1-based line numbers.
class LineReader {
 public:
  LineReader(std::string text, std::string path) : text_(std::move(text)), path_(std::move(path)) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    line = std::string_view(text_).substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string text_;
  std::string path_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

struct Header {
  std::map<std::string, std::string> fields;
  std::size_t lines = 0;
};

/// Reads "# key value" lines up to and including the column line.
inline Header read_header(LineReader& r, std::string_view magic, std::string_view columns) {
  Header h;
  std::string_view line;
  if (!r.next(line) || line.substr(0, 2) != "# ") schema_error(r.path(), r.line_no(), "missing format header");
  const auto first = words(line.substr(2));
  if (first.size() != 2 || first[0] != magic) schema_error(r.path(), r.line_no(), "expected '# " + std::string(magic) + " <version>'");
  if (first[1] != "1") schema_error(r.path(), r.line_no(), "unsupported format version " + std::string(first[1]));
  while (r.next(line)) {
    if (line.substr(0, 2) == "# ") {
      const auto body = line.substr(2);
      const auto sp = body.find(' ');
      const std::string key(body.substr(0, sp));
      h.fields[key] = sp == std::string_view::npos ? std::string() : std::string(body.substr(sp + 1));
      continue;
    }
    if (line != columns) schema_error(r.path(), r.line_no(), "expected column line '" + std::string(columns) + "'");
    h.lines = r.line_no();
    return h;
  }
  schema_error(r.path(), r.line_no(), "missing column line");
}

inline const std::string& header_field(const Header& h, const std::string& key, const LineReader& r) {
  const auto it = h.fields.find(key);
  if (it == h.fields.end()) schema_error(r.path(), h.lines, "header lacks '" + key + "'");
  return it->second;
}

inline TimeGrid parse_grid(const Header& h, const LineReader& r) {
  TimeGrid g;
  bool have_t0 = false, have_h = false, have_nt = false;
  for (auto w : words(header_field(h, "grid", r))) {
    const auto eq = w.find('=');
    if (eq == std::string_view::npos) schema_error(r.path(), h.lines, "malformed grid entry");
    const auto key = w.substr(0, eq), val = w.substr(eq + 1);
    if (key == "t0") { g.t0 = parse_double(val, r.path(), h.lines); have_t0 = true; }
    else if (key == "h") { g.h = parse_double(val, r.path(), h.lines); have_h = true; }
    else if (key == "nt") { g.nt = parse_uint(val, r.path(), h.lines); have_nt = true; }
    else schema_error(r.path(), h.lines, "unknown grid key '" + std::string(key) + "'");
  }
  if (!have_t0 || !have_h || !have_nt) schema_error(r.path(), h.lines, "grid needs t0, h and nt");
  if (!(g.h > 0.0) || g.nt < 1) schema_error(r.path(), h.lines, "invalid grid");
  return g;
}

inline std::string grid_line(const TimeGrid& g) {
  return "# grid t0=" + format_double(g.t0) + " h=" + format_double(g.h) + " nt=" + std::to_string(g.nt) + "\n";
}

}  // namespace detail

/// Contents of a trajectory file: tracer and/or vortex tracks on one grid.
struct TrajectoryData {
  TimeGrid grid;
  Provenance provenance = Provenance::Raw;
  /// Seeds of every stochastic stage that produced the data, in order.
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<double> circulations;       // one per vortex column, may be empty
  std::vector<std::size_t> boundaries;    // partition start samples, may be empty
  PointTable tracers;                     // nt x N_p
  PointTable vortices;                    // nt x N_v

  TrajectoryEnsemble ensemble() const {
    if (tracers.cols() == 0) fail(ErrorCode::ShapeMismatch, "trajectory file holds no tracers");
    return {grid, tracers, provenance};
  }

  friend bool operator==(const TrajectoryData&, const TrajectoryData&) = default;
};

inline constexpr std::string_view kTrajectoryMagic = "vortrack-trajectory";
inline constexpr std::string_view kTrajectoryColumns = "time,kind,id,x,y";
inline constexpr std::string_view kVelocityMagic = "vortrack-velocity";
inline constexpr std::string_view kVelocityColumns = "time,kind,id,vx,vy";

namespace detail {

inline std::string seeds_line(const std::vector<std::pair<std::string, std::uint64_t>>& seeds) {
  std::string s = "# seeds";
  for (const auto& [k, v] : seeds) s += " " + k + "=" + std::to_string(v);
  return s + "\n";
}

inline std::vector<std::pair<std::string, std::uint64_t>> parse_seeds(const Header& h, const LineReader& r) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  const auto it = h.fields.find("seeds");
  if (it == h.fields.end()) return out;
  for (auto w : words(it->second)) {
    const auto eq = w.find('=');
    if (eq == std::string_view::npos) schema_error(r.path(), h.lines, "malformed seed entry");
    out.emplace_back(std::string(w.substr(0, eq)), parse_uint(w.substr(eq + 1), r.path(), h.lines));
  }
  return out;
}

/// Writes rows sorted by (time, kind, id); "tracer" sorts before "vortex".
inline std::string format_rows(const TimeGrid& grid, const PointTable& tracers, const PointTable& vortices) {
  std::string out;
  out.reserve(grid.nt * (tracers.cols() + vortices.cols()) * 64);
  auto emit = [&](const std::string& time, std::string_view kind, std::size_t id, PlanePoint p) {
    out += time;
    out += ',';
    out += kind;
    out += ',';
    out += std::to_string(id);
    out += ',';
    append_double(out, p.x);
    out += ',';
    append_double(out, p.y);
    out += '\n';
  };
  for (std::size_t k = 0; k < grid.nt; ++k) {
    const std::string time = format_double(grid.time(k));
    for (std::size_t i = 0; i < tracers.cols(); ++i) emit(time, "tracer", i, tracers(k, i));
    for (std::size_t i = 0; i < vortices.cols(); ++i) emit(time, "vortex", i, vortices(k, i));
  }
  return out;
}

/// Parses rows into tracer and vortex tables, checking grid times and ordering.
inline void parse_rows(LineReader& r, const TimeGrid& grid, PointTable& tracers, PointTable& vortices) {
  std::string_view line;
  // The first sample fixes the entity layout.
  std::vector<std::pair<bool, std::size_t>> layout;  // (is_vortex, id)
  std::vector<std::vector<PlanePoint>> rows;
  std::size_t k = 0, slot = 0;
  std::vector<PlanePoint> current;
  bool layout_fixed = false;
  auto finish_sample = [&]() {
    if (!layout_fixed) layout_fixed = true;
    else if (current.size() != layout.size()) schema_error(r.path(), r.line_no(), "sample has a different entity set");
    rows.push_back(std::move(current));
    current.clear();
    ++k;
    slot = 0;
  };
  std::string expected_time = format_double(grid.time(0));
  while (r.next(line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) schema_error(r.path(), r.line_no(), "expected 5 fields");
    if (f[0] != expected_time) {
      if (current.empty()) schema_error(r.path(), r.line_no(), "time " + std::string(f[0]) + " is not grid sample " + expected_time);
      finish_sample();
      if (k >= grid.nt) schema_error(r.path(), r.line_no(), "more samples than the grid declares");
      expected_time = format_double(grid.time(k));
      if (f[0] != expected_time) schema_error(r.path(), r.line_no(), "time " + std::string(f[0]) + " is not grid sample " + expected_time);
    }
    bool is_vortex = false;
    if (f[1] == "vortex") is_vortex = true;
    else if (f[1] != "tracer") schema_error(r.path(), r.line_no(), "unknown kind '" + std::string(f[1]) + "'");
    const std::size_t id = parse_uint(f[2], r.path(), r.line_no());
    if (!layout_fixed) {
      const std::pair<bool, std::size_t> want{is_vortex, id};
      if (!layout.empty() && !(layout.back() < want)) schema_error(r.path(), r.line_no(), "rows not sorted by (time, kind, id)");
      layout.push_back(want);
    } else if (slot >= layout.size() || layout[slot] != std::pair<bool, std::size_t>{is_vortex, id}) {
      schema_error(r.path(), r.line_no(), "entity order differs from the first sample");
    }
    current.push_back({parse_double(f[3], r.path(), r.line_no()), parse_double(f[4], r.path(), r.line_no())});
    ++slot;
  }
  if (!current.empty()) finish_sample();
  if (rows.size() != grid.nt) schema_error(r.path(), r.line_no(), "found " + std::to_string(rows.size()) + " samples, header declares " + std::to_string(grid.nt));

  std::size_t np = 0, nv = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto [is_vortex, id] = layout[i];
    std::size_t& count = is_vortex ? nv : np;
    if (id != count) schema_error(r.path(), r.line_no(), "entity ids must run 0, 1, 2, ... per kind");
    ++count;
  }
  tracers = PointTable(grid.nt, np);
  vortices = PointTable(grid.nt, nv);
  for (std::size_t s = 0; s < grid.nt; ++s) {
    for (std::size_t i = 0; i < np; ++i) tracers(s, i) = rows[s][i];
    for (std::size_t i = 0; i < nv; ++i) vortices(s, i) = rows[s][np + i];
  }
}

}  // namespace detail

inline std::string format_trajectory(const TrajectoryData& d) {
  std::string out;
  out += "# " + std::string(kTrajectoryMagic) + " 1\n";
  out += detail::grid_line(d.grid);
  out += "# provenance " + std::string(to_string(d.provenance)) + "\n";
  out += detail::seeds_line(d.seeds);
  if (!d.circulations.empty()) {
    out += "# circulations";
    for (double g : d.circulations) out += " " + format_double(g);
    out += "\n";
  }
  if (!d.boundaries.empty()) {
    out += "# boundaries";
    for (auto b : d.boundaries) out += " " + std::to_string(b);
    out += "\n";
  }
  out += std::string(kTrajectoryColumns) + "\n";
  out += detail::format_rows(d.grid, d.tracers, d.vortices);
  return out;
}

inline void write_trajectory(const std::string& path, const TrajectoryData& d) {
  if (d.tracers.rows() != d.grid.nt || d.vortices.rows() != d.grid.nt) {
    fail(ErrorCode::ShapeMismatch, "trajectory tables do not match the grid");
  }
  if (!d.circulations.empty() && d.circulations.size() != d.vortices.cols()) {
    fail(ErrorCode::ShapeMismatch, "one circulation per vortex column required");
  }
  detail::write_file(path, format_trajectory(d));
}

inline TrajectoryData parse_trajectory(std::string text, const std::string& path) {
  detail::LineReader r(std::move(text), path);
  const auto h = detail::read_header(r, kTrajectoryMagic, kTrajectoryColumns);
  TrajectoryData d;
  d.grid = detail::parse_grid(h, r);
  d.provenance = provenance_from_string(detail::header_field(h, "provenance", r));
  d.seeds = detail::parse_seeds(h, r);
  if (auto it = h.fields.find("circulations"); it != h.fields.end()) {
    for (auto w : detail::words(it->second)) d.circulations.push_back(detail::parse_double(w, path, h.lines));
  }
  if (auto it = h.fields.find("boundaries"); it != h.fields.end()) {
    for (auto w : detail::words(it->second)) d.boundaries.push_back(detail::parse_uint(w, path, h.lines));
  }
  detail::parse_rows(r, d.grid, d.tracers, d.vortices);
  if (!d.circulations.empty() && d.circulations.size() != d.vortices.cols()) {
    detail::schema_error(path, h.lines, "circulation count does not match the vortex tracks");
  }
  return d;
}

inline TrajectoryData read_trajectory(const std::string& path) { return parse_trajectory(detail::read_file(path), path); }

struct VelocityData {
  TimeGrid grid;
  Provenance provenance = Provenance::Smoothed;  // of the positions differentiated
  PointTable velocities;                         // nt x N_p

  VelocityEnsemble ensemble() const { return {grid, velocities}; }

  friend bool operator==(const VelocityData&, const VelocityData&) = default;
};

inline std::string format_velocity(const VelocityData& d) {
  std::string out;
  out += "# " + std::string(kVelocityMagic) + " 1\n";
  out += detail::grid_line(d.grid);
  out += "# provenance " + std::string(to_string(d.provenance)) + "\n";
  out += std::string(kVelocityColumns) + "\n";
  out += detail::format_rows(d.grid, d.velocities, PointTable(d.grid.nt, 0));
  return out;
}

inline void write_velocity(const std::string& path, const VelocityData& d) {
  if (d.velocities.rows() != d.grid.nt) fail(ErrorCode::ShapeMismatch, "velocity table does not match the grid");
  detail::write_file(path, format_velocity(d));
}

inline VelocityData parse_velocity(std::string text, const std::string& path) {
  detail::LineReader r(std::move(text), path);
  const auto h = detail::read_header(r, kVelocityMagic, kVelocityColumns);
  VelocityData d;
  d.grid = detail::parse_grid(h, r);
  d.provenance = provenance_from_string(detail::header_field(h, "provenance", r));
  PointTable vortices;
  detail::parse_rows(r, d.grid, d.velocities, vortices);
  if (vortices.cols() != 0) detail::schema_error(path, h.lines, "velocity files hold tracer rows only");
  return d;
}

inline VelocityData read_velocity(const std::string& path) { return parse_velocity(detail::read_file(path), path); }

inline Json read_json(const std::string& path) {
  const std::string text = detail::read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const Json& j) { detail::write_file(path, j.dump(2) + "\n"); }

/// Plot-ready columnar text: a header row, then one row per record.
inline void write_columns(const std::string& path, const std::vector<std::string>& names,
                          const std::vector<std::vector<double>>& columns) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  out += "\n";
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) fail(ErrorCode::ShapeMismatch, "columns differ in length");
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      append_double(out, columns[i][k]);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

}  // namespace vortrack
