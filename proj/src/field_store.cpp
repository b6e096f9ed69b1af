#include "edcluster/field_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "edcluster/errors.hpp"
#include "json.hpp"

namespace edc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string day_label(std::size_t index, const Date& date) {
  return "day " + std::to_string(index) + " (" + format_date(date) + ")";
}

void check_extent(double lo, double hi, std::size_t count, double resolution, const char* axis) {
  if (count == 0) throw ConfigError(std::string("geometry: ") + axis + " count must be >= 1");
  if (count == 1 ? lo > hi : !(lo < hi)) {
    throw ConfigError(std::string("geometry: ") + axis + "_min must be below " + axis + "_max");
  }
  const double implied = (hi - lo) / resolution + 1.0;
  if (std::abs(implied - static_cast<double>(count)) > 0.5) {
    std::ostringstream msg;
    msg << "geometry: " << axis << " extent/resolution implies " << implied << " cells, manifest says "
        << count;
    throw ConfigError(msg.str());
  }
}

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    return ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Dates

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto fail = [&]() -> Date { throw DataError("invalid ISO-8601 date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return fail();
  auto parse = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
  };
  if (!parse(0, 4, y) || !parse(5, 2, m) || !parse(8, 2, d)) return fail();
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return fail();
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

// ---------------------------------------------------------------------------
// Geometry and fields

void GridGeometry::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ConfigError("geometry: resolution must be positive");
  }
  check_extent(lat_min, lat_max, n_rows, resolution, "lat");
  check_extent(lon_min, lon_max, n_cols, resolution, "lon");
}

GridGeometry GridGeometry::unit(std::size_t n_rows, std::size_t n_cols) {
  GridGeometry g;
  g.n_rows = n_rows;
  g.n_cols = n_cols;
  g.lat_min = 0.0;
  g.lat_max = n_rows == 0 ? 0.0 : static_cast<double>(n_rows - 1);
  g.lon_min = 0.0;
  g.lon_max = n_cols == 0 ? 0.0 : static_cast<double>(n_cols - 1);
  g.resolution = 1.0;
  return g;
}

GridField::GridField(GridGeometry geometry, Date date)
    : geometry(geometry), values(geometry.cell_count(), 0.0f), date(date) {}

GridField::GridField(GridGeometry geometry, Date date, std::vector<float> values)
    : geometry(geometry), values(std::move(values)), date(date) {}

void GridField::set_missing(std::size_t cell, bool missing) {
  if (missing_mask.empty()) {
    if (!missing) return;
    missing_mask.assign(values.size(), 0);
  }
  missing_mask[cell] = missing ? 1 : 0;
}

std::size_t GridField::missing_count() const {
  std::size_t n = 0;
  for (auto flag : missing_mask) n += flag != 0;
  return n;
}

bool operator==(const GridField& a, const GridField& b) {
  if (!(a.geometry == b.geometry) || a.date != b.date || a.values.size() != b.values.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool ma = a.is_missing(i);
    if (ma != b.is_missing(i)) return false;
    if (!ma && std::bit_cast<std::uint32_t>(a.values[i]) != std::bit_cast<std::uint32_t>(b.values[i])) {
      return false;
    }
  }
  return true;
}

bool is_nonnegative_variable(std::string_view name) {
  return name == "rainfall" || name == "precipitation" || name == "wind_speed";
}

void FieldStack::push_back(GridField day) {
  if (!(day.geometry == geometry)) throw DataError("push_back: day geometry differs from stack");
  if (!days.empty() && !(days.back().date < day.date)) {
    throw DataError("push_back: date " + format_date(day.date) + " does not follow " +
                    format_date(days.back().date));
  }
  days.push_back(std::move(day));
}

void FieldStack::validate() const {
  geometry.validate();
  const bool nonnegative = is_nonnegative_variable(variable_name);
  for (std::size_t d = 0; d < days.size(); ++d) {
    const GridField& day = days[d];
    if (!(day.geometry == geometry)) throw DataError(day_label(d, day.date) + ": geometry differs from stack");
    if (day.values.size() != geometry.cell_count()) {
      throw DataError(day_label(d, day.date) + ": holds " + std::to_string(day.values.size()) +
                      " values, grid needs " + std::to_string(geometry.cell_count()));
    }
    if (!day.missing_mask.empty() && day.missing_mask.size() != day.values.size()) {
      throw DataError(day_label(d, day.date) + ": missing mask has the wrong size");
    }
    if (d > 0 && !(days[d - 1].date < day.date)) {
      throw DataError(day_label(d, day.date) + ": date not after " + format_date(days[d - 1].date));
    }
    for (std::size_t c = 0; c < day.values.size(); ++c) {
      if (day.is_missing(c)) continue;
      const float v = day.values[c];
      if (!std::isfinite(v)) {
        throw DataError(day_label(d, day.date) + ": non-finite value at cell " + std::to_string(c));
      }
      if (nonnegative && v < 0.0f) {
        throw DataError(day_label(d, day.date) + ": negative " + variable_name + " at cell " +
                        std::to_string(c));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Zones

void ZonePartition::validate(const GridGeometry& geometry) const {
  if (zones.empty()) throw ConfigError("zone partition: at least one zone required");
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const Zone& z = zones[i];
    if (z.row_start >= z.row_end || z.col_start >= z.col_end) {
      throw ConfigError("zone '" + z.name + "' contains no cells");
    }
    if (z.row_end > geometry.n_rows || z.col_end > geometry.n_cols) {
      throw ConfigError("zone '" + z.name + "' extends outside the grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const Zone& o = zones[j];
      const bool rows_overlap = z.row_start < o.row_end && o.row_start < z.row_end;
      const bool cols_overlap = z.col_start < o.col_end && o.col_start < z.col_end;
      if (rows_overlap && cols_overlap) {
        throw ConfigError("zones '" + o.name + "' and '" + z.name + "' overlap");
      }
    }
  }
}

ZonePartition ZonePartition::quadrants(const GridGeometry& geometry) {
  if (geometry.n_rows < 2 || geometry.n_cols < 2) {
    throw ConfigError("quadrant partition needs at least a 2x2 grid");
  }
  const std::size_t r = geometry.n_rows / 2;
  const std::size_t c = geometry.n_cols / 2;
  ZonePartition p;
  p.zones = {
      {"A1", 0, r, 0, c},
      {"A2", 0, r, c, geometry.n_cols},
      {"A3", r, geometry.n_rows, 0, c},
      {"A4", r, geometry.n_rows, c, geometry.n_cols},
  };
  return p;
}

std::vector<double> extract_zone(const GridField& field, const ZonePartition& partition,
                                 std::size_t zone_index) {
  if (zone_index >= partition.size()) {
    throw ConfigError("zone index " + std::to_string(zone_index) + " out of range (" +
                      std::to_string(partition.size()) + " zones)");
  }
  const Zone& z = partition.zones[zone_index];
  if (z.row_end > field.geometry.n_rows || z.col_end > field.geometry.n_cols) {
    throw ConfigError("zone '" + z.name + "' extends outside the grid");
  }
  std::vector<double> out;
  out.reserve(z.area());
  const std::size_t cols = field.geometry.n_cols;
  for (std::size_t r = z.row_start; r < z.row_end; ++r) {
    for (std::size_t c = z.col_start; c < z.col_end; ++c) {
      const std::size_t cell = r * cols + c;
      if (!field.is_missing(cell)) out.push_back(field.values[cell]);
    }
  }
  return out;
}

FieldStack wind_speed_from_components(const FieldStack& u, const FieldStack& v) {
  if (!(u.geometry == v.geometry)) throw DataError("wind speed: u and v geometries differ");
  if (u.size() != v.size()) throw DataError("wind speed: u and v hold different day counts");
  FieldStack out;
  out.geometry = u.geometry;
  out.variable_name = "wind_speed";
  out.units = "m/s";
  out.days.reserve(u.size());
  for (std::size_t d = 0; d < u.size(); ++d) {
    const GridField& fu = u.days[d];
    const GridField& fv = v.days[d];
    if (fu.date != fv.date) {
      throw DataError("wind speed: date mismatch at day " + std::to_string(d) + " (" +
                      format_date(fu.date) + " vs " + format_date(fv.date) + ")");
    }
    GridField speed(u.geometry, fu.date);
    for (std::size_t c = 0; c < speed.values.size(); ++c) {
      if (fu.is_missing(c) || fv.is_missing(c)) {
        speed.set_missing(c);
        continue;
      }
      const double a = fu.values[c];
      const double b = fv.values[c];
      speed.values[c] = static_cast<float>(std::sqrt(a * a + b * b));
    }
    out.days.push_back(std::move(speed));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest + payload

StackManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(manifest_path.string() + ": malformed JSON at byte " + std::to_string(e.byte) + ": " +
                    e.what());
  }
  if (!doc.is_object()) throw DataError(manifest_path.string() + ": manifest must be a JSON object");

  static const char* kRequired[] = {"version", "variable", "units",   "n_rows",     "n_cols",
                                    "lat_min", "lat_max",  "lon_min", "lon_max",    "resolution",
                                    "dates",   "payload_file", "dtype"};
  for (const char* key : kRequired) {
    if (!doc.contains(key)) throw DataError(manifest_path.string() + ": missing key '" + key + "'");
  }
  static const char* kKnown[] = {"version", "variable", "units",      "n_rows", "n_cols",
                                 "lat_min", "lat_max",  "lon_min",    "lon_max", "resolution",
                                 "dates",   "payload_file", "dtype",  "missing", "provenance"};
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* key : kKnown) known = known || item.key() == key;
    if (!known) throw DataError(manifest_path.string() + ": unknown key '" + item.key() + "'");
  }

  StackManifest m;
  try {
    m.version = doc.at("version").get<int>();
    m.variable = doc.at("variable").get<std::string>();
    m.units = doc.at("units").get<std::string>();
    m.geometry.n_rows = doc.at("n_rows").get<std::size_t>();
    m.geometry.n_cols = doc.at("n_cols").get<std::size_t>();
    m.geometry.lat_min = doc.at("lat_min").get<double>();
    m.geometry.lat_max = doc.at("lat_max").get<double>();
    m.geometry.lon_min = doc.at("lon_min").get<double>();
    m.geometry.lon_max = doc.at("lon_max").get<double>();
    m.geometry.resolution = doc.at("resolution").get<double>();
    m.payload_file = doc.at("payload_file").get<std::string>();
    const auto dtype = doc.at("dtype").get<std::string>();
    if (dtype != "f32le") throw DataError(manifest_path.string() + ": unsupported dtype '" + dtype + "'");
    for (const auto& d : doc.at("dates")) m.dates.push_back(parse_date(d.get<std::string>()));
    if (doc.contains("missing")) {
      const auto& miss = doc.at("missing");
      if (miss.is_string()) {
        const auto s = miss.get<std::string>();
        if (s != "nan") throw DataError(manifest_path.string() + ": 'missing' must be \"nan\" or a number");
      } else {
        m.missing_sentinel = miss.get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (m.version != kStackFormatVersion) {
    throw DataError(manifest_path.string() + ": unsupported version " + std::to_string(m.version));
  }
  try {
    m.geometry.validate();
  } catch (const ConfigError& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  return m;
}

FieldStack load_stack(const fs::path& manifest_path, const WarningSink& warn) {
  const StackManifest m = read_manifest(manifest_path);
  const fs::path payload_path = manifest_path.parent_path() / m.payload_file;

  for (std::size_t d = 1; d < m.dates.size(); ++d) {
    if (!(m.dates[d - 1] < m.dates[d])) {
      throw DataError(manifest_path.string() + ": dates[" + std::to_string(d) + "] = " +
                      format_date(m.dates[d]) + " is not after " + format_date(m.dates[d - 1]));
    }
  }

  const std::size_t cells = m.geometry.cell_count();
  const std::uintmax_t day_bytes = static_cast<std::uintmax_t>(cells) * 4u;
  const std::uintmax_t expected = day_bytes * m.dates.size();
  std::error_code ec;
  const std::uintmax_t actual = fs::file_size(payload_path, ec);
  if (ec) throw DataError("cannot stat payload " + payload_path.string() + ": " + ec.message());
  if (actual != expected) {
    std::ostringstream msg;
    msg << payload_path.string() << ": payload holds " << actual << " bytes, expected " << expected << " ("
        << m.dates.size() << " days x " << cells << " f32 values)";
    if (actual < expected && day_bytes > 0) {
      const std::uintmax_t bad_day = actual / day_bytes;
      msg << "; day " << bad_day << " (" << format_date(m.dates[bad_day]) << ") is incomplete from byte offset "
          << bad_day * day_bytes;
    } else {
      msg << "; " << (actual - expected) << " trailing bytes after the last day at offset " << expected;
    }
    throw DataError(msg.str());
  }

  std::ifstream in(payload_path, std::ios::binary);
  if (!in) throw DataError("cannot open payload " + payload_path.string());

  FieldStack stack;
  stack.geometry = m.geometry;
  stack.variable_name = m.variable;
  stack.units = m.units;
  stack.days.reserve(m.dates.size());
  std::vector<std::uint32_t> raw(cells);
  std::size_t missing_cells = 0, missing_days = 0;
  for (std::size_t d = 0; d < m.dates.size(); ++d) {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(day_bytes));
    if (!in) {
      throw DataError(payload_path.string() + ": read failed in day " + std::to_string(d) + " at byte offset " +
                      std::to_string(d * day_bytes));
    }
    GridField day(m.geometry, m.dates[d]);
    for (std::size_t c = 0; c < cells; ++c) {
      const float v = std::bit_cast<float>(to_little_endian(raw[c]));
      const bool missing = m.missing_sentinel ? static_cast<double>(v) == *m.missing_sentinel : std::isnan(v);
      if (missing) {
        day.set_missing(c);
      } else {
        day.values[c] = v;
      }
    }
    if (!day.missing_mask.empty()) {
      missing_cells += day.missing_count();
      ++missing_days;
    }
    stack.days.push_back(std::move(day));
  }
  stack.validate();
  if (missing_cells > 0 && warn) {
    warn(manifest_path.string() + ": " + std::to_string(missing_cells) + " missing cells across " +
         std::to_string(missing_days) +
         " days; excluded from histograms, read as 0 by L2 when present in the other day");
  }
  return stack;
}

void save_stack(const FieldStack& stack, const fs::path& manifest_path, const std::string& provenance_json) {
  stack.validate();
  fs::path payload_path = manifest_path;
  payload_path.replace_extension(".f32");

  json doc;
  doc["version"] = kStackFormatVersion;
  doc["variable"] = stack.variable_name;
  doc["units"] = stack.units;
  doc["n_rows"] = stack.geometry.n_rows;
  doc["n_cols"] = stack.geometry.n_cols;
  doc["lat_min"] = stack.geometry.lat_min;
  doc["lat_max"] = stack.geometry.lat_max;
  doc["lon_min"] = stack.geometry.lon_min;
  doc["lon_max"] = stack.geometry.lon_max;
  doc["resolution"] = stack.geometry.resolution;
  json dates = json::array();
  for (const auto& day : stack.days) dates.push_back(format_date(day.date));
  doc["dates"] = std::move(dates);
  doc["payload_file"] = payload_path.filename().string();
  doc["dtype"] = "f32le";
  doc["missing"] = "nan";
  if (!provenance_json.empty()) doc["provenance"] = json::parse(provenance_json);

  {
    std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write payload " + payload_path.string());
    std::vector<std::uint32_t> raw(stack.geometry.cell_count());
    const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    for (const auto& day : stack.days) {
      for (std::size_t c = 0; c < raw.size(); ++c) {
        raw[c] = to_little_endian(day.is_missing(c) ? nan_bits : std::bit_cast<std::uint32_t>(day.values[c]));
      }
      out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    }
    if (!out) throw DataError("write failed for payload " + payload_path.string());
  }
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + manifest_path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed for manifest " + manifest_path.string());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::vector<std::string>> read_csv_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string tok = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto first = tok.find_first_not_of(" \t");
      const auto last = tok.find_last_not_of(" \t");
      tokens.push_back(first == std::string::npos ? std::string{} : tok.substr(first, last - first + 1));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(tokens));
  }
  return rows;
}

}  // namespace

GridField read_csv_day(const fs::path& path, const GridGeometry& geometry, Date date,
                       std::optional<double> missing_sentinel) {
  const auto rows = read_csv_tokens(path);
  if (rows.size() != geometry.n_rows) {
    throw DataError(path.string() + ": " + std::to_string(rows.size()) + " rows, expected " +
                    std::to_string(geometry.n_rows));
  }
  GridField field(geometry, date);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != geometry.n_cols) {
      throw DataError(path.string() + ": line " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                      " columns, expected " + std::to_string(geometry.n_cols));
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string& tok = rows[r][c];
      const std::size_t cell = r * geometry.n_cols + c;
      if (tok.empty() || tok == "nan" || tok == "NaN" || tok == "NAN") {
        field.set_missing(cell);
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError(path.string() + ": line " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                        ": not a number '" + tok + "'");
      }
      if (missing_sentinel && v == *missing_sentinel) {
        field.set_missing(cell);
      } else {
        field.values[cell] = static_cast<float>(v);
      }
    }
  }
  return field;
}

FieldStack ingest_csv(std::span<const fs::path> paths, std::span<const Date> dates, std::string variable,
                      std::string units, std::optional<GridGeometry> geometry,
                      std::optional<double> missing_sentinel) {
  if (paths.size() != dates.size()) {
    throw ConfigError("ingest: " + std::to_string(paths.size()) + " files but " + std::to_string(dates.size()) +
                      " dates");
  }
  FieldStack stack;
  stack.variable_name = std::move(variable);
  stack.units = std::move(units);
  if (geometry) {
    stack.geometry = *geometry;
  } else if (!paths.empty()) {
    const auto rows = read_csv_tokens(paths.front());
    if (rows.empty()) throw DataError(paths.front().string() + ": empty CSV");
    stack.geometry = GridGeometry::unit(rows.size(), rows.front().size());
  } else {
    stack.geometry = GridGeometry::unit(1, 1);
  }
  stack.geometry.validate();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    GridField day = read_csv_day(paths[i], stack.geometry, dates[i], missing_sentinel);
    if (!stack.days.empty() && !(stack.days.back().date < day.date)) {
      throw DataError(paths[i].string() + ": date " + format_date(day.date) + " does not follow " +
                      format_date(stack.days.back().date));
    }
    stack.days.push_back(std::move(day));
  }
  stack.validate();
  return stack;
}

}  // namespace edc
