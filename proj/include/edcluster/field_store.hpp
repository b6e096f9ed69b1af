#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edc {

using Date = std::chrono::year_month_day;

// ISO-8601 calendar date, "YYYY-MM-DD".
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

// Receives non-fatal diagnostics (e.g. missing cells found while loading).
using WarningSink = std::function<void(const std::string&)>;

struct GridGeometry {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
  double resolution = 1.0;

  std::size_t cell_count() const { return n_rows * n_cols; }

  // Throws ConfigError when the extents and resolution disagree with the
  // row/column counts by more than half a cell.
  void validate() const;

  // Index-space geometry: rows and columns at unit spacing from (0, 0).
  static GridGeometry unit(std::size_t n_rows, std::size_t n_cols);

  bool operator==(const GridGeometry&) const = default;
};

// One day of a gridded scalar variable, stored row-major.
//
// missing_mask is either empty (no missing cells) or holds one flag per cell.
// The value of a masked cell carries no meaning and is ignored by equality.
struct GridField {
  GridGeometry geometry;
  std::vector<float> values;
  Date date{};
  std::vector<std::uint8_t> missing_mask;

  GridField() = default;
  GridField(GridGeometry geometry, Date date);
  GridField(GridGeometry geometry, Date date, std::vector<float> values);

  float& at(std::size_t row, std::size_t col) { return values[row * geometry.n_cols + col]; }
  float at(std::size_t row, std::size_t col) const { return values[row * geometry.n_cols + col]; }

  bool is_missing(std::size_t cell) const {
    return !missing_mask.empty() && missing_mask[cell] != 0;
  }
  void set_missing(std::size_t cell, bool missing = true);
  std::size_t missing_count() const;

  // Value used by the L2 kernels: masked cells read as zero.
  double value_or_zero(std::size_t cell) const {
    return is_missing(cell) ? 0.0 : static_cast<double>(values[cell]);
  }

  friend bool operator==(const GridField& a, const GridField& b);
};

// Variables whose non-missing values must be non-negative.
bool is_nonnegative_variable(std::string_view variable_name);

struct FieldStack {
  GridGeometry geometry;
  std::vector<GridField> days;
  std::string variable_name;
  std::string units;

  std::size_t size() const { return days.size(); }
  bool empty() const { return days.empty(); }
  const GridField& operator[](std::size_t i) const { return days[i]; }

  // Appends a day; its geometry must match and its date must follow the last.
  void push_back(GridField day);

  // Checks every invariant: shared geometry, strictly increasing dates,
  // payload sizes, finite values, non-negativity for physical magnitudes.
  // Throws DataError naming the offending day.
  void validate() const;

  friend bool operator==(const FieldStack&, const FieldStack&) = default;
};

// A rectangle of grid cells, half-open on both axes: rows [row_start, row_end)
// and columns [col_start, col_end).
struct Zone {
  std::string name;
  std::size_t row_start = 0;
  std::size_t row_end = 0;
  std::size_t col_start = 0;
  std::size_t col_end = 0;

  std::size_t area() const { return (row_end - row_start) * (col_end - col_start); }
  bool contains(std::size_t row, std::size_t col) const {
    return row >= row_start && row < row_end && col >= col_start && col < col_end;
  }
  bool operator==(const Zone&) const = default;
};

struct ZonePartition {
  std::vector<Zone> zones;

  std::size_t size() const { return zones.size(); }

  // Throws ConfigError if a zone is empty, leaves the grid, or overlaps another.
  void validate(const GridGeometry& geometry) const;

  // 2x2 split named A1 (top-left), A2 (top-right), A3 (bottom-left),
  // A4 (bottom-right). Odd dimensions put the extra row/column in the
  // bottom/right halves.
  static ZonePartition quadrants(const GridGeometry& geometry);

  bool operator==(const ZonePartition&) const = default;
};

// Non-missing values inside one zone, in row-major order.
std::vector<double> extract_zone(const GridField& field, const ZonePartition& partition,
                                 std::size_t zone_index);

// Per-cell sqrt(u^2 + v^2); a cell is missing if it is missing in either input.
FieldStack wind_speed_from_components(const FieldStack& u, const FieldStack& v);

// ---------------------------------------------------------------------------
// On-disk format: a JSON manifest next to a raw payload of little-endian f32,
// row-major, days concatenated.

struct StackManifest {
  int version = 1;
  std::string variable;
  std::string units;
  GridGeometry geometry;
  std::vector<Date> dates;
  std::string payload_file;
  // Empty means NaN marks missing cells.
  std::optional<double> missing_sentinel;
};

inline constexpr int kStackFormatVersion = 1;

// Reads and validates a stack. `manifest_path` names the JSON manifest; the
// payload path inside it is resolved relative to the manifest's directory.
FieldStack load_stack(const std::filesystem::path& manifest_path, const WarningSink& warn = {});

// Writes `<manifest_path>` and a payload named after it with extension
// ".f32". Masked cells are written as NaN. `provenance` (if non-empty JSON
// object text) is embedded verbatim under the manifest key "provenance".
void save_stack(const FieldStack& stack, const std::filesystem::path& manifest_path,
                const std::string& provenance_json = {});

StackManifest read_manifest(const std::filesystem::path& manifest_path);

// One CSV file per day: n_rows lines of n_cols comma-separated numbers.
// Tokens "nan"/"NaN"/empty, or equal to `missing_sentinel`, become missing.
GridField read_csv_day(const std::filesystem::path& path, const GridGeometry& geometry,
                       Date date, std::optional<double> missing_sentinel = std::nullopt);

// Infers the grid shape from the first CSV file and checks the rest against
// it. Errors name the offending file.
FieldStack ingest_csv(std::span<const std::filesystem::path> paths, std::span<const Date> dates,
                      std::string variable, std::string units,
                      std::optional<GridGeometry> geometry = std::nullopt,
                      std::optional<double> missing_sentinel = std::nullopt);

}  // namespace edc
