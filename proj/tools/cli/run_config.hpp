#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edcluster/clustering.hpp"
#include "edcluster/dissimilarity.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"
#include "json.hpp"

namespace edc::cli {

// Everything a cluster/sweep/matrix run depends on. Parsed from the --config
// JSON, then overridden by flags; the resolved form is echoed into every
// output together with its hash.
struct RunConfig {
  std::string input;
  std::string preset = "rainfall_table1";  // rainfall_table1 | beaufort | custom
  std::optional<BinEdges> custom_edges;
  std::string edges_variable;              // label carried with custom edges
  std::optional<std::vector<Zone>> zones;  // empty: quadrants
  Measure measure = Measure::ED;
  std::vector<Measure> measures;  // sweep series; empty means {measure}
  Algorithm algorithm = Algorithm::KMeans;
  std::vector<Algorithm> algorithms;  // sweep series; empty means {algorithm}
  Linkage linkage = Linkage::Average;
  std::optional<std::size_t> k;
  std::vector<std::size_t> k_range;
  std::uint64_t seed = 0;
  std::size_t restarts = kDefaultRestarts;
  std::size_t max_iter = 100;
  double epsilon = kDefaultSmoothing;
  std::string output = "out";
  unsigned threads = 0;
  bool cross_measure_silhouette = false;

  BinEdges edges() const;
  ZonePartition partition(const GridGeometry& geometry) const;
  std::vector<Measure> sweep_measures() const;
  std::vector<Algorithm> sweep_algorithms() const;
};

// Throws ConfigError on unknown keys or ill-typed values.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON (keys sorted). `output` and `threads` are left out: they
// never change results, so runs into different directories stay comparable.
nlohmann::json to_json(const RunConfig& config);

// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// "2..8" or "2,3,5".
std::vector<std::size_t> parse_k_range(const std::string& text);

}  // namespace edc::cli
