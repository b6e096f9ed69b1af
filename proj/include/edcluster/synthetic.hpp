#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"

namespace edc {

// Content of one zone on a synthetic day. Each value is drawn from a bin
// picked with `bin_probs` (one weight per bin of the spec's edges), then
// uniformly inside that bin's interval.
//
// blob_size == 0: every cell of the zone is drawn this way.
// blob_size  > 0: only a blob_size x blob_size square at a uniformly random
//                 position inside the zone is drawn; the rest of the zone is 0.
struct ZoneProfile {
  std::vector<double> bin_probs;
  std::size_t blob_size = 0;
};

struct Regime {
  std::string name;
  std::vector<ZoneProfile> zones;  // one per zone of the partition
};

struct SyntheticSpec {
  GridGeometry geometry;
  ZonePartition partition;
  BinEdges edges;
  std::vector<Regime> regimes;
  std::size_t days_per_regime = 0;
  std::uint64_t seed = 0;
  Date start{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
  std::string variable = "rainfall";
  std::string units = "mm";
};

// Consecutive daily dates from spec.start, with regimes shuffled over days.
// labels[d] is the regime index of day d.
struct SyntheticData {
  FieldStack stack;
  std::vector<std::size_t> labels;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Five intermittent-rainfall regimes on quadrant zones with the rainfall
// preset edges: four regimes each wet in one quadrant and dry elsewhere,
// and one moderately wet everywhere.
SyntheticSpec planted_regimes_spec(std::size_t days_per_regime, std::size_t n_rows, std::size_t n_cols,
                                   std::uint64_t seed, std::size_t n_regimes = 5);

// Regimes defined by which quadrant holds a heavy blob (the others hold a
// light one). Within a regime every day has the same blob sizes and bins;
// only the blob positions inside the zones change from day to day.
SyntheticSpec blob_position_spec(std::size_t days_per_regime, std::size_t n_rows, std::size_t n_cols,
                                 std::size_t blob_size, std::uint64_t seed, std::size_t n_regimes = 4);

// A localized peak versus a spread-out field at the same L2 distance from
// an all-zero reference: `peak` holds one cell of `amplitude`, `spread` an
// amplitude x amplitude block of ones, both anchored at (row, col).
struct LocalizedVsSpread {
  GridField reference;
  GridField peak;
  GridField spread;
};

LocalizedVsSpread make_localized_vs_spread(const GridGeometry& geometry, std::size_t amplitude,
                                           std::size_t row = 0, std::size_t col = 0);

// A square blob and two translations of it by the same distance: one that
// stays inside the blob's zone and one that lands in another zone. Both
// shifted copies are disjoint from the original, so their L2 distances to it
// are equal.
struct ShiftedBlobs {
  GridField reference;
  GridField within_zone;
  GridField across_zone;
};

// The blob starts at (row, col) inside zone `zone`; it moves `shift` columns
// right within the zone, and `shift` columns left for the cross-zone copy,
// which must leave the zone. Throws ConfigError when a blob would leave the
// grid or the moves do not behave as described.
ShiftedBlobs make_shifted_blobs(const GridGeometry& geometry, const ZonePartition& partition,
                                std::size_t blob_size, float amplitude, std::size_t row, std::size_t col,
                                std::size_t shift);

}  // namespace edc
