#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edcluster/field_store.hpp"

namespace edc {

// Histogram class boundaries for one physical variable.
//
// Bin layout, in order:
//   - the exact-zero bin, when zero_bin is set;
//   - ]-inf or 0, e_0], ]e_0, e_1], ..., ]e_{n-2}, e_{n-1}];
//   - the overflow bin ]e_{n-1}, +inf[.
// n edges therefore give n + 1 interval bins, plus one with zero_bin.
struct BinEdges {
  std::vector<double> edges;
  bool zero_bin = false;

  // Throws ConfigError unless edges are finite and strictly increasing.
  void validate() const;

  std::size_t bin_count() const { return edges.size() + 1 + (zero_bin ? 1 : 0); }

  // Bin of a finite value. Negative values land in the first interval bin.
  std::size_t bin_of(double value) const;

  bool operator==(const BinEdges&) const = default;
};

// Boundaries of the daily rainfall classes, in mm, with an exact-zero class:
// 0 | ]0,1.2] | ]1.2,2.2] | ]2.2,5.2] | ]5.2,8.7] | ]8.7,16.4] | ]16.4,26.9] |
// ]26.9,59.2] | ]59.2,+inf[
BinEdges rainfall_table1_edges();

// Beaufort force thresholds in m/s (forces 0..12, 13 bins, no zero bin).
BinEdges beaufort_edges();

// Quantile edges over a reference sample. Quantiles use linear
// interpolation between the closest order statistics. With zero_bin the
// quantiles are taken over the strictly positive values only.
BinEdges edges_from_quantiles(std::span<const double> reference_values, std::span<const double> centiles,
                              bool zero_bin);

// Centiles behind rainfall_table1_edges().
std::vector<double> rainfall_table1_centiles();

inline constexpr double kDefaultSmoothing = 1e-9;

struct Histogram {
  std::vector<double> probs;
  // Set when the histogram was built from no values (probs is then uniform).
  bool empty = false;

  std::size_t size() const { return probs.size(); }
  bool operator==(const Histogram&) const = default;
};

// Raw per-bin counts; the counts sum to values.size().
std::vector<std::size_t> bin_counts(std::span<const double> values, const BinEdges& edges);

// Floors every bin at `epsilon` and renormalizes to sum 1. epsilon = 0
// leaves the probabilities as they are.
void smooth_in_place(std::vector<double>& probs, double epsilon);

// Normalized frequencies of `values` over `edges`, smoothed with `epsilon`.
// An empty input gives the uniform histogram with `empty` set.
Histogram quantize(std::span<const double> values, const BinEdges& edges, double epsilon = kDefaultSmoothing);

// One histogram per zone: the unit Expert Deviation compares.
struct DaySignature {
  std::vector<Histogram> zone_histograms;
  std::size_t day_index = 0;

  std::size_t zone_count() const { return zone_histograms.size(); }
  std::size_t bin_count() const { return zone_histograms.empty() ? 0 : zone_histograms.front().size(); }
  bool operator==(const DaySignature&) const = default;
};

DaySignature signature(const GridField& day, const ZonePartition& partition, const BinEdges& edges,
                       double epsilon = kDefaultSmoothing, std::size_t day_index = 0);

// Signatures of every day of a stack, computed in parallel; day_index is
// the position in the stack.
std::vector<DaySignature> signatures(const FieldStack& stack, const ZonePartition& partition,
                                     const BinEdges& edges, double epsilon = kDefaultSmoothing,
                                     unsigned threads = 0);

}  // namespace edc
