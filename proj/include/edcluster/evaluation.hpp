#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edcluster/clustering.hpp"
#include "edcluster/dissimilarity.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"

namespace edc {

struct SilhouetteReport {
  std::vector<double> per_sample;
  double mean = 0.0;
  std::vector<double> per_cluster_mean;
  std::size_t k = 0;
  Measure measure_tag = Measure::ED;
};

// Rousseeuw silhouettes over any dissimilarity matrix. a(i) is the mean
// dissimilarity to the rest of i's cluster, b(i) the smallest mean
// dissimilarity to another cluster, s(i) = (b - a) / max(a, b). Members of
// singleton clusters score 0, as does any point with a = b = 0.
//
// Labels must be 0..k-1 with every cluster non-empty and k >= 2.
SilhouetteReport silhouette(const DissimilarityMatrix& matrix, std::span<const std::size_t> assignments,
                            unsigned threads = 0);

struct SweepOptions {
  Algorithm algorithm = Algorithm::KMeans;
  Linkage linkage = Linkage::Average;
  std::vector<std::size_t> k_values;
  std::uint64_t seed = 0;
  std::size_t restarts = kDefaultRestarts;
  std::size_t max_iter = 100;
  double epsilon = kDefaultSmoothing;
  unsigned threads = 0;
  // Diagnostics only: score silhouettes on this matrix instead of the one
  // matching the clustering measure.
  const DissimilarityMatrix* silhouette_matrix = nullptr;
};

struct SweepPoint {
  std::size_t k = 0;
  double mean_silhouette = 0.0;
  Algorithm algorithm = Algorithm::KMeans;
  Measure measure = Measure::ED;
  bool operator==(const SweepPoint&) const = default;
};

// Clusters once per k and scores each clustering with the silhouette of the
// clustering measure. `matrix` must be the pairwise matrix of the data
// under that measure; it is computed when omitted.
std::vector<SweepPoint> k_sweep(const FieldStack& stack, const SweepOptions& options,
                                const DissimilarityMatrix* matrix = nullptr);
std::vector<SweepPoint> k_sweep(std::span<const DaySignature> signatures, const SweepOptions& options,
                                const DissimilarityMatrix* matrix = nullptr);

// Index of the best k in a curve: the highest mean silhouette, ties to the
// smaller k. Returns curve.size() for an empty curve.
std::size_t sweep_peak(std::span<const SweepPoint> curve);

// Days per cluster per calendar month (column 0 is January).
struct MonthlyDistribution {
  std::vector<std::array<std::size_t, 12>> counts;

  std::size_t k() const { return counts.size(); }
  std::array<std::size_t, 12> month_totals() const;
  std::vector<std::size_t> cluster_totals() const;
  std::size_t total() const;
};

MonthlyDistribution monthly_distribution(const ClusteringResult& result, const FieldStack& stack);

// Hubert-Arabie adjusted Rand index between two labelings of the same days.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace edc
