#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edcluster/dissimilarity.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"
#include "edcluster/random.hpp"

namespace edc {

// Mean field over the members of a cluster. Missing cells count as 0.
struct VectorCentroid {
  std::vector<double> values;
  bool operator==(const VectorCentroid&) const = default;
};

// One histogram per zone: the bin-wise mean of the members' zone histograms,
// floored at the smoothing epsilon and renormalized.
struct SignatureCentroid {
  std::vector<Histogram> zone_histograms;
  bool operator==(const SignatureCentroid&) const = default;
};

using Centroids = std::variant<std::monostate, std::vector<VectorCentroid>, std::vector<SignatureCentroid>>;

enum class Algorithm { KMeans, HAC };
enum class Linkage { Average, Complete, Single, Ward };

std::string_view to_string(Algorithm a);
std::string_view to_string(Linkage l);
Algorithm parse_algorithm(std::string_view text);
Linkage parse_linkage(std::string_view text);

// Objective around one k-means assignment step, both values taken against
// the same centroids. after <= before always holds.
struct ObjectiveStep {
  double before_assignment = 0.0;
  double after_assignment = 0.0;
  // Objective once the centroids were recomputed from the new assignment.
  double after_update = 0.0;
  bool operator==(const ObjectiveStep&) const = default;
};

// One agglomeration: clusters `a` < `b` (indices of their first members)
// merged at `height` into a cluster of `size` days.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
  bool operator==(const Merge&) const = default;
};

struct ClusteringResult {
  Algorithm algorithm = Algorithm::KMeans;
  Measure measure = Measure::ED;
  std::optional<Linkage> linkage;
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  Centroids centroids;
  std::vector<std::size_t> representatives;
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  // Sum over days of the cost to the assigned centroid: squared Euclidean
  // distance for L2, Expert Deviation for ED. Unused for HAC.
  double objective = 0.0;
  // k-means trace of the kept restart.
  std::vector<ObjectiveStep> trace;
  // HAC merges performed before the cut, in order.
  std::vector<Merge> merges;

  std::vector<std::vector<std::size_t>> members() const;

  // Throws InvariantError when a cluster is empty, a label is out of range,
  // or a representative is not a member of its cluster.
  void validate() const;

  bool operator==(const ClusteringResult&) const = default;
};

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  std::size_t restarts = 8;
  double epsilon = kDefaultSmoothing;
  unsigned threads = 0;
};

inline constexpr std::size_t kDefaultRestarts = 8;

// k-means++ seeding: the first day uniformly at random, each next one with
// probability proportional to its squared dissimilarity to the nearest day
// already chosen. When every weight is zero the next day is drawn uniformly
// from the days not yet chosen. Returns k distinct day indices.
std::vector<std::size_t> kmeanspp_seed(const FieldStack& stack, std::size_t k, Rng& rng);
std::vector<std::size_t> kmeanspp_seed(std::span<const DaySignature> signatures, std::size_t k, Rng& rng);

// Lloyd iterations with k-means++ starts; the restart with the lowest
// objective is kept. Assignment ties go to the lowest cluster index. A
// cluster left empty receives the day farthest from its own centroid.
ClusteringResult kmeans_fit(const FieldStack& stack, const KMeansOptions& options);
ClusteringResult kmeans_fit(std::span<const DaySignature> signatures, const KMeansOptions& options);

std::vector<VectorCentroid> compute_vector_centroids(const FieldStack& stack,
                                                     std::span<const std::size_t> assignments, std::size_t k);
std::vector<SignatureCentroid> compute_signature_centroids(std::span<const DaySignature> signatures,
                                                           std::span<const std::size_t> assignments,
                                                           std::size_t k, double epsilon = kDefaultSmoothing);

double l2_to_centroid(const GridField& day, const VectorCentroid& centroid);
double ed_to_centroid(const DaySignature& day, const SignatureCentroid& centroid);

// Per cluster, the member nearest its centroid (L2 or ED); ties go to the
// earliest day. Centroids are computed from the assignments when the result
// does not carry them.
std::vector<std::size_t> representative_elements(const ClusteringResult& result, const FieldStack& stack);
std::vector<std::size_t> representative_elements(const ClusteringResult& result,
                                                 std::span<const DaySignature> signatures,
                                                 double epsilon = kDefaultSmoothing);

// Full agglomeration (n - 1 merges) with Lance-Williams updates. Ties merge
// the lexicographically smallest pair. Ward works on squared distances and
// is only accepted for L2 matrices; its heights are reported unsquared.
std::vector<Merge> hac_dendrogram(const DissimilarityMatrix& matrix, Linkage linkage);

// Cuts the dendrogram at k clusters. Clusters are numbered by their
// earliest day; representatives are the cluster medoids (least total
// dissimilarity to the other members) until attach_centroids replaces them.
ClusteringResult hac_fit(const DissimilarityMatrix& matrix, std::size_t k, Linkage linkage = Linkage::Average);

// Fills centroids and centroid-nearest representatives from the data.
void attach_centroids(ClusteringResult& result, const FieldStack& stack);
void attach_centroids(ClusteringResult& result, std::span<const DaySignature> signatures,
                      double epsilon = kDefaultSmoothing);

// Sum over days of the dissimilarity to the assigned centroid (not squared).
double within_cluster_dissimilarity(const ClusteringResult& result, const FieldStack& stack);
double within_cluster_dissimilarity(const ClusteringResult& result, std::span<const DaySignature> signatures);

}  // namespace edc
