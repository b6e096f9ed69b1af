#include "edcluster/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "edcluster/errors.hpp"
#include "edcluster/parallel.hpp"

namespace edc {

SilhouetteReport silhouette(const DissimilarityMatrix& matrix, std::span<const std::size_t> assignments,
                            unsigned threads) {
  const std::size_t n = matrix.size();
  if (assignments.size() != n) {
    throw DataError("silhouette: " + std::to_string(assignments.size()) + " labels for a " + std::to_string(n) +
                    "-day matrix");
  }
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) throw ConfigError("silhouette: cluster " + std::to_string(c) + " is empty");
  }
  if (k < 2) throw ConfigError("silhouette: needs at least two clusters");

  SilhouetteReport report;
  report.k = k;
  report.measure_tag = matrix.tag();
  report.per_sample.assign(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::size_t own = assignments[i];
    if (sizes[own] == 1) return;
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[assignments[j]] += matrix(i, j);
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    report.per_sample[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  });

  double total = 0.0;
  report.per_cluster_mean.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    total += report.per_sample[i];
    report.per_cluster_mean[assignments[i]] += report.per_sample[i];
  }
  for (std::size_t c = 0; c < k; ++c) report.per_cluster_mean[c] /= static_cast<double>(sizes[c]);
  report.mean = n == 0 ? 0.0 : total / static_cast<double>(n);
  return report;
}

namespace {

void check_k_range(std::span<const std::size_t> ks, std::size_t n) {
  if (ks.empty()) throw ConfigError("k sweep: empty k range");
  for (auto k : ks) {
    if (k < 2 || k + 1 > n) {
      throw ConfigError("k sweep: k = " + std::to_string(k) + " outside [2, " +
                        std::to_string(n < 1 ? 0 : n - 1) + "]");
    }
  }
}

template <typename Data, typename Fit>
std::vector<SweepPoint> sweep(const Data& data, std::size_t n, Measure measure, const SweepOptions& opt,
                              const DissimilarityMatrix& matrix, Fit&& fit_kmeans) {
  check_k_range(opt.k_values, n);
  if (matrix.size() != n) throw DataError("k sweep: matrix size does not match the data");
  const DissimilarityMatrix& scoring = opt.silhouette_matrix ? *opt.silhouette_matrix : matrix;
  if (scoring.size() != n) throw DataError("k sweep: silhouette matrix size does not match the data");

  std::vector<SweepPoint> curve(opt.k_values.size());
  parallel_for(curve.size(), opt.threads, [&](std::size_t t) {
    const std::size_t k = opt.k_values[t];
    ClusteringResult result;
    if (opt.algorithm == Algorithm::KMeans) {
      KMeansOptions km;
      km.k = k;
      km.seed = opt.seed;
      km.restarts = opt.restarts;
      km.max_iter = opt.max_iter;
      km.epsilon = opt.epsilon;
      km.threads = 1;
      result = fit_kmeans(data, km);
    } else {
      result = hac_fit(matrix, k, opt.linkage);
    }
    curve[t] = SweepPoint{k, silhouette(scoring, result.assignments, 1).mean, opt.algorithm, measure};
  });
  return curve;
}

}  // namespace

std::vector<SweepPoint> k_sweep(const FieldStack& stack, const SweepOptions& options,
                                const DissimilarityMatrix* matrix) {
  DissimilarityMatrix own;
  if (!matrix) {
    own = pairwise_matrix(stack, options.threads);
    matrix = &own;
  }
  if (matrix->tag() != Measure::L2) throw ConfigError("k sweep: L2 data needs an L2 matrix");
  return sweep(stack, stack.size(), Measure::L2, options, *matrix,
               [](const FieldStack& s, const KMeansOptions& km) { return kmeans_fit(s, km); });
}

std::vector<SweepPoint> k_sweep(std::span<const DaySignature> signatures, const SweepOptions& options,
                                const DissimilarityMatrix* matrix) {
  DissimilarityMatrix own;
  if (!matrix) {
    own = pairwise_matrix(signatures, options.threads);
    matrix = &own;
  }
  if (matrix->tag() != Measure::ED) throw ConfigError("k sweep: signatures need an ED matrix");
  return sweep(signatures, signatures.size(), Measure::ED, options, *matrix,
               [](std::span<const DaySignature> s, const KMeansOptions& km) { return kmeans_fit(s, km); });
}

std::size_t sweep_peak(std::span<const SweepPoint> curve) {
  std::size_t best = curve.size();
  for (std::size_t t = 0; t < curve.size(); ++t) {
    if (best == curve.size() || curve[t].mean_silhouette > curve[best].mean_silhouette ||
        (curve[t].mean_silhouette == curve[best].mean_silhouette && curve[t].k < curve[best].k)) {
      best = t;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

std::array<std::size_t, 12> MonthlyDistribution::month_totals() const {
  std::array<std::size_t, 12> out{};
  for (const auto& row : counts) {
    for (std::size_t m = 0; m < 12; ++m) out[m] += row[m];
  }
  return out;
}

std::vector<std::size_t> MonthlyDistribution::cluster_totals() const {
  std::vector<std::size_t> out;
  out.reserve(counts.size());
  for (const auto& row : counts) {
    std::size_t t = 0;
    for (auto v : row) t += v;
    out.push_back(t);
  }
  return out;
}

std::size_t MonthlyDistribution::total() const {
  std::size_t t = 0;
  for (auto v : cluster_totals()) t += v;
  return t;
}

MonthlyDistribution monthly_distribution(const ClusteringResult& result, const FieldStack& stack) {
  if (result.assignments.size() != stack.size()) {
    throw DataError("monthly distribution: result covers " + std::to_string(result.assignments.size()) +
                    " days, stack holds " + std::to_string(stack.size()));
  }
  MonthlyDistribution dist;
  dist.counts.assign(result.k, {});
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const std::size_t c = result.assignments[i];
    if (c >= result.k) throw DataError("monthly distribution: label out of range");
    const unsigned month = static_cast<unsigned>(stack.days[i].date.month());
    ++dist.counts[c][month - 1];
  }
  return dist;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw DataError("adjusted_rand_index: labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
  std::map<std::size_t, std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto pairs = [](std::size_t x) { return static_cast<double>(x) * static_cast<double>(x - (x > 0)) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : joint) index += pairs(count);
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace edc
