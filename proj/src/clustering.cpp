#include "edcluster/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edcluster/errors.hpp"
#include "edcluster/parallel.hpp"

namespace edc {

std::string_view to_string(Algorithm a) { return a == Algorithm::KMeans ? "KMS" : "HAC"; }

std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
    case Linkage::Single: return "single";
    case Linkage::Ward: return "ward";
  }
  return "average";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "KMS" || text == "kms" || text == "kmeans") return Algorithm::KMeans;
  if (text == "HAC" || text == "hac") return Algorithm::HAC;
  throw ConfigError("unknown algorithm '" + std::string(text) + "' (expected KMS or HAC)");
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  if (text == "single") return Linkage::Single;
  if (text == "ward") return Linkage::Ward;
  throw ConfigError("unknown linkage '" + std::string(text) + "'");
}

std::vector<std::vector<std::size_t>> ClusteringResult::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] < k) out[assignments[i]].push_back(i);
  }
  return out;
}

void ClusteringResult::validate() const {
  if (k == 0) throw InvariantError("clustering result: k is zero");
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= k) {
      throw InvariantError("clustering result: day " + std::to_string(i) + " has label " +
                           std::to_string(assignments[i]) + " >= k");
    }
  }
  const auto groups = members();
  for (std::size_t c = 0; c < k; ++c) {
    if (groups[c].empty()) throw InvariantError("clustering result: cluster " + std::to_string(c) + " is empty");
  }
  if (!representatives.empty()) {
    if (representatives.size() != k) throw InvariantError("clustering result: wrong representative count");
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t r = representatives[c];
      if (r >= assignments.size() || assignments[r] != c) {
        throw InvariantError("clustering result: representative of cluster " + std::to_string(c) +
                             " is not a member");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Centroids

double l2_to_centroid(const GridField& day, const VectorCentroid& centroid) {
  if (centroid.values.size() != day.values.size()) throw DataError("centroid and field sizes differ");
  double sum = 0.0;
  for (std::size_t c = 0; c < day.values.size(); ++c) {
    const double diff = day.value_or_zero(c) - centroid.values[c];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double ed_to_centroid(const DaySignature& day, const SignatureCentroid& centroid) {
  return expert_deviation(std::span<const Histogram>(day.zone_histograms),
                          std::span<const Histogram>(centroid.zone_histograms));
}

namespace {

void check_assignments(std::size_t n, std::span<const std::size_t> assignments, std::size_t k) {
  if (assignments.size() != n) {
    throw DataError("assignments hold " + std::to_string(assignments.size()) + " labels for " + std::to_string(n) +
                    " days");
  }
  for (auto a : assignments) {
    if (a >= k) throw DataError("assignment label " + std::to_string(a) + " >= k");
  }
}

std::vector<std::vector<std::size_t>> group(std::span<const std::size_t> assignments, std::size_t k) {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
  return out;
}

std::vector<VectorCentroid> vector_centroids(const FieldStack& stack, std::span<const std::size_t> assignments,
                                             std::size_t k, unsigned threads) {
  const auto groups = group(assignments, k);
  std::vector<VectorCentroid> out(k);
  const std::size_t cells = stack.geometry.cell_count();
  parallel_for(k, threads, [&](std::size_t c) {
    std::vector<double> sum(cells, 0.0);
    for (std::size_t i : groups[c]) {
      const GridField& day = stack.days[i];
      for (std::size_t x = 0; x < cells; ++x) sum[x] += day.value_or_zero(x);
    }
    if (!groups[c].empty()) {
      const double n = static_cast<double>(groups[c].size());
      for (double& v : sum) v /= n;
    }
    out[c].values = std::move(sum);
  });
  return out;
}

std::vector<SignatureCentroid> signature_centroids(std::span<const DaySignature> sigs,
                                                   std::span<const std::size_t> assignments, std::size_t k,
                                                   double epsilon, unsigned threads) {
  const auto groups = group(assignments, k);
  const std::size_t zones = sigs.empty() ? 0 : sigs.front().zone_count();
  const std::size_t bins = sigs.empty() ? 0 : sigs.front().bin_count();
  std::vector<SignatureCentroid> out(k);
  parallel_for(k, threads, [&](std::size_t c) {
    SignatureCentroid centroid;
    centroid.zone_histograms.resize(zones);
    for (std::size_t z = 0; z < zones; ++z) {
      std::vector<double> mean(bins, 0.0);
      for (std::size_t i : groups[c]) {
        const auto& probs = sigs[i].zone_histograms[z].probs;
        for (std::size_t b = 0; b < bins; ++b) mean[b] += probs[b];
      }
      double total = 0.0;
      for (double v : mean) total += v;
      if (total > 0.0) {
        for (double& v : mean) v /= total;
      } else {
        std::fill(mean.begin(), mean.end(), 1.0 / static_cast<double>(bins));
      }
      smooth_in_place(mean, epsilon);
      centroid.zone_histograms[z].probs = std::move(mean);
    }
    out[c] = std::move(centroid);
  });
  return out;
}

// The two data spaces k-means runs over. `cost` is the per-day objective
// term, `dissimilarity` the measure itself.
struct FieldSpace {
  using Centroid = VectorCentroid;
  const FieldStack& stack;
  unsigned threads;

  std::size_t size() const { return stack.size(); }
  Centroid from_day(std::size_t i) const {
    Centroid c;
    const GridField& day = stack.days[i];
    c.values.resize(day.values.size());
    for (std::size_t x = 0; x < c.values.size(); ++x) c.values[x] = day.value_or_zero(x);
    return c;
  }
  double cost(std::size_t i, const Centroid& c) const {
    const double d = l2_to_centroid(stack.days[i], c);
    return d * d;
  }
  double dissimilarity(std::size_t i, const Centroid& c) const { return l2_to_centroid(stack.days[i], c); }
  double day_dissimilarity(std::size_t i, std::size_t j) const { return l2_distance(stack.days[i], stack.days[j]); }
  std::vector<Centroid> update(std::span<const std::size_t> assignments, std::size_t k) const {
    return vector_centroids(stack, assignments, k, threads);
  }
};

struct SignatureSpace {
  using Centroid = SignatureCentroid;
  std::span<const DaySignature> sigs;
  double epsilon;
  unsigned threads;

  std::size_t size() const { return sigs.size(); }
  Centroid from_day(std::size_t i) const { return Centroid{sigs[i].zone_histograms}; }
  double cost(std::size_t i, const Centroid& c) const { return ed_to_centroid(sigs[i], c); }
  double dissimilarity(std::size_t i, const Centroid& c) const { return ed_to_centroid(sigs[i], c); }
  double day_dissimilarity(std::size_t i, std::size_t j) const { return expert_deviation(sigs[i], sigs[j]); }
  std::vector<Centroid> update(std::span<const std::size_t> assignments, std::size_t k) const {
    return signature_centroids(sigs, assignments, k, epsilon, threads);
  }
};

void check_k(std::size_t k, std::size_t n) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (k > n) throw ConfigError("k = " + std::to_string(k) + " exceeds the number of days (" + std::to_string(n) + ")");
}

template <typename Space>
std::vector<std::size_t> seed_days(const Space& space, std::size_t k, Rng& rng) {
  const std::size_t n = space.size();
  check_k(k, n);
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<char> taken(n, 0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t i) {
    chosen.push_back(i);
    taken[i] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) {
        nearest[j] = 0.0;
        continue;
      }
      nearest[j] = std::min(nearest[j], space.day_dissimilarity(i, j));
    }
  };

  take(rng.index(n));
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += nearest[j] * nearest[j];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      std::size_t last_positive = n;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = nearest[j] * nearest[j];
        if (w <= 0.0) continue;
        last_positive = j;
        cumulative += w;
        if (cumulative > target) {
          pick = j;
          break;
        }
      }
      if (pick == n) pick = last_positive;
    } else {
      std::size_t free_count = 0;
      for (std::size_t j = 0; j < n; ++j) free_count += !taken[j];
      std::size_t nth = rng.index(free_count);
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j]) continue;
        if (nth-- == 0) {
          pick = j;
          break;
        }
      }
    }
    take(pick);
  }
  return chosen;
}

template <typename Space>
struct LloydRun {
  std::vector<std::size_t> assignments;
  std::vector<typename Space::Centroid> centroids;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<ObjectiveStep> trace;
};

template <typename Space>
double total_cost(const Space& space, std::span<const std::size_t> assignments,
                  const std::vector<typename Space::Centroid>& centroids, unsigned threads) {
  std::vector<double> costs(space.size());
  parallel_for(space.size(), threads, [&](std::size_t i) { costs[i] = space.cost(i, centroids[assignments[i]]); });
  double sum = 0.0;
  for (double c : costs) sum += c;
  return sum;
}

template <typename Space>
LloydRun<Space> lloyd(const Space& space, std::size_t k, Rng& rng, const KMeansOptions& opt) {
  const std::size_t n = space.size();
  LloydRun<Space> run;
  for (std::size_t i : seed_days(space, k, rng)) run.centroids.push_back(space.from_day(i));

  std::vector<std::size_t> next(n);
  std::vector<double> costs(n);
  bool have_previous = false;
  for (std::size_t iter = 1; iter <= opt.max_iter; ++iter) {
    run.iterations = iter;
    ObjectiveStep step;
    if (have_previous) step.before_assignment = total_cost(space, run.assignments, run.centroids, opt.threads);

    parallel_for(n, opt.threads, [&](std::size_t i) {
      std::size_t best = 0;
      double best_cost = space.cost(i, run.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double cost = space.cost(i, run.centroids[c]);
        if (cost < best_cost) {
          best_cost = cost;
          best = c;
        }
      }
      next[i] = best;
      costs[i] = best_cost;
    });
    step.after_assignment = 0.0;
    for (double c : costs) step.after_assignment += c;

    // Empty-cluster repair: hand the day farthest from its centroid (taken
    // from a cluster that keeps at least one member) to the empty cluster.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : next) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[next[i]] < 2) continue;
        if (far == n || costs[i] > costs[far]) far = i;
      }
      if (far == n) throw InvariantError("k-means: no day available to repair an empty cluster");
      --counts[next[far]];
      next[far] = c;
      ++counts[c];
      costs[far] = 0.0;
      run.centroids[c] = space.from_day(far);
    }

    const bool unchanged = have_previous && next == run.assignments;
    run.assignments = next;
    if (unchanged) {
      run.converged = true;
      step.after_update = step.after_assignment;
      run.trace.push_back(step);
      break;
    }
    run.centroids = space.update(run.assignments, k);
    step.after_update = total_cost(space, run.assignments, run.centroids, opt.threads);
    if (have_previous) run.trace.push_back(step);
    have_previous = true;
  }
  run.objective = total_cost(space, run.assignments, run.centroids, opt.threads);
  return run;
}

template <typename Space>
std::vector<std::size_t> nearest_members(const Space& space, std::span<const std::size_t> assignments,
                                         const std::vector<typename Space::Centroid>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> reps(k, space.size());
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const std::size_t c = assignments[i];
    const double d = space.dissimilarity(i, centroids[c]);
    if (reps[c] == space.size() || d < best[c]) {
      best[c] = d;
      reps[c] = i;
    }
  }
  return reps;
}

template <typename Space>
ClusteringResult kmeans(const Space& space, Measure measure, const KMeansOptions& opt) {
  check_k(opt.k, space.size());
  if (opt.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);

  std::optional<LloydRun<Space>> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(opt.seed ^ mix_seed(r)));
    auto run = lloyd(space, opt.k, rng, opt);
    if (!best || run.objective < best->objective) best = std::move(run);
  }

  ClusteringResult result;
  result.algorithm = Algorithm::KMeans;
  result.measure = measure;
  result.k = opt.k;
  result.assignments = std::move(best->assignments);
  result.representatives = nearest_members(space, result.assignments, best->centroids);
  result.centroids = std::move(best->centroids);
  result.iterations = best->iterations;
  result.converged = best->converged;
  result.seed = opt.seed;
  result.objective = best->objective;
  result.trace = std::move(best->trace);
  result.validate();
  return result;
}

}  // namespace

std::vector<VectorCentroid> compute_vector_centroids(const FieldStack& stack,
                                                     std::span<const std::size_t> assignments, std::size_t k) {
  check_assignments(stack.size(), assignments, k);
  return vector_centroids(stack, assignments, k, 0);
}

std::vector<SignatureCentroid> compute_signature_centroids(std::span<const DaySignature> signatures,
                                                           std::span<const std::size_t> assignments,
                                                           std::size_t k, double epsilon) {
  check_assignments(signatures.size(), assignments, k);
  return signature_centroids(signatures, assignments, k, epsilon, 0);
}

std::vector<std::size_t> kmeanspp_seed(const FieldStack& stack, std::size_t k, Rng& rng) {
  return seed_days(FieldSpace{stack, 0}, k, rng);
}

std::vector<std::size_t> kmeanspp_seed(std::span<const DaySignature> signatures, std::size_t k, Rng& rng) {
  return seed_days(SignatureSpace{signatures, kDefaultSmoothing, 0}, k, rng);
}

ClusteringResult kmeans_fit(const FieldStack& stack, const KMeansOptions& options) {
  return kmeans(FieldSpace{stack, options.threads}, Measure::L2, options);
}

ClusteringResult kmeans_fit(std::span<const DaySignature> signatures, const KMeansOptions& options) {
  for (const auto& s : signatures) {
    if (s.zone_count() != signatures.front().zone_count() || s.bin_count() != signatures.front().bin_count()) {
      throw DataError("kmeans_fit: signatures differ in zone or bin count");
    }
  }
  return kmeans(SignatureSpace{signatures, options.epsilon, options.threads}, Measure::ED, options);
}

std::vector<std::size_t> representative_elements(const ClusteringResult& result, const FieldStack& stack) {
  check_assignments(stack.size(), result.assignments, result.k);
  const FieldSpace space{stack, 0};
  if (const auto* c = std::get_if<std::vector<VectorCentroid>>(&result.centroids)) {
    return nearest_members(space, result.assignments, *c);
  }
  return nearest_members(space, result.assignments, vector_centroids(stack, result.assignments, result.k, 0));
}

std::vector<std::size_t> representative_elements(const ClusteringResult& result,
                                                 std::span<const DaySignature> signatures, double epsilon) {
  check_assignments(signatures.size(), result.assignments, result.k);
  const SignatureSpace space{signatures, epsilon, 0};
  if (const auto* c = std::get_if<std::vector<SignatureCentroid>>(&result.centroids)) {
    return nearest_members(space, result.assignments, *c);
  }
  return nearest_members(space, result.assignments,
                         signature_centroids(signatures, result.assignments, result.k, epsilon, 0));
}

void attach_centroids(ClusteringResult& result, const FieldStack& stack) {
  check_assignments(stack.size(), result.assignments, result.k);
  result.centroids = vector_centroids(stack, result.assignments, result.k, 0);
  result.representatives = representative_elements(result, stack);
}

void attach_centroids(ClusteringResult& result, std::span<const DaySignature> signatures, double epsilon) {
  check_assignments(signatures.size(), result.assignments, result.k);
  result.centroids = signature_centroids(signatures, result.assignments, result.k, epsilon, 0);
  result.representatives = representative_elements(result, signatures, epsilon);
}

double within_cluster_dissimilarity(const ClusteringResult& result, const FieldStack& stack) {
  const auto centroids = vector_centroids(stack, result.assignments, result.k, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < stack.size(); ++i) sum += l2_to_centroid(stack.days[i], centroids[result.assignments[i]]);
  return sum;
}

double within_cluster_dissimilarity(const ClusteringResult& result, std::span<const DaySignature> signatures) {
  std::vector<SignatureCentroid> centroids;
  if (const auto* c = std::get_if<std::vector<SignatureCentroid>>(&result.centroids)) {
    centroids = *c;
  } else {
    centroids = signature_centroids(signatures, result.assignments, result.k, kDefaultSmoothing, 0);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    sum += ed_to_centroid(signatures[i], centroids[result.assignments[i]]);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// HAC

std::vector<Merge> hac_dendrogram(const DissimilarityMatrix& matrix, Linkage linkage) {
  if (linkage == Linkage::Ward && matrix.tag() != Measure::L2) {
    throw ConfigError("ward linkage needs an L2 matrix (got " + std::string(to_string(matrix.tag())) + ")");
  }
  const std::size_t n = matrix.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;
  merges.reserve(n - 1);

  DissimilarityMatrix d = matrix;
  if (linkage == Linkage::Ward) {
    for (double& v : d.triangle()) v *= v;
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<char> active(n, 1);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, kInf);

  auto refresh_row = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double v = d(i, j);
      if (nn[i] == n || v < nn_dist[i]) {
        nn_dist[i] = v;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh_row(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      if (a == n || nn_dist[i] < nn_dist[a]) a = i;
    }
    const std::size_t b = nn[a];
    const double dab = nn_dist[a];
    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);

    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == a || x == b) continue;
      const double dax = d(a, x);
      const double dbx = d(b, x);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Single: merged = std::min(dax, dbx); break;
        case Linkage::Complete: merged = std::max(dax, dbx); break;
        case Linkage::Average: {
          // Written as lo + w*(hi - lo) so the result never drops below lo.
          const bool a_low = dax <= dbx;
          const double lo = a_low ? dax : dbx;
          const double hi = a_low ? dbx : dax;
          const double w_hi = (a_low ? nb : na) / (na + nb);
          merged = lo + w_hi * (hi - lo);
          break;
        }
        case Linkage::Ward: {
          const double nx = static_cast<double>(size[x]);
          merged = ((na + nx) * dax + (nb + nx) * dbx - nx * dab) / (na + nb + nx);
          merged = std::max(merged, 0.0);
          break;
        }
      }
      d.set(a, x, merged);
    }
    active[b] = 0;
    size[a] += size[b];
    merges.push_back(Merge{a, b, linkage == Linkage::Ward ? std::sqrt(dab) : dab, size[a]});

    refresh_row(a);
    for (std::size_t x = 0; x < b; ++x) {
      if (!active[x] || x == a) continue;
      if (nn[x] == a || nn[x] == b) {
        refresh_row(x);
      } else if (x < a) {
        const double v = d(x, a);
        if (v < nn_dist[x] || (v == nn_dist[x] && a < nn[x])) {
          nn_dist[x] = v;
          nn[x] = a;
        }
      }
    }
  }
  return merges;
}

ClusteringResult hac_fit(const DissimilarityMatrix& matrix, std::size_t k, Linkage linkage) {
  const std::size_t n = matrix.size();
  check_k(k, n);
  const auto all = hac_dendrogram(matrix, linkage);

  // Union-find over the first n - k merges.
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  ClusteringResult result;
  result.algorithm = Algorithm::HAC;
  result.measure = matrix.tag();
  result.linkage = linkage;
  result.k = k;
  result.merges.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n - k));
  for (const Merge& m : result.merges) parent[find(m.b)] = find(m.a);

  std::vector<std::size_t> label_of_root(n, n);
  std::size_t next_label = 0;
  result.assignments.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (label_of_root[root] == n) label_of_root[root] = next_label++;
    result.assignments[i] = label_of_root[root];
  }

  const auto groups = result.members();
  result.representatives.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : groups[c]) {
      double total = 0.0;
      for (std::size_t j : groups[c]) total += matrix(i, j);
      if (total < best) {
        best = total;
        result.representatives[c] = i;
      }
    }
  }
  result.iterations = n - k;
  result.converged = true;
  result.validate();
  return result;
}

}  // namespace edc
