#include <algorithm>
#include <set>

#include "doctest.h"
#include "edcluster/clustering.hpp"
#include "edcluster/errors.hpp"
#include "edcluster/evaluation.hpp"
#include "edcluster/random.hpp"
#include "edcluster/synthetic.hpp"

using namespace edc;

namespace {

struct Planted {
  SyntheticSpec spec;
  SyntheticData data;
  std::vector<DaySignature> sigs;
};

Planted planted(std::size_t days, std::uint64_t seed) {
  Planted p{planted_regimes_spec(days, 16, 16, seed), {}, {}};
  p.data = generate_synthetic(p.spec);
  p.sigs = signatures(p.data.stack, p.spec.partition, p.spec.edges);
  return p;
}

}  // namespace

TEST_CASE("k-means recovers planted regimes") {
  const Planted p = planted(15, 4);
  KMeansOptions km;
  km.k = 5;
  km.seed = 4;
  const auto r = kmeans_fit(p.sigs, km);
  CHECK_NOTHROW(r.validate());
  CHECK(r.algorithm == Algorithm::KMeans);
  CHECK(r.measure == Measure::ED);
  CHECK(adjusted_rand_index(r.assignments, p.data.labels) >= 0.9);
}

TEST_CASE("k = 1 and k = n") {
  const Planted p = planted(3, 8);
  KMeansOptions km;
  km.k = 1;
  const auto one = kmeans_fit(p.sigs, km);
  CHECK(std::all_of(one.assignments.begin(), one.assignments.end(), [](std::size_t a) { return a == 0; }));
  km.k = p.sigs.size();
  const auto all = kmeans_fit(p.data.stack, km);
  CHECK(std::set<std::size_t>(all.assignments.begin(), all.assignments.end()).size() == p.sigs.size());
  CHECK(all.objective == doctest::Approx(0.0));
  km.k = p.sigs.size() + 1;
  CHECK_THROWS_AS(kmeans_fit(p.sigs, km), ConfigError);
}

TEST_CASE("objective never rises during assignment") {
  const Planted p = planted(10, 9);
  for (std::size_t k : {2u, 3u, 7u}) {
    KMeansOptions km;
    km.k = k;
    km.restarts = 1;
    km.seed = k;
    for (const auto& r : {kmeans_fit(p.sigs, km), kmeans_fit(p.data.stack, km)}) {
      REQUIRE_FALSE(r.trace.empty());
      for (const auto& s : r.trace) CHECK(s.after_assignment <= s.before_assignment);
    }
  }
}

TEST_CASE("k-means++ picks an isolated outlier") {
  // 19 near-identical days and one far outlier: D^2 weighting should pick the
  // outlier as the second seed nearly every time.
  const GridGeometry g = GridGeometry::unit(2, 2);
  FieldStack s;
  s.geometry = g;
  s.variable_name = "x";
  Rng noise(3);
  Date d = parse_date("2000-01-01");
  for (int i = 0; i < 20; ++i) {
    GridField f(g, d);
    for (float& v : f.values) v = static_cast<float>(noise.uniform(0.0, 0.1));
    if (i == 13) f.values[0] = 100.0f;
    s.push_back(f);
    d = Date{std::chrono::sys_days{d} + std::chrono::days{1}};
  }
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const auto seeds = kmeanspp_seed(s, 2, rng);
    if (std::find(seeds.begin(), seeds.end(), 13u) != seeds.end()) ++hits;
  }
  CHECK(hits > 900);
}

TEST_CASE("results are deterministic for a seed and thread count") {
  const Planted p = planted(8, 12);
  KMeansOptions km;
  km.k = 4;
  km.seed = 99;
  km.threads = 1;
  const auto a = kmeans_fit(p.sigs, km);
  km.threads = 7;
  CHECK(kmeans_fit(p.sigs, km) == a);
  km.seed = 100;
  km.threads = 1;
  CHECK(kmeans_fit(p.sigs, km).seed == 100);
}

TEST_CASE("representatives are the argmin member") {
  const Planted p = planted(6, 2);
  KMeansOptions km;
  km.k = 5;
  const auto r = kmeans_fit(p.data.stack, km);
  const auto& cent = std::get<std::vector<VectorCentroid>>(r.centroids);
  const auto groups = r.members();
  for (std::size_t c = 0; c < r.k; ++c) {
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t d : groups[c]) {
      const double v = l2_to_centroid(p.data.stack[d], cent[c]);
      if (v < best) {
        best = v;
        arg = d;
      }
    }
    CHECK(r.representatives[c] == arg);
  }
  CHECK(representative_elements(r, p.data.stack) == r.representatives);
}

TEST_CASE("HAC recovers well-separated triples") {
  // Three triples: within 1, across 10.
  DissimilarityMatrix m(9, Measure::L2);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = i + 1; j < 9; ++j) m.set(i, j, i / 3 == j / 3 ? 1.0 : 10.0);
  }
  for (Linkage l : {Linkage::Average, Linkage::Complete, Linkage::Single, Linkage::Ward}) {
    const auto r = hac_fit(m, 3, l);
    CHECK(r.assignments == std::vector<std::size_t>{0, 0, 0, 1, 1, 1, 2, 2, 2});
    CHECK(r.merges.size() == 6);
  }
}

TEST_CASE("average-linkage heights are monotone") {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng.index(20);
    DissimilarityMatrix m(n, Measure::ED);
    for (double& v : m.triangle()) v = rng.uniform();
    const auto merges = hac_dendrogram(m, Linkage::Average);
    REQUIRE(merges.size() == n - 1);
    CHECK(merges.back().size == n);
    for (std::size_t i = 1; i < merges.size(); ++i) CHECK(merges[i].height >= merges[i - 1].height);
  }
}

TEST_CASE("ward needs L2") {
  DissimilarityMatrix m(4, Measure::ED);
  CHECK_THROWS_AS(hac_fit(m, 2, Linkage::Ward), ConfigError);
}

TEST_CASE("HAC with centroids attached") {
  const Planted p = planted(6, 5);
  const auto m = pairwise_matrix(p.sigs);
  auto r = hac_fit(m, 5);
  attach_centroids(r, p.sigs);
  CHECK(std::holds_alternative<std::vector<SignatureCentroid>>(r.centroids));
  CHECK(representative_elements(r, p.sigs) == r.representatives);
  CHECK(adjusted_rand_index(r.assignments, p.data.labels) >= 0.9);
}

TEST_CASE("algorithm and linkage names") {
  CHECK(parse_algorithm("KMS") == Algorithm::KMeans);
  CHECK(parse_algorithm("HAC") == Algorithm::HAC);
  CHECK(parse_linkage("ward") == Linkage::Ward);
  CHECK_THROWS_AS(parse_linkage("centroid"), ConfigError);
}
