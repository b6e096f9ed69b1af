#include <numeric>

#include "doctest.h"
#include "edcluster/errors.hpp"
#include "edcluster/evaluation.hpp"
#include "edcluster/random.hpp"
#include "edcluster/synthetic.hpp"

using namespace edc;

namespace {

DissimilarityMatrix from_dense(const std::vector<std::vector<double>>& d) {
  DissimilarityMatrix m(d.size(), Measure::L2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) m.set(i, j, d[i][j]);
  }
  return m;
}

}  // namespace

TEST_CASE("two tight pairs") {
  const auto m = from_dense({{0, 1, 10, 10}, {1, 0, 10, 10}, {10, 10, 0, 1}, {10, 10, 1, 0}});
  const std::vector<std::size_t> lab{0, 0, 1, 1};
  CHECK(silhouette(m, lab).mean == doctest::Approx(0.9));
}

TEST_CASE("equidistant points score zero") {
  DissimilarityMatrix m(6, Measure::ED);
  for (double& v : m.triangle()) v = 2.0;
  const std::vector<std::size_t> lab{0, 0, 1, 1, 2, 2};
  const auto r = silhouette(m, lab);
  for (double s : r.per_sample) CHECK(s == 0.0);
  CHECK(r.measure_tag == Measure::ED);
}

TEST_CASE("singletons score zero and k = 1 is rejected") {
  const auto m = from_dense({{0, 1, 5}, {1, 0, 5}, {5, 5, 0}});
  const auto r = silhouette(m, std::vector<std::size_t>{0, 0, 1});
  CHECK(r.per_sample[2] == 0.0);
  CHECK_THROWS_AS(silhouette(m, std::vector<std::size_t>{0, 0, 0}), ConfigError);
}

TEST_CASE("silhouette matches brute force") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 15;
    DissimilarityMatrix m(n, Measure::L2);
    for (double& v : m.triangle()) v = rng.uniform(0.0, 3.0);
    std::vector<std::size_t> lab(n);
    for (std::size_t i = 0; i < n; ++i) lab[i] = i < 3 ? i : rng.index(3);
    const auto r = silhouette(m, lab, 3);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> sum(3, 0.0), cnt(3, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        sum[lab[j]] += m(i, j);
        cnt[lab[j]] += 1.0;
      }
      if (cnt[lab[i]] == 0.0) {
        CHECK(r.per_sample[i] == 0.0);
        continue;
      }
      const double a = sum[lab[i]] / cnt[lab[i]];
      double b = 1e300;
      for (std::size_t c = 0; c < 3; ++c) {
        if (c != lab[i] && cnt[c] > 0.0) b = std::min(b, sum[c] / cnt[c]);
      }
      CHECK(r.per_sample[i] == doctest::Approx((b - a) / std::max(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("k sweep peaks at the planted count") {
  const SyntheticSpec spec = planted_regimes_spec(20, 16, 16, 3);
  const SyntheticData data = generate_synthetic(spec);
  const auto sigs = signatures(data.stack, spec.partition, spec.edges);
  SweepOptions so;
  so.k_values = {2, 3, 4, 5, 6, 7};
  const auto curve = k_sweep(sigs, so);
  REQUIRE(curve.size() == 6);
  CHECK(curve[sweep_peak(curve)].k == 5);
  so.threads = 1;
  CHECK(k_sweep(sigs, so) == curve);
  so.algorithm = Algorithm::HAC;
  CHECK(k_sweep(sigs, so)[3].k == 5);
}

TEST_CASE("monthly tallies") {
  FieldStack s;
  s.geometry = GridGeometry::unit(1, 1);
  s.variable_name = "x";
  for (const char* d : {"2000-01-05", "2000-01-20", "2000-02-01", "2000-07-04", "2001-07-05"}) {
    s.push_back(GridField(s.geometry, parse_date(d)));
  }
  ClusteringResult r;
  r.k = 2;
  r.assignments = {0, 1, 0, 1, 1};
  const auto m = monthly_distribution(r, s);
  CHECK(m.counts[0][0] == 1);
  CHECK(m.counts[1][0] == 1);
  CHECK(m.counts[0][1] == 1);
  CHECK(m.counts[1][6] == 2);
  CHECK(m.total() == 5);
  CHECK(m.cluster_totals() == std::vector<std::size_t>{2, 3});
  CHECK(m.month_totals()[6] == 2);
}

TEST_CASE("adjusted Rand index") {
  const std::vector<std::size_t> a{0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> relabelled{2, 2, 0, 0, 1, 1};
  CHECK(adjusted_rand_index(a, relabelled) == doctest::Approx(1.0));
  const std::vector<std::size_t> b{0, 1, 0, 1, 0, 1};
  CHECK(adjusted_rand_index(a, b) < 0.1);
}
