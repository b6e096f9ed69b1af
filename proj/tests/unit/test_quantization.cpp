#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "edcluster/errors.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"
#include "edcluster/random.hpp"

using namespace edc;

TEST_CASE("rainfall preset is the published table") {
  const BinEdges e = rainfall_table1_edges();
  CHECK(e.edges == std::vector<double>{1.2, 2.2, 5.2, 8.7, 16.4, 26.9, 59.2});
  CHECK(e.zero_bin);
  CHECK(e.bin_count() == 9);
}

TEST_CASE("bin boundaries are right-closed") {
  const BinEdges e = rainfall_table1_edges();
  CHECK(e.bin_of(0.0) == 0);
  CHECK(e.bin_of(0.01) == 1);
  CHECK(e.bin_of(1.2) == 1);
  CHECK(e.bin_of(1.2000001) == 2);
  CHECK(e.bin_of(59.2) == 7);
  CHECK(e.bin_of(500.0) == 8);
}

TEST_CASE("Beaufort edges") {
  const BinEdges e = beaufort_edges();
  CHECK(e.bin_count() == 13);
  CHECK_FALSE(e.zero_bin);
  CHECK(e.bin_of(0.2) == 0);
  CHECK(e.bin_of(10.8) == 5);
  CHECK(e.bin_of(10.9) == 6);
  CHECK(e.bin_of(40.0) == 12);
}

TEST_CASE("invalid edges are rejected") {
  CHECK_THROWS_AS((BinEdges{{1.0, 1.0}, false}.validate()), ConfigError);
  CHECK_THROWS_AS((BinEdges{{2.0, 1.0}, false}.validate()), ConfigError);
  CHECK_THROWS_AS((BinEdges{{}, false}.validate()), ConfigError);
}

TEST_CASE("quantize hand count") {
  const std::vector<double> v{0.0, 0.0, 3.0, 70.0};
  const Histogram h = quantize(v, rainfall_table1_edges(), 0.0);
  CHECK(h.probs == std::vector<double>{0.5, 0, 0, 0.25, 0, 0, 0, 0, 0.25});
  CHECK_FALSE(h.empty);
}

TEST_CASE("smoothing floors bins and keeps a distribution") {
  const std::vector<double> v{0.0, 0.0, 3.0, 70.0};
  const Histogram h = quantize(v, rainfall_table1_edges(), 1e-9);
  double sum = 0.0;
  for (double p : h.probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(h.probs[0] - 0.5) < 1e-8);
}

TEST_CASE("empty zone gives a flagged uniform histogram") {
  const Histogram h = quantize(std::vector<double>{}, rainfall_table1_edges());
  CHECK(h.empty);
  for (double p : h.probs) CHECK(p == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("quantile edges follow the order-statistic rule") {
  std::vector<double> ref;
  for (int i = 1; i <= 100; ++i) ref.push_back(i);
  const std::vector<double> half{0.5};
  CHECK(edges_from_quantiles(ref, half, false).edges[0] == doctest::Approx(50.5));

  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> values(3 + rng.index(100));
    for (double& x : values) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 30.0);
    std::vector<double> pos;
    for (double x : values) {
      if (x > 0.0) pos.push_back(x);
    }
    if (pos.size() < 2) continue;
    std::sort(pos.begin(), pos.end());
    const auto cs = rainfall_table1_centiles();
    const BinEdges e = edges_from_quantiles(values, cs, true);
    CHECK(e.zero_bin);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const double h = cs[i] * static_cast<double>(pos.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = static_cast<std::size_t>(std::ceil(h));
      const double want = pos[lo] + (h - static_cast<double>(lo)) * (pos[hi] - pos[lo]);
      CHECK(e.edges[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("signatures cover every zone") {
  const GridGeometry g = GridGeometry::unit(4, 4);
  GridField f(g, parse_date("2000-01-01"));
  f.at(0, 0) = 70.0f;
  const DaySignature s = signature(f, ZonePartition::quadrants(g), rainfall_table1_edges(), 0.0, 3);
  CHECK(s.zone_count() == 4);
  CHECK(s.bin_count() == 9);
  CHECK(s.day_index == 3);
  CHECK(s.zone_histograms[0].probs[8] == doctest::Approx(0.25));
  CHECK(s.zone_histograms[1].probs[0] == 1.0);
}
