#include "doctest.h"
#include "edcluster/dissimilarity.hpp"
#include "edcluster/errors.hpp"
#include "edcluster/synthetic.hpp"

using namespace edc;

TEST_CASE("generation is deterministic per seed") {
  const SyntheticSpec spec = planted_regimes_spec(5, 12, 12, 17);
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(a.stack == b.stack);
  CHECK(a.labels == b.labels);
  CHECK(a.stack.size() == 25);
  const auto c = generate_synthetic(planted_regimes_spec(5, 12, 12, 18));
  CHECK_FALSE(c.stack == a.stack);
}

TEST_CASE("planted days draw values from the profile bins") {
  const SyntheticSpec spec = planted_regimes_spec(4, 20, 20, 1);
  const auto data = generate_synthetic(spec);
  for (std::size_t d = 0; d < data.stack.size(); ++d) {
    const auto& regime = spec.regimes[data.labels[d]];
    const auto sig = signature(data.stack[d], spec.partition, spec.edges, 0.0);
    for (std::size_t z = 0; z < 4; ++z) {
      for (std::size_t b = 0; b < 9; ++b) {
        if (regime.zones[z].bin_probs[b] == 0.0) CHECK(sig.zone_histograms[z].probs[b] == 0.0);
      }
    }
  }
}

TEST_CASE("localized vs spread has equal L2 norms") {
  const GridGeometry g = GridGeometry::unit(30, 30);
  const auto f = make_localized_vs_spread(g, 5, 2, 2);
  CHECK(l2_distance(f.reference, f.peak) == doctest::Approx(5.0));
  CHECK(l2_distance(f.reference, f.spread) == doctest::Approx(5.0));
}

TEST_CASE("shifted blobs must stay in or leave the zone") {
  const GridGeometry g = GridGeometry::unit(10, 10);
  const ZonePartition p = ZonePartition::quadrants(g);
  CHECK_NOTHROW(make_shifted_blobs(g, p, 1, 4.0f, 2, 5, 1));
  CHECK_THROWS_AS(make_shifted_blobs(g, p, 1, 4.0f, 2, 7, 1), ConfigError);
}
