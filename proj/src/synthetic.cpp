#include "edcluster/synthetic.hpp"

#include <numeric>

#include "edcluster/errors.hpp"
#include "edcluster/random.hpp"

namespace edc {

namespace {

std::size_t draw_bin(Rng& rng, const std::vector<double>& weights, double total) {
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t b = 0; b < weights.size(); ++b) {
    if (weights[b] <= 0.0) continue;
    last = b;
    cumulative += weights[b];
    if (cumulative > target) return b;
  }
  return last;
}

// A value strictly inside the bin, away from both boundaries so that the
// f32 rounding of the stored value cannot move it into a neighbouring bin.
float draw_value(Rng& rng, const BinEdges& edges, std::size_t bin) {
  std::size_t interval = bin;
  if (edges.zero_bin) {
    if (bin == 0) return 0.0f;
    interval = bin - 1;
  }
  const auto& e = edges.edges;
  double lo, hi;
  if (interval == 0) {
    hi = e.front();
    lo = hi > 0.0 ? 0.0 : hi - 1.0;
  } else if (interval == e.size()) {
    lo = e.back();
    hi = 2.0 * lo > lo ? 2.0 * lo : lo + 1.0;
  } else {
    lo = e[interval - 1];
    hi = e[interval];
  }
  return static_cast<float>(lo + (hi - lo) * (0.01 + 0.98 * rng.uniform()));
}

void check_profile(const ZoneProfile& profile, const Zone& zone, std::size_t bins, const std::string& regime) {
  if (profile.bin_probs.size() != bins) {
    throw ConfigError("regime '" + regime + "': zone " + zone.name + " has " +
                      std::to_string(profile.bin_probs.size()) + " bin weights, edges define " +
                      std::to_string(bins));
  }
  double total = 0.0;
  for (double w : profile.bin_probs) {
    if (!(w >= 0.0)) throw ConfigError("regime '" + regime + "': negative bin weight");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("regime '" + regime + "': bin weights sum to zero");
  if (profile.blob_size > zone.row_end - zone.row_start || profile.blob_size > zone.col_end - zone.col_start) {
    throw ConfigError("regime '" + regime + "': blob of size " + std::to_string(profile.blob_size) +
                      " exceeds zone " + zone.name);
  }
}

void fill_square(GridField& field, std::size_t row, std::size_t col, std::size_t size, float value) {
  if (row + size > field.geometry.n_rows || col + size > field.geometry.n_cols) {
    throw ConfigError("blob at (" + std::to_string(row) + ", " + std::to_string(col) + ") of size " +
                      std::to_string(size) + " exceeds the grid");
  }
  for (std::size_t r = row; r < row + size; ++r) {
    for (std::size_t c = col; c < col + size; ++c) field.at(r, c) = value;
  }
}

Date day_after(Date start, long offset) {
  return Date{std::chrono::sys_days{start} + std::chrono::days{offset}};
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.geometry.validate();
  spec.partition.validate(spec.geometry);
  spec.edges.validate();
  if (spec.regimes.empty()) throw ConfigError("synthetic: no regimes");
  const std::size_t bins = spec.edges.bin_count();
  for (const Regime& regime : spec.regimes) {
    if (regime.zones.size() != spec.partition.size()) {
      throw ConfigError("regime '" + regime.name + "' defines " + std::to_string(regime.zones.size()) +
                        " zones, partition has " + std::to_string(spec.partition.size()));
    }
    for (std::size_t z = 0; z < regime.zones.size(); ++z) {
      check_profile(regime.zones[z], spec.partition.zones[z], bins, regime.name);
    }
  }

  Rng rng(mix_seed(spec.seed));
  SyntheticData out;
  out.labels.reserve(spec.regimes.size() * spec.days_per_regime);
  for (std::size_t r = 0; r < spec.regimes.size(); ++r) {
    out.labels.insert(out.labels.end(), spec.days_per_regime, r);
  }
  for (std::size_t i = out.labels.size(); i > 1; --i) std::swap(out.labels[i - 1], out.labels[rng.index(i)]);

  out.stack.geometry = spec.geometry;
  out.stack.variable_name = spec.variable;
  out.stack.units = spec.units;
  out.stack.days.reserve(out.labels.size());
  for (std::size_t d = 0; d < out.labels.size(); ++d) {
    GridField day(spec.geometry, day_after(spec.start, static_cast<long>(d)));
    const Regime& regime = spec.regimes[out.labels[d]];
    for (std::size_t z = 0; z < regime.zones.size(); ++z) {
      const ZoneProfile& profile = regime.zones[z];
      const Zone& zone = spec.partition.zones[z];
      const double total = std::accumulate(profile.bin_probs.begin(), profile.bin_probs.end(), 0.0);
      std::size_t r0 = zone.row_start, r1 = zone.row_end, c0 = zone.col_start, c1 = zone.col_end;
      if (profile.blob_size > 0) {
        r0 += rng.index(zone.row_end - zone.row_start - profile.blob_size + 1);
        c0 += rng.index(zone.col_end - zone.col_start - profile.blob_size + 1);
        r1 = r0 + profile.blob_size;
        c1 = c0 + profile.blob_size;
      }
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) {
          day.at(r, c) = draw_value(rng, spec.edges, draw_bin(rng, profile.bin_probs, total));
        }
      }
    }
    out.stack.days.push_back(std::move(day));
  }
  out.stack.validate();
  return out;
}

SyntheticSpec planted_regimes_spec(std::size_t days_per_regime, std::size_t n_rows, std::size_t n_cols,
                                   std::uint64_t seed, std::size_t n_regimes) {
  if (n_regimes < 1 || n_regimes > 5) throw ConfigError("planted regimes: between 1 and 5 regimes supported");
  SyntheticSpec spec;
  spec.geometry = GridGeometry::unit(n_rows, n_cols);
  spec.partition = ZonePartition::quadrants(spec.geometry);
  spec.edges = rainfall_table1_edges();
  spec.days_per_regime = days_per_regime;
  spec.seed = seed;

  //                       0     ]0,1.2] ]..2.2] ]..5.2] ]..8.7] ]..16.4] ]..26.9] ]..59.2] >59.2
  const ZoneProfile dry{{0.85, 0.10, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  const ZoneProfile wet{{0.15, 0.10, 0.10, 0.15, 0.15, 0.15, 0.10, 0.07, 0.03}};
  const ZoneProfile moderate{{0.45, 0.20, 0.15, 0.12, 0.08, 0.0, 0.0, 0.0, 0.0}};
  for (std::size_t r = 0; r < n_regimes; ++r) {
    Regime regime;
    if (r < 4) {
      regime.name = "wet_" + spec.partition.zones[r].name;
      for (std::size_t z = 0; z < 4; ++z) regime.zones.push_back(z == r ? wet : dry);
    } else {
      regime.name = "moderate_everywhere";
      regime.zones.assign(4, moderate);
    }
    spec.regimes.push_back(std::move(regime));
  }
  return spec;
}

SyntheticSpec blob_position_spec(std::size_t days_per_regime, std::size_t n_rows, std::size_t n_cols,
                                 std::size_t blob_size, std::uint64_t seed, std::size_t n_regimes) {
  if (n_regimes < 1 || n_regimes > 4) throw ConfigError("blob regimes: between 1 and 4 regimes supported");
  SyntheticSpec spec;
  spec.geometry = GridGeometry::unit(n_rows, n_cols);
  spec.partition = ZonePartition::quadrants(spec.geometry);
  spec.edges = rainfall_table1_edges();
  spec.days_per_regime = days_per_regime;
  spec.seed = seed;

  const ZoneProfile heavy{{0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0}, blob_size};
  const ZoneProfile light{{0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, blob_size};
  for (std::size_t r = 0; r < n_regimes; ++r) {
    Regime regime;
    regime.name = "heavy_" + spec.partition.zones[r].name;
    for (std::size_t z = 0; z < 4; ++z) regime.zones.push_back(z == r ? heavy : light);
    spec.regimes.push_back(std::move(regime));
  }
  return spec;
}

LocalizedVsSpread make_localized_vs_spread(const GridGeometry& geometry, std::size_t amplitude, std::size_t row,
                                           std::size_t col) {
  geometry.validate();
  if (amplitude < 1) throw ConfigError("amplitude must be at least 1");
  const Date start{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
  LocalizedVsSpread out{GridField(geometry, start), GridField(geometry, day_after(start, 1)),
                        GridField(geometry, day_after(start, 2))};
  fill_square(out.spread, row, col, amplitude, 1.0f);
  fill_square(out.peak, row, col, 1, static_cast<float>(amplitude));
  return out;
}

ShiftedBlobs make_shifted_blobs(const GridGeometry& geometry, const ZonePartition& partition,
                                std::size_t blob_size, float amplitude, std::size_t row, std::size_t col,
                                std::size_t shift) {
  geometry.validate();
  partition.validate(geometry);
  if (blob_size < 1) throw ConfigError("blob size must be at least 1");
  if (shift < blob_size) throw ConfigError("shift must be at least the blob size so the copies are disjoint");
  if (col < shift) throw ConfigError("cross-zone shift leaves the grid");

  std::size_t home = partition.size();
  for (std::size_t z = 0; z < partition.size(); ++z) {
    if (partition.zones[z].contains(row, col)) home = z;
  }
  if (home == partition.size()) throw ConfigError("blob origin lies outside every zone");
  const Zone& zone = partition.zones[home];
  auto inside_home = [&](std::size_t r, std::size_t c) {
    return zone.contains(r, c) && zone.contains(r + blob_size - 1, c + blob_size - 1);
  };
  if (!inside_home(row, col)) throw ConfigError("blob does not fit in zone " + zone.name);
  if (!inside_home(row, col + shift)) throw ConfigError("within-zone shift leaves zone " + zone.name);
  for (std::size_t r = row; r < row + blob_size; ++r) {
    for (std::size_t c = col - shift; c < col - shift + blob_size; ++c) {
      if (zone.contains(r, c)) throw ConfigError("cross-zone shift stays inside zone " + zone.name);
    }
  }

  const Date start{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
  ShiftedBlobs out{GridField(geometry, start), GridField(geometry, day_after(start, 1)),
                   GridField(geometry, day_after(start, 2))};
  fill_square(out.reference, row, col, blob_size, amplitude);
  fill_square(out.within_zone, row, col + shift, blob_size, amplitude);
  fill_square(out.across_zone, row, col - shift, blob_size, amplitude);
  return out;
}

}  // namespace edc
