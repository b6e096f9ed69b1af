#include "edcluster/quantization.hpp"

#include <algorithm>
#include <cmath>

#include "edcluster/errors.hpp"
#include "edcluster/parallel.hpp"

namespace edc {

void BinEdges::validate() const {
  if (edges.empty()) throw ConfigError("bin edges: at least one edge required");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw ConfigError("bin edges: non-finite edge");
    if (i > 0 && !(edges[i - 1] < edges[i])) {
      throw ConfigError("bin edges: not strictly increasing at position " + std::to_string(i));
    }
  }
  if (zero_bin && !(edges.front() > 0.0)) {
    throw ConfigError("bin edges: with a zero bin the first edge must be positive");
  }
}

std::size_t BinEdges::bin_of(double value) const {
  const std::size_t offset = zero_bin ? 1 : 0;
  if (zero_bin && value == 0.0) return 0;
  // Intervals are ]e_{j-1}, e_j]: the first edge >= value closes the bin.
  const auto it = std::lower_bound(edges.begin(), edges.end(), value);
  return offset + static_cast<std::size_t>(it - edges.begin());
}

BinEdges rainfall_table1_edges() { return BinEdges{{1.2, 2.2, 5.2, 8.7, 16.4, 26.9, 59.2}, true}; }

std::vector<double> rainfall_table1_centiles() { return {0.35, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99}; }

BinEdges beaufort_edges() {
  return BinEdges{{0.5, 1.5, 3.3, 5.5, 8.0, 10.8, 13.9, 17.2, 20.7, 24.5, 28.4, 32.6}, false};
}

BinEdges edges_from_quantiles(std::span<const double> reference_values, std::span<const double> centiles,
                              bool zero_bin) {
  if (reference_values.empty()) throw ConfigError("quantile edges: empty reference set");
  if (centiles.empty()) throw ConfigError("quantile edges: no centiles given");
  for (std::size_t i = 0; i < centiles.size(); ++i) {
    if (!(centiles[i] > 0.0 && centiles[i] < 1.0)) throw ConfigError("quantile edges: centiles must lie in (0,1)");
    if (i > 0 && !(centiles[i - 1] < centiles[i])) {
      throw ConfigError("quantile edges: centiles must be strictly increasing");
    }
  }
  std::vector<double> sample;
  sample.reserve(reference_values.size());
  bool any_nonzero = false;
  for (double v : reference_values) {
    if (!std::isfinite(v)) continue;
    any_nonzero = any_nonzero || v != 0.0;
    if (!zero_bin || v > 0.0) sample.push_back(v);
  }
  if (!any_nonzero) throw ConfigError("quantile edges: reference set is all zero");
  if (sample.empty()) throw ConfigError("quantile edges: no strictly positive reference values");
  std::sort(sample.begin(), sample.end());

  BinEdges out;
  out.zero_bin = zero_bin;
  out.edges.reserve(centiles.size());
  const double last = static_cast<double>(sample.size() - 1);
  for (double q : centiles) {
    const double h = last * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    out.edges.push_back(sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]));
  }
  try {
    out.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("quantile edges collapsed: ") + e.what());
  }
  return out;
}

std::vector<std::size_t> bin_counts(std::span<const double> values, const BinEdges& edges) {
  std::vector<std::size_t> counts(edges.bin_count(), 0);
  for (double v : values) ++counts[edges.bin_of(v)];
  return counts;
}

void smooth_in_place(std::vector<double>& probs, double epsilon) {
  if (epsilon < 0.0) throw ConfigError("smoothing epsilon must be >= 0");
  if (epsilon == 0.0) return;
  double total = 0.0;
  for (double& p : probs) {
    p = std::max(p, epsilon);
    total += p;
  }
  for (double& p : probs) p /= total;
}

Histogram quantize(std::span<const double> values, const BinEdges& edges, double epsilon) {
  if (epsilon < 0.0) throw ConfigError("smoothing epsilon must be >= 0");
  Histogram h;
  const std::size_t m = edges.bin_count();
  if (values.empty()) {
    h.probs.assign(m, 1.0 / static_cast<double>(m));
    h.empty = true;
    return h;
  }
  const auto counts = bin_counts(values, edges);
  const double n = static_cast<double>(values.size());
  h.probs.resize(m);
  for (std::size_t b = 0; b < m; ++b) h.probs[b] = static_cast<double>(counts[b]) / n;
  smooth_in_place(h.probs, epsilon);
  return h;
}

DaySignature signature(const GridField& day, const ZonePartition& partition, const BinEdges& edges,
                       double epsilon, std::size_t day_index) {
  DaySignature sig;
  sig.day_index = day_index;
  sig.zone_histograms.reserve(partition.size());
  for (std::size_t z = 0; z < partition.size(); ++z) {
    const auto values = extract_zone(day, partition, z);
    sig.zone_histograms.push_back(quantize(values, edges, epsilon));
  }
  return sig;
}

std::vector<DaySignature> signatures(const FieldStack& stack, const ZonePartition& partition,
                                     const BinEdges& edges, double epsilon, unsigned threads) {
  edges.validate();
  partition.validate(stack.geometry);
  std::vector<DaySignature> out(stack.size());
  parallel_for(stack.size(), threads,
               [&](std::size_t d) { out[d] = signature(stack.days[d], partition, edges, epsilon, d); });
  return out;
}

}  // namespace edc
