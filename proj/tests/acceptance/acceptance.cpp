// One PASS/FAIL line per acceptance criterion; exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "edcluster/clustering.hpp"
#include "edcluster/dissimilarity.hpp"
#include "edcluster/evaluation.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"
#include "edcluster/random.hpp"
#include "edcluster/synthetic.hpp"

using namespace edc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void require(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

std::vector<double> random_histogram(Rng& rng, std::size_t bins) {
  std::vector<double> p(bins);
  for (double& x : p) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
  p[rng.index(bins)] += 0.1;
  double s = 0.0;
  for (double x : p) s += x;
  for (double& x : p) x /= s;
  smooth_in_place(p, kDefaultSmoothing);
  return p;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome divergence_axioms() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  Rng rng(101);
  for (int t = 0; t < 1000; ++t) {
    const auto p = random_histogram(rng, 9);
    const auto q = random_histogram(rng, 9);
    const double pq = kls_divergence(p, q);
    require(o, pq >= 0.0, "kls < 0");
    require(o, pq == kls_divergence(q, p), "kls not exactly symmetric");
    require(o, kls_divergence(p, p) == 0.0, "kls(p,p) != 0");
  }
  for (int t = 0; t < 200; ++t) {
    DaySignature a, b;
    for (int z = 0; z < 4; ++z) {
      a.zone_histograms.push_back({random_histogram(rng, 9), false});
      b.zone_histograms.push_back({random_histogram(rng, 9), false});
    }
    const double ab = expert_deviation(a, b);
    require(o, ab >= 0.0, "ED < 0");
    require(o, ab == expert_deviation(b, a), "ED not exactly symmetric");
    require(o, expert_deviation(a, a) == 0.0, "ED(a,a) != 0");
  }
  const double secs = elapsed(t0);
  require(o, secs < 1.0, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = "1000 histogram pairs, 200 signature pairs, " + std::to_string(secs) + " s";
  return o;
}

Outcome hand_oracle() {
  Outcome o;
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  // Frozen from tests/oracles/hand_values.py.
  const double kl = kl_divergence(p, q);
  const double kls = kls_divergence(p, q);
  require(o, std::abs(kl - 0.1438410362) < 1e-5, "kl = " + std::to_string(kl));
  require(o, std::abs(kls - 0.2746530722) < 1e-5, "kls = " + std::to_string(kls));
  char buf[96];
  std::snprintf(buf, sizeof buf, "kl = %.10f, kls = %.10f", kl, kls);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome pathology() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const GridGeometry g = GridGeometry::unit(101, 189);
  const ZonePartition zones = ZonePartition::quadrants(g);
  const BinEdges edges = rainfall_table1_edges();
  auto ed = [&](const GridField& a, const GridField& b) {
    return expert_deviation(signature(a, zones, edges), signature(b, zones, edges));
  };
  const auto a = make_localized_vs_spread(g, 10, 20, 40);
  const double l2x = l2_distance(a.reference, a.peak);
  const double l2y = l2_distance(a.reference, a.spread);
  const double edx = ed(a.reference, a.peak);
  const double edy = ed(a.reference, a.spread);
  require(o, std::abs(l2x - l2y) <= 1e-9, "l2 values differ");
  require(o, std::abs(edx - edy) > 0.01, "ED gap " + std::to_string(std::abs(edx - edy)));

  const auto b = make_shifted_blobs(g, zones, 1, 10.0f, 25, g.n_cols / 2, 1);
  const double within = ed(b.reference, b.within_zone);
  const double across = ed(b.reference, b.across_zone);
  require(o, within == 0.0, "within-zone ED = " + std::to_string(within));
  require(o, across > 0.0, "cross-zone ED not positive");
  const double secs = elapsed(t0);
  require(o, secs < 1.0, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    std::ostringstream s;
    s << "l2 " << l2x << " == " << l2y << ", |dED| = " << std::abs(edx - edy) << "; shift ED " << within << " / "
      << across;
    o.detail = s.str();
  }
  return o;
}

Outcome planted_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  int good = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SyntheticSpec spec = planted_regimes_spec(60, 40, 40, seed);
    const SyntheticData data = generate_synthetic(spec);
    const auto sigs = signatures(data.stack, spec.partition, spec.edges);
    KMeansOptions km;
    km.k = 5;
    km.seed = seed;
    km.restarts = 8;
    const auto result = kmeans_fit(sigs, km);
    const double ari = adjusted_rand_index(result.assignments, data.labels);
    worst = std::min(worst, ari);
    if (ari >= 0.9) ++good;
  }
  require(o, good >= 9, std::to_string(good) + "/10 seeds with ARI >= 0.9");

  const SyntheticSpec spec = planted_regimes_spec(60, 40, 40, 1);
  const SyntheticData data = generate_synthetic(spec);
  const auto sigs = signatures(data.stack, spec.partition, spec.edges);
  SweepOptions so;
  so.k_values = {2, 3, 4, 5, 6, 7, 8};
  so.seed = 1;
  const auto curve = k_sweep(sigs, so);
  const std::size_t peak = curve[sweep_peak(curve)].k;
  require(o, peak == 5, "sweep peaks at k=" + std::to_string(peak));
  const double secs = elapsed(t0);
  require(o, secs < 30.0, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = std::to_string(good) + "/10 seeds ARI >= 0.9 (min " + std::to_string(worst) + "), sweep peak k=5, " +
               std::to_string(secs) + " s";
  }
  return o;
}

Outcome blob_contrast() {
  Outcome o;
  const SyntheticSpec spec = blob_position_spec(40, 40, 40, 4, 7);
  const SyntheticData data = generate_synthetic(spec);
  const std::size_t k = spec.regimes.size();
  KMeansOptions km;
  km.k = k;
  km.seed = 7;

  const auto sigs = signatures(data.stack, spec.partition, spec.edges);
  const auto ed_result = kmeans_fit(sigs, km);
  const double ed_sil = silhouette(pairwise_matrix(sigs), ed_result.assignments).mean;

  const auto l2_result = kmeans_fit(data.stack, km);
  const double l2_sil = silhouette(pairwise_matrix(data.stack), l2_result.assignments).mean;
  require(o, ed_sil > l2_sil, "ED " + std::to_string(ed_sil) + " <= L2 " + std::to_string(l2_sil));
  if (o.pass) o.detail = "KMS-ED " + std::to_string(ed_sil) + " > KMS-L2 " + std::to_string(l2_sil);
  return o;
}

Outcome silhouette_oracle() {
  Outcome o;
  Rng rng(606);
  double max_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 15;
    DissimilarityMatrix m(n, Measure::L2);
    for (double& v : m.triangle()) v = rng.uniform(0.1, 5.0);
    std::vector<std::size_t> lab(n);
    for (std::size_t i = 0; i < n; ++i) lab[i] = i < 3 ? i : rng.index(3);
    const auto report = silhouette(m, lab, 1);
    for (std::size_t i = 0; i < n; ++i) {
      double own = 0.0;
      std::size_t own_n = 0;
      double best_other = INFINITY;
      for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i || lab[j] != c) continue;
          sum += m(i, j);
          ++cnt;
        }
        if (c == lab[i]) {
          own = sum;
          own_n = cnt;
        } else if (cnt > 0) {
          best_other = std::min(best_other, sum / static_cast<double>(cnt));
        }
      }
      double expected = 0.0;
      if (own_n > 0) {
        const double a = own / static_cast<double>(own_n);
        expected = (best_other - a) / std::max(a, best_other);
      }
      max_err = std::max(max_err, std::abs(expected - report.per_sample[i]));
    }
  }
  require(o, max_err <= 1e-12, "max error " + std::to_string(max_err));
  if (o.pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "20 matrices, max error %.3g", max_err);
    o.detail = buf;
  }
  return o;
}

Outcome clustering_mechanics() {
  Outcome o;
  const SyntheticSpec spec = planted_regimes_spec(12, 16, 16, 3);
  const SyntheticData data = generate_synthetic(spec);
  const auto sigs = signatures(data.stack, spec.partition, spec.edges);

  auto monotone = [&](const ClusteringResult& r, const char* tag) {
    for (const auto& s : r.trace) {
      require(o, s.after_assignment <= s.before_assignment, std::string(tag) + " objective rose on assignment");
    }
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (std::size_t k : {2u, 4u, 6u}) {
      KMeansOptions km;
      km.k = k;
      km.seed = seed;
      km.restarts = 1;
      const auto ed1 = kmeans_fit(sigs, km);
      const auto l21 = kmeans_fit(data.stack, km);
      monotone(ed1, "ED");
      monotone(l21, "L2");

      // Representatives against an exhaustive argmin over members.
      const auto& ec = std::get<std::vector<SignatureCentroid>>(ed1.centroids);
      const auto& lc = std::get<std::vector<VectorCentroid>>(l21.centroids);
      const auto em = ed1.members();
      const auto lm = l21.members();
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t best = em[c].front();
        for (std::size_t d : em[c]) {
          if (ed_to_centroid(sigs[d], ec[c]) < ed_to_centroid(sigs[best], ec[c])) best = d;
        }
        require(o, ed1.representatives[c] == best, "ED representative is not the argmin member");
        best = lm[c].front();
        for (std::size_t d : lm[c]) {
          if (l2_to_centroid(data.stack[d], lc[c]) < l2_to_centroid(data.stack[best], lc[c])) best = d;
        }
        require(o, l21.representatives[c] == best, "L2 representative is not the argmin member");
      }

      for (unsigned threads : {2u, 5u}) {
        km.threads = threads;
        require(o, kmeans_fit(sigs, km) == ed1, "ED k-means depends on thread count");
        require(o, kmeans_fit(data.stack, km) == l21, "L2 k-means depends on thread count");
      }
    }
  }

  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    DissimilarityMatrix m(12, Measure::L2);
    for (double& v : m.triangle()) v = rng.uniform();
    const auto merges = hac_dendrogram(m, Linkage::Average);
    for (std::size_t i = 1; i < merges.size(); ++i) {
      require(o, merges[i].height >= merges[i - 1].height, "average-linkage heights not monotone");
    }
  }
  const auto m1 = pairwise_matrix(sigs, 1);
  require(o, pairwise_matrix(sigs, 4) == m1, "ED matrix depends on thread count");
  require(o, pairwise_matrix(data.stack, 1) == pairwise_matrix(data.stack, 3), "L2 matrix depends on thread count");
  auto h1 = hac_fit(m1, 5);
  attach_centroids(h1, sigs);
  auto h2 = hac_fit(m1, 5);
  attach_centroids(h2, sigs);
  require(o, h1 == h2, "HAC not deterministic");
  require(o, silhouette(m1, h1.assignments, 1).per_sample == silhouette(m1, h1.assignments, 6).per_sample,
          "silhouette depends on thread count");
  if (o.pass) o.detail = "monotone traces, argmin representatives, thread-count invariant";
  return o;
}

Outcome quantization() {
  Outcome o;
  const BinEdges t1 = rainfall_table1_edges();
  require(o, t1.edges == std::vector<double>{1.2, 2.2, 5.2, 8.7, 16.4, 26.9, 59.2} && t1.zero_bin,
          "rainfall preset differs from the table");
  const std::vector<double> sample{0.0, 0.0, 3.0, 70.0};
  const Histogram h = quantize(sample, t1, 0.0);
  const std::vector<double> expected{0.5, 0, 0, 0.25, 0, 0, 0, 0, 0.25};
  require(o, h.probs == expected, "quantize({0,0,3,70}) mismatch");

  Rng rng(808);
  const std::vector<double> cs{0.1, 0.35, 0.5, 0.8, 0.95};
  for (int t = 0; t < 100; ++t) {
    std::vector<double> ref(5 + rng.index(200));
    for (double& v : ref) v = rng.uniform(0.0, 50.0);
    const BinEdges e = edges_from_quantiles(ref, cs, false);
    std::vector<double> sorted = ref;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const double h_pos = cs[i] * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(h_pos));
      const auto hi = static_cast<std::size_t>(std::ceil(h_pos));
      const double want = sorted[lo] + (h_pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
      require(o, std::abs(e.edges[i] - want) <= 1e-12 * std::max(1.0, std::abs(want)), "quantile edge mismatch");
    }
  }
  if (o.pass) o.detail = "preset exact, hand count matched, 100 quantile sets matched";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome end_to_end() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "edcluster_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  const SyntheticData data = generate_synthetic(planted_regimes_spec(20, 24, 24, 5));
  save_stack(data.stack, root / "planted.json");

  std::ostringstream sink;
  auto invoke = [&](const std::string& out) {
    return cli::run({"cluster", "--input", (root / "planted.json").string(), "--k", "5", "--k-range", "2..7",
                     "--seed", "11", "--out", (root / out).string()},
                    sink, sink);
  };
  require(o, invoke("run1") == 0, "first run failed: " + sink.str());
  require(o, invoke("run2") == 0, "second run failed: " + sink.str());
  const std::vector<std::string> files{"result.json",   "representatives.json", "representatives.f32",
                                       "silhouette.csv", "monthly.csv",         "sweep.svg",
                                       "sweep.csv",      "centroid_histograms.json", "centroid_histograms.f64"};
  for (const auto& f : files) {
    require(o, fs::exists(root / "run1" / f), f + " missing");
    if (!o.pass) break;
    require(o, slurp(root / "run1" / f) == slurp(root / "run2" / f), f + " differs between runs");
  }
  if (o.pass) {
    const FieldStack reps = load_stack(root / "run1" / "representatives.json");
    require(o, reps.size() == 5, "representative stack has " + std::to_string(reps.size()) + " days");
  }
  fs::remove_all(root);
  if (o.pass) o.detail = std::to_string(files.size()) + " files, byte-identical across two runs";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"divergence axioms", divergence_axioms},
      {"hand-oracle KL values", hand_oracle},
      {"L2 pathology constructions", pathology},
      {"planted-regime recovery", planted_recovery},
      {"ED beats L2 on blob-position regimes", blob_contrast},
      {"silhouette brute-force oracle", silhouette_oracle},
      {"clustering mechanics", clustering_mechanics},
      {"quantization", quantization},
      {"end-to-end cluster bundle", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failures;
}
