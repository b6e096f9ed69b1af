#include "commands.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "edcluster/clustering.hpp"
#include "edcluster/dissimilarity.hpp"
#include "edcluster/errors.hpp"
#include "edcluster/evaluation.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"
#include "edcluster/synthetic.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "svg_plot.hpp"

namespace edc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvariantError("output " + path.string() + " is missing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Provenance line heading every CSV output.
std::string csv_banner(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + ",seed=" + std::to_string(seed) + "\n";
}

std::size_t count_data_rows(const std::string& csv) {
  std::size_t rows = 0;
  std::istringstream in(csv);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

// Flags shared by the config-driven commands; each one overrides the
// matching config key when given.
struct ConfigFlags {
  std::string config_path;
  std::string input, preset, measure, algorithm, linkage, k_range, output, measures, algorithms;
  std::size_t k = 0, restarts = 0, max_iter = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  unsigned threads = 0;
  bool cross = false;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Run-config JSON file");
    opts = {
        app->add_option("--input", input, "Field-stack manifest"),
        app->add_option("--preset", preset, "Edges preset: rainfall_table1 | beaufort | custom"),
        app->add_option("--measure", measure, "L2 or ED"),
        app->add_option("--algorithm", algorithm, "KMS or HAC"),
        app->add_option("--linkage", linkage, "average | complete | single | ward"),
        app->add_option("--k", k, "Number of clusters"),
        app->add_option("--k-range", k_range, "k values, e.g. 2..8 or 2,3,5"),
        app->add_option("--seed", seed, "RNG seed"),
        app->add_option("--restarts", restarts, "k-means restarts"),
        app->add_option("--max-iter", max_iter, "k-means iteration cap"),
        app->add_option("--epsilon", epsilon, "Histogram smoothing floor"),
        app->add_option("--out", output, "Output directory"),
        app->add_option("--threads", threads, "Worker threads (0: ED_CLUSTER_THREADS or all cores)"),
        app->add_option("--measures", measures, "Sweep series measures, e.g. ED,L2"),
        app->add_option("--algorithms", algorithms, "Sweep series algorithms, e.g. KMS,HAC"),
        app->add_flag("--cross-measure-silhouette", cross, "Also score with the other measure (diagnostic)"),
    };
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    auto given = [&](std::size_t i) { return opts[i]->count() > 0; };
    if (given(0)) c.input = input;
    if (given(1)) c.preset = preset;
    if (given(2)) c.measure = parse_measure(measure);
    if (given(3)) c.algorithm = parse_algorithm(algorithm);
    if (given(4)) c.linkage = parse_linkage(linkage);
    if (given(5)) c.k = k;
    if (given(6)) {
      c.k_range = parse_k_range(k_range);
      if (c.k_range.empty()) throw ConfigError("empty k range");
    }
    if (given(7)) c.seed = seed;
    if (given(8)) c.restarts = restarts;
    if (given(9)) c.max_iter = max_iter;
    if (given(10)) c.epsilon = epsilon;
    if (given(11)) c.output = output;
    if (given(12)) c.threads = threads;
    if (given(13)) {
      c.measures.clear();
      std::istringstream in(measures);
      for (std::string m; std::getline(in, m, ',');) c.measures.push_back(parse_measure(m));
    }
    if (given(14)) {
      c.algorithms.clear();
      std::istringstream in(algorithms);
      for (std::string a; std::getline(in, a, ',');) c.algorithms.push_back(parse_algorithm(a));
    }
    if (given(15)) c.cross_measure_silhouette = cross;
    if (c.restarts < 1 || c.max_iter < 1) throw ConfigError("restarts and max_iter must be >= 1");
    if (!(c.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (c.input.empty()) throw ConfigError("no input stack given (config 'input' or --input)");
    return c;
  }
};

FieldStack load_input(const RunConfig& c, std::ostream& err) {
  return load_stack(c.input, [&](const std::string& w) { err << "warning: " << w << '\n'; });
}

// Data prepared once per measure: ED signatures and the pairwise matrix.
struct Prepared {
  Measure measure;
  std::vector<DaySignature> signatures;
  DissimilarityMatrix matrix;
};

Prepared prepare(const RunConfig& c, const FieldStack& stack, Measure measure) {
  Prepared p{measure, {}, {}};
  if (measure == Measure::ED) {
    p.signatures = signatures(stack, c.partition(stack.geometry), c.edges(), c.epsilon, c.threads);
    p.matrix = pairwise_matrix(p.signatures, c.threads);
  } else {
    p.matrix = pairwise_matrix(stack, c.threads);
  }
  return p;
}

ClusteringResult fit(const RunConfig& c, const FieldStack& stack, const Prepared& p, Algorithm algorithm,
                     std::size_t k) {
  if (k < 1 || k > stack.size()) {
    throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(stack.size()) + "]");
  }
  ClusteringResult result;
  if (algorithm == Algorithm::KMeans) {
    KMeansOptions km;
    km.k = k;
    km.seed = c.seed;
    km.restarts = c.restarts;
    km.max_iter = c.max_iter;
    km.epsilon = c.epsilon;
    km.threads = c.threads;
    result = p.measure == Measure::ED ? kmeans_fit(p.signatures, km) : kmeans_fit(stack, km);
  } else {
    result = hac_fit(p.matrix, k, c.linkage);
    if (p.measure == Measure::ED) {
      attach_centroids(result, p.signatures, c.epsilon);
    } else {
      attach_centroids(result, stack);
    }
    result.seed = c.seed;
  }
  result.validate();
  return result;
}

std::vector<SweepPoint> sweep_curve(const RunConfig& c, const FieldStack& stack, const Prepared& p,
                                    Algorithm algorithm, const DissimilarityMatrix* scoring) {
  SweepOptions so;
  so.algorithm = algorithm;
  so.linkage = c.linkage;
  so.k_values = c.k_range;
  so.seed = c.seed;
  so.restarts = c.restarts;
  so.max_iter = c.max_iter;
  so.epsilon = c.epsilon;
  so.threads = c.threads;
  so.silhouette_matrix = scoring;
  return p.measure == Measure::ED ? k_sweep(p.signatures, so, &p.matrix) : k_sweep(stack, so, &p.matrix);
}

struct SweepOutputs {
  std::string csv;
  std::string svg;
  std::size_t rows = 0;
  std::size_t series = 0;
};

SweepOutputs run_sweeps(const RunConfig& c, const FieldStack& stack, const std::string& hash,
                        std::ostream& out) {
  if (c.k_range.empty()) throw ConfigError("sweep needs a non-empty k_range");
  std::vector<Prepared> prepared;
  for (Measure m : c.sweep_measures()) prepared.push_back(prepare(c, stack, m));

  SweepOutputs res;
  res.csv = csv_banner(hash, c.seed) + "k,mean_silhouette,algorithm,measure,peak\n";
  std::vector<PlotSeries> series;
  for (Algorithm a : c.sweep_algorithms()) {
    for (const Prepared& p : prepared) {
      if (a == Algorithm::HAC && c.linkage == Linkage::Ward && p.measure == Measure::ED) {
        throw ConfigError("ward linkage cannot be combined with ED");
      }
      const auto curve = sweep_curve(c, stack, p, a, nullptr);
      const std::size_t peak = sweep_peak(curve);
      PlotSeries s;
      s.label = std::string(to_string(a)) + "-" + std::string(to_string(p.measure));
      for (std::size_t t = 0; t < curve.size(); ++t) {
        res.csv += std::to_string(curve[t].k) + "," + num(curve[t].mean_silhouette) + "," +
                   std::string(to_string(a)) + "," + std::string(to_string(p.measure)) + "," +
                   (t == peak ? "1" : "0") + "\n";
        s.x.push_back(static_cast<double>(curve[t].k));
        s.y.push_back(curve[t].mean_silhouette);
        ++res.rows;
      }
      out << s.label << ": peak mean silhouette " << num(curve[peak].mean_silhouette) << " at k=" << curve[peak].k
          << '\n';
      series.push_back(std::move(s));
    }
  }
  res.series = series.size();
  res.svg = line_plot_svg(series, "Silhouette index vs number of clusters", "k", "mean silhouette",
                          "config_hash=" + hash + " seed=" + std::to_string(c.seed));
  return res;
}

void check_written(const fs::path& path, const std::string& expected) {
  if (read_text(path) != expected) throw InvariantError("output " + path.string() + " did not re-read identically");
}

// ---------------------------------------------------------------------------

int cmd_cluster(const ConfigFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig c = flags.resolve();
  if (!c.k) throw ConfigError("cluster needs k (config 'k' or --k)");
  const FieldStack stack = load_input(c, err);
  if (*c.k < 1 || *c.k > stack.size()) {
    throw ConfigError("k = " + std::to_string(*c.k) + " outside [1, " + std::to_string(stack.size()) + "]");
  }
  if (c.algorithm == Algorithm::HAC && c.linkage == Linkage::Ward && c.measure == Measure::ED) {
    throw ConfigError("ward linkage cannot be combined with ED");
  }
  const std::string hash = config_hash(c);
  const json config_echo = to_json(c);
  const fs::path dir = c.output;
  ensure_dir(dir);

  const Prepared p = prepare(c, stack, c.measure);
  const ClusteringResult result = fit(c, stack, p, c.algorithm, *c.k);
  const auto groups = result.members();

  std::optional<SilhouetteReport> sil;
  std::optional<SilhouetteReport> cross;
  if (result.k >= 2) {
    sil = silhouette(p.matrix, result.assignments, c.threads);
    if (c.cross_measure_silhouette) {
      const Prepared other = prepare(c, stack, c.measure == Measure::ED ? Measure::L2 : Measure::ED);
      cross = silhouette(other.matrix, result.assignments, c.threads);
    }
  }
  const MonthlyDistribution monthly = monthly_distribution(result, stack);
  if (monthly.total() != stack.size()) throw InvariantError("monthly distribution lost days");

  // Representative days, stored in date order.
  std::vector<std::size_t> rep_days = result.representatives;
  std::vector<std::size_t> rep_order(rep_days.size());
  for (std::size_t i = 0; i < rep_order.size(); ++i) rep_order[i] = i;
  std::sort(rep_order.begin(), rep_order.end(), [&](std::size_t a, std::size_t b) { return rep_days[a] < rep_days[b]; });
  FieldStack reps;
  reps.geometry = stack.geometry;
  reps.variable_name = stack.variable_name;
  reps.units = stack.units;
  json rep_clusters = json::array();
  for (std::size_t idx : rep_order) {
    reps.days.push_back(stack.days[rep_days[idx]]);
    rep_clusters.push_back(idx);
  }
  const json rep_provenance = {{"config_hash", hash}, {"seed", c.seed}, {"cluster_of_day", rep_clusters}};
  save_stack(reps, dir / "representatives.json", rep_provenance.dump());

  // Centroid payloads.
  std::string centroid_manifest;
  if (const auto* vc = std::get_if<std::vector<VectorCentroid>>(&result.centroids)) {
    FieldStack cs;
    cs.geometry = stack.geometry;
    cs.variable_name = stack.variable_name;
    cs.units = stack.units;
    const Date base{std::chrono::year{1}, std::chrono::January, std::chrono::day{1}};
    for (std::size_t k = 0; k < vc->size(); ++k) {
      GridField f(stack.geometry, Date{std::chrono::sys_days{base} + std::chrono::days{static_cast<long>(k)}});
      for (std::size_t x = 0; x < f.values.size(); ++x) f.values[x] = static_cast<float>((*vc)[k].values[x]);
      cs.days.push_back(std::move(f));
    }
    const json prov = {{"config_hash", hash}, {"seed", c.seed}, {"note", "date index = cluster index"}};
    save_stack(cs, dir / "centroids.json", prov.dump());
    centroid_manifest = "centroids.json";
  } else if (const auto* sc = std::get_if<std::vector<SignatureCentroid>>(&result.centroids)) {
    const ZonePartition partition = c.partition(stack.geometry);
    const BinEdges edges = c.edges();
    std::string payload;
    for (const auto& centroid : *sc) {
      for (const auto& h : centroid.zone_histograms) {
        for (double v : h.probs) {
          const auto bits = std::bit_cast<std::uint64_t>(v);
          for (int b = 0; b < 8; ++b) payload.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
        }
      }
    }
    write_text(dir / "centroid_histograms.f64", payload);
    json zones = json::array();
    for (const auto& z : partition.zones) zones.push_back(z.name);
    const json manifest = {{"version", 1},
                           {"k", sc->size()},
                           {"zones", zones},
                           {"bins", edges.bin_count()},
                           {"edges", {{"zero_bin", edges.zero_bin}, {"edges", edges.edges}}},
                           {"dtype", "f64le"},
                           {"layout", "cluster,zone,bin"},
                           {"payload_file", "centroid_histograms.f64"},
                           {"config_hash", hash},
                           {"seed", c.seed}};
    write_text(dir / "centroid_histograms.json", manifest.dump(2) + "\n");
    centroid_manifest = "centroid_histograms.json";
  }

  json clusters = json::array();
  for (std::size_t k = 0; k < result.k; ++k) {
    const std::size_t r = result.representatives[k];
    json entry = {{"cluster", k},
                  {"size", groups[k].size()},
                  {"representative_index", r},
                  {"representative_date", format_date(stack.days[r].date)}};
    if (sil) entry["mean_silhouette"] = sil->per_cluster_mean[k];
    clusters.push_back(std::move(entry));
  }
  json doc = {{"format", "edcluster-result"},
              {"version", 1},
              {"config", config_echo},
              {"config_hash", hash},
              {"seed", c.seed},
              {"algorithm", std::string(to_string(result.algorithm))},
              {"measure", std::string(to_string(result.measure))},
              {"k", result.k},
              {"n_days", stack.size()},
              {"iterations", result.iterations},
              {"converged", result.converged},
              {"assignments", result.assignments},
              {"clusters", clusters},
              {"representatives_file", "representatives.json"},
              {"centroids_file", centroid_manifest},
              {"monthly_file", "monthly.csv"}};
  if (result.linkage) doc["linkage"] = std::string(to_string(*result.linkage));
  if (result.algorithm == Algorithm::KMeans) doc["objective"] = result.objective;
  if (sil) {
    doc["silhouette"] = {{"mean", sil->mean}, {"measure", std::string(to_string(sil->measure_tag))}};
    doc["silhouette_file"] = "silhouette.csv";
  }
  if (cross) doc["cross_measure_silhouette"] = {{"mean", cross->mean}, {"measure", std::string(to_string(cross->measure_tag))}};

  std::string sil_csv;
  if (sil) {
    sil_csv = csv_banner(hash, c.seed) + "day_index,date,cluster,silhouette\n";
    for (std::size_t i = 0; i < stack.size(); ++i) {
      sil_csv += std::to_string(i) + "," + format_date(stack.days[i].date) + "," +
                 std::to_string(result.assignments[i]) + "," + num(sil->per_sample[i]) + "\n";
    }
    write_text(dir / "silhouette.csv", sil_csv);
  }
  std::string monthly_csv = csv_banner(hash, c.seed) + "cluster,month,count\n";
  for (std::size_t k = 0; k < monthly.k(); ++k) {
    for (std::size_t m = 0; m < 12; ++m) {
      monthly_csv += std::to_string(k) + "," + std::to_string(m + 1) + "," + std::to_string(monthly.counts[k][m]) + "\n";
    }
  }
  write_text(dir / "monthly.csv", monthly_csv);

  std::optional<SweepOutputs> sweep;
  if (!c.k_range.empty()) {
    sweep = run_sweeps(c, stack, hash, out);
    write_text(dir / "sweep.csv", sweep->csv);
    write_text(dir / "sweep.svg", sweep->svg);
    doc["sweep_file"] = "sweep.csv";
    doc["sweep_plot"] = "sweep.svg";
  }
  const std::string result_text = doc.dump(2) + "\n";
  write_text(dir / "result.json", result_text);

  // Re-validate everything that was written.
  check_written(dir / "result.json", result_text);
  const json reread = json::parse(read_text(dir / "result.json"));
  if (reread.at("assignments").get<std::vector<std::size_t>>() != result.assignments) {
    throw InvariantError("result.json assignments did not round-trip");
  }
  if (!(load_stack(dir / "representatives.json") == reps)) throw InvariantError("representative stack did not round-trip");
  if (centroid_manifest == "centroids.json") load_stack(dir / "centroids.json");
  if (sil) {
    check_written(dir / "silhouette.csv", sil_csv);
    if (count_data_rows(sil_csv) != stack.size()) throw InvariantError("silhouette.csv row count");
  }
  check_written(dir / "monthly.csv", monthly_csv);
  if (count_data_rows(monthly_csv) != result.k * 12) throw InvariantError("monthly.csv row count");
  if (sweep) {
    check_written(dir / "sweep.csv", sweep->csv);
    check_written(dir / "sweep.svg", sweep->svg);
  }

  out << to_string(result.algorithm) << "-" << to_string(result.measure) << " k=" << result.k
      << " iterations=" << result.iterations << (result.converged ? " converged" : " not-converged");
  if (sil) out << " mean_silhouette=" << num(sil->mean);
  out << "\nwrote " << dir.string() << "/result.json (config_hash " << hash << ")\n";
  return kExitOk;
}

int cmd_sweep(const ConfigFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig c = flags.resolve();
  if (c.k_range.empty()) throw ConfigError("sweep needs k_range (config 'k_range' or --k-range)");
  const FieldStack stack = load_input(c, err);
  const std::string hash = config_hash(c);
  const fs::path dir = c.output;
  ensure_dir(dir);
  const SweepOutputs res = run_sweeps(c, stack, hash, out);
  write_text(dir / "sweep.csv", res.csv);
  write_text(dir / "sweep.svg", res.svg);
  check_written(dir / "sweep.csv", res.csv);
  check_written(dir / "sweep.svg", res.svg);
  if (count_data_rows(res.csv) != res.rows) throw InvariantError("sweep.csv row count");
  out << "wrote " << (dir / "sweep.csv").string() << " (" << res.rows << " rows, " << res.series << " series)\n";
  return kExitOk;
}

int cmd_matrix(const ConfigFlags& flags, const std::string& csv_path, std::ostream& out, std::ostream& err) {
  const RunConfig c = flags.resolve();
  const FieldStack stack = load_input(c, err);
  const std::string hash = config_hash(c);
  const fs::path dir = c.output;
  ensure_dir(dir);
  const Prepared p = prepare(c, stack, c.measure);
  const json prov = {{"config_hash", hash}, {"config", to_json(c)}};
  save_matrix(p.matrix, dir / "matrix.json", prov.dump());
  if (!(load_matrix(dir / "matrix.json") == p.matrix)) throw InvariantError("matrix file did not round-trip");
  if (!csv_path.empty()) write_matrix_csv(p.matrix, csv_path);
  out << "wrote " << (dir / "matrix.json").string() << " (" << p.matrix.size() << " days, "
      << to_string(p.matrix.tag()) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct IngestFlags {
  std::vector<std::string> csv;
  std::string dates, start_date, variable = "rainfall", units = "mm", out_path, u_path, v_path;
  std::optional<double> missing;
  bool wind_speed = false;
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0, resolution = 0;
  CLI::Option* lat_opt = nullptr;
};

int cmd_ingest(const IngestFlags& f, std::ostream& out, std::ostream& err) {
  if (f.out_path.empty()) throw ConfigError("ingest needs --out");
  FieldStack stack;
  if (f.wind_speed || !f.u_path.empty() || !f.v_path.empty()) {
    if (!f.wind_speed || f.u_path.empty() || f.v_path.empty()) {
      throw ConfigError("wind speed derivation needs --wind-speed, --u and --v");
    }
    auto warn = [&](const std::string& w) { err << "warning: " << w << '\n'; };
    stack = wind_speed_from_components(load_stack(f.u_path, warn), load_stack(f.v_path, warn));
  } else {
    if (f.csv.empty()) throw ConfigError("ingest needs --csv files or --u/--v with --wind-speed");
    std::vector<Date> dates;
    if (!f.dates.empty()) {
      std::istringstream in(f.dates);
      for (std::string d; std::getline(in, d, ',');) dates.push_back(parse_date(d));
    } else if (!f.start_date.empty()) {
      const Date start = parse_date(f.start_date);
      for (std::size_t i = 0; i < f.csv.size(); ++i) {
        dates.push_back(Date{std::chrono::sys_days{start} + std::chrono::days{static_cast<long>(i)}});
      }
    } else {
      throw ConfigError("ingest needs --dates or --start-date");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
      const auto gap = (std::chrono::sys_days{dates[i]} - std::chrono::sys_days{dates[i - 1]}).count();
      if (gap > 1) {
        err << "warning: " << f.csv[i] << ": " << gap - 1 << " day gap after " << format_date(dates[i - 1]) << '\n';
      }
    }
    std::optional<GridGeometry> geometry;
    if (f.lat_opt && f.lat_opt->count() > 0) {
      GridGeometry g;
      g.lat_min = f.lat_min;
      g.lat_max = f.lat_max;
      g.lon_min = f.lon_min;
      g.lon_max = f.lon_max;
      g.resolution = f.resolution;
      g.n_rows = static_cast<std::size_t>(std::lround((g.lat_max - g.lat_min) / g.resolution)) + 1;
      g.n_cols = static_cast<std::size_t>(std::lround((g.lon_max - g.lon_min) / g.resolution)) + 1;
      geometry = g;
    }
    std::vector<fs::path> paths(f.csv.begin(), f.csv.end());
    stack = ingest_csv(paths, dates, f.variable, f.units, geometry, f.missing);
  }
  save_stack(stack, f.out_path);
  if (!(load_stack(f.out_path) == stack)) throw InvariantError("ingested stack did not round-trip");
  out << "wrote " << f.out_path << " (" << stack.size() << " days, " << stack.geometry.n_rows << "x"
      << stack.geometry.n_cols << ", " << stack.variable_name << ")\n";
  return kExitOk;
}

struct EdgesFlags {
  std::string preset, input, centiles, out_path;
  bool zero_bin = false;
};

int cmd_edges(const EdgesFlags& f, std::ostream& out) {
  BinEdges edges;
  std::string variable;
  if (!f.input.empty()) {
    if (f.centiles.empty()) throw ConfigError("deriving edges needs --centiles");
    std::vector<double> cs;
    std::istringstream in(f.centiles);
    for (std::string t; std::getline(in, t, ',');) {
      try {
        cs.push_back(std::stod(t));
      } catch (const std::exception&) {
        throw ConfigError("bad centile '" + t + "'");
      }
    }
    const FieldStack stack = load_stack(f.input);
    std::vector<double> values;
    for (const auto& day : stack.days) {
      for (std::size_t x = 0; x < day.values.size(); ++x) {
        if (!day.is_missing(x)) values.push_back(day.values[x]);
      }
    }
    edges = edges_from_quantiles(values, cs, f.zero_bin);
    variable = stack.variable_name;
  } else {
    const std::string preset = f.preset.empty() ? "rainfall_table1" : f.preset;
    if (preset == "rainfall_table1") {
      edges = rainfall_table1_edges();
      variable = "rainfall";
    } else if (preset == "beaufort") {
      edges = beaufort_edges();
      variable = "wind_speed";
    } else {
      throw ConfigError("unknown preset '" + preset + "'");
    }
  }
  const json doc = {{"variable", variable}, {"zero_bin", edges.zero_bin}, {"edges", edges.edges}};
  const std::string text = doc.dump(2) + "\n";
  if (!f.out_path.empty()) write_text(f.out_path, text);
  out << text;
  return kExitOk;
}

struct DemoFlags {
  std::size_t amplitude = 10, rows = 101, cols = 189;
  bool within_zone = false;
  double epsilon = kDefaultSmoothing;
};

int cmd_demo_l2(const DemoFlags& f, std::ostream& out) {
  const GridGeometry geometry = GridGeometry::unit(f.rows, f.cols);
  const ZonePartition zones = ZonePartition::quadrants(geometry);
  const BinEdges edges = rainfall_table1_edges();
  auto ed = [&](const GridField& a, const GridField& b) {
    return expert_deviation(signature(a, zones, edges, f.epsilon), signature(b, zones, edges, f.epsilon));
  };
  bool reproduced = true;
  out << "grid " << f.rows << "x" << f.cols << ", quadrant zones, rainfall classes, epsilon " << num(f.epsilon) << "\n";

  const double amp = static_cast<double>(f.amplitude);
  const ShiftedBlobs shift = make_shifted_blobs(geometry, zones, 1, static_cast<float>(amp), f.rows / 4, f.cols / 2, 1);
  const double l2_within = l2_distance(shift.reference, shift.within_zone);
  const double ed_within = ed(shift.reference, shift.within_zone);

  if (!f.within_zone) {
    const std::size_t half = f.amplitude / 2;
    const std::size_t row = f.rows / 4 > half ? f.rows / 4 - half : 0;
    const std::size_t col = f.cols / 4 > half ? f.cols / 4 - half : 0;
    const LocalizedVsSpread a = make_localized_vs_spread(geometry, f.amplitude, row, col);
    const double l2_peak = l2_distance(a.reference, a.peak);
    const double l2_spread = l2_distance(a.reference, a.spread);
    const double ed_peak = ed(a.reference, a.peak);
    const double ed_spread = ed(a.reference, a.spread);
    const bool l2_equal = std::abs(l2_peak - l2_spread) <= 1e-9;
    const bool ed_differs = std::abs(ed_peak - ed_spread) > 0.01;
    out << "[localized vs spread] one cell of " << f.amplitude << " vs " << f.amplitude * f.amplitude
        << " cells of 1, against an all-zero field\n"
        << "  L2(zero, peak)   = " << num(l2_peak) << "\n"
        << "  L2(zero, spread) = " << num(l2_spread) << (l2_equal ? "   (equal)" : "   (NOT equal)") << "\n"
        << "  ED(zero, peak)   = " << num(ed_peak) << "\n"
        << "  ED(zero, spread) = " << num(ed_spread) << (ed_differs ? "   (different)" : "   (NOT different)") << "\n";
    reproduced = reproduced && l2_equal && ed_differs;

    const double l2_across = l2_distance(shift.reference, shift.across_zone);
    const double ed_across = ed(shift.reference, shift.across_zone);
    const bool shift_l2_equal = std::abs(l2_within - l2_across) <= 1e-9;
    out << "[small vs large shift] one cell of " << f.amplitude << " moved by one column\n"
        << "  L2(blob, within-zone shift) = " << num(l2_within) << "\n"
        << "  L2(blob, cross-zone shift)  = " << num(l2_across) << (shift_l2_equal ? "   (equal)" : "   (NOT equal)")
        << "\n"
        << "  ED(blob, within-zone shift) = " << num(ed_within) << "\n"
        << "  ED(blob, cross-zone shift)  = " << num(ed_across) << "\n";
    reproduced = reproduced && shift_l2_equal && ed_within == 0.0 && ed_across > 0.0;
  } else {
    out << "[within-zone shift] one cell of " << f.amplitude << " moved by one column inside its zone\n"
        << "  L2(blob, shifted) = " << num(l2_within) << "\n"
        << "  ED(blob, shifted) = " << num(ed_within) << (ed_within == 0.0 ? "   (zero)" : "   (NOT zero)") << "\n";
    reproduced = reproduced && ed_within == 0.0 && l2_within > 0.0;
  }
  out << (reproduced ? "pathology reproduced\n" : "pathology NOT reproduced\n");
  return reproduced ? kExitOk : kExitInternal;
}

struct SynthFlags {
  std::string kind = "planted", out_path, labels_path;
  std::size_t days_per_regime = 60, rows = 40, cols = 40, regimes = 5, blob_size = 4;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  if (f.out_path.empty()) throw ConfigError("synth needs --out");
  SyntheticSpec spec;
  if (f.kind == "planted") {
    spec = planted_regimes_spec(f.days_per_regime, f.rows, f.cols, f.seed, f.regimes);
  } else if (f.kind == "blobs") {
    spec = blob_position_spec(f.days_per_regime, f.rows, f.cols, f.blob_size, f.seed, std::min<std::size_t>(f.regimes, 4));
  } else {
    throw ConfigError("unknown synthetic kind '" + f.kind + "' (planted | blobs)");
  }
  const SyntheticData data = generate_synthetic(spec);
  save_stack(data.stack, f.out_path);
  if (!f.labels_path.empty()) {
    std::string csv = "day_index,date,regime,regime_name\n";
    for (std::size_t d = 0; d < data.labels.size(); ++d) {
      csv += std::to_string(d) + "," + format_date(data.stack.days[d].date) + "," + std::to_string(data.labels[d]) +
             "," + spec.regimes[data.labels[d]].name + "\n";
    }
    write_text(f.labels_path, csv);
  }
  out << "wrote " << f.out_path << " (" << data.stack.size() << " days, " << spec.regimes.size() << " regimes)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clustering of daily gridded fields with L2 or Expert Deviation", "edcluster"};
  app.require_subcommand(1);

  ConfigFlags cluster_flags, sweep_flags, matrix_flags;
  auto* cluster = app.add_subcommand("cluster", "Cluster a field stack and write a result bundle");
  cluster_flags.attach(cluster);
  auto* sweep = app.add_subcommand("sweep", "Mean silhouette over a range of k (CSV + SVG)");
  sweep_flags.attach(sweep);
  auto* matrix = app.add_subcommand("matrix", "Precompute the pairwise dissimilarity matrix");
  matrix_flags.attach(matrix);
  std::string matrix_csv;
  matrix->add_option("--csv", matrix_csv, "Also write the full matrix as CSV");

  IngestFlags ingest_flags;
  auto* ingest = app.add_subcommand("ingest", "Build a field stack from CSV days or u/v component stacks");
  ingest->add_option("--csv", ingest_flags.csv, "One CSV file per day");
  ingest->add_option("--dates", ingest_flags.dates, "Comma-separated ISO dates, one per CSV");
  ingest->add_option("--start-date", ingest_flags.start_date, "Date of the first CSV; the rest follow daily");
  ingest->add_option("--variable", ingest_flags.variable, "Variable name");
  ingest->add_option("--units", ingest_flags.units, "Units label");
  ingest->add_option("--missing", ingest_flags.missing, "Numeric missing-value sentinel in the CSVs");
  ingest_flags.lat_opt = ingest->add_option("--lat-min", ingest_flags.lat_min, "Grid latitude minimum");
  ingest->add_option("--lat-max", ingest_flags.lat_max, "Grid latitude maximum");
  ingest->add_option("--lon-min", ingest_flags.lon_min, "Grid longitude minimum");
  ingest->add_option("--lon-max", ingest_flags.lon_max, "Grid longitude maximum");
  ingest->add_option("--resolution", ingest_flags.resolution, "Grid resolution in degrees");
  ingest->add_option("--u", ingest_flags.u_path, "Zonal wind component stack");
  ingest->add_option("--v", ingest_flags.v_path, "Meridional wind component stack");
  ingest->add_flag("--wind-speed", ingest_flags.wind_speed, "Derive wind speed from --u and --v");
  ingest->add_option("--out", ingest_flags.out_path, "Output manifest path");

  EdgesFlags edges_flags;
  auto* edges = app.add_subcommand("edges", "Print a bin-edge preset or derive edges from quantiles");
  edges->add_option("--preset", edges_flags.preset, "rainfall_table1 | beaufort");
  edges->add_option("--input", edges_flags.input, "Stack to derive quantile edges from");
  edges->add_option("--centiles", edges_flags.centiles, "Comma-separated fractions in (0,1)");
  edges->add_flag("--zero-bin", edges_flags.zero_bin, "Keep exact zeros in their own class");
  edges->add_option("--out", edges_flags.out_path, "Also write the edges JSON here");

  DemoFlags demo_flags;
  auto* demo = app.add_subcommand("demo-l2", "Show L2 distances that cannot tell apart what ED separates");
  demo->add_option("--amplitude", demo_flags.amplitude, "Peak amplitude (the spread field has amplitude^2 cells)");
  demo->add_option("--rows", demo_flags.rows, "Grid rows");
  demo->add_option("--cols", demo_flags.cols, "Grid columns");
  demo->add_option("--epsilon", demo_flags.epsilon, "Histogram smoothing floor");
  demo->add_flag("--within-zone", demo_flags.within_zone, "Only the within-zone shift case");

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic stack with planted regimes");
  synth->add_option("--kind", synth_flags.kind, "planted | blobs");
  synth->add_option("--days-per-regime", synth_flags.days_per_regime, "Days per regime");
  synth->add_option("--rows", synth_flags.rows, "Grid rows");
  synth->add_option("--cols", synth_flags.cols, "Grid columns");
  synth->add_option("--regimes", synth_flags.regimes, "Number of regimes");
  synth->add_option("--blob-size", synth_flags.blob_size, "Blob side length (blobs kind)");
  synth->add_option("--seed", synth_flags.seed, "RNG seed");
  synth->add_option("--out", synth_flags.out_path, "Output manifest path");
  synth->add_option("--labels", synth_flags.labels_path, "Ground-truth labels CSV");

  std::vector<std::string> argv_store{"edcluster"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*cluster) return cmd_cluster(cluster_flags, out, err);
    if (*sweep) return cmd_sweep(sweep_flags, out, err);
    if (*matrix) return cmd_matrix(matrix_flags, matrix_csv, out, err);
    if (*ingest) return cmd_ingest(ingest_flags, out, err);
    if (*edges) return cmd_edges(edges_flags, out);
    if (*demo) return cmd_demo_l2(demo_flags, out);
    if (*synth) return cmd_synth(synth_flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitConfig;
}

}  // namespace edc::cli
