#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

#include "edcluster/errors.hpp"

namespace edc::cli {

using json = nlohmann::json;

BinEdges RunConfig::edges() const {
  if (preset == "rainfall_table1") return rainfall_table1_edges();
  if (preset == "beaufort") return beaufort_edges();
  if (preset == "custom") {
    if (!custom_edges) throw ConfigError("preset 'custom' needs an 'edges' object");
    custom_edges->validate();
    return *custom_edges;
  }
  throw ConfigError("unknown edges preset '" + preset + "'");
}

ZonePartition RunConfig::partition(const GridGeometry& geometry) const {
  if (!zones) return ZonePartition::quadrants(geometry);
  ZonePartition p{*zones};
  p.validate(geometry);
  return p;
}

std::vector<Measure> RunConfig::sweep_measures() const {
  return measures.empty() ? std::vector<Measure>{measure} : measures;
}

std::vector<Algorithm> RunConfig::sweep_algorithms() const {
  return algorithms.empty() ? std::vector<Algorithm>{algorithm} : algorithms;
}

std::vector<std::size_t> parse_k_range(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("bad k range '" + text + "'");
    return v;
  };
  std::vector<std::size_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t lo = number(std::string_view(text).substr(0, dots));
    const std::size_t hi = number(std::string_view(text).substr(dots + 2));
    if (lo > hi) throw ConfigError("bad k range '" + text + "'");
    for (std::size_t k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    out.push_back(number(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

namespace {

template <typename T>
T get(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Zone parse_zone(const json& z) {
  static const std::set<std::string> known{"name", "row_start", "row_end", "col_start", "col_end"};
  if (!z.is_object()) throw ConfigError("config 'zones' entries must be objects");
  for (const auto& item : z.items()) {
    if (!known.count(item.key())) throw ConfigError("config zone: unknown key '" + item.key() + "'");
  }
  Zone zone;
  zone.name = z.contains("name") ? get<std::string>(z, "name") : std::string{};
  zone.row_start = get<std::size_t>(z, "row_start");
  zone.row_end = get<std::size_t>(z, "row_end");
  zone.col_start = get<std::size_t>(z, "col_start");
  zone.col_end = get<std::size_t>(z, "col_end");
  return zone;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  static const std::set<std::string> known{
      "input",   "preset",   "edges", "zones",   "measure", "measures", "algorithm",
      "algorithms", "linkage", "k",   "k_range", "seed",    "restarts", "max_iter",
      "epsilon", "output",   "threads", "cross_measure_silhouette"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) throw ConfigError("config: unknown key '" + item.key() + "'");
  }

  RunConfig c;
  if (doc.contains("input")) c.input = get<std::string>(doc, "input");
  if (doc.contains("preset")) c.preset = get<std::string>(doc, "preset");
  if (doc.contains("edges")) {
    const json& e = doc.at("edges");
    static const std::set<std::string> edge_keys{"variable", "zero_bin", "edges"};
    if (!e.is_object()) throw ConfigError("config 'edges' must be an object");
    for (const auto& item : e.items()) {
      if (!edge_keys.count(item.key())) throw ConfigError("config edges: unknown key '" + item.key() + "'");
    }
    BinEdges edges;
    edges.edges = get<std::vector<double>>(e, "edges");
    edges.zero_bin = e.contains("zero_bin") && get<bool>(e, "zero_bin");
    edges.validate();
    c.custom_edges = edges;
    c.edges_variable = e.contains("variable") ? get<std::string>(e, "variable") : std::string{};
    if (!doc.contains("preset")) c.preset = "custom";
  }
  if (c.preset != "rainfall_table1" && c.preset != "beaufort" && c.preset != "custom") {
    throw ConfigError("unknown edges preset '" + c.preset + "'");
  }
  if (doc.contains("zones")) {
    const json& z = doc.at("zones");
    if (z.is_string()) {
      if (z.get<std::string>() != "quadrants") throw ConfigError("config 'zones' must be \"quadrants\" or a list");
    } else if (z.is_array()) {
      std::vector<Zone> zones;
      for (const auto& item : z) zones.push_back(parse_zone(item));
      c.zones = std::move(zones);
    } else {
      throw ConfigError("config 'zones' must be \"quadrants\" or a list");
    }
  }
  if (doc.contains("measure")) c.measure = parse_measure(get<std::string>(doc, "measure"));
  if (doc.contains("measures")) {
    for (const auto& m : get<std::vector<std::string>>(doc, "measures")) c.measures.push_back(parse_measure(m));
  }
  if (doc.contains("algorithm")) c.algorithm = parse_algorithm(get<std::string>(doc, "algorithm"));
  if (doc.contains("algorithms")) {
    for (const auto& a : get<std::vector<std::string>>(doc, "algorithms")) c.algorithms.push_back(parse_algorithm(a));
  }
  if (doc.contains("linkage")) c.linkage = parse_linkage(get<std::string>(doc, "linkage"));
  if (doc.contains("k")) c.k = get<std::size_t>(doc, "k");
  if (doc.contains("k_range")) {
    const json& kr = doc.at("k_range");
    c.k_range = kr.is_string() ? parse_k_range(kr.get<std::string>()) : get<std::vector<std::size_t>>(doc, "k_range");
    if (c.k_range.empty()) throw ConfigError("config 'k_range' is empty");
  }
  if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed");
  if (doc.contains("restarts")) c.restarts = get<std::size_t>(doc, "restarts");
  if (doc.contains("max_iter")) c.max_iter = get<std::size_t>(doc, "max_iter");
  if (doc.contains("epsilon")) c.epsilon = get<double>(doc, "epsilon");
  if (doc.contains("output")) c.output = get<std::string>(doc, "output");
  if (doc.contains("threads")) c.threads = get<unsigned>(doc, "threads");
  if (doc.contains("cross_measure_silhouette")) c.cross_measure_silhouette = get<bool>(doc, "cross_measure_silhouette");
  if (c.restarts < 1) throw ConfigError("config 'restarts' must be >= 1");
  if (c.max_iter < 1) throw ConfigError("config 'max_iter' must be >= 1");
  if (!(c.epsilon >= 0.0)) throw ConfigError("config 'epsilon' must be >= 0");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return parse_run_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

json to_json(const RunConfig& c) {
  json doc;
  doc["input"] = c.input;
  doc["preset"] = c.preset;
  if (c.custom_edges) {
    doc["edges"] = {{"variable", c.edges_variable}, {"zero_bin", c.custom_edges->zero_bin},
                    {"edges", c.custom_edges->edges}};
  }
  if (c.zones) {
    json zones = json::array();
    for (const auto& z : *c.zones) {
      zones.push_back({{"name", z.name},
                       {"row_start", z.row_start},
                       {"row_end", z.row_end},
                       {"col_start", z.col_start},
                       {"col_end", z.col_end}});
    }
    doc["zones"] = std::move(zones);
  } else {
    doc["zones"] = "quadrants";
  }
  doc["measure"] = std::string(to_string(c.measure));
  if (!c.measures.empty()) {
    json ms = json::array();
    for (auto m : c.measures) ms.push_back(std::string(to_string(m)));
    doc["measures"] = std::move(ms);
  }
  doc["algorithm"] = std::string(to_string(c.algorithm));
  if (!c.algorithms.empty()) {
    json as = json::array();
    for (auto a : c.algorithms) as.push_back(std::string(to_string(a)));
    doc["algorithms"] = std::move(as);
  }
  doc["linkage"] = std::string(to_string(c.linkage));
  if (c.k) doc["k"] = *c.k;
  if (!c.k_range.empty()) doc["k_range"] = c.k_range;
  doc["seed"] = c.seed;
  doc["restarts"] = c.restarts;
  doc["max_iter"] = c.max_iter;
  doc["epsilon"] = c.epsilon;
  if (c.cross_measure_silhouette) doc["cross_measure_silhouette"] = true;
  return doc;
}

std::string config_hash(const RunConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace edc::cli
