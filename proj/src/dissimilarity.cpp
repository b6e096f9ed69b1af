#include "edcluster/dissimilarity.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "edcluster/errors.hpp"
#include "edcluster/parallel.hpp"
#include "json.hpp"

namespace edc {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Measure m) { return m == Measure::L2 ? "L2" : "ED"; }

Measure parse_measure(std::string_view text) {
  if (text == "L2" || text == "l2") return Measure::L2;
  if (text == "ED" || text == "ed") return Measure::ED;
  throw ConfigError("unknown measure '" + std::string(text) + "' (expected L2 or ED)");
}

double l2_distance(const GridField& a, const GridField& b) {
  if (!(a.geometry == b.geometry) || a.values.size() != b.values.size()) {
    throw DataError("l2_distance: fields are on different grids");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    const double diff = a.value_or_zero(c) - b.value_or_zero(c);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DataError("kl_divergence: bin counts differ (" + std::to_string(p.size()) + " vs " +
                    std::to_string(q.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] <= 0.0) continue;
    if (q[c] <= 0.0) {
      throw DataError("kl_divergence: reference histogram has an empty bin " + std::to_string(c) +
                      " (enable smoothing)");
    }
    total += p[c] * std::log(p[c] / q[c]);
  }
  // Rounding can leave a tiny negative for near-identical inputs.
  return total < 0.0 ? 0.0 : total;
}

double kl_divergence(const Histogram& p, const Histogram& q) { return kl_divergence(p.probs, q.probs); }

double kls_divergence(std::span<const double> p, std::span<const double> q) {
  return kl_divergence(p, q) + kl_divergence(q, p);
}

double kls_divergence(const Histogram& p, const Histogram& q) { return kls_divergence(p.probs, q.probs); }

double expert_deviation(std::span<const Histogram> a, std::span<const Histogram> b) {
  if (a.size() != b.size()) {
    throw DataError("expert_deviation: zone counts differ (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError("expert_deviation: no zones");
  double total = 0.0;
  for (std::size_t z = 0; z < a.size(); ++z) total += kls_divergence(a[z], b[z]);
  return total / static_cast<double>(a.size());
}

double expert_deviation(const DaySignature& a, const DaySignature& b) {
  return expert_deviation(std::span<const Histogram>(a.zone_histograms),
                          std::span<const Histogram>(b.zone_histograms));
}

// ---------------------------------------------------------------------------

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, Measure tag)
    : n_(n), tag_(tag), values_(triangle_size(n), 0.0) {}

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, Measure tag, std::vector<double> triangle)
    : n_(n), tag_(tag), values_(std::move(triangle)) {
  if (values_.size() != triangle_size(n)) {
    throw DataError("dissimilarity matrix: triangle holds " + std::to_string(values_.size()) +
                    " entries, expected " + std::to_string(triangle_size(n)));
  }
}

DissimilarityMatrix DissimilarityMatrix::scaled(double factor) const {
  DissimilarityMatrix out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

namespace {

// Fills the triangle by splitting the flat index range into blocks; each
// entry is written by exactly one worker.
template <typename PairFn>
void fill_triangle(DissimilarityMatrix& m, unsigned threads, PairFn&& pair_value) {
  const std::size_t n = m.size();
  const std::size_t total = DissimilarityMatrix::triangle_size(n);
  if (total == 0) return;
  const std::size_t blocks = std::min<std::size_t>(total, static_cast<std::size_t>(resolve_threads(threads)) * 16);
  const std::size_t block_len = (total + blocks - 1) / blocks;
  auto tri = m.triangle();
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t begin = b * block_len;
    const std::size_t end = std::min(total, begin + block_len);
    if (begin >= end) return;
    // Locate (i, j) for flat index `begin`.
    std::size_t i = 0, row_start = 0;
    while (row_start + (n - i - 1) <= begin) {
      row_start += n - i - 1;
      ++i;
    }
    std::size_t j = i + 1 + (begin - row_start);
    for (std::size_t t = begin; t < end; ++t) {
      tri[t] = pair_value(i, j);
      if (++j == n) {
        ++i;
        j = i + 1;
      }
    }
  });
}

}  // namespace

DissimilarityMatrix pairwise_matrix(const FieldStack& stack, unsigned threads) {
  DissimilarityMatrix m(stack.size(), Measure::L2);
  fill_triangle(m, threads, [&](std::size_t i, std::size_t j) { return l2_distance(stack.days[i], stack.days[j]); });
  return m;
}

DissimilarityMatrix pairwise_matrix(std::span<const DaySignature> signatures, unsigned threads) {
  for (const auto& s : signatures) {
    if (s.zone_count() != signatures.front().zone_count() || s.bin_count() != signatures.front().bin_count()) {
      throw DataError("pairwise_matrix: signatures differ in zone or bin count");
    }
  }
  DissimilarityMatrix m(signatures.size(), Measure::ED);
  fill_triangle(m, threads,
                [&](std::size_t i, std::size_t j) { return expert_deviation(signatures[i], signatures[j]); });
  return m;
}

// ---------------------------------------------------------------------------

void save_matrix(const DissimilarityMatrix& matrix, const fs::path& manifest_path,
                 const std::string& provenance_json) {
  fs::path payload_path = manifest_path;
  payload_path.replace_extension(".f64");
  json doc;
  doc["version"] = 1;
  doc["n_days"] = matrix.size();
  doc["measure_tag"] = std::string(to_string(matrix.tag()));
  doc["dtype"] = "f64le";
  doc["layout"] = "upper_triangle_row_major";
  doc["payload_file"] = payload_path.filename().string();
  if (!provenance_json.empty()) doc["provenance"] = json::parse(provenance_json);

  std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write matrix payload " + payload_path.string());
  for (double v : matrix.triangle()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw DataError("write failed for " + payload_path.string());
  std::ofstream man(manifest_path, std::ios::binary | std::ios::trunc);
  if (!man) throw DataError("cannot write matrix manifest " + manifest_path.string());
  man << doc.dump(2) << '\n';
}

DissimilarityMatrix load_matrix(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix manifest " + manifest_path.string());
  json doc;
  std::size_t n = 0;
  Measure tag = Measure::L2;
  fs::path payload_path;
  try {
    doc = json::parse(in);
    n = doc.at("n_days").get<std::size_t>();
    tag = parse_measure(doc.at("measure_tag").get<std::string>());
    if (doc.at("dtype").get<std::string>() != "f64le") throw DataError("matrix dtype must be f64le");
    payload_path = manifest_path.parent_path() / doc.at("payload_file").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  const std::size_t count = DissimilarityMatrix::triangle_size(n);
  std::error_code ec;
  const auto bytes = fs::file_size(payload_path, ec);
  if (ec || bytes != count * 8) {
    throw DataError(payload_path.string() + ": expected " + std::to_string(count * 8) + " bytes for n_days=" +
                    std::to_string(n));
  }
  std::ifstream pin(payload_path, std::ios::binary);
  std::vector<double> tri(count);
  for (std::size_t t = 0; t < count; ++t) {
    unsigned char b[8];
    pin.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    tri[t] = std::bit_cast<double>(bits);
    if (!(tri[t] >= 0.0)) {
      throw DataError(payload_path.string() + ": entry " + std::to_string(t) + " at byte offset " +
                      std::to_string(t * 8) + " is negative or NaN");
    }
  }
  if (!pin) throw DataError("read failed for " + payload_path.string());
  return DissimilarityMatrix(n, tag, std::move(tri));
}

void write_matrix_csv(const DissimilarityMatrix& matrix, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[32];
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace edc
