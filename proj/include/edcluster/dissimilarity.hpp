#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edcluster/field_store.hpp"
#include "edcluster/quantization.hpp"

namespace edc {

enum class Measure { L2, ED };

std::string_view to_string(Measure m);
Measure parse_measure(std::string_view text);

// Euclidean distance between two fields on the same grid. Cells missing in
// both fields are skipped; a cell missing in one field reads as 0.
double l2_distance(const GridField& a, const GridField& b);

// Directed Kullback-Leibler divergence in nats, with 0*ln(0/q) = 0.
// Throws DataError on bin-count mismatch or when q has a zero bin where p
// does not (only reachable with smoothing disabled).
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const Histogram& p, const Histogram& q);

// kl(p, q) + kl(q, p), evaluated in exactly that order.
double kls_divergence(std::span<const double> p, std::span<const double> q);
double kls_divergence(const Histogram& p, const Histogram& q);

// Mean over zones of the symmetrized divergence between matching zone
// histograms. Either side may be a day signature or a centroid.
double expert_deviation(std::span<const Histogram> a, std::span<const Histogram> b);
double expert_deviation(const DaySignature& a, const DaySignature& b);

// Symmetric matrix with zero diagonal, stored as the strict upper triangle
// in row-major order.
class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;
  DissimilarityMatrix(std::size_t n, Measure tag);
  DissimilarityMatrix(std::size_t n, Measure tag, std::vector<double> triangle);

  std::size_t size() const { return n_; }
  Measure tag() const { return tag_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return i < j ? values_[index(i, j)] : values_[index(j, i)];
  }
  void set(std::size_t i, std::size_t j, double value) {
    values_[i < j ? index(i, j) : index(j, i)] = value;
  }

  std::span<const double> triangle() const { return values_; }
  std::span<double> triangle() { return values_; }

  // Multiplies every entry by a positive constant.
  DissimilarityMatrix scaled(double factor) const;

  static std::size_t triangle_size(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

  bool operator==(const DissimilarityMatrix&) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

  std::size_t n_ = 0;
  Measure tag_ = Measure::L2;
  std::vector<double> values_;
};

// L2 matrix over the days of a stack.
DissimilarityMatrix pairwise_matrix(const FieldStack& stack, unsigned threads = 0);

// ED matrix over day signatures.
DissimilarityMatrix pairwise_matrix(std::span<const DaySignature> signatures, unsigned threads = 0);

// Matrix file: JSON manifest {version, n_days, measure_tag, dtype:"f64le",
// payload_file[, provenance]} plus the f64 little-endian triangle.
void save_matrix(const DissimilarityMatrix& matrix, const std::filesystem::path& manifest_path,
                 const std::string& provenance_json = {});
DissimilarityMatrix load_matrix(const std::filesystem::path& manifest_path);

// Full square matrix as CSV, for small n.
void write_matrix_csv(const DissimilarityMatrix& matrix, const std::filesystem::path& path);

}  // namespace edc
