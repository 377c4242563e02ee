#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rdx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors. Every failure surfaced by the library derives from rdx::Error and
// carries a short machine-readable class name used by the CLI error prefix.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Caller handed in something that breaks a documented precondition.
class ValidationError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

/// Input is well-formed but numerically degenerate (duplicate points, zero
/// variance, zero vectors).
class DegenerateInputError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate"; }
};

class ConvergenceError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "convergence"; }
};

/// Malformed binary input. `offset` is the byte position the parser was at.
class FormatError : public Error {
public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  const char* kind() const noexcept override { return "format"; }
  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

/// A serialized report is missing a field or has one of the wrong type.
class SchemaError : public Error {
public:
  SchemaError(const std::string& field, const std::string& what)
      : Error("field '" + field + "': " + what), field_(field) {}
  const char* kind() const noexcept override { return "schema"; }
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

// ---------------------------------------------------------------------------
// Random numbers. The standard distributions are implementation-defined, so
// uniforms and normals are derived from raw mt19937_64 output here to keep
// seeded results identical across standard libraries.
// ---------------------------------------------------------------------------

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                     first + static_cast<std::ptrdiff_t>(j));
    }
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Domain types shared across modules.
// ---------------------------------------------------------------------------

/// One model's embedding of an ordered item set: row i embeds items[i].
struct EmbeddingMatrix {
  std::string model_id;
  std::vector<std::string> items;
  Matrix data;

  Index size() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  void validate() const {
    if (data.rows() < 2) {
      throw ValidationError("embedding '" + model_id + "' needs at least 2 rows, got " +
                            std::to_string(data.rows()));
    }
    if (data.cols() < 1) {
      throw ValidationError("embedding '" + model_id + "' has zero columns");
    }
    if (static_cast<Index>(items.size()) != data.rows()) {
      throw ValidationError("embedding '" + model_id + "' has " + std::to_string(items.size()) +
                            " item ids for " + std::to_string(data.rows()) + " rows");
    }
    for (Index i = 0; i < data.rows(); ++i) {
      for (Index j = 0; j < data.cols(); ++j) {
        if (!std::isfinite(data(i, j))) {
          throw ValidationError("embedding '" + model_id + "' has a non-finite entry at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
        }
      }
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : items) {
      if (!seen.insert(id).second) {
        throw ValidationError("embedding '" + model_id + "' has duplicate item id '" + id + "'");
      }
    }
  }
};

/// Item ids "0".."n-1".
inline std::vector<std::string> default_item_ids(Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

inline EmbeddingMatrix make_embedding(std::string model_id, Matrix data,
                                      std::vector<std::string> items = {}) {
  if (items.empty()) items = default_item_ids(data.rows());
  EmbeddingMatrix emb{std::move(model_id), std::move(items), std::move(data)};
  emb.validate();
  return emb;
}

/// Which representation is the source (sought-after closeness) and which is
/// the reference.
struct Direction {
  std::string source;
  std::string reference;

  friend bool operator==(const Direction&, const Direction&) = default;
};

struct ExplanationGrid {
  Index anchor = 0;
  std::vector<Index> members;  // anchor first
  Index target_size = 9;
  int source_cluster = 0;

  bool partial() const { return static_cast<Index>(members.size()) < target_size; }
};

struct ExplanationSet {
  Direction direction;
  std::vector<ExplanationGrid> grids;
  std::vector<Index> discarded_cluster;
  // Cluster label per item; the discarded cluster has label `discarded_label`.
  std::vector<int> labels;
  int discarded_label = -1;
};

}  // namespace rdx
