#pragma once

// Domain types shared by the estimator, the models and the experiment harness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbs {

enum class ErrorCode {
  EmptyDataset,
  RaggedBatchSizes,
  NonFiniteCoordinate,
  InvalidDomain,
  ParamOutOfDomain,
  NonFiniteLoss,
  NoClosedForm,
  StateSpaceTooLarge,
  BatchTooLarge,
  InvalidSize,
  NonFiniteObjective,
  DegenerateCV,
  MissingInput,
  ConfigError,
  ParseError,
  NotConverged,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::RaggedBatchSizes: return "RaggedBatchSizes";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::ParamOutOfDomain: return "ParamOutOfDomain";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NoClosedForm: return "NoClosedForm";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::BatchTooLarge: return "BatchTooLarge";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::DegenerateCV: return "DegenerateCV";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotConverged: return "NotConverged";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A point of the parameter space. Coordinates are always finite.
class ParamPoint {
 public:
  ParamPoint() = default;
  explicit ParamPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    for (double c : coords_) {
      if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCoordinate, "parameter coordinate is not finite");
    }
  }
  ParamPoint(std::initializer_list<double> coords) : ParamPoint(std::vector<double>(coords)) {}

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }

  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;

 private:
  std::vector<double> coords_;
};

/// Axis-aligned compact box standing in for the closure of the parameter set.
class ParamDomain {
 public:
  ParamDomain(std::vector<double> lower, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty() || lower_.size() != upper_.size()) {
      throw Error(ErrorCode::InvalidDomain, "bounds must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
        throw Error(ErrorCode::InvalidDomain, "need finite lower[i] < upper[i]");
      }
    }
  }

  /// One-dimensional interval [lo, hi].
  static ParamDomain interval(double lo, double hi) { return ParamDomain({lo}, {hi}); }

  std::size_t dim() const noexcept { return lower_.size(); }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }

  /// Euclidean distance between the two extreme corners.
  double diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double w = upper_[i] - lower_[i];
      s += w * w;
    }
    return std::sqrt(s);
  }

  bool contains(const ParamPoint& p) const {
    if (p.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (p[i] < lower_[i] || p[i] > upper_[i]) return false;
    }
    return true;
  }

  /// Throws ParamOutOfDomain unless p lies in the closed box.
  void require(const ParamPoint& p) const {
    if (!contains(p)) throw Error(ErrorCode::ParamOutOfDomain, "parameter outside the domain box");
  }

  ParamPoint center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
    return ParamPoint(std::move(c));
  }

  ParamPoint project(std::span<const double> v) const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = std::clamp(v[i], lower_[i], upper_[i]);
    return ParamPoint(std::move(c));
  }

  friend bool operator==(const ParamDomain&, const ParamDomain&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// One paired draw (X, Y). Only produced by generators; consumers see batches.
struct PairSample {
  std::vector<double> x;
  std::vector<double> y;
};

/// One broken-sample observation: M x-points and M y-points, stored flat.
///
/// xs and ys are multisets. Nothing downstream may depend on the order of
/// either list, and in particular on which x was drawn with which y.
class BrokenBatch {
 public:
  BrokenBatch() = default;
  BrokenBatch(std::size_t x_dim, std::size_t y_dim, std::vector<double> xs, std::vector<double> ys)
      : x_dim_(x_dim), y_dim_(y_dim), xs_(std::move(xs)), ys_(std::move(ys)) {
    if (x_dim_ == 0 || y_dim_ == 0) throw Error(ErrorCode::InvalidSize, "point dimension must be positive");
    if (xs_.size() % x_dim_ != 0 || ys_.size() % y_dim_ != 0) {
      throw Error(ErrorCode::InvalidSize, "flat coordinate list is not a whole number of points");
    }
    if (xs_.size() / x_dim_ != ys_.size() / y_dim_) {
      throw Error(ErrorCode::RaggedBatchSizes, "xs and ys differ in length");
    }
  }

  std::size_t size() const noexcept { return x_dim_ == 0 ? 0 : xs_.size() / x_dim_; }
  std::size_t x_dim() const noexcept { return x_dim_; }
  std::size_t y_dim() const noexcept { return y_dim_; }

  std::span<const double> x(std::size_t i) const { return {xs_.data() + i * x_dim_, x_dim_}; }
  std::span<const double> y(std::size_t j) const { return {ys_.data() + j * y_dim_, y_dim_}; }

  const std::vector<double>& xs_flat() const noexcept { return xs_; }
  const std::vector<double>& ys_flat() const noexcept { return ys_; }
  std::vector<double>& xs_flat() noexcept { return xs_; }
  std::vector<double>& ys_flat() noexcept { return ys_; }

  friend bool operator==(const BrokenBatch&, const BrokenBatch&) = default;

 private:
  std::size_t x_dim_ = 0;
  std::size_t y_dim_ = 0;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// N i.i.d. broken batches of common size M.
struct Dataset {
  std::vector<BrokenBatch> batches;

  std::size_t num_batches() const noexcept { return batches.size(); }
  std::size_t batch_size() const noexcept { return batches.empty() ? 0 : batches.front().size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void validate_dataset(const Dataset& data) {
  if (data.batches.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no batches");
  const std::size_t m = data.batches.front().size();
  if (m == 0) throw Error(ErrorCode::EmptyDataset, "batches are empty");
  for (const auto& b : data.batches) {
    if (b.size() != m) throw Error(ErrorCode::RaggedBatchSizes, "batches differ in size");
    for (double c : b.xs_flat()) {
      if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCoordinate, "x coordinate is not finite");
    }
    for (double c : b.ys_flat()) {
      if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCoordinate, "y coordinate is not finite");
    }
  }
}

}  // namespace bbs
