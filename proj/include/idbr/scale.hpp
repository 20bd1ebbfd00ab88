#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace idbr {

/// Raised for inputs that violate a data or configuration contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * A K-level equally spaced ordinal scale {a, a + h*, ..., b} and its reduced
 * counterpart {h, 2h, ..., 1} with h = 1/K. Grid positions are 1-based.
 */
class ScaleSpec {
 public:
  /// `inflated_level` is given on the original support.
  ScaleSpec(double a, double b, double h_star, std::optional<double> inflated_level = std::nullopt,
            std::vector<std::string> labels = {});

  double a() const { return a_; }
  double b() const { return b_; }
  double h_star() const { return h_star_; }
  int levels() const { return levels_; }
  double h() const { return 1.0 / levels_; }
  std::optional<int> inflated_k() const { return inflated_k_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Reduced value of grid position k.
  double point(int k) const { return static_cast<double>(k) / levels_; }
  /// Original-support value of grid position k.
  double original(int k) const { return a_ + (k - 1) * h_star_; }
  /// Label of grid position k, or the formatted original value.
  std::string label(int k) const;

  /// Grid position of an original-support value; `row` is only used in error messages.
  int index_of_original(double y_star, long row = -1) const;

 private:
  double a_;
  double b_;
  double h_star_;
  int levels_;
  std::optional<int> inflated_k_;
  std::vector<std::string> labels_;
};

/// (y* - a + h*) / (b - a + h*), snapped to the exact multiple of h.
double to_reduced(double y_star, const ScaleSpec& s, long row = -1);

/// Inverse of to_reduced.
double from_reduced(double y, const ScaleSpec& s);

/// round(y / h) for y on the reduced grid.
int grid_index(double y, const ScaleSpec& s);

}  // namespace idbr
