#include "idbr/scale.hpp"

#include <cmath>
#include <sstream>

namespace idbr {

namespace {

constexpr double kGridTolerance = 1e-9;

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string row_suffix(long row) { return row >= 0 ? " at row " + std::to_string(row) : std::string(); }

}  // namespace

ScaleSpec::ScaleSpec(double a, double b, double h_star, std::optional<double> inflated_level,
                     std::vector<std::string> labels)
    : a_(a), b_(b), h_star_(h_star), levels_(0), labels_(std::move(labels)) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(h_star > 0.0) || !std::isfinite(h_star)) {
    throw ValidationError("scale: a, b must be finite and h_star positive");
  }
  const double steps = (b - a) / h_star;
  const double rounded = std::round(steps);
  if (std::fabs(steps - rounded) > kGridTolerance * std::max(1.0, std::fabs(steps)) || rounded < 1.0) {
    throw ValidationError("scale: (b - a) / h_star must be a positive integer, got " + format_value(steps));
  }
  levels_ = static_cast<int>(rounded) + 1;
  if (!labels_.empty() && static_cast<int>(labels_.size()) != levels_) {
    throw ValidationError("scale: expected " + std::to_string(levels_) + " labels, got " +
                          std::to_string(labels_.size()));
  }
  if (inflated_level) inflated_k_ = index_of_original(*inflated_level);
}

std::string ScaleSpec::label(int k) const {
  if (!labels_.empty()) return labels_.at(static_cast<std::size_t>(k - 1));
  return format_value(original(k));
}

int ScaleSpec::index_of_original(double y_star, long row) const {
  const double pos = (y_star - a_) / h_star_;
  const double rounded = std::round(pos);
  if (!std::isfinite(pos) || std::fabs(pos - rounded) > kGridTolerance * std::max(1.0, std::fabs(pos)) ||
      rounded < 0.0 || rounded > levels_ - 1) {
    throw ValidationError("value " + format_value(y_star) + row_suffix(row) + " is not on the scale support [" +
                          format_value(a_) + ", " + format_value(b_) + "] with step " + format_value(h_star_));
  }
  return static_cast<int>(rounded) + 1;
}

double to_reduced(double y_star, const ScaleSpec& s, long row) { return s.point(s.index_of_original(y_star, row)); }

double from_reduced(double y, const ScaleSpec& s) { return s.original(grid_index(y, s)); }

int grid_index(double y, const ScaleSpec& s) {
  const double pos = y * s.levels();
  const double rounded = std::round(pos);
  if (!std::isfinite(pos) || std::fabs(pos - rounded) > kGridTolerance * std::max(1.0, std::fabs(pos)) ||
      rounded < 1.0 || rounded > s.levels()) {
    throw ValidationError("value " + format_value(y) + " is not on the reduced grid of " +
                          std::to_string(s.levels()) + " levels");
  }
  return static_cast<int>(rounded);
}

}  // namespace idbr
