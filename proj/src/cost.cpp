#include "motforge/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motforge {

const char* to_string(CostFamily family) {
  switch (family) {
    case CostFamily::abs_diff_neg: return "abs_diff_neg";
    case CostFamily::abs_diff: return "abs_diff";
    case CostFamily::sm_neg: return "sm_neg";
    case CostFamily::sm_pos: return "sm_pos";
    case CostFamily::cubic: return "cubic";
    case CostFamily::numeraire_abs: return "numeraire_abs";
    case CostFamily::mirrored_abs: return "mirrored_abs";
    case CostFamily::tabulated: return "tabulated";
    case CostFamily::composite: return "composite";
  }
  return "?";
}

CostFunction CostFunction::abs_diff_neg() {
  return {CostFamily::abs_diff_neg, "abs_diff_neg",
          [](double x, double y) { return -std::abs(x - y); }};
}

CostFunction CostFunction::abs_diff() {
  return {CostFamily::abs_diff, "abs_diff",
          [](double x, double y) { return std::abs(x - y); }};
}

CostFunction CostFunction::sm_neg() {
  return {CostFamily::sm_neg, "sm_neg",
          [](double x, double y) { return -x * y * y; }};
}

CostFunction CostFunction::sm_pos() {
  return {CostFamily::sm_pos, "sm_pos",
          [](double x, double y) { return x * y * y; }};
}

CostFunction CostFunction::cubic() {
  return {CostFamily::cubic, "cubic", [](double x, double y) {
            const double d = y - x;
            return d * d * d;
          }};
}

CostFunction CostFunction::numeraire_abs() {
  return {CostFamily::numeraire_abs, "numeraire_abs", [](double x, double y) {
            if (x == 0.0) throw std::domain_error("numeraire_abs: x = 0");
            return -std::abs(y / x - 1.0);
          }};
}

CostFunction CostFunction::mirrored_abs() {
  return {CostFamily::mirrored_abs, "mirrored_abs",
          [](double x, double y) { return -std::abs(x + y); }};
}

CostFunction CostFunction::from_family(CostFamily family) {
  switch (family) {
    case CostFamily::abs_diff_neg: return abs_diff_neg();
    case CostFamily::abs_diff: return abs_diff();
    case CostFamily::sm_neg: return sm_neg();
    case CostFamily::sm_pos: return sm_pos();
    case CostFamily::cubic: return cubic();
    case CostFamily::numeraire_abs: return numeraire_abs();
    case CostFamily::mirrored_abs: return mirrored_abs();
    default:
      throw std::invalid_argument("from_family: family needs parameters");
  }
}

namespace {

double interp1(const std::vector<double>& grid, double v, std::size_t* lo) {
  // Returns the fraction within the bracketing cell, clamping is an error.
  if (v < grid.front() - 1e-12 || v > grid.back() + 1e-12)
    throw std::domain_error("tabulated cost evaluated outside its grid");
  auto it = std::upper_bound(grid.begin(), grid.end(), v);
  std::size_t hi = std::min<std::size_t>(grid.size() - 1,
                                         std::max<std::ptrdiff_t>(1, it - grid.begin()));
  *lo = hi - 1;
  const double w = grid[hi] - grid[*lo];
  return w > 0.0 ? std::clamp((v - grid[*lo]) / w, 0.0, 1.0) : 0.0;
}

}  // namespace

CostFunction CostFunction::tabulated(std::vector<double> x_grid,
                                     std::vector<double> y_grid,
                                     std::vector<double> values) {
  if (x_grid.size() < 2 || y_grid.size() < 2)
    throw std::invalid_argument("tabulated: grids need at least two points");
  if (!std::is_sorted(x_grid.begin(), x_grid.end()) ||
      !std::is_sorted(y_grid.begin(), y_grid.end()))
    throw std::invalid_argument("tabulated: grids must be sorted");
  if (values.size() != x_grid.size() * y_grid.size())
    throw std::invalid_argument("tabulated: grid is not rectangular and complete");
  auto table = std::make_shared<Table>(
      Table{std::move(x_grid), std::move(y_grid), std::move(values)});
  const std::size_t ny = table->y_grid.size();
  CostFunction f{CostFamily::tabulated, "tabulated",
                 [table, ny](double x, double y) {
                   std::size_t i, j;
                   const double fx = interp1(table->x_grid, x, &i);
                   const double fy = interp1(table->y_grid, y, &j);
                   const double v00 = table->values[i * ny + j];
                   const double v01 = table->values[i * ny + j + 1];
                   const double v10 = table->values[(i + 1) * ny + j];
                   const double v11 = table->values[(i + 1) * ny + j + 1];
                   return (1 - fx) * ((1 - fy) * v00 + fy * v01) +
                          fx * ((1 - fy) * v10 + fy * v11);
                 }};
  f.table_ = table;
  return f;
}

CostFunction CostFunction::composite(std::string name,
                                     std::function<double(double, double)> eval) {
  return {CostFamily::composite, std::move(name), std::move(eval)};
}

}  // namespace motforge
