#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace motforge {

enum class CostFamily {
  abs_diff_neg,   // -|x - y|
  abs_diff,       // |x - y|
  sm_neg,         // -x*y^2, c_xyy < 0
  sm_pos,         // x*y^2
  cubic,          // (y - x)^3
  numeraire_abs,  // -|y/x - 1|
  mirrored_abs,   // -|x + y|
  tabulated,      // bilinear interpolation of a rectangular grid
  composite,      // programmatic (e.g. transformed costs); not serializable
};

const char* to_string(CostFamily family);

// Evaluable cost c(x, y). Cheap to copy; tabulated data is shared.
class CostFunction {
 public:
  CostFunction() : CostFunction(abs_diff_neg()) {}

  static CostFunction abs_diff_neg();
  static CostFunction abs_diff();
  static CostFunction sm_neg();
  static CostFunction sm_pos();
  static CostFunction cubic();
  static CostFunction numeraire_abs();
  static CostFunction mirrored_abs();
  static CostFunction from_family(CostFamily family);
  static CostFunction tabulated(std::vector<double> x_grid,
                                std::vector<double> y_grid,
                                std::vector<double> values);  // row i: x_grid[i]
  static CostFunction composite(std::string name,
                                std::function<double(double, double)> eval);

  double operator()(double x, double y) const { return eval_(x, y); }
  CostFamily family() const { return family_; }
  const std::string& name() const { return name_; }

  struct Table {
    std::vector<double> x_grid, y_grid, values;
  };
  // Non-null only for tabulated costs.
  const Table* table() const { return table_.get(); }

 private:
  CostFunction(CostFamily family, std::string name,
               std::function<double(double, double)> eval)
      : family_(family), name_(std::move(name)), eval_(std::move(eval)) {}

  CostFamily family_;
  std::string name_;
  std::function<double(double, double)> eval_;
  std::shared_ptr<const Table> table_;
};

}  // namespace motforge
