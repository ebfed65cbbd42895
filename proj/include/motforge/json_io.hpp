#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

#include "motforge/cost.hpp"
#include "motforge/lattice.hpp"
#include "motforge/measure.hpp"
#include "motforge/transform.hpp"

namespace motforge {

using ojson = nlohmann::ordered_json;

// Schema violation with a JSON-pointer location.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string pointer)
      : std::runtime_error(what + " at pointer " + pointer),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// Wire formats. A measure is {"atoms": [[position, mass], ...]}; a coupling
// is {"entries": [[x, y, mass], ...]}.
ojson to_json(const DiscreteMeasure& m);
ojson to_json(const Coupling& q);
ojson to_json(const CostFunction& c);       // throws for composite costs
ojson to_json(const TransformSpec& t);      // throws for custom transforms
ojson to_json(const Barrier& b);

DiscreteMeasure measure_from_json(const ojson& j, const std::string& ptr);
Coupling coupling_from_json(const ojson& j, const std::string& ptr);
CostFunction cost_from_json(const ojson& j, const std::string& ptr);
TransformSpec transform_from_json(const ojson& j, const std::string& ptr);
Barrier barrier_from_json(const ojson& j, const std::string& ptr);

// Serializes with two-space indentation, stable field order and floats at 17
// significant digits, so parse(dump17(x)) == x and reports are byte stable.
std::string dump17(const ojson& j);

// %.17g rendering shared by the JSON and CSV writers.
std::string format17(double v);

}  // namespace motforge
