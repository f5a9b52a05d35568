#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mlate/data_model.hpp"

namespace mlate {

// Column mapping for load_csv. With a header row the columns are named;
// without one they are zero-based indices written as text ("0", "3").
struct CsvSchema {
  std::string outcome = "y";
  std::string treatment = "t";
  std::string instrument = "z";
  std::string exogenous = "v";
  char delimiter = ',';
  bool header = true;
  // Support order for V. Empty means first-appearance order.
  std::vector<std::string> v_order;
  Mode mode = Mode::CaseII;
};

// Throws IoError if the file cannot be opened, SchemaError for missing
// columns or labels outside v_order, and ParseError (with the 1-based line
// number) for malformed values.
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset read_csv(std::istream& in, const CsvSchema& schema);

// Writes y,t,z,v with a header; weights, if present, go in a fifth column.
void write_csv(std::ostream& out, const Dataset& ds);

}  // namespace mlate
