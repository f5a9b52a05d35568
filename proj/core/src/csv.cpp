#include "mlate/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "mlate/errors.hpp"

namespace mlate {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

// Splits one record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split(const std::string& line, char delim, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) parse_fail(line_no, "unterminated quoted field");
  out.push_back(trim(cur));
  return out;
}

double parse_real(const std::string& s, std::size_t line, const std::string& column) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(x)) {
    parse_fail(line, "column '" + column + "' value '" + s + "' is not a finite number");
  }
  return x;
}

int parse_binary(const std::string& s, std::size_t line, const std::string& column) {
  const double x = parse_real(s, line, column);
  if (x != 0.0 && x != 1.0) parse_fail(line, "column '" + column + "' value '" + s + "' is not 0 or 1");
  return static_cast<int>(x);
}

std::size_t column_index(const std::string& name, const std::vector<std::string>& header, bool has_header) {
  if (has_header) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::SchemaError, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (name.empty() || ec != std::errc() || ptr != name.data() + name.size()) {
    throw Error(ErrorKind::SchemaError, "without a header, columns must be zero-based indices (got '" + name + "')");
  }
  return idx;
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  Dataset ds;
  ds.mode = schema.mode;
  std::unordered_map<std::string, int> label_index;
  for (const std::string& label : schema.v_order) {
    if (label_index.count(label) != 0) throw Error(ErrorKind::SchemaError, "duplicate label '" + label + "' in V order");
    label_index.emplace(label, static_cast<int>(ds.v_support.size()));
    ds.v_support.push_back(label);
  }
  const bool fixed_order = !schema.v_order.empty();

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::array<std::size_t, 4> cols{};
  bool have_cols = false;
  std::size_t width = 0;
  auto resolve = [&]() {
    const std::array<const std::string*, 4> names{&schema.outcome, &schema.treatment, &schema.instrument,
                                                  &schema.exogenous};
    for (std::size_t j = 0; j < 4; ++j) cols[j] = column_index(*names[j], header, schema.header);
    width = *std::max_element(cols.begin(), cols.end()) + 1;
    have_cols = true;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, schema.delimiter, line_no);
    if (schema.header && header.empty()) {
      header = std::move(fields);
      resolve();
      continue;
    }
    if (!have_cols) resolve();
    if (fields.size() < width) {
      parse_fail(line_no, "expected at least " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    Observation o;
    o.y = parse_real(fields[cols[0]], line_no, schema.outcome);
    o.t = parse_binary(fields[cols[1]], line_no, schema.treatment);
    o.z = parse_binary(fields[cols[2]], line_no, schema.instrument);
    const std::string& label = fields[cols[3]];
    if (label.empty()) parse_fail(line_no, "column '" + schema.exogenous + "' is empty");
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      if (fixed_order) {
        throw Error(ErrorKind::SchemaError,
                    "line " + std::to_string(line_no) + ": label '" + label + "' is not in the V order");
      }
      it = label_index.emplace(label, static_cast<int>(ds.v_support.size())).first;
      ds.v_support.push_back(label);
    }
    o.v = it->second;
    ds.rows.push_back(o);
  }
  if (schema.header && header.empty()) throw Error(ErrorKind::SchemaError, "file has no header row");
  return ds;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  const bool weighted = !ds.weights.empty();
  out << "y,t,z,v" << (weighted ? ",w" : "") << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Observation& o = ds.rows[i];
    out << o.y << ',' << o.t << ',' << o.z << ',' << ds.v_support[static_cast<std::size_t>(o.v)];
    if (weighted) out << ',' << ds.weights[i];
    out << '\n';
  }
}

}  // namespace mlate
