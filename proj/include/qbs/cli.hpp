#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qbs::cli {

/// `start:stop:count`, both ends included. count = 1 needs start == stop.
struct Range {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;

  std::vector<double> values() const;
};

/// Throws ParseError on malformed text, ValidationError on non-finite ends.
Range parse_range(std::string_view text);

/// Strict number parsing for flag values (same error split as parse_range).
double parse_number(std::string_view text, std::string_view what);

using Cell = std::variant<long long, double, std::string>;

/// One dataset: a column list and one row per sample, plus the parameters
/// and notes that go into the comment header.
struct Table {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> notes;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// CSV: `# key = value` header lines, `# note: ...` lines, a column line,
/// then the rows. Doubles use the shortest round-trip form.
std::string to_csv(const Table& t);
/// JSON: {"command", "parameters", "notes", "columns", "rows"}; NaN -> null.
std::string to_json(const Table& t);

/// Inverse of to_csv / to_json. Cells come back as long long when the text is
/// an integer, double when it is a number, string otherwise.
Table parse_csv(std::string_view text);
Table parse_json(std::string_view text);

/// Runs one command line (args excludes the program name). Writes the
/// dataset to --output or `out`, diagnostics to `err`. Exit codes: 0 ok,
/// 2 parse error, 3 validation error, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qbs::cli
