#pragma once

#include <string>
#include <vector>

namespace m2m::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// RFC-4180-ish reader: comma separated, double quotes with "" escapes,
// LF or CRLF line endings. First record is the header.
Table read_file(const std::string& path);
Table read_string(const std::string& text);

std::string escape_field(const std::string& field);

// Canonical double formatting: shortest text that parses back bit-identically
// (%.17g with a round-trip check at lower precision).
std::string format_double(double v);
double parse_double(const std::string& text, bool* ok);

}  // namespace m2m::csv
