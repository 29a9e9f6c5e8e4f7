// Minimal deterministic CSV writing: comma separated, header row, '.'
// decimal point, shortest round-trip number formatting, LF line endings.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace projhead {

// Shortest representation that parses back to the same double.
std::string format_number(double x);

// Parses a full field as a double; returns false on any trailing garbage.
bool parse_number(const std::string& field, double& out);

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace projhead
