#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace peerlearn::csv {

// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_row(std::string_view line);

// Reads all records, skipping blank lines and stripping a trailing '\r'.
std::vector<std::vector<std::string>> read(std::istream& in);

std::string format_number(double value);

}  // namespace peerlearn::csv
