#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rcsdid::io {

// Writes through a sibling temporary file and renames it into place, so a
// failed writer never leaves a partial file at `path`.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer);

// RFC 4180-style field splitting (double quotes, "" escapes). Throws
// ParseError for an unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line, long row);

// Quotes a field if it contains a comma, quote or newline.
std::string csv_field(std::string_view value);

// Shortest decimal form that parses back to the same double.
std::string format_roundtrip(double value);

}  // namespace rcsdid::io
