#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace cbvc::csv {

// Splits one RFC 4180 record. Quoted fields may contain commas and doubled
// quotes; embedded newlines are not supported.
std::vector<std::string> split(const std::string& line);

// Quotes a field only when it needs it.
std::string escape(const std::string& field);
std::string join(const std::vector<std::string>& fields);

// Reads the next non-empty line, stripping a trailing CR. Increments lineno
// for every physical line consumed.
std::optional<std::string> next_line(std::istream& in, long& lineno);

}  // namespace cbvc::csv
