#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace varsplit::csv {

/// Splits one comma-delimited line; double-quoted fields may contain commas
/// and doubled quotes. A trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Index of `name` in a header row, if present (surrounding spaces ignored).
std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::string_view name);

/// Empty, "nan", "na" and "null" (any case) read as quiet NaN; anything else
/// must be a complete number or std::nullopt is returned.
std::optional<double> parse_cell(std::string_view cell);

/// Fixed-precision rendering used by every result table (%.10g).
std::string format(double value);

/// Fields containing commas, quotes or newlines are quoted.
std::string join(const std::vector<std::string>& fields);

} // namespace varsplit::csv
