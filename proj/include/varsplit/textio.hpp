#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Exact text encoding for checkpoints: reals are written as C99 hex floats so
// a store/load cycle reproduces every bit.
namespace varsplit::textio {

std::string format_exact(double value);
double parse_exact(std::string_view token);

void write_reals(std::ostream& os, std::string_view tag, std::span<const double> values);
std::vector<double> read_reals(std::istream& is, std::string_view tag);

/// Reads "<tag> <rest-of-line>" and returns the rest; throws if the tag differs.
std::string read_field(std::istream& is, std::string_view tag);

} // namespace varsplit::textio
