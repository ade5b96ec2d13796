#include "varsplit/textio.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace varsplit::textio {

std::string format_exact(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", value);
    return buf;
}

double parse_exact(std::string_view token) {
    std::string owned(token);
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(owned.c_str(), &end);
    if (owned.empty() || end != owned.c_str() + owned.size() || errno == ERANGE) {
        throw std::runtime_error("unparseable real '" + owned + "'");
    }
    return value;
}

void write_reals(std::ostream& os, std::string_view tag, std::span<const double> values) {
    os << tag << ' ' << values.size() << '\n';
    for (double v : values) os << format_exact(v) << '\n';
}

std::vector<double> read_reals(std::istream& is, std::string_view tag) {
    const std::string count_text = read_field(is, tag);
    std::size_t count = 0;
    try {
        count = std::stoul(count_text);
    } catch (const std::exception&) {
        throw std::runtime_error("bad element count for '" + std::string(tag) + "'");
    }
    std::vector<double> values;
    values.reserve(count);
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
        if (!(is >> token)) {
            throw std::runtime_error("truncated '" + std::string(tag) + "' block");
        }
        values.push_back(parse_exact(token));
    }
    is >> std::ws;
    return values;
}

std::string read_field(std::istream& is, std::string_view tag) {
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) break;
    }
    const auto space = line.find(' ');
    const std::string head = line.substr(0, space);
    if (head != tag) {
        throw std::runtime_error("expected field '" + std::string(tag) + "', found '" + head + "'");
    }
    return space == std::string::npos ? std::string{} : line.substr(space + 1);
}

} // namespace varsplit::textio
