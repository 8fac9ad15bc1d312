#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ffsteer::csv {

/// A parsed numeric CSV table: one header row followed by rows of doubles.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a column, or -1 when absent.
    int column(std::string_view name) const;
    /// Index of a column; throws InvalidInput when absent.
    std::size_t require(std::string_view name) const;
};

Table read(const std::string& path);
Table parse(std::istream& in, const std::string& origin = "<stream>");

/// Shortest round-trip representation of a double.
std::string format(double v);

void write_row(std::ostream& out, const std::vector<double>& values);
void write_header(std::ostream& out, const std::vector<std::string>& names);

/// 64-bit FNV-1a over raw bytes; used for determinism checks.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace ffsteer::csv
