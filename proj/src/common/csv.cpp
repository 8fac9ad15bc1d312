#include "ffsteer/csv.hpp"

#include "ffsteer/error.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ffsteer::csv {

int Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::size_t Table::require(std::string_view name) const {
    const int idx = column(name);
    if (idx < 0) throw InvalidInput("missing CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(idx);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Table parse(std::istream& in, const std::string& origin) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = trim(line);
        if (view.empty()) continue;
        const auto cells = split(view);
        if (t.header.empty()) {
            for (auto c : cells) t.header.emplace_back(trim(c));
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InvalidInput(origin + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto cell = trim(cells[i]);
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[i]);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw InvalidInput(origin + ":" + std::to_string(lineno) + ": bad number '" +
                                   std::string(cell) + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InvalidInput(origin + ": empty CSV");
    return t;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    return parse(in, path);
}

std::string format(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_row(std::ostream& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        out << format(values[i]);
    }
    out << '\n';
}

void write_header(std::ostream& out, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out << ',';
        out << names[i];
    }
    out << '\n';
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a(data);
}

}  // namespace ffsteer::csv
