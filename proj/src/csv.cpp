#include "logitnets/csv.hpp"

#include <fstream>
#include <stdexcept>

#include "logitnets/net.hpp"

namespace logitnets {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    line += "\r\n";
    return line;
}

std::string csv_num(double x) { return format_double(x); }

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::invalid_argument("csv row width differs from header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string s = csv_line(header_);
    for (const auto& r : rows_) s += csv_line(r);
    return s;
}

void CsvTable::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << str();
}

unsigned long long fnv1a(std::string_view s) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace logitnets
