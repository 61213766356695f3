#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace logitnets {

// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are
// wrapped in quotes with embedded quotes doubled.
std::string csv_field(std::string_view s);
std::string csv_line(const std::vector<std::string>& fields);
std::string csv_num(double x);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add(std::vector<std::string> row);
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::vector<std::string>>& data() const { return rows_; }
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// 64-bit FNV-1a, used for config hashes.
unsigned long long fnv1a(std::string_view s);

}  // namespace logitnets
