#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace batchlens::report {

/// Decimal text with 9 significant digits. Infinities print as "inf"/"-inf",
/// NaN as "nan".
std::string format_real(double v);

/// Inverse of format_real; throws std::invalid_argument on junk.
double parse_real(const std::string& text);

/// Simple rectangular table; cells never contain commas or quotes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    size_t column(const std::string& name) const;  // throws InputError if absent
    std::string to_csv() const;
};

void write_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);
Table parse_csv(const std::string& text);

void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace batchlens::report
