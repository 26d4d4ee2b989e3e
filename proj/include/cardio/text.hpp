#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardio {

std::string_view trim(std::string_view s);

// Whole-string decimal parse; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view s);

// Shortest representation that round-trips; "inf" / "-inf" / "nan" for
// non-finite values.
std::string format_number(double v);

// Comma-separated integer list such as "1,2,3,7".
std::vector<int> parse_index_list(std::string_view s);
std::string join_indices(const std::vector<int>& indices, char sep = ',');

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

// RFC-4180 reader: quoted fields, doubled quotes, CRLF, quoted newlines.
// Blank lines are skipped.
std::vector<CsvRecord> read_csv_records(std::istream& in);

// Quotes a field only when it needs it.
std::string csv_escape(std::string_view field);

}  // namespace cardio
