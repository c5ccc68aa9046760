#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mstates::io {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(std::string_view line);

/// A CSV file with leading `#` metadata lines stripped. Rows keep their
/// 1-based line numbers for error messages.
struct CsvTable {
    std::vector<std::string> header;
    struct Row {
        std::size_t line;
        std::vector<std::string> fields;
    };
    std::vector<Row> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Opens `path` for writing and emits each metadata line prefixed by "# ".
std::ofstream open_with_metadata(const std::filesystem::path& path,
                                 const std::vector<std::string>& metadata);

double parse_double(std::string_view text, const std::string& context);
long parse_int(std::string_view text, const std::string& context);

}  // namespace mstates::io
