#include "mstates/io.hpp"

#include <charconv>
#include <cmath>

#include "mstates/errors.hpp"

namespace mstates::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? line.size() - start : pos - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (!have_header) {
            if (line.front() == '#') continue;
            if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
            table.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        table.rows.push_back({lineno, split_csv_line(line)});
    }
    if (!have_header) throw ValidationError("'" + path.string() + "' has no header line");
    return table;
}

std::ofstream open_with_metadata(const std::filesystem::path& path,
                                 const std::vector<std::string>& metadata) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    for (const auto& line : metadata) out << "# " << line << '\n';
    return out;
}

double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError(context + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

long parse_int(std::string_view text, const std::string& context) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError(context + ": cannot parse integer '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace mstates::io
