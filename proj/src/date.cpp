#include "mstates/date.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

#include "mstates/errors.hpp"

namespace mstates {

using namespace std::chrono;

namespace {

int parse_field(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("invalid date '" + std::string(whole) + "' (expected YYYY-MM-DD)");
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    year_month_day ymd{year{parse_field(text.substr(0, 4), text)},
                       month{static_cast<unsigned>(parse_field(text.substr(5, 2), text))},
                       day{static_cast<unsigned>(parse_field(text.substr(8, 2), text))}};
    if (!ymd.ok()) {
        throw ValidationError("invalid calendar date '" + std::string(text) + "'");
    }
    return sys_days{ymd};
}

std::string format_date(Date d) {
    year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int bimonth_index(Date d) {
    year_month_day ymd{d};
    return static_cast<int>(ymd.year()) * 6 + (static_cast<int>(static_cast<unsigned>(ymd.month())) - 1) / 2;
}

Date bimonth_first_day(int index) {
    const int y = index / 6;
    const unsigned m = static_cast<unsigned>((index % 6) * 2 + 1);
    return sys_days{year{y} / month{m} / day{1}};
}

Date bimonth_last_day(int index) {
    const int y = index / 6;
    const unsigned m = static_cast<unsigned>((index % 6) * 2 + 2);
    return sys_days{year_month_day_last{year{y}, month_day_last{month{m}}}};
}

std::vector<Date> weekdays_between(Date first, Date last) {
    std::vector<Date> out;
    for (Date d = first; d <= last; d += days{1}) {
        const unsigned wd = weekday{d}.c_encoding();
        if (wd != 0 && wd != 6) out.push_back(d);
    }
    return out;
}

}  // namespace mstates
