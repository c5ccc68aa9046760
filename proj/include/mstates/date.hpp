#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace mstates {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws ValidationError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Index of the two-month calendar block (Jan-Feb, Mar-Apr, ...) holding `d`,
/// counted from year 0 so that consecutive blocks have consecutive indices.
int bimonth_index(Date d);
Date bimonth_first_day(int index);
Date bimonth_last_day(int index);

struct DateInterval {
    Date first;
    Date last;  // inclusive

    bool contains(Date d) const { return first <= d && d <= last; }
    friend bool operator==(const DateInterval&, const DateInterval&) = default;
};

/// Monday to Friday dates in [first, last].
std::vector<Date> weekdays_between(Date first, Date last);

}  // namespace mstates
