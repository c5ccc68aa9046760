#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mstates/date.hpp"

namespace mstates {

/// Industry sector codes in legend order; anything unmapped is kUnknownSector.
inline const std::vector<std::string>& sector_codes() {
    static const std::vector<std::string> codes{"BI", "CG", "CD", "CN", "CS", "E",
                                                "F",  "HC", "M",  "PU", "T",  "TR"};
    return codes;
}
inline constexpr const char* kUnknownSector = "UNKNOWN";

/// Position of a sector code in legend order, UNKNOWN sorting last.
int sector_rank(const std::string& code);

/// Aligned daily closes. closes is K x (number of dates), one row per ticker.
struct PricePanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Eigen::MatrixXd closes;
    std::map<std::string, std::string> sectors;

    std::size_t num_tickers() const { return tickers.size(); }
    std::size_t num_dates() const { return dates.size(); }
};

/// K x T return matrix. A return is stamped with the date it is realized on,
/// i.e. r(t) = (S(t+dt) - S(t)) / S(t) carries the date of S(t+dt).
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Eigen::MatrixXd returns;
    bool normalized = false;
    std::optional<int> local_window_n;
    /// Points where the local standard deviation vanished (normalized panels only).
    std::size_t degenerate_points = 0;

    std::size_t num_tickers() const { return tickers.size(); }
    std::size_t num_dates() const { return dates.size(); }

    /// Columns whose date lies in [window.first, window.last].
    ReturnPanel slice(const DateInterval& window) const;
    /// Columns [begin, begin + count).
    ReturnPanel slice_columns(std::size_t begin, std::size_t count) const;
};

/// Reads `date,ticker,close` and `ticker,sector` files. Tickers lacking any
/// date of the (restricted) date grid are dropped; survivors are ordered by
/// (sector, ticker).
PricePanel load_prices(const std::filesystem::path& price_csv,
                       const std::filesystem::path& sector_csv,
                       const std::optional<DateInterval>& date_range = std::nullopt);

ReturnPanel compute_returns(const PricePanel& panel, int dt = 1);

enum class DegeneratePolicy { Zero, Error };

/// Local normalization: subtract the mean and divide by the standard deviation
/// of the trailing n points ending at (and including) t. The first n-1 columns
/// have no full window and are dropped.
ReturnPanel local_normalize(const ReturnPanel& returns, int n = 13,
                            DegeneratePolicy policy = DegeneratePolicy::Zero);

void write_returns_csv(const std::filesystem::path& path, const ReturnPanel& panel,
                       const std::vector<std::string>& metadata);
ReturnPanel read_returns_csv(const std::filesystem::path& path);

}  // namespace mstates
