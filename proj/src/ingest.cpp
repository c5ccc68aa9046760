#include "mstates/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "mstates/errors.hpp"
#include "mstates/io.hpp"

namespace mstates {

int sector_rank(const std::string& code) {
    const auto& codes = sector_codes();
    auto it = std::find(codes.begin(), codes.end(), code);
    return it == codes.end() ? static_cast<int>(codes.size()) : static_cast<int>(it - codes.begin());
}

ReturnPanel ReturnPanel::slice_columns(std::size_t begin, std::size_t count) const {
    if (begin + count > dates.size()) throw ValidationError("column slice out of range");
    ReturnPanel out;
    out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin),
                     dates.begin() + static_cast<std::ptrdiff_t>(begin + count));
    out.tickers = tickers;
    out.returns = returns.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.normalized = normalized;
    out.local_window_n = local_window_n;
    return out;
}

ReturnPanel ReturnPanel::slice(const DateInterval& window) const {
    auto lo = std::lower_bound(dates.begin(), dates.end(), window.first);
    auto hi = std::upper_bound(dates.begin(), dates.end(), window.last);
    if (hi < lo) hi = lo;
    return slice_columns(static_cast<std::size_t>(lo - dates.begin()), static_cast<std::size_t>(hi - lo));
}

namespace {

std::map<std::string, std::string> load_sectors(const std::filesystem::path& sector_csv) {
    const auto table = io::read_csv(sector_csv);
    if (table.header != std::vector<std::string>{"ticker", "sector"}) {
        throw ValidationError(sector_csv.string() + ": expected header 'ticker,sector'");
    }
    std::map<std::string, std::string> sectors;
    for (const auto& row : table.rows) {
        const std::string where = sector_csv.string() + " line " + std::to_string(row.line);
        if (row.fields.size() != 2 || row.fields[0].empty()) {
            throw ValidationError(where + ": malformed row");
        }
        const auto& code = row.fields[1];
        if (code != kUnknownSector && sector_rank(code) == static_cast<int>(sector_codes().size())) {
            throw ValidationError(where + ": unknown sector code '" + code + "'");
        }
        sectors[row.fields[0]] = code;
    }
    return sectors;
}

}  // namespace

PricePanel load_prices(const std::filesystem::path& price_csv,
                       const std::filesystem::path& sector_csv,
                       const std::optional<DateInterval>& date_range) {
    const auto table = io::read_csv(price_csv);
    if (table.header != std::vector<std::string>{"date", "ticker", "close"}) {
        throw ValidationError(price_csv.string() + ": expected header 'date,ticker,close'");
    }

    std::unordered_map<std::string, std::map<Date, double>> series;
    std::set<Date> grid;
    for (const auto& row : table.rows) {
        const std::string where = price_csv.string() + " line " + std::to_string(row.line);
        if (row.fields.size() != 3 || row.fields[1].empty()) {
            throw ValidationError(where + ": malformed row");
        }
        Date d;
        double close = 0.0;
        try {
            d = parse_date(row.fields[0]);
            close = io::parse_double(row.fields[2], "close");
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        const auto& ticker = row.fields[1];
        if (!(close > 0.0) || !std::isfinite(close)) {
            throw ValidationError(where + ": non-positive price " + row.fields[2] + " for " + ticker +
                                  " on " + row.fields[0]);
        }
        if (date_range && !date_range->contains(d)) continue;
        if (!series[ticker].emplace(d, close).second) {
            throw ValidationError(where + ": duplicate entry for " + ticker + " on " + row.fields[0]);
        }
        grid.insert(d);
    }

    PricePanel panel;
    panel.dates.assign(grid.begin(), grid.end());
    for (const auto& [ticker, prices] : series) {
        if (prices.size() == grid.size()) {
            panel.tickers.push_back(ticker);
        } else {
            spdlog::warn("dropping {}: {} of {} dates present", ticker, prices.size(), grid.size());
        }
    }
    if (panel.tickers.empty() || panel.dates.empty()) {
        throw ValidationError(price_csv.string() + ": no ticker covers the full date range");
    }

    const auto known = load_sectors(sector_csv);
    for (const auto& t : panel.tickers) {
        auto it = known.find(t);
        panel.sectors[t] = it == known.end() ? kUnknownSector : it->second;
    }
    std::sort(panel.tickers.begin(), panel.tickers.end(), [&](const auto& a, const auto& b) {
        const int ra = sector_rank(panel.sectors.at(a));
        const int rb = sector_rank(panel.sectors.at(b));
        return ra != rb ? ra < rb : a < b;
    });

    panel.closes.resize(static_cast<Eigen::Index>(panel.tickers.size()),
                        static_cast<Eigen::Index>(panel.dates.size()));
    for (std::size_t k = 0; k < panel.tickers.size(); ++k) {
        Eigen::Index t = 0;
        for (const auto& [d, close] : series.at(panel.tickers[k])) {
            panel.closes(static_cast<Eigen::Index>(k), t++) = close;
        }
    }
    return panel;
}

ReturnPanel compute_returns(const PricePanel& panel, int dt) {
    if (dt < 1) throw ValidationError("return interval must be >= 1");
    const auto n = static_cast<Eigen::Index>(panel.num_dates());
    if (n < dt + 1) throw ValidationError("need at least dt+1 dates to compute returns");
    ReturnPanel out;
    out.tickers = panel.tickers;
    out.dates.assign(panel.dates.begin() + dt, panel.dates.end());
    const auto& s = panel.closes;
    out.returns = (s.rightCols(n - dt) - s.leftCols(n - dt)).cwiseQuotient(s.leftCols(n - dt));
    return out;
}

ReturnPanel local_normalize(const ReturnPanel& in, int n, DegeneratePolicy policy) {
    if (in.normalized) throw ValidationError("returns are already locally normalized");
    if (n < 2) throw ValidationError("local window n must be >= 2");
    const auto T = static_cast<Eigen::Index>(in.num_dates());
    if (T < n) throw ValidationError("series shorter than the local window");
    const auto K = in.returns.rows();
    const Eigen::Index out_T = T - n + 1;

    ReturnPanel out;
    out.tickers = in.tickers;
    out.dates.assign(in.dates.begin() + (n - 1), in.dates.end());
    out.normalized = true;
    out.local_window_n = n;
    out.returns.resize(K, out_T);

    std::size_t degenerate = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index t = 0; t < out_T; ++t) {
            const auto window = in.returns.row(k).segment(t, n);
            const double mean = window.mean();
            // Two-pass variance; the one-pass <r^2> - <r>^2 form loses digits
            // when the mean dominates.
            const double var = (window.array() - mean).square().mean();
            const double value = in.returns(k, t + n - 1);
            const double sd = std::sqrt(var);
            if (!(sd > 1e-12 * window.cwiseAbs().maxCoeff()) || sd == 0.0) {
                if (policy == DegeneratePolicy::Error) {
                    throw NumericalError("zero local standard deviation for " + in.tickers[k] + " at " +
                                         format_date(in.dates[t + n - 1]));
                }
                ++degenerate;
                out.returns(k, t) = 0.0;
            } else {
                out.returns(k, t) = (value - mean) / sd;
            }
        }
    }
    out.degenerate_points = degenerate;
    if (degenerate > 0) {
        spdlog::warn("local normalization: {} point(s) with zero local std set to 0", degenerate);
    }
    return out;
}

void write_returns_csv(const std::filesystem::path& path, const ReturnPanel& panel,
                       const std::vector<std::string>& metadata) {
    auto meta = metadata;
    meta.push_back(std::string("normalized=") + (panel.normalized ? "true" : "false") +
                   (panel.local_window_n ? ";local_window_n=" + std::to_string(*panel.local_window_n) : ""));
    auto out = io::open_with_metadata(path, meta);
    out << "date";
    for (const auto& t : panel.tickers) out << ',' << t;
    out << '\n';
    for (std::size_t t = 0; t < panel.num_dates(); ++t) {
        out << format_date(panel.dates[t]);
        for (Eigen::Index k = 0; k < panel.returns.rows(); ++k) {
            out << ',' << io::format_double(panel.returns(k, static_cast<Eigen::Index>(t)));
        }
        out << '\n';
    }
}

ReturnPanel read_returns_csv(const std::filesystem::path& path) {
    // The normalization flag lives in the metadata block.
    ReturnPanel panel;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line) && line.starts_with("#")) {
            const auto pos = line.find("normalized=");
            if (pos == std::string::npos) continue;
            panel.normalized = line.compare(pos + 11, 4, "true") == 0;
            const auto w = line.find("local_window_n=");
            if (w != std::string::npos) {
                panel.local_window_n = static_cast<int>(io::parse_int(line.substr(w + 15), path.string()));
            }
        }
    }
    const auto table = io::read_csv(path);
    if (table.header.empty() || table.header.front() != "date") {
        throw ValidationError(path.string() + ": expected first column 'date'");
    }
    panel.tickers.assign(table.header.begin() + 1, table.header.end());
    const auto K = static_cast<Eigen::Index>(panel.tickers.size());
    panel.returns.resize(K, static_cast<Eigen::Index>(table.rows.size()));
    Eigen::Index t = 0;
    for (const auto& row : table.rows) {
        const std::string where = path.string() + " line " + std::to_string(row.line);
        if (static_cast<Eigen::Index>(row.fields.size()) != K + 1) throw ValidationError(where + ": malformed row");
        panel.dates.push_back(parse_date(row.fields[0]));
        for (Eigen::Index k = 0; k < K; ++k) {
            panel.returns(k, t) = io::parse_double(row.fields[static_cast<std::size_t>(k) + 1], where);
        }
        ++t;
    }
    return panel;
}

}  // namespace mstates
