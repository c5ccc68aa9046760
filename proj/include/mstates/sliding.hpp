#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstates/date.hpp"
#include "mstates/ingest.hpp"
#include "mstates/rmt.hpp"

namespace mstates {

struct RegimePoint {
    DateInterval window{};
    double N = 0.0;
    double c = 0.0;
    /// Mean over stocks of the standard deviation of raw returns in the window.
    double sigma = 0.0;
    bool converged = false;
    /// 1-based regime label (I = 1), 0 when unassigned.
    int regime = 0;
    bool valid = true;
    std::string error;
};

struct SlidingOptions {
    int window = 500;
    int step = 21;
    rmt::FitOptions fit;
    bool parallel = true;
};

/// Number of full windows: floor((T - window) / step) + 1, or 0 if T < window.
std::size_t sliding_window_count(std::size_t T, int window, int step);

/// Per window: c from the correlation matrix of the normalized returns, N
/// from the rotated raw returns, sigma from the raw returns. `raw` must
/// contain every date of `normalized`; windows are laid on the normalized
/// dates. Windows whose fit fails are kept and marked invalid.
std::vector<RegimePoint> sliding_analysis(const ReturnPanel& raw, const ReturnPanel& normalized,
                                          const SlidingOptions& options = {});

/// Regime I precedes the first boundary, II the second, and so on; a point
/// belongs to the interval containing its window start.
void assign_regimes(std::vector<RegimePoint>& points, const std::vector<Date>& boundaries);

/// Boundaries 1996-10-01, 2006-10-01, 2009-06-01.
std::vector<Date> default_regime_boundaries();

struct RankCorrelation {
    double rho = 0.0;
    /// False when one variable is constant; rho is then reported as 0.
    bool defined = true;
};

RankCorrelation spearman(std::span<const double> x, std::span<const double> y);

enum class PointField { N, c, sigma };

std::string field_name(PointField f);

/// Writes (x, y, regime) for valid points and returns Spearman(x, y).
/// Throws ValidationError with fewer than 3 valid points.
RankCorrelation scatter_export(const std::filesystem::path& path, const std::vector<RegimePoint>& points,
                               PointField x, PointField y, const std::vector<std::string>& metadata);

void write_sliding_csv(const std::filesystem::path& path, const std::vector<RegimePoint>& points,
                       const std::vector<std::string>& metadata);

}  // namespace mstates
