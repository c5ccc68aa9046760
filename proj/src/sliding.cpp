#include "mstates/sliding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "mstates/corr.hpp"
#include "mstates/errors.hpp"
#include "mstates/io.hpp"
#include "mstates/kernels.hpp"

namespace mstates {

std::size_t sliding_window_count(std::size_t T, int window, int step) {
    if (window < 1 || step < 1) throw ValidationError("sliding window and step must be >= 1");
    if (T < static_cast<std::size_t>(window)) return 0;
    return (T - static_cast<std::size_t>(window)) / static_cast<std::size_t>(step) + 1;
}

namespace {

double mean_volatility(const Eigen::MatrixXd& raw) {
    const Eigen::MatrixXd centered = raw.colwise() - raw.rowwise().mean();
    const Eigen::VectorXd sd = (centered.rowwise().squaredNorm() / static_cast<double>(raw.cols())).cwiseSqrt();
    return sd.mean();
}

RegimePoint analyse_window(const ReturnPanel& raw_window, const ReturnPanel& norm_window,
                           const rmt::FitOptions& fit_options) {
    RegimePoint p;
    p.window = {norm_window.dates.front(), norm_window.dates.back()};
    try {
        CorrelationMatrix c;
        c.labels = norm_window.tickers;
        c.entries = kernels::serial::correlation(norm_window.returns);
        p.c = mean_off_diagonal(c);
        p.sigma = mean_volatility(raw_window.returns);
        const auto model = rmt::CovarianceModel::from_returns(raw_window);
        const auto rotated = rmt::rotate_and_rescale(raw_window, model);
        auto options = fit_options;
        options.parallel = false;
        const auto fit = rmt::fit_N(rotated.values, options);
        p.N = fit.N;
        p.converged = fit.converged;
    } catch (const std::exception& e) {
        p.valid = false;
        p.error = e.what();
    }
    return p;
}

}  // namespace

std::vector<RegimePoint> sliding_analysis(const ReturnPanel& raw, const ReturnPanel& normalized,
                                          const SlidingOptions& options) {
    if (raw.tickers != normalized.tickers) throw ValidationError("sliding_analysis: raw and normalized tickers differ");
    const std::size_t T = normalized.num_dates();
    const std::size_t count = sliding_window_count(T, options.window, options.step);
    if (count == 0) throw ValidationError("sliding_analysis: fewer dates than one window");

    auto first = std::lower_bound(raw.dates.begin(), raw.dates.end(), normalized.dates.front());
    const auto offset = static_cast<std::size_t>(first - raw.dates.begin());
    if (offset + T > raw.num_dates() ||
        !std::equal(normalized.dates.begin(), normalized.dates.end(), raw.dates.begin() + static_cast<std::ptrdiff_t>(offset))) {
        throw ValidationError("sliding_analysis: raw returns do not cover the normalized dates");
    }

    std::vector<RegimePoint> points(count);
    const auto window = static_cast<std::size_t>(options.window);
    const auto step = static_cast<std::size_t>(options.step);
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(count); ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * step;
        points[static_cast<std::size_t>(w)] =
            analyse_window(raw.slice_columns(offset + begin, window), normalized.slice_columns(begin, window), options.fit);
    }
    for (const auto& p : points) {
        if (!p.valid) spdlog::warn("window {}..{} invalid: {}", format_date(p.window.first), format_date(p.window.last), p.error);
    }
    return points;
}

void assign_regimes(std::vector<RegimePoint>& points, const std::vector<Date>& boundaries) {
    if (!std::is_sorted(boundaries.begin(), boundaries.end()) ||
        std::adjacent_find(boundaries.begin(), boundaries.end()) != boundaries.end()) {
        throw ValidationError("assign_regimes: boundaries must be strictly increasing");
    }
    for (auto& p : points) {
        const auto above = std::upper_bound(boundaries.begin(), boundaries.end(), p.window.first);
        p.regime = 1 + static_cast<int>(above - boundaries.begin());
    }
}

std::vector<Date> default_regime_boundaries() {
    return {parse_date("1996-10-01"), parse_date("2006-10-01"), parse_date("2009-06-01")};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t m = i; m <= j; ++m) rank[order[m]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

RankCorrelation spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: size mismatch");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return {0.0, false};
    return {sxy / std::sqrt(sxx * syy), true};
}

std::string field_name(PointField f) {
    switch (f) {
        case PointField::N: return "N";
        case PointField::c: return "c";
        case PointField::sigma: return "sigma";
    }
    return "?";
}

namespace {

double field_value(const RegimePoint& p, PointField f) {
    switch (f) {
        case PointField::N: return p.N;
        case PointField::c: return p.c;
        case PointField::sigma: return p.sigma;
    }
    return 0.0;
}

}  // namespace

RankCorrelation scatter_export(const std::filesystem::path& path, const std::vector<RegimePoint>& points,
                               PointField x, PointField y, const std::vector<std::string>& metadata) {
    std::vector<double> xs, ys;
    std::vector<int> regimes;
    for (const auto& p : points) {
        if (!p.valid) continue;
        xs.push_back(field_value(p, x));
        ys.push_back(field_value(p, y));
        regimes.push_back(p.regime);
    }
    if (xs.size() < 3) throw ValidationError("scatter_export: fewer than 3 valid points");
    const auto rho = spearman(xs, ys);
    auto meta = metadata;
    meta.push_back("spearman=" + io::format_double(rho.rho) + (rho.defined ? "" : " (undefined: constant input)"));
    auto out = io::open_with_metadata(path, meta);
    out << field_name(x) << ',' << field_name(y) << ",regime\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << io::format_double(xs[i]) << ',' << io::format_double(ys[i]) << ',' << regimes[i] << '\n';
    }
    return rho;
}

void write_sliding_csv(const std::filesystem::path& path, const std::vector<RegimePoint>& points,
                       const std::vector<std::string>& metadata) {
    auto out = io::open_with_metadata(path, metadata);
    out << "window_start,window_end,N,c,sigma,regime,valid\n";
    for (const auto& p : points) {
        out << format_date(p.window.first) << ',' << format_date(p.window.last) << ','
            << (p.valid ? io::format_double(p.N) : "") << ',' << (p.valid ? io::format_double(p.c) : "") << ','
            << (p.valid ? io::format_double(p.sigma) : "") << ',' << p.regime << ',' << (p.valid ? 1 : 0) << '\n';
    }
}

}  // namespace mstates
