#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mstates/corr.hpp"
#include "mstates/errors.hpp"
#include "mstates/ingest.hpp"
#include "mstates/rmt.hpp"
#include "mstates/sliding.hpp"
#include "support.hpp"

using namespace mstates;

namespace {

CorrelationMatrix equicorrelation(Eigen::Index K, double c) {
    CorrelationMatrix m;
    for (Eigen::Index i = 0; i < K; ++i) m.labels.push_back("T" + std::to_string(i));
    m.entries = Eigen::MatrixXd::Constant(K, K, c);
    m.entries.diagonal().setOnes();
    return m;
}

RegimePoint point_at(const char* start) {
    RegimePoint p;
    p.window = {parse_date(start), parse_date(start) + std::chrono::days{700}};
    return p;
}

}  // namespace

TEST_CASE("window bookkeeping") {
    CHECK(sliding_window_count(5542, 500, 21) == 241);
    CHECK(sliding_window_count(500, 500, 21) == 1);
    CHECK(sliding_window_count(499, 500, 21) == 0);
    for (std::size_t T = 500; T < 700; T += 7) {
        CHECK(sliding_window_count(T, 500, 21) == (T - 500) / 21 + 1);
    }
}

TEST_CASE("window c is the mean off-diagonal of the window correlation") {
    const auto raw = testing::gaussian_panel(6, testing::weekdays("2000-01-03", "2001-06-29"), 3, false);
    const auto normalized = local_normalize(raw);
    SlidingOptions o;
    o.window = 120;
    o.step = 30;
    const auto points = sliding_analysis(raw, normalized, o);
    REQUIRE(points.size() == sliding_window_count(normalized.num_dates(), 120, 30));
    for (std::size_t w = 0; w < points.size(); ++w) {
        const auto slice = normalized.slice_columns(w * 30, 120);
        CHECK(points[w].c == doctest::Approx(mean_off_diagonal(pearson(slice))).epsilon(1e-12));
        CHECK(points[w].window.first == slice.dates.front());
        CHECK(points[w].window.last == slice.dates.back());
        const auto raw_slice = raw.slice(points[w].window);
        double sigma = 0.0;
        for (Eigen::Index k = 0; k < 6; ++k) {
            const Eigen::ArrayXd row = raw_slice.returns.row(k).array();
            sigma += std::sqrt((row - row.mean()).square().mean());
        }
        CHECK(points[w].sigma == doctest::Approx(sigma / 6).epsilon(1e-12));
    }
    o.parallel = false;
    const auto serial = sliding_analysis(raw, normalized, o);
    for (std::size_t w = 0; w < points.size(); ++w) CHECK(serial[w].N == points[w].N);
}

TEST_CASE("stationary Gaussian data gives large N") {
    // 5000 points per window: excess kurtosis 6/N = 0.3 at N = 20 is over 4 standard errors.
    const auto raw = testing::gaussian_panel(20, testing::weekdays("2000-01-03", "2002-12-31"), 8, false);
    SlidingOptions o;
    o.window = 250;
    o.step = 100;
    const auto points = sliding_analysis(raw, local_normalize(raw), o);
    int pinned = 0;
    for (const auto& p : points) {
        CHECK(p.valid);
        CHECK(std::abs(p.c) < 0.1);
        CHECK(p.N > 20.0);
        if (!p.converged) {
            CHECK(p.N == doctest::Approx(500.0).epsilon(1e-3));
            ++pinned;
        }
    }
    CHECK(pinned > 0);
}

TEST_CASE("a planted jump in correlation level shows up at the right window") {
    const auto dates = testing::weekdays("2000-01-03", "2001-12-31");
    const std::size_t half = dates.size() / 2;
    const std::vector<Date> first(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<Date> second(dates.begin() + static_cast<std::ptrdiff_t>(half), dates.end());
    const Eigen::VectorXd vols = Eigen::VectorXd::Constant(8, 0.01);
    auto raw = rmt::sample_returns(equicorrelation(8, 0.1), vols, 40, first, 1);
    const auto b = rmt::sample_returns(equicorrelation(8, 0.6), vols, 40, second, 2);
    raw.returns.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(dates.size()));
    raw.returns.rightCols(b.returns.cols()) = b.returns;
    raw.dates = dates;
    const auto normalized = local_normalize(raw);

    SlidingOptions o;
    o.window = 60;
    o.step = 20;
    const auto points = sliding_analysis(raw, normalized, o);
    const Date jump = dates[half];
    for (const auto& p : points) {
        if (p.window.last < jump) CHECK(p.c < 0.3);
        if (p.window.first >= jump) CHECK(p.c > 0.4);
    }
}

TEST_CASE("sliding N tracks a planted constant N without trend") {
    const auto dates = testing::weekdays("1990-01-01", "2009-12-31");
    const auto raw = rmt::sample_returns(equicorrelation(10, 0.3), Eigen::VectorXd::Constant(10, 0.01), 5, dates, 4);
    SlidingOptions o;
    o.window = 500;
    o.step = 500;  // disjoint windows keep the slope test honest
    const auto points = sliding_analysis(raw, local_normalize(raw), o);
    REQUIRE(points.size() >= 10);
    std::vector<double> N;
    for (const auto& p : points) N.push_back(p.N);
    auto sorted = N;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[(sorted.size() - 1) / 2] + sorted[sorted.size() / 2]);
    CHECK(median == doctest::Approx(5.0).epsilon(0.2));

    // OLS slope of N over window index with a 95% t interval.
    const double n = static_cast<double>(N.size());
    double mx = (n - 1) / 2, my = 0.0;
    for (double v : N) my += v / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < N.size(); ++i) {
        sxy += (static_cast<double>(i) - mx) * (N[i] - my);
        sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
    }
    const double slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < N.size(); ++i) {
        const double e = N[i] - my - slope * (static_cast<double>(i) - mx);
        sse += e * e;
    }
    const double se = std::sqrt(sse / (n - 2) / sxx);
    const double t975 = N.size() == 10 ? 2.306 : 2.2;  // df = 8 for 10 windows
    MESSAGE("slope " << slope << " +- " << t975 * se);
    CHECK(std::abs(slope) <= t975 * se);
}

TEST_CASE("sliding rejects mismatched inputs") {
    const auto raw = testing::gaussian_panel(3, testing::weekdays("2000-01-03", "2000-12-29"), 1, false);
    auto normalized = local_normalize(raw);
    SlidingOptions o;
    o.window = 500;
    CHECK_THROWS_AS(sliding_analysis(raw, normalized, o), ValidationError);
    o.window = 50;
    auto shifted = normalized;
    for (auto& d : shifted.dates) d += std::chrono::days{1000};
    CHECK_THROWS_AS(sliding_analysis(raw, shifted, o), ValidationError);
}

TEST_CASE("a failing window is kept and marked invalid") {
    auto raw = testing::gaussian_panel(4, testing::weekdays("2000-01-03", "2000-12-29"), 1, false);
    // Make one series constant over the first 60 columns.
    raw.returns.row(2).head(60).setConstant(0.0);
    const auto normalized = local_normalize(raw);
    SlidingOptions o;
    o.window = 40;
    o.step = 40;
    const auto points = sliding_analysis(raw, normalized, o);
    CHECK_FALSE(points.front().valid);
    CHECK_FALSE(points.front().error.empty());
    CHECK(points.back().valid);
}

TEST_CASE("regime assignment") {
    std::vector<RegimePoint> pts{point_at("1992-01-01"), point_at("1996-10-01"), point_at("2000-01-01"),
                                 point_at("2007-01-01"), point_at("2010-01-01")};
    assign_regimes(pts, {});
    for (const auto& p : pts) CHECK(p.regime == 1);
    assign_regimes(pts, {parse_date("2000-01-01")});
    CHECK(pts[1].regime == 1);
    CHECK(pts[2].regime == 2);
    assign_regimes(pts, default_regime_boundaries());
    CHECK(pts[0].regime == 1);
    CHECK(pts[1].regime == 2);
    CHECK(pts[2].regime == 2);
    CHECK(pts[3].regime == 3);
    CHECK(pts[4].regime == 4);
    CHECK_THROWS_AS(assign_regimes(pts, {parse_date("2001-01-01"), parse_date("2000-01-01")}), ValidationError);
    CHECK_THROWS_AS(assign_regimes(pts, {parse_date("2001-01-01"), parse_date("2001-01-01")}), ValidationError);
}

TEST_CASE("Spearman rank correlation") {
    const std::vector<double> x{3, 1, 4, 1.5, 9, 2.6};
    CHECK(spearman(x, x).rho == doctest::Approx(1.0));
    std::vector<double> neg;
    for (double v : x) neg.push_back(-2 * v);
    CHECK(spearman(x, neg).rho == doctest::Approx(-1.0));
    const auto flat = spearman(x, std::vector<double>(6, 2.0));
    CHECK_FALSE(flat.defined);
    CHECK(flat.rho == 0.0);
    // Ties use average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
    CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}).rho ==
          doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
}

TEST_CASE("scatter export") {
    testing::TempDir dir("sliding");
    std::vector<RegimePoint> pts;
    for (int i = 0; i < 5; ++i) {
        auto p = point_at("2000-01-01");
        p.N = 10.0 - i;
        p.c = 0.1 * i;
        p.sigma = 0.01;
        p.regime = 1;
        pts.push_back(p);
    }
    pts[4].valid = false;
    const auto rho = scatter_export(dir / "s.csv", pts, PointField::c, PointField::N, {"m"});
    CHECK(rho.rho == doctest::Approx(-1.0));
    const auto text = testing::read_text(dir / "s.csv");
    CHECK(text.find("c,N,regime") != std::string::npos);
    CHECK(text.find("spearman=") != std::string::npos);
    CHECK_FALSE(scatter_export(dir / "t.csv", pts, PointField::sigma, PointField::N, {}).defined);
    pts[1].valid = pts[2].valid = false;
    CHECK_THROWS_AS(scatter_export(dir / "u.csv", pts, PointField::c, PointField::N, {}), ValidationError);
}
