#include <doctest.h>

#include <random>
#include <vector>

#include "mstates/kernels.hpp"
#include "mstates/rmt.hpp"

using namespace mstates;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

}  // namespace

TEST_CASE("distance metrics on hand vectors") {
    const std::vector<double> a{0.0, 0.0, 0.0}, b{0.3, -0.3, 0.6};
    CHECK(kernels::distance(a, b, kernels::Metric::MeanAbsolute) == doctest::Approx(0.4));
    // K = 3 for 3 upper-triangle entries: sqrt(2 * 0.54) / 3.
    CHECK(kernels::distance(a, b, kernels::Metric::Frobenius) == doctest::Approx(std::sqrt(1.08) / 3.0));
}

TEST_CASE("compensated sum keeps small terms") {
    std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(kernels::compensated_sum(v) == 2.0);
}

TEST_CASE("serial and parallel likelihood agree exactly") {
    std::mt19937_64 rng(1);
    std::student_t_distribution<double> t(4.0);
    for (std::size_t n : {std::size_t{10}, kernels::kSumChunk, 3 * kernels::kSumChunk + 17}) {
        std::vector<double> v(n);
        for (auto& x : v) x = t(rng);
        for (double N : {0.8, 3.0, 40.0}) {
            CHECK(kernels::serial::log_likelihood(v, N) == kernels::parallel::log_likelihood(v, N));
        }
    }
    CHECK(kernels::serial::log_likelihood(std::vector<double>{}, 3.0) == 0.0);
}

TEST_CASE("likelihood is the sum of log densities") {
    const std::vector<double> v{-2.0, 0.0, 0.5, 3.0};
    double expected = 0.0;
    for (double x : v) expected += rmt::log_pdf_univariate(x, 4.5);
    CHECK(kernels::serial::log_likelihood(v, 4.5) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("serial and parallel distance matrices agree") {
    const auto pts = random_matrix(40, 300, 2);
    for (auto metric : {kernels::Metric::MeanAbsolute, kernels::Metric::Frobenius}) {
        const auto s = kernels::serial::distance_matrix(pts, metric);
        const auto p = kernels::parallel::distance_matrix(pts, metric);
        CHECK(s == p);
        CHECK(s.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(s == s.transpose());
        Eigen::VectorXd a = pts.row(3).transpose(), b = pts.row(7).transpose();
        CHECK(s(3, 7) == doctest::Approx(kernels::distance({a.data(), 300}, {b.data(), 300}, metric)));
    }
}

TEST_CASE("serial and parallel correlation agree and match the textbook formula") {
    const auto x = random_matrix(12, 200, 3);
    const auto s = kernels::serial::correlation(x);
    const auto p = kernels::parallel::correlation(x);
    CHECK((s - p).cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::MatrixXd c = x.colwise() - x.rowwise().mean();
    const Eigen::MatrixXd cov = c * c.transpose() / 200.0;
    const Eigen::VectorXd inv = cov.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd ref = inv.asDiagonal() * cov * inv.asDiagonal();
    CHECK((s - ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(s == s.transpose());
    CHECK(s.diagonal() == Eigen::VectorXd::Ones(12));
}
