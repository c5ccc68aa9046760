#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; tests check
// that the two agree and the benchmark binary times them side by side.

#include <span>

#include <Eigen/Core>

namespace mstates::kernels {

/// Distance between two points of a correlation-matrix embedding (the upper
/// triangle of a K x K matrix laid out as a vector of length K(K-1)/2).
enum class Metric {
    MeanAbsolute,  // mean |a_i - b_i|
    Frobenius,     // ||A - B||_F / K of the full symmetric matrices
};

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Chunk size for the parallel likelihood sum. Partial sums are formed per
/// fixed chunk and combined in order, so the result does not depend on the
/// number of threads.
inline constexpr std::size_t kSumChunk = 4096;

namespace serial {

/// Sum over `values` of log pdf_univariate(value, N), compensated summation.
double log_likelihood(std::span<const double> values, double N);

/// Pairwise distances between the rows of `points`.
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& points, Metric metric);

/// Pearson correlation between the rows of `x` (K series x T samples).
Eigen::MatrixXd correlation(const Eigen::MatrixXd& x);

}  // namespace serial

namespace parallel {

double log_likelihood(std::span<const double> values, double N);
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& points, Metric metric);
Eigen::MatrixXd correlation(const Eigen::MatrixXd& x);

}  // namespace parallel

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

}  // namespace mstates::kernels
