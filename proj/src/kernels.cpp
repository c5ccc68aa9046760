#include "mstates/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mstates/errors.hpp"
#include "mstates/rmt.hpp"

namespace mstates::kernels {

double compensated_sum(std::span<const double> values) {
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

namespace {

double mean_absolute(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

double frobenius(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    // p = K(K-1)/2 off-diagonal pairs, each appearing twice in the full matrix.
    const double K = 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(a.size())));
    return std::sqrt(2.0 * s) / K;
}

std::span<const double> row_span(const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& m,
                                 Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows of x centred and scaled to unit norm; throws on a constant row.
RowMajor standardized_rows(const Eigen::MatrixXd& x) {
    if (x.cols() < 2) throw ValidationError("correlation needs at least 2 observations");
    RowMajor z = x;
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        auto row = z.row(k);
        row.array() -= row.mean();
        const double norm = row.norm();
        if (!(norm > 0.0)) {
            throw NumericalError("zero variance in series " + std::to_string(k));
        }
        row /= norm;
    }
    return z;
}

// Rounding can push |c| slightly past 1; anything larger is a bug upstream.
double clamp_unit(double v) {
    if (std::abs(v) > 1.0 + 1e-12) throw NumericalError("correlation " + std::to_string(v) + " outside [-1, 1]");
    return v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v);
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size()) throw ValidationError("distance: dimension mismatch");
    if (a.empty()) return 0.0;
    return metric == Metric::MeanAbsolute ? mean_absolute(a, b) : frobenius(a, b);
}

namespace serial {

double log_likelihood(std::span<const double> values, double N) {
    const rmt::UnivariateDensity density(N);
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double x = density.log_pdf(v);
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& points, Metric metric) {
    const RowMajor p = points;
    const Eigen::Index n = p.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = distance(row_span(p, i), row_span(p, j), metric);
        }
    }
    return d;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& x) {
    const RowMajor z = standardized_rows(x);
    const Eigen::Index K = z.rows(), T = z.cols();
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(K, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k + 1; l < K; ++l) {
            double s = 0.0;
            for (Eigen::Index t = 0; t < T; ++t) s += z(k, t) * z(l, t);
            c(k, l) = c(l, k) = clamp_unit(s);
        }
    }
    return c;
}

}  // namespace serial

namespace parallel {

double log_likelihood(std::span<const double> values, double N) {
    const rmt::UnivariateDensity density(N);
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    const std::ptrdiff_t chunks = (n + static_cast<std::ptrdiff_t>(kSumChunk) - 1) / static_cast<std::ptrdiff_t>(kSumChunk);
    std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
        const std::ptrdiff_t begin = c * static_cast<std::ptrdiff_t>(kSumChunk);
        const std::ptrdiff_t end = std::min(n, begin + static_cast<std::ptrdiff_t>(kSumChunk));
        double sum = 0.0, comp = 0.0;
        for (std::ptrdiff_t i = begin; i < end; ++i) {
            const double x = density.log_pdf(values[static_cast<std::size_t>(i)]);
            const double t = sum + x;
            comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
            sum = t;
        }
        partial[static_cast<std::size_t>(c)] = sum + comp;
    }
    return compensated_sum(partial);
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& points, Metric metric) {
    const RowMajor p = points;
    const Eigen::Index n = p.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 4)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = distance(row_span(p, i), row_span(p, j), metric);
        }
    }
    d.triangularView<Eigen::StrictlyLower>() = d.transpose();
    return d;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& x) {
    const RowMajor z = standardized_rows(x);
    const Eigen::Index K = z.rows(), T = z.cols();
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(K, K);
#pragma omp parallel for schedule(dynamic, 4)
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k + 1; l < K; ++l) {
            double s = 0.0;
            for (Eigen::Index t = 0; t < T; ++t) s += z(k, t) * z(l, t);
            c(k, l) = s;
        }
    }
    // Clamp outside the parallel region; clamp_unit may throw.
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k + 1; l < K; ++l) c(k, l) = clamp_unit(c(k, l));
    }
    c.triangularView<Eigen::StrictlyLower>() = c.transpose();
    return c;
}

}  // namespace parallel

}  // namespace mstates::kernels
