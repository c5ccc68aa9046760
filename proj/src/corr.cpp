#include "mstates/corr.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "mstates/errors.hpp"
#include "mstates/io.hpp"

namespace mstates {

void check_correlation_invariants(const CorrelationMatrix& c) {
    const auto& m = c.entries;
    if (m.rows() != m.cols()) throw NumericalError("correlation matrix is not square");
    if (static_cast<std::size_t>(m.rows()) != c.labels.size()) {
        throw NumericalError("correlation matrix size does not match its labels");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (std::abs(m(i, i) - 1.0) > 1e-12) throw NumericalError("correlation diagonal differs from 1");
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != m(j, i)) throw NumericalError("correlation matrix is not symmetric");
            if (std::abs(m(i, j)) > 1.0) throw NumericalError("correlation entry outside [-1, 1]");
        }
    }
    if (m.rows() > 0) {
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
        if (lo < -1e-10) throw NumericalError("correlation matrix is not positive semi-definite");
    }
}

CorrelationMatrix pearson(const ReturnPanel& returns) {
    CorrelationMatrix c;
    c.labels = returns.tickers;
    if (returns.num_dates() < 2) throw ValidationError("pearson: window holds fewer than 2 observations");
    c.window = {returns.dates.front(), returns.dates.back()};
    try {
        c.entries = kernels::parallel::correlation(returns.returns);
    } catch (const NumericalError& e) {
        // Name the offending ticker instead of its row index.
        for (Eigen::Index k = 0; k < returns.returns.rows(); ++k) {
            const auto row = returns.returns.row(k);
            if ((row.array() - row.mean()).matrix().norm() == 0.0) {
                throw NumericalError("pearson: zero variance for " + returns.tickers[static_cast<std::size_t>(k)] +
                                     " in " + format_date(c.window.first) + ".." + format_date(c.window.last));
            }
        }
        throw;
    }
    return c;
}

CorrelationMatrix pearson(const ReturnPanel& returns, const DateInterval& window) {
    auto c = pearson(returns.slice(window));
    c.window = window;
    return c;
}

EpochSeries epoch_correlations(const ReturnPanel& returns, const EpochOptions& options) {
    if (returns.num_dates() == 0) throw ValidationError("epoch_correlations: empty panel");
    if (!returns.normalized) spdlog::warn("epoch_correlations: input returns are not locally normalized");

    const int first_block = bimonth_index(returns.dates.front());
    int last_block = bimonth_index(returns.dates.back());
    if (returns.dates.back() + std::chrono::days{options.trailing_slack_days} < bimonth_last_day(last_block)) {
        --last_block;  // trailing partial epoch
    }

    EpochSeries series;
    for (int b = first_block; b <= last_block; ++b) {
        const DateInterval epoch{bimonth_first_day(b), bimonth_last_day(b)};
        const auto slice = returns.slice(epoch);
        if (static_cast<int>(slice.num_dates()) < options.min_observations) {
            spdlog::warn("skipping epoch {}..{}: {} observations (< {})", format_date(epoch.first),
                         format_date(epoch.last), slice.num_dates(), options.min_observations);
            continue;
        }
        auto c = pearson(slice);
        c.window = epoch;
        series.epochs.push_back(epoch);
        series.matrices.push_back(std::move(c));
    }
    if (series.epochs.empty()) throw ValidationError("epoch_correlations: no complete epoch in the panel");
    return series;
}

Eigen::VectorXd upper_triangle(const CorrelationMatrix& c) {
    const Eigen::Index K = c.size();
    Eigen::VectorXd v(K * (K - 1) / 2);
    Eigen::Index i = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k + 1; l < K; ++l) v(i++) = c.entries(k, l);
    }
    return v;
}

double corr_distance(const CorrelationMatrix& a, const CorrelationMatrix& b, kernels::Metric metric) {
    if (a.labels != b.labels) throw ValidationError("corr_distance: label mismatch");
    const Eigen::VectorXd ua = upper_triangle(a);
    const Eigen::VectorXd ub = upper_triangle(b);
    return kernels::distance({ua.data(), static_cast<std::size_t>(ua.size())},
                             {ub.data(), static_cast<std::size_t>(ub.size())}, metric);
}

CorrelationMatrix average_matrix(const std::vector<CorrelationMatrix>& matrices) {
    if (matrices.empty()) throw ValidationError("average_matrix: empty list");
    CorrelationMatrix avg;
    avg.labels = matrices.front().labels;
    avg.entries = Eigen::MatrixXd::Zero(matrices.front().size(), matrices.front().size());
    avg.window = {matrices.front().window.first, matrices.front().window.last};
    for (const auto& m : matrices) {
        if (m.labels != avg.labels) throw ValidationError("average_matrix: inconsistent labels");
        avg.entries += m.entries;
        avg.window.first = std::min(avg.window.first, m.window.first);
        avg.window.last = std::max(avg.window.last, m.window.last);
    }
    avg.entries /= static_cast<double>(matrices.size());
    avg.entries.diagonal().setOnes();
    return avg;
}

double mean_off_diagonal(const CorrelationMatrix& c) {
    const Eigen::Index K = c.size();
    if (K < 2) throw ValidationError("mean_off_diagonal: need K >= 2");
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k + 1; l < K; ++l) s += c.entries(k, l);
    }
    return s / (0.5 * static_cast<double>(K) * static_cast<double>(K - 1));
}

void write_matrix_csv(const std::filesystem::path& path, const CorrelationMatrix& c,
                      const std::vector<std::string>& metadata) {
    auto meta = metadata;
    meta.push_back("window=" + format_date(c.window.first) + ".." + format_date(c.window.last));
    auto out = io::open_with_metadata(path, meta);
    out << "ticker";
    for (const auto& l : c.labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        out << c.labels[static_cast<std::size_t>(k)];
        for (Eigen::Index l = 0; l < c.size(); ++l) out << ',' << io::format_double(c.entries(k, l));
        out << '\n';
    }
}

void write_epoch_series(const std::filesystem::path& dir, const EpochSeries& series,
                        const std::vector<std::string>& metadata) {
    auto index = io::open_with_metadata(dir / "index.csv", metadata);
    index << "epoch_start,epoch_end,file\n";
    for (std::size_t i = 0; i < series.epochs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%03zu.csv", i);
        index << format_date(series.epochs[i].first) << ',' << format_date(series.epochs[i].last) << ','
              << name << '\n';
        write_matrix_csv(dir / name, series.matrices[i], metadata);
    }
}

}  // namespace mstates
