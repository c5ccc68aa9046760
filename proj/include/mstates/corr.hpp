#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mstates/date.hpp"
#include "mstates/ingest.hpp"
#include "mstates/kernels.hpp"

namespace mstates {

/// Symmetric K x K correlation matrix with unit diagonal.
struct CorrelationMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd entries;
    DateInterval window{};

    Eigen::Index size() const { return entries.rows(); }
};

/// Throws NumericalError unless `c` is symmetric, has unit diagonal (1e-12),
/// entries within [-1, 1] and no eigenvalue below -1e-10.
void check_correlation_invariants(const CorrelationMatrix& c);

struct EpochSeries {
    std::vector<DateInterval> epochs;
    std::vector<CorrelationMatrix> matrices;
};

/// Pearson correlation of all ticker pairs over the columns of `returns`
/// falling inside `window`.
CorrelationMatrix pearson(const ReturnPanel& returns, const DateInterval& window);

/// Same, using every column of `returns`.
CorrelationMatrix pearson(const ReturnPanel& returns);

struct EpochOptions {
    /// Epochs with fewer observations are skipped with a warning.
    int min_observations = 20;
    /// A trailing two-month block counts as complete when the panel reaches
    /// within this many days of the block's last calendar day.
    int trailing_slack_days = 6;
};

/// One correlation matrix per disjoint two-calendar-month block (Jan-Feb,
/// Mar-Apr, ...). A trailing partial block is dropped.
EpochSeries epoch_correlations(const ReturnPanel& returns, const EpochOptions& options = {});

/// Upper triangle (k < l, row-major) as a vector of length K(K-1)/2.
Eigen::VectorXd upper_triangle(const CorrelationMatrix& c);

double corr_distance(const CorrelationMatrix& a, const CorrelationMatrix& b,
                     kernels::Metric metric = kernels::Metric::MeanAbsolute);

/// Element-wise mean; diagonal set to exactly 1.
CorrelationMatrix average_matrix(const std::vector<CorrelationMatrix>& matrices);

/// Average correlation c: mean of the off-diagonal entries.
double mean_off_diagonal(const CorrelationMatrix& c);

void write_matrix_csv(const std::filesystem::path& path, const CorrelationMatrix& c,
                      const std::vector<std::string>& metadata);

/// Writes `<dir>/index.csv` (epoch_start,epoch_end,file) and one matrix file
/// per epoch.
void write_epoch_series(const std::filesystem::path& dir, const EpochSeries& series,
                        const std::vector<std::string>& metadata);

}  // namespace mstates
