#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mstates/corr.hpp"
#include "mstates/ingest.hpp"

namespace mstates {

/// Market states: one label per epoch, states numbered 1..k in order of
/// first appearance.
struct StateModel {
    std::vector<int> labels;
    std::vector<DateInterval> epochs;
    int k = 0;
    /// Epoch index of each state's medoid.
    std::vector<std::size_t> medoid_epochs;
    std::vector<CorrelationMatrix> state_avg_matrices;
    std::vector<double> state_avg_corr;

    std::size_t num_epochs() const { return labels.size(); }
};

/// Checks labels in 1..k, every state non-empty, c consistent with matrices.
void check_state_model(const StateModel& model);

/// Label changes between adjacent epochs inside each sliding window of
/// `window_epochs`, advancing by `step_epochs`.
std::vector<int> jump_counts(std::span<const int> labels, int window_epochs = 6, int step_epochs = 1);

struct StateRun {
    std::size_t first_epoch = 0;
    std::size_t length = 0;
    int state = 0;
    int months = 0;
};

/// Maximal runs of a single label; each epoch spans two months. Runs touching
/// either end of the series are not censored.
std::vector<StateRun> state_runs(std::span<const int> labels);

/// Durations of `state_runs` in months.
std::vector<int> lifetimes(std::span<const int> labels);

/// Unit-width integer histogram: counts[v] = number of values equal to v.
struct IntHistogram {
    std::vector<int> counts;
    int total() const;
};

struct SplitHistogram {
    IntHistogram first_half;
    IntHistogram second_half;
};

/// Splits (value, date) pairs at `split` (dates before go to the first half)
/// and bins each half. Throws ValidationError if a half is empty.
SplitHistogram split_histogram(std::span<const int> values, std::span<const Date> dates, Date split);

/// Jumps per window, binned by whether the window starts before `split`.
SplitHistogram jump_histogram(const StateModel& model, std::span<const int> jumps, int step_epochs,
                              Date split);

/// Lifetimes binned by whether the run starts before `split`.
SplitHistogram lifetime_histogram(const StateModel& model, Date split);

/// Midpoint of the epoch-covered span.
Date default_split_date(const StateModel& model);

/// Return columns of all epochs labelled `state`, concatenated in time order.
ReturnPanel state_returns(const ReturnPanel& returns, const StateModel& model, int state);

void write_state_model_json(const std::filesystem::path& path, const StateModel& model,
                            const std::vector<std::string>& metadata);
/// Reads labels, epochs, k, medoids and c values (matrices are not stored).
StateModel read_state_model_json(const std::filesystem::path& path);

/// (sector, first index, last index) for consecutive runs of the same sector
/// in `tickers` order.
struct SectorBlock {
    std::string sector;
    std::size_t first = 0;
    std::size_t last = 0;
};
std::vector<SectorBlock> sector_blocks(const std::vector<std::string>& tickers,
                                       const std::map<std::string, std::string>& sectors);

}  // namespace mstates
