#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mstates/date.hpp"
#include "mstates/kernels.hpp"

namespace mstates {

/// Every tunable of the command pipeline. Paths are not part of the run
/// identity: only input file names enter the metadata, so a pipeline moved
/// to another directory reproduces byte-identical outputs.
struct RunConfig {
    std::filesystem::path prices = "prices.csv";
    std::filesystem::path sectors = "sectors.csv";
    std::filesystem::path out = "out";
    std::optional<Date> date_from;
    std::optional<Date> date_to;

    int return_interval = 1;
    int local_window_n = 13;
    int min_epoch_observations = 20;

    int kmax = 10;
    int B = 50;
    std::uint64_t seed = 1;
    std::optional<int> k;
    kernels::Metric metric = kernels::Metric::MeanAbsolute;

    int jump_window = 6;
    int jump_step = 1;
    std::optional<Date> split_date;

    double fit_N_min = 0.5;
    double fit_N_max = 500.0;
    double fit_tol = 1e-4;
    int hist_bins = 101;

    int sliding_window = 500;
    int sliding_step = 21;
    std::optional<std::vector<Date>> regime_boundaries;

    int synth_tickers = 100;
    int synth_years = 10;
    std::vector<int> synth_N{20, 8, 4};
    double synth_switch_probability = 0.15;

    /// Throws ValidationError for out-of-range parameters.
    void validate() const;
    /// key=value pairs joined by ';', stable across runs.
    std::string canonical() const;
    std::string hash() const;
    /// Lines for the metadata block at the head of every output file.
    std::vector<std::string> metadata() const;
};

/// Items that failed while the command carried on with the rest.
struct CommandReport {
    std::vector<std::string> failures;
    std::vector<std::string> notes;
};

/// prices + sectors -> returns_raw.csv, returns_normalized.csv, tickers.csv.
CommandReport cmd_ingest(const RunConfig& config);
/// returns_normalized.csv -> states.json, epochs/, gap.csv, jumps.csv,
/// lifetimes.csv, histograms, state_matrix_<s>.csv, sector_blocks.csv.
CommandReport cmd_states(const RunConfig& config);
/// returns_raw.csv + states.json -> fit_state_<s>.json, hist_state_<s>.csv,
/// fit_all.json, hist_all.csv, fits.csv.
CommandReport cmd_fit(const RunConfig& config);
/// returns_raw.csv + returns_normalized.csv -> sliding.csv and scatter files.
CommandReport cmd_sliding(const RunConfig& config);
/// Synthetic market with planted states -> prices.csv, sectors.csv, truth.json.
CommandReport cmd_synth(const RunConfig& config);

}  // namespace mstates
