#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mstates/corr.hpp"
#include "mstates/ingest.hpp"

namespace mstates {

/// Planted market: a sequence of two-month epochs, each in one of k states.
/// State s has its own block correlation matrix and fluctuation strength N_s.
struct SynthConfig {
    int tickers = 100;
    int years = 10;
    /// The first two-month block is too short after local normalization and
    /// is skipped, so every retained epoch is complete.
    Date start = parse_date("1999-12-01");
    /// Planted N per state; its length fixes the number of states.
    std::vector<int> state_N{20, 8, 4};
    /// Probability that an epoch leaves the state dominating its phase.
    double switch_probability = 0.15;
    std::uint64_t seed = 1;
};

struct PlantedState {
    int N = 0;
    double base_correlation = 0.0;
    double block_correlation = 0.0;
    std::vector<std::string> block_sectors;
    CorrelationMatrix correlation;
};

struct SyntheticMarket {
    PricePanel prices;
    std::vector<DateInterval> epochs;
    std::vector<int> labels;  // 1-based, one per epoch
    std::vector<PlantedState> states;
};

/// Correlation matrix of a planted state: `base` between all pairs plus
/// `block` between pairs sharing one of `block_sectors`.
Eigen::MatrixXd block_correlation(const std::vector<std::string>& sectors_by_ticker, double base, double block,
                                  const std::vector<std::string>& block_sectors);

SyntheticMarket generate_market(const SynthConfig& config);

/// prices.csv, sectors.csv and truth.json in `dir`.
void write_market(const std::filesystem::path& dir, const SyntheticMarket& market,
                  const std::vector<std::string>& metadata);

}  // namespace mstates
