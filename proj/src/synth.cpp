#include "mstates/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mstates/errors.hpp"
#include "mstates/io.hpp"
#include "mstates/random.hpp"
#include "mstates/rmt.hpp"

namespace mstates {

namespace {

const std::vector<std::string> kSynthSectors{"T", "F", "HC", "CG", "CS", "CN", "E", "BI", "PU", "TR"};

}  // namespace

Eigen::MatrixXd block_correlation(const std::vector<std::string>& sectors_by_ticker, double base, double block,
                                  const std::vector<std::string>& block_sectors) {
    const auto K = static_cast<Eigen::Index>(sectors_by_ticker.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(K, K, base);
    for (Eigen::Index i = 0; i < K; ++i) {
        const auto& si = sectors_by_ticker[static_cast<std::size_t>(i)];
        const bool in_block = std::find(block_sectors.begin(), block_sectors.end(), si) != block_sectors.end();
        for (Eigen::Index j = 0; j < K; ++j) {
            if (in_block && sectors_by_ticker[static_cast<std::size_t>(j)] == si) c(i, j) += block;
        }
        c(i, i) = 1.0;
    }
    return c;
}

SyntheticMarket generate_market(const SynthConfig& config) {
    const int k = static_cast<int>(config.state_N.size());
    if (config.tickers < 2) throw ValidationError("synth: need at least 2 tickers");
    if (config.years < 1) throw ValidationError("synth: years must be >= 1");
    if (k < 1) throw ValidationError("synth: need at least one planted state");
    for (int n : config.state_N) {
        if (n < 1) throw ValidationError("synth: planted N must be >= 1");
    }

    SyntheticMarket market;
    auto& prices = market.prices;
    const Date end = config.start + std::chrono::days{static_cast<int>(std::lround(365.25 * config.years))} -
                     std::chrono::days{3};
    prices.dates = weekdays_between(config.start, end);
    // Extend to the last day of the final two-month block so no epoch is partial.
    const Date block_end = bimonth_last_day(bimonth_index(prices.dates.back()));
    for (Date d : weekdays_between(prices.dates.back() + std::chrono::days{1}, block_end)) prices.dates.push_back(d);

    std::vector<std::string> sector_of;
    for (int i = 0; i < config.tickers; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "S%03d", i);
        const auto sector = kSynthSectors[static_cast<std::size_t>(i) * kSynthSectors.size() /
                                          static_cast<std::size_t>(config.tickers)];
        prices.tickers.emplace_back(name);
        prices.sectors[name] = sector;
        sector_of.push_back(sector);
    }

    // State s: base correlation rising with s, extra within-sector correlation
    // in every k-th sector starting at s-1.
    for (int s = 0; s < k; ++s) {
        PlantedState st;
        st.N = config.state_N[static_cast<std::size_t>(s)];
        st.base_correlation = k == 1 ? 0.1 : 0.05 + 0.30 * s / (k - 1);
        st.block_correlation = 0.35;
        for (std::size_t g = 0; g < kSynthSectors.size(); ++g) {
            if (static_cast<int>(g % static_cast<std::size_t>(k)) == s) st.block_sectors.push_back(kSynthSectors[g]);
        }
        st.correlation.labels = prices.tickers;
        st.correlation.entries = block_correlation(sector_of, st.base_correlation, st.block_correlation, st.block_sectors);
        market.states.push_back(std::move(st));
    }

    Rng rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd vols(config.tickers);
    for (int i = 0; i < config.tickers; ++i) vols(i) = 0.01 + 0.01 * unit(rng);

    // Epoch labels: the series is cut into k phases; phase p mostly sits in
    // state p + 1 and occasionally visits a neighbouring state.
    const int first_block = bimonth_index(prices.dates[1]);
    const int last_block = bimonth_index(prices.dates.back());
    const int n_epochs = last_block - first_block + 1;
    for (int e = 0; e < n_epochs; ++e) {
        const int phase = std::min(k - 1, e * k / n_epochs);
        int label = phase + 1;
        if (k > 1 && unit(rng) < config.switch_probability) {
            if (phase == 0) {
                label = 2;
            } else if (phase == k - 1) {
                label = k - 1;
            } else {
                label = unit(rng) < 0.5 ? phase : phase + 2;
            }
        }
        market.epochs.push_back({bimonth_first_day(first_block + e), bimonth_last_day(first_block + e)});
        market.labels.push_back(label);
    }

    std::vector<Eigen::MatrixXd> chol;
    for (const auto& st : market.states) chol.push_back(rmt::cholesky_factor(st.correlation.entries));

    const auto T = static_cast<Eigen::Index>(prices.dates.size());
    prices.closes.resize(config.tickers, T);
    prices.closes.col(0).setConstant(100.0);
    for (Eigen::Index t = 1; t < T; ++t) {
        const int e = bimonth_index(prices.dates[static_cast<std::size_t>(t)]) - first_block;
        const auto s = static_cast<std::size_t>(market.labels[static_cast<std::size_t>(e)] - 1);
        const Eigen::VectorXd r = rmt::sample_return_matrix(chol[s], vols, market.states[s].N, 1, rng).col(0);
        if ((r.array() <= -0.95).any()) throw NumericalError("synth: return below -95%; lower the volatilities");
        prices.closes.col(t) = prices.closes.col(t - 1).cwiseProduct((1.0 + r.array()).matrix());
    }
    return market;
}

void write_market(const std::filesystem::path& dir, const SyntheticMarket& market,
                  const std::vector<std::string>& metadata) {
    const auto& p = market.prices;
    {
        auto out = io::open_with_metadata(dir / "prices.csv", metadata);
        out << "date,ticker,close\n";
        for (std::size_t t = 0; t < p.num_dates(); ++t) {
            const auto date = format_date(p.dates[t]);
            for (std::size_t k = 0; k < p.num_tickers(); ++k) {
                out << date << ',' << p.tickers[k] << ','
                    << io::format_double(p.closes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t))) << '\n';
            }
        }
    }
    {
        auto out = io::open_with_metadata(dir / "sectors.csv", metadata);
        out << "ticker,sector\n";
        for (const auto& t : p.tickers) out << t << ',' << p.sectors.at(t) << '\n';
    }
    nlohmann::ordered_json j;
    j["metadata"] = metadata;
    std::vector<nlohmann::ordered_json> epochs;
    for (std::size_t e = 0; e < market.epochs.size(); ++e) {
        epochs.push_back({{"start", format_date(market.epochs[e].first)},
                          {"end", format_date(market.epochs[e].last)},
                          {"state", market.labels[e]}});
    }
    j["epochs"] = epochs;
    std::vector<nlohmann::ordered_json> states;
    for (std::size_t s = 0; s < market.states.size(); ++s) {
        const auto& st = market.states[s];
        states.push_back({{"state", s + 1},
                          {"N", st.N},
                          {"c", mean_off_diagonal(st.correlation)},
                          {"base_correlation", st.base_correlation},
                          {"block_correlation", st.block_correlation},
                          {"block_sectors", st.block_sectors}});
    }
    j["states"] = states;
    auto out = io::open_with_metadata(dir / "truth.json", {});
    out << j.dump(2) << '\n';
}

}  // namespace mstates
