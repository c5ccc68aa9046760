#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mstates/errors.hpp"
#include "mstates/pipeline.hpp"

namespace {

using mstates::RunConfig;

std::optional<mstates::Date> optional_date(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return mstates::parse_date(s);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct RawOptions {
    std::string date_from, date_to, split_date, regimes, metric = "mean_abs", synth_N = "20,8,4";
    int k = 0;
};

void add_options(CLI::App& app, RunConfig& c, RawOptions& raw) {
    app.add_option("--prices", c.prices, "Price CSV (date,ticker,close)");
    app.add_option("--sectors", c.sectors, "Sector CSV (ticker,sector)");
    app.add_option("--out", c.out, "Output directory");
    app.add_option("--date-from", raw.date_from, "First date kept (YYYY-MM-DD)");
    app.add_option("--date-to", raw.date_to, "Last date kept (YYYY-MM-DD)");
    app.add_option("--return-interval", c.return_interval, "Return interval in trading days");
    app.add_option("--local-window-n", c.local_window_n, "Local normalization window");
    app.add_option("--min-epoch-observations", c.min_epoch_observations, "Minimum returns per epoch");
    app.add_option("--kmax", c.kmax, "Largest k tried by the gap statistic");
    app.add_option("--B", c.B, "Gap statistic reference sets");
    app.add_option("--seed", c.seed, "Random seed");
    app.add_option("--k", raw.k, "Explicit number of states (skips the gap statistic)");
    app.add_option("--metric", raw.metric, "Epoch distance: mean_abs or frobenius")
        ->check(CLI::IsMember({"mean_abs", "frobenius"}));
    app.add_option("--jump-window", c.jump_window, "Jump count window in epochs");
    app.add_option("--jump-step", c.jump_step, "Jump count step in epochs");
    app.add_option("--split-date", raw.split_date, "Histogram split date (default: midpoint)");
    app.add_option("--fit-N-min", c.fit_N_min, "Lower edge of the N bracket");
    app.add_option("--fit-N-max", c.fit_N_max, "Upper edge of the N bracket");
    app.add_option("--fit-tol", c.fit_tol, "Relative tolerance of the N search");
    app.add_option("--hist-bins", c.hist_bins, "Histogram bins");
    app.add_option("--sliding-window", c.sliding_window, "Sliding window in trading days");
    app.add_option("--sliding-step", c.sliding_step, "Sliding step in trading days");
    app.add_option("--regimes", raw.regimes, "Comma-separated regime boundary dates");
    app.add_option("--synth-tickers", c.synth_tickers, "Synthetic market size");
    app.add_option("--synth-years", c.synth_years, "Synthetic market length in years");
    app.add_option("--synth-N", raw.synth_N, "Comma-separated planted N, one per state");
    app.add_option("--synth-switch-probability", c.synth_switch_probability, "Chance of a state switch per phase");
}

void finish(RunConfig& c, const RawOptions& raw) {
    c.date_from = optional_date(raw.date_from);
    c.date_to = optional_date(raw.date_to);
    c.split_date = optional_date(raw.split_date);
    if (raw.k > 0) c.k = raw.k;
    c.metric = raw.metric == "frobenius" ? mstates::kernels::Metric::Frobenius : mstates::kernels::Metric::MeanAbsolute;
    if (!raw.regimes.empty()) {
        std::vector<mstates::Date> dates;
        for (const auto& s : split_list(raw.regimes)) dates.push_back(mstates::parse_date(s));
        c.regime_boundaries = dates;
    }
    c.synth_N.clear();
    for (const auto& s : split_list(raw.synth_N)) {
        try {
            c.synth_N.push_back(std::stoi(s));
        } catch (const std::exception&) {
            throw mstates::ValidationError("--synth-N: '" + s + "' is not an integer");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market states from epoch correlation matrices"};
    app.set_version_flag("--version", std::string(MSTATES_VERSION));
    app.set_config("--config", "", "key=value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig config;
    RawOptions raw;
    bool verbose = false;
    add_options(app, config, raw);
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    using Command = mstates::CommandReport (*)(const RunConfig&);
    const std::pair<const char*, Command> commands[] = {
        {"ingest", mstates::cmd_ingest}, {"states", mstates::cmd_states}, {"fit", mstates::cmd_fit},
        {"sliding", mstates::cmd_sliding}, {"synth", mstates::cmd_synth}};
    const char* help[] = {"Prices to raw and normalized returns", "Epoch matrices, clustering and state dynamics",
                          "Fluctuation strength N per state", "Sliding-window N, c and sigma",
                          "Synthetic market with planted states"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(commands); ++i) subs.push_back(app.add_subcommand(commands[i].first, help[i]));

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        finish(config, raw);
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const auto report = commands[i].second(config);
            for (const auto& n : report.notes) std::cout << n << '\n';
            if (!report.failures.empty()) {
                for (const auto& f : report.failures) std::cerr << "failed: " << f << '\n';
                return 2;
            }
        }
    } catch (const mstates::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const mstates::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
