#include "mstates/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mstates/cluster.hpp"
#include "mstates/corr.hpp"
#include "mstates/errors.hpp"
#include "mstates/ingest.hpp"
#include "mstates/io.hpp"
#include "mstates/rmt.hpp"
#include "mstates/sliding.hpp"
#include "mstates/states.hpp"
#include "mstates/synth.hpp"

namespace mstates {

namespace {

template <typename T>
std::string join(const std::vector<T>& values, const char* sep) {
    std::ostringstream s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s << sep;
        if constexpr (std::is_same_v<T, Date>) {
            s << format_date(values[i]);
        } else {
            s << values[i];
        }
    }
    return s.str();
}

std::string opt_date(const std::optional<Date>& d) {
    return d ? format_date(*d) : "none";
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("invalid configuration: " + what);
}

void require_file(const std::filesystem::path& p, const std::string& hint) {
    if (!std::filesystem::exists(p)) throw ValidationError("missing input '" + p.string() + "'; " + hint);
}

rmt::FitOptions fit_options(const RunConfig& c) {
    rmt::FitOptions o;
    o.N_min = c.fit_N_min;
    o.N_max = c.fit_N_max;
    o.rel_tol = c.fit_tol;
    return o;
}

std::map<std::string, std::string> read_tickers(const std::filesystem::path& path) {
    std::map<std::string, std::string> sectors;
    for (const auto& row : io::read_csv(path).rows) {
        if (row.fields.size() == 2) sectors[row.fields[0]] = row.fields[1];
    }
    return sectors;
}

void write_split_histogram(const std::filesystem::path& path, const SplitHistogram& h, Date split,
                           const std::vector<std::string>& metadata) {
    auto meta = metadata;
    meta.push_back("split_date=" + format_date(split));
    auto out = io::open_with_metadata(path, meta);
    out << "value,first_half,second_half\n";
    const auto n = std::max(h.first_half.counts.size(), h.second_half.counts.size());
    for (std::size_t v = 0; v < n; ++v) {
        const int a = v < h.first_half.counts.size() ? h.first_half.counts[v] : 0;
        const int b = v < h.second_half.counts.size() ? h.second_half.counts[v] : 0;
        out << v << ',' << a << ',' << b << '\n';
    }
}

}  // namespace

void RunConfig::validate() const {
    require(return_interval >= 1, "return_interval >= 1");
    require(local_window_n >= 2, "local_window_n >= 2");
    require(min_epoch_observations >= 2, "min_epoch_observations >= 2");
    require(kmax >= 1, "kmax >= 1");
    require(B >= 1, "B >= 1");
    require(!k || *k >= 1, "k >= 1");
    require(jump_window >= 1 && jump_step >= 1, "jump window/step >= 1");
    require(fit_N_min > 0.0 && fit_N_max > fit_N_min, "0 < fit_N_min < fit_N_max");
    require(fit_tol > 0.0 && fit_tol < 1.0, "0 < fit_tol < 1");
    require(hist_bins >= 1, "hist_bins >= 1");
    require(sliding_window >= 2 && sliding_step >= 1, "sliding window >= 2, step >= 1");
    require(!date_from || !date_to || *date_from <= *date_to, "date_from <= date_to");
    require(synth_tickers >= 2, "synth_tickers >= 2");
    require(synth_years >= 1, "synth_years >= 1");
    require(!synth_N.empty(), "synth_N non-empty");
    for (int n : synth_N) require(n >= 1, "synth_N entries >= 1");
    require(synth_switch_probability >= 0.0 && synth_switch_probability <= 1.0, "synth_switch_probability in [0, 1]");
    if (regime_boundaries) {
        for (std::size_t i = 1; i < regime_boundaries->size(); ++i) {
            require((*regime_boundaries)[i - 1] < (*regime_boundaries)[i], "regime boundaries strictly increasing");
        }
    }
}

std::string RunConfig::canonical() const {
    std::ostringstream s;
    s << "prices=" << prices.filename().string() << ";sectors=" << sectors.filename().string()
      << ";date_from=" << opt_date(date_from) << ";date_to=" << opt_date(date_to)
      << ";return_interval=" << return_interval << ";local_window_n=" << local_window_n
      << ";min_epoch_observations=" << min_epoch_observations << ";kmax=" << kmax << ";B=" << B
      << ";seed=" << seed << ";k=" << (k ? std::to_string(*k) : "auto")
      << ";metric=" << (metric == kernels::Metric::MeanAbsolute ? "mean_abs" : "frobenius")
      << ";jump_window=" << jump_window << ";jump_step=" << jump_step << ";split_date=" << opt_date(split_date)
      << ";fit_N_min=" << io::format_double(fit_N_min) << ";fit_N_max=" << io::format_double(fit_N_max)
      << ";fit_tol=" << io::format_double(fit_tol) << ";hist_bins=" << hist_bins
      << ";sliding_window=" << sliding_window << ";sliding_step=" << sliding_step
      << ";regimes=" << (regime_boundaries ? join(*regime_boundaries, ",") : "auto")
      << ";synth_tickers=" << synth_tickers << ";synth_years=" << synth_years
      << ";synth_N=" << join(synth_N, ",") << ";synth_switch_probability=" << io::format_double(synth_switch_probability);
    return s.str();
}

std::string RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> RunConfig::metadata() const {
    return {std::string("mstates ") + MSTATES_VERSION, "config_hash=" + hash(), "seed=" + std::to_string(seed),
            "config=" + canonical()};
}

CommandReport cmd_ingest(const RunConfig& config) {
    config.validate();
    require_file(config.prices, "pass --prices <file> (header date,ticker,close)");
    require_file(config.sectors, "pass --sectors <file> (header ticker,sector)");
    std::optional<DateInterval> range;
    if (config.date_from || config.date_to) {
        range = DateInterval{config.date_from.value_or(Date::min()), config.date_to.value_or(Date::max())};
    }
    const auto panel = load_prices(config.prices, config.sectors, range);
    const auto raw = compute_returns(panel, config.return_interval);
    const auto normalized = local_normalize(raw, config.local_window_n);
    const auto meta = config.metadata();
    write_returns_csv(config.out / "returns_raw.csv", raw, meta);
    write_returns_csv(config.out / "returns_normalized.csv", normalized, meta);
    {
        auto out = io::open_with_metadata(config.out / "tickers.csv", meta);
        out << "ticker,sector\n";
        for (const auto& t : panel.tickers) out << t << ',' << panel.sectors.at(t) << '\n';
    }
    CommandReport report;
    report.notes.push_back(std::to_string(panel.num_tickers()) + " tickers x " + std::to_string(raw.num_dates()) +
                           " returns");
    if (normalized.degenerate_points > 0) {
        report.notes.push_back(std::to_string(normalized.degenerate_points) + " degenerate normalized point(s) set to 0");
    }
    return report;
}

CommandReport cmd_states(const RunConfig& config) {
    config.validate();
    const auto normalized_path = config.out / "returns_normalized.csv";
    require_file(normalized_path, "run 'mstates ingest' first");
    const auto normalized = read_returns_csv(normalized_path);
    const auto meta = config.metadata();

    EpochOptions epoch_options;
    epoch_options.min_observations = config.min_epoch_observations;
    const auto epochs = epoch_correlations(normalized, epoch_options);
    write_epoch_series(config.out / "epochs", epochs, meta);

    StateOptions options;
    options.k = config.k;
    options.gap.kmax = config.kmax;
    options.gap.B = config.B;
    options.gap.seed = config.seed;
    options.gap.metric = config.metric;
    const auto id = identify_states(epochs, options);
    const auto& model = id.model;
    write_state_model_json(config.out / "states.json", model, meta);

    if (id.gap) {
        auto out = io::open_with_metadata(config.out / "gap.csv", meta);
        out << "k,log_w,gap,s\n";
        for (std::size_t i = 0; i < id.gap->gap.size(); ++i) {
            out << i + 1 << ',' << io::format_double(id.gap->log_w[i]) << ',' << io::format_double(id.gap->gap[i])
                << ',' << io::format_double(id.gap->s[i]) << '\n';
        }
    }

    CommandReport report;
    report.notes.push_back(std::to_string(epochs.epochs.size()) + " epochs, k = " + std::to_string(model.k));

    if (static_cast<std::size_t>(config.jump_window) <= model.num_epochs()) {
        const auto jumps = jump_counts(model.labels, config.jump_window, config.jump_step);
        auto out = io::open_with_metadata(config.out / "jumps.csv", meta);
        out << "window_start,window_end,count\n";
        for (std::size_t w = 0; w < jumps.size(); ++w) {
            const auto first = w * static_cast<std::size_t>(config.jump_step);
            out << format_date(model.epochs[first].first) << ','
                << format_date(model.epochs[first + static_cast<std::size_t>(config.jump_window) - 1].last) << ','
                << jumps[w] << '\n';
        }
        const Date split = config.split_date.value_or(default_split_date(model));
        try {
            write_split_histogram(config.out / "jump_histogram.csv",
                                  jump_histogram(model, jumps, config.jump_step, split), split, meta);
        } catch (const ValidationError& e) {
            report.failures.push_back(std::string("jump histogram: ") + e.what());
        }
    } else {
        report.notes.push_back("fewer epochs than the jump window; jumps.csv not written");
    }

    {
        auto out = io::open_with_metadata(config.out / "lifetimes.csv", meta);
        out << "run_start,run_end,state,months\n";
        for (const auto& r : state_runs(model.labels)) {
            out << format_date(model.epochs[r.first_epoch].first) << ','
                << format_date(model.epochs[r.first_epoch + r.length - 1].last) << ',' << r.state << ',' << r.months
                << '\n';
        }
        out << "# lifetimes at either end of the series are not censored\n";
        const Date split = config.split_date.value_or(default_split_date(model));
        try {
            write_split_histogram(config.out / "lifetime_histogram.csv", lifetime_histogram(model, split), split, meta);
        } catch (const ValidationError& e) {
            report.failures.push_back(std::string("lifetime histogram: ") + e.what());
        }
    }

    for (int s = 1; s <= model.k; ++s) {
        write_matrix_csv(config.out / ("state_matrix_" + std::to_string(s) + ".csv"),
                         model.state_avg_matrices[static_cast<std::size_t>(s - 1)], meta);
    }
    write_matrix_csv(config.out / "average_matrix.csv", average_matrix(epochs.matrices), meta);

    const auto tickers_path = config.out / "tickers.csv";
    const auto sectors = std::filesystem::exists(tickers_path) ? read_tickers(tickers_path)
                                                               : std::map<std::string, std::string>{};
    auto out = io::open_with_metadata(config.out / "sector_blocks.csv", meta);
    out << "sector,first_index,last_index\n";
    for (const auto& b : sector_blocks(normalized.tickers, sectors)) {
        out << b.sector << ',' << b.first << ',' << b.last << '\n';
    }
    return report;
}

CommandReport cmd_fit(const RunConfig& config) {
    config.validate();
    const auto raw_path = config.out / "returns_raw.csv";
    const auto states_path = config.out / "states.json";
    require_file(raw_path, "run 'mstates ingest' first");
    require_file(states_path, "run 'mstates states' first");
    const auto raw = read_returns_csv(raw_path);
    const auto model = read_state_model_json(states_path);
    const auto meta = config.metadata();
    const auto options = fit_options(config);

    CommandReport report;
    auto summary = io::open_with_metadata(config.out / "fits.csv", meta);
    summary << "state,N,c,log_likelihood,sample_count,converged\n";
    for (int s = 1; s <= model.k; ++s) {
        try {
            const auto fit = rmt::fit_state(raw, model, s, options, config.hist_bins);
            const auto tag = std::to_string(s);
            rmt::write_fit_json(config.out / ("fit_state_" + tag + ".json"), fit.fit, meta);
            rmt::write_histogram_csv(config.out / ("hist_state_" + tag + ".csv"), fit.histogram, meta);
            const double c = static_cast<std::size_t>(s - 1) < model.state_avg_corr.size()
                                 ? model.state_avg_corr[static_cast<std::size_t>(s - 1)]
                                 : 0.0;
            summary << s << ',' << io::format_double(fit.fit.N) << ',' << io::format_double(c) << ','
                    << io::format_double(fit.fit.log_likelihood) << ',' << fit.fit.sample_count << ','
                    << (fit.fit.converged ? 1 : 0) << '\n';
        } catch (const std::exception& e) {
            report.failures.push_back("state " + std::to_string(s) + ": " + e.what());
        }
    }

    try {
        const DateInterval span{model.epochs.front().first, model.epochs.back().last};
        const auto covered = raw.slice(span);
        const auto fit = rmt::fit_panel(covered, options, config.hist_bins);
        rmt::write_fit_json(config.out / "fit_all.json", fit.fit, meta);
        rmt::write_histogram_csv(config.out / "hist_all.csv", fit.histogram, meta);
    } catch (const std::exception& e) {
        report.failures.push_back(std::string("whole period: ") + e.what());
    }
    return report;
}

CommandReport cmd_sliding(const RunConfig& config) {
    config.validate();
    const auto raw_path = config.out / "returns_raw.csv";
    const auto normalized_path = config.out / "returns_normalized.csv";
    require_file(raw_path, "run 'mstates ingest' first");
    require_file(normalized_path, "run 'mstates ingest' first");
    const auto raw = read_returns_csv(raw_path);
    const auto normalized = read_returns_csv(normalized_path);
    const auto meta = config.metadata();

    SlidingOptions options;
    options.window = config.sliding_window;
    options.step = config.sliding_step;
    options.fit = fit_options(config);
    auto points = sliding_analysis(raw, normalized, options);

    std::vector<Date> boundaries;
    if (config.regime_boundaries) {
        boundaries = *config.regime_boundaries;
    } else {
        const auto defaults = default_regime_boundaries();
        if (points.front().window.first <= defaults.front() && points.back().window.first >= defaults.back()) {
            boundaries = defaults;
        }
    }
    assign_regimes(points, boundaries);
    write_sliding_csv(config.out / "sliding.csv", points, meta);

    CommandReport report;
    nlohmann::ordered_json summary;
    summary["metadata"] = meta;
    summary["points"] = points.size();
    std::size_t invalid = 0;
    for (const auto& p : points) invalid += !p.valid;
    summary["invalid_points"] = invalid;
    summary["regime_boundaries"] = join(boundaries, ",");
    const std::pair<PointField, const char*> scatters[] = {{PointField::c, "scatter_c_N.csv"},
                                                          {PointField::sigma, "scatter_sigma_N.csv"}};
    for (const auto& [field, file] : scatters) {
        try {
            const auto rho = scatter_export(config.out / file, points, field, PointField::N, meta);
            summary["spearman_" + field_name(field) + "_N"] = rho.rho;
            summary["spearman_" + field_name(field) + "_N_defined"] = rho.defined;
        } catch (const ValidationError& e) {
            report.failures.push_back(std::string(file) + ": " + e.what());
        }
    }
    auto out = io::open_with_metadata(config.out / "sliding_summary.json", {});
    out << summary.dump(2) << '\n';
    if (invalid > 0) report.notes.push_back(std::to_string(invalid) + " invalid window(s) kept as gaps");
    return report;
}

CommandReport cmd_synth(const RunConfig& config) {
    config.validate();
    SynthConfig sc;
    sc.tickers = config.synth_tickers;
    sc.years = config.synth_years;
    sc.state_N = config.synth_N;
    sc.switch_probability = config.synth_switch_probability;
    sc.seed = config.seed;
    if (config.date_from) sc.start = *config.date_from;
    const auto market = generate_market(sc);
    write_market(config.out, market, config.metadata());
    CommandReport report;
    report.notes.push_back(std::to_string(market.prices.num_tickers()) + " tickers, " +
                           std::to_string(market.epochs.size()) + " epochs, " +
                           std::to_string(market.states.size()) + " planted states");
    return report;
}

}  // namespace mstates
