#include "mstates/states.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mstates/errors.hpp"
#include "mstates/io.hpp"

namespace mstates {

void check_state_model(const StateModel& model) {
    if (model.labels.size() != model.epochs.size()) throw ValidationError("state model: labels/epochs size mismatch");
    std::vector<int> count(static_cast<std::size_t>(model.k), 0);
    for (int l : model.labels) {
        if (l < 1 || l > model.k) throw ValidationError("state model: label " + std::to_string(l) + " outside 1..k");
        ++count[static_cast<std::size_t>(l - 1)];
    }
    if (std::find(count.begin(), count.end(), 0) != count.end()) throw ValidationError("state model: empty state");
    for (std::size_t s = 0; s < model.state_avg_matrices.size(); ++s) {
        if (std::abs(model.state_avg_corr[s] - mean_off_diagonal(model.state_avg_matrices[s])) > 1e-12) {
            throw ValidationError("state model: c inconsistent with the state's average matrix");
        }
    }
}

std::vector<int> jump_counts(std::span<const int> labels, int window_epochs, int step_epochs) {
    if (window_epochs < 1 || step_epochs < 1) throw ValidationError("jump_counts: window and step must be >= 1");
    if (static_cast<std::size_t>(window_epochs) > labels.size()) {
        throw ValidationError("jump_counts: window longer than the label series");
    }
    std::vector<int> out;
    for (std::size_t start = 0; start + static_cast<std::size_t>(window_epochs) <= labels.size();
         start += static_cast<std::size_t>(step_epochs)) {
        int jumps = 0;
        for (std::size_t i = start; i + 1 < start + static_cast<std::size_t>(window_epochs); ++i) {
            jumps += labels[i] != labels[i + 1];
        }
        out.push_back(jumps);
    }
    return out;
}

std::vector<StateRun> state_runs(std::span<const int> labels) {
    if (labels.empty()) throw ValidationError("lifetimes: empty label series");
    std::vector<StateRun> runs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (runs.empty() || labels[i] != runs.back().state) {
            runs.push_back({i, 0, labels[i], 0});
        }
        ++runs.back().length;
        runs.back().months += 2;
    }
    return runs;
}

std::vector<int> lifetimes(std::span<const int> labels) {
    std::vector<int> out;
    for (const auto& r : state_runs(labels)) out.push_back(r.months);
    return out;
}

int IntHistogram::total() const {
    int t = 0;
    for (int c : counts) t += c;
    return t;
}

SplitHistogram split_histogram(std::span<const int> values, std::span<const Date> dates, Date split) {
    if (values.size() != dates.size()) throw ValidationError("histogram: values/dates size mismatch");
    SplitHistogram h;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0) throw ValidationError("histogram: negative value");
        auto& half = dates[i] < split ? h.first_half : h.second_half;
        const auto v = static_cast<std::size_t>(values[i]);
        if (half.counts.size() <= v) half.counts.resize(v + 1, 0);
        ++half.counts[v];
    }
    if (h.first_half.total() == 0 || h.second_half.total() == 0) {
        throw ValidationError("histogram: split date " + format_date(split) + " leaves one half empty");
    }
    return h;
}

SplitHistogram jump_histogram(const StateModel& model, std::span<const int> jumps, int step_epochs, Date split) {
    std::vector<Date> starts;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        starts.push_back(model.epochs.at(i * static_cast<std::size_t>(step_epochs)).first);
    }
    return split_histogram(jumps, starts, split);
}

SplitHistogram lifetime_histogram(const StateModel& model, Date split) {
    std::vector<int> months;
    std::vector<Date> starts;
    for (const auto& r : state_runs(model.labels)) {
        months.push_back(r.months);
        starts.push_back(model.epochs.at(r.first_epoch).first);
    }
    return split_histogram(months, starts, split);
}

Date default_split_date(const StateModel& model) {
    if (model.epochs.empty()) throw ValidationError("state model has no epochs");
    const auto a = model.epochs.front().first;
    const auto b = model.epochs.back().last;
    return a + (b - a) / 2;
}

ReturnPanel state_returns(const ReturnPanel& returns, const StateModel& model, int state) {
    if (state < 1 || state > model.k) {
        throw ValidationError("state_returns: unknown state " + std::to_string(state));
    }
    std::vector<Eigen::Index> cols;
    for (std::size_t e = 0; e < model.epochs.size(); ++e) {
        if (model.labels[e] != state) continue;
        const auto& ep = model.epochs[e];
        auto lo = std::lower_bound(returns.dates.begin(), returns.dates.end(), ep.first);
        auto hi = std::upper_bound(returns.dates.begin(), returns.dates.end(), ep.last);
        for (auto it = lo; it < hi; ++it) cols.push_back(it - returns.dates.begin());
    }
    ReturnPanel out;
    out.tickers = returns.tickers;
    out.normalized = returns.normalized;
    out.local_window_n = returns.local_window_n;
    out.returns.resize(returns.returns.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out.returns.col(static_cast<Eigen::Index>(i)) = returns.returns.col(cols[i]);
        out.dates.push_back(returns.dates[static_cast<std::size_t>(cols[i])]);
    }
    return out;
}

void write_state_model_json(const std::filesystem::path& path, const StateModel& model,
                            const std::vector<std::string>& metadata) {
    nlohmann::ordered_json j;
    j["metadata"] = metadata;
    j["k"] = model.k;
    std::vector<nlohmann::ordered_json> epochs;
    for (std::size_t e = 0; e < model.epochs.size(); ++e) {
        epochs.push_back({{"start", format_date(model.epochs[e].first)},
                          {"end", format_date(model.epochs[e].last)},
                          {"state", model.labels[e]}});
    }
    j["epochs"] = epochs;
    std::vector<nlohmann::ordered_json> states;
    for (int s = 1; s <= model.k; ++s) {
        const auto si = static_cast<std::size_t>(s - 1);
        nlohmann::ordered_json st{{"state", s}};
        if (si < model.medoid_epochs.size()) {
            const auto m = model.medoid_epochs[si];
            st["medoid_epoch"] = m;
            st["medoid_start"] = format_date(model.epochs.at(m).first);
        }
        st["epochs"] = std::count(model.labels.begin(), model.labels.end(), s);
        if (si < model.state_avg_corr.size()) st["c"] = model.state_avg_corr[si];
        states.push_back(st);
    }
    j["states"] = states;
    auto out = io::open_with_metadata(path, {});
    out << j.dump(2) << '\n';
}

StateModel read_state_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    StateModel model;
    try {
        const auto j = nlohmann::json::parse(in);
        model.k = j.at("k").get<int>();
        for (const auto& e : j.at("epochs")) {
            model.epochs.push_back({parse_date(e.at("start").get<std::string>()),
                                    parse_date(e.at("end").get<std::string>())});
            model.labels.push_back(e.at("state").get<int>());
        }
        for (const auto& s : j.at("states")) {
            if (s.contains("medoid_epoch")) model.medoid_epochs.push_back(s.at("medoid_epoch").get<std::size_t>());
            if (s.contains("c")) model.state_avg_corr.push_back(s.at("c").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    check_state_model(model);
    return model;
}

std::vector<SectorBlock> sector_blocks(const std::vector<std::string>& tickers,
                                       const std::map<std::string, std::string>& sectors) {
    std::vector<SectorBlock> blocks;
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        auto it = sectors.find(tickers[i]);
        const std::string sector = it == sectors.end() ? kUnknownSector : it->second;
        if (blocks.empty() || blocks.back().sector != sector) blocks.push_back({sector, i, i});
        blocks.back().last = i;
    }
    return blocks;
}

}  // namespace mstates
