#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "mstates/date.hpp"
#include "mstates/ingest.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("mstates_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<mstates::Date> weekdays(const char* first, const char* last) {
    return mstates::weekdays_between(mstates::parse_date(first), mstates::parse_date(last));
}

/// Panel of i.i.d. standard normal values on `dates`.
inline mstates::ReturnPanel gaussian_panel(std::size_t K, std::vector<mstates::Date> dates, std::uint64_t seed,
                                           bool normalized = true) {
    mstates::ReturnPanel p;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < K; ++k) p.tickers.push_back("T" + std::to_string(k));
    p.returns.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(dates.size()));
    for (Eigen::Index t = 0; t < p.returns.cols(); ++t) {
        for (Eigen::Index k = 0; k < p.returns.rows(); ++k) p.returns(k, t) = normal(rng);
    }
    p.dates = std::move(dates);
    p.normalized = normalized;
    if (normalized) p.local_window_n = 13;
    return p;
}

}  // namespace testing
