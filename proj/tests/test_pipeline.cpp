#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "mstates/errors.hpp"
#include "mstates/pipeline.hpp"
#include "support.hpp"

using namespace mstates;
using testing::read_text;
using testing::TempDir;

namespace {

RunConfig small_config(const std::filesystem::path& out) {
    RunConfig c;
    c.out = out;
    c.prices = out / "prices.csv";
    c.sectors = out / "sectors.csv";
    c.synth_tickers = 12;
    c.synth_years = 3;
    c.synth_N = {20, 5};
    c.B = 10;
    c.kmax = 4;
    c.sliding_window = 150;
    c.sliding_step = 60;
    return c;
}

void run_all(const RunConfig& c) {
    for (auto cmd : {cmd_synth, cmd_ingest, cmd_states, cmd_fit, cmd_sliding}) {
        const auto report = cmd(c);
        INFO(report.failures.size());
        REQUIRE(report.failures.empty());
    }
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MSTATES_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configuration validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.local_window_n = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.fit_N_max = 0.1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.regime_boundaries = std::vector<Date>{parse_date("2001-01-01"), parse_date("2000-01-01")};
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("config hash covers parameters but not directories") {
    RunConfig a, b;
    b.out = "/somewhere/else";
    b.prices = "/data/prices.csv";
    a.prices = "prices.csv";
    CHECK(a.hash() == b.hash());
    b.seed = 2;
    CHECK(a.hash() != b.hash());
    const auto meta = a.metadata();
    REQUIRE(meta.size() == 4);
    CHECK(meta[0].rfind("mstates ", 0) == 0);
    CHECK(meta[1] == "config_hash=" + a.hash());
    CHECK(meta[2] == "seed=1");
    CHECK(meta[3].find("local_window_n=13") != std::string::npos);
}

TEST_CASE("downstream commands name the missing upstream step") {
    TempDir dir("pipe");
    RunConfig c;
    c.out = dir.path();
    try {
        cmd_states(c);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ingest") != std::string::npos);
    }
    CHECK_THROWS_AS(cmd_fit(c), ValidationError);
    CHECK_THROWS_AS(cmd_sliding(c), ValidationError);
    c.prices = dir / "nope.csv";
    CHECK_THROWS_AS(cmd_ingest(c), ValidationError);
}

TEST_CASE("full pipeline writes every artifact with a metadata block") {
    TempDir dir("pipe");
    const auto c = small_config(dir.path());
    run_all(c);
    for (const char* name : {"returns_raw.csv", "returns_normalized.csv", "tickers.csv", "epochs/index.csv", "gap.csv",
                             "jumps.csv", "lifetimes.csv", "jump_histogram.csv", "lifetime_histogram.csv",
                             "state_matrix_1.csv", "average_matrix.csv", "sector_blocks.csv", "fits.csv",
                             "hist_all.csv", "sliding.csv", "scatter_c_N.csv", "scatter_sigma_N.csv"}) {
        INFO(name);
        REQUIRE(std::filesystem::exists(dir / name));
        const auto text = read_text(dir / name);
        CHECK(text.rfind("# mstates ", 0) == 0);
        CHECK(text.find("# config_hash=" + c.hash()) != std::string::npos);
        CHECK(text.find("# seed=1") != std::string::npos);
    }
    for (const char* name : {"states.json", "fit_all.json", "fit_state_1.json", "sliding_summary.json", "truth.json"}) {
        INFO(name);
        const auto j = nlohmann::json::parse(read_text(dir / name));
        CHECK(j["metadata"][1] == "config_hash=" + c.hash());
    }
    const auto states = nlohmann::json::parse(read_text(dir / "states.json"));
    CHECK(states["k"].get<int>() >= 1);
}

TEST_CASE("explicit k gives exactly that many states") {
    TempDir dir("pipe");
    auto c = small_config(dir.path());
    c.k = 6;
    cmd_synth(c);
    cmd_ingest(c);
    cmd_states(c);
    const auto states = nlohmann::json::parse(read_text(dir / "states.json"));
    CHECK(states["k"] == 6);
    CHECK(states["states"].size() == 6);
    CHECK_FALSE(std::filesystem::exists(dir / "gap.csv"));
}

TEST_CASE("reruns with the same seed are byte-identical") {
    TempDir a("pipe_a"), b("pipe_b");
    run_all(small_config(a.path()));
    run_all(small_config(b.path()));
    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), a.path());
        INFO(rel.string());
        CHECK(read_text(entry.path()) == read_text(b.path() / rel));
        ++compared;
    }
    CHECK(compared > 20);
}

TEST_CASE("per-state failures are reported while the rest completes") {
    TempDir dir("pipe");
    auto c = small_config(dir.path());
    c.synth_tickers = 50;
    c.synth_years = 2;
    c.k = 6;
    cmd_synth(c);
    cmd_ingest(c);
    cmd_states(c);
    const auto report = cmd_fit(c);
    CHECK_FALSE(report.failures.empty());
    CHECK(std::filesystem::exists(dir / "fits.csv"));
    CHECK(report.failures.front().rfind("state ", 0) == 0);
}

TEST_CASE("command-line exit codes") {
    TempDir dir("cli");
    const std::string out = " --out " + dir.path().string();
    CHECK(run_cli("states" + out) == 1);
    CHECK(run_cli("synth --local-window-n 1" + out) == 1);
    CHECK(run_cli("synth --synth-tickers 50 --synth-years 2 --k 6" + out) == 0);
    const std::string inputs = " --prices " + (dir / "prices.csv").string() + " --sectors " + (dir / "sectors.csv").string();
    CHECK(run_cli("ingest" + out + inputs) == 0);
    CHECK(run_cli("states --k 6" + out) == 0);
    CHECK(run_cli("fit --k 6" + out) == 2);

    testing::write_text(dir / "run.cfg", "k=6\nseed=3\nsynth-tickers=10\nsynth-years=2\n");
    TempDir other("cli_cfg");
    CHECK(run_cli("synth --config " + (dir / "run.cfg").string() + " --out " + other.path().string()) == 0);
    CHECK(read_text(other / "prices.csv").find("# seed=3") != std::string::npos);
    CHECK(read_text(other / "sectors.csv").find("S009") != std::string::npos);
    CHECK(read_text(other / "sectors.csv").find("S010") == std::string::npos);
}
