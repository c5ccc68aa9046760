#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "mstates/cluster.hpp"
#include "mstates/errors.hpp"
#include "mstates/kernels.hpp"
#include "support.hpp"

using namespace mstates;

namespace {

DistanceMatrix line_distances(const std::vector<double>& x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    DistanceMatrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
    }
    return d;
}

DistanceMatrix random_instance(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(n, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
    return kernels::serial::distance_matrix(pts, kernels::Metric::Frobenius);
}

/// Exhaustive optimum over all medoid subsets of size k.
double brute_force_cost(const DistanceMatrix& d, int k, std::vector<std::size_t>* best_set = nullptr) {
    const auto n = static_cast<std::size_t>(d.rows());
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + k, true);
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<std::size_t> m;
        for (std::size_t i = 0; i < n; ++i) {
            if (pick[i]) m.push_back(i);
        }
        const double c = medoid_cost(d, m);
        if (c < best - 1e-12) {
            best = c;
            if (best_set) *best_set = m;
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

/// Matrices with all off-diagonals near `level`.
EpochSeries planted_epochs(const std::vector<int>& truth, const std::vector<double>& levels, std::uint64_t seed,
                           double noise = 0.02) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, noise);
    const Eigen::Index K = 8;
    EpochSeries s;
    for (std::size_t e = 0; e < truth.size(); ++e) {
        CorrelationMatrix c;
        for (Eigen::Index i = 0; i < K; ++i) c.labels.push_back("T" + std::to_string(i));
        c.entries = Eigen::MatrixXd::Identity(K, K);
        for (Eigen::Index i = 0; i < K; ++i) {
            for (Eigen::Index j = i + 1; j < K; ++j) {
                c.entries(i, j) = c.entries(j, i) = levels[static_cast<std::size_t>(truth[e] - 1)] + normal(rng);
            }
        }
        const int block = bimonth_index(parse_date("2000-01-01")) + static_cast<int>(e);
        c.window = {bimonth_first_day(block), bimonth_last_day(block)};
        s.epochs.push_back(c.window);
        s.matrices.push_back(c);
    }
    return s;
}

Eigen::MatrixXd blobs(int per_blob, const std::vector<Eigen::Vector2d>& centers, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    Eigen::MatrixXd pts(per_blob * static_cast<int>(centers.size()), 2);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int i = 0; i < per_blob; ++i) {
            const auto row = static_cast<Eigen::Index>(c) * per_blob + i;
            pts(row, 0) = centers[c](0) + normal(rng);
            pts(row, 1) = centers[c](1) + normal(rng);
        }
    }
    return pts;
}

}  // namespace

TEST_CASE("pam with k = n puts every point on its own medoid") {
    const auto d = line_distances({0, 3, 4, 9, 20});
    const auto c = pam(d, 5);
    CHECK(c.total_cost == 0.0);
    CHECK(c.medoids.size() == 5);
    CHECK_THROWS_AS(pam(d, 6), ValidationError);
    CHECK_THROWS_AS(pam(d, 0), ValidationError);
}

TEST_CASE("pam k = 1 on {0, 1, 10} picks the middle point") {
    const auto c = pam(line_distances({0, 1, 10}), 1);
    REQUIRE(c.medoids.size() == 1);
    CHECK(c.medoids[0] == 1);
    CHECK(c.total_cost == 10.0);
}

TEST_CASE("pam recovers two planted matrix clusters and matches brute force") {
    std::vector<int> truth(20);
    for (int i = 0; i < 20; ++i) truth[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : 2;
    const auto epochs = planted_epochs(truth, {0.1, 0.7}, 5);
    const auto n = static_cast<Eigen::Index>(truth.size());
    DistanceMatrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            d(i, j) = corr_distance(epochs.matrices[static_cast<std::size_t>(i)], epochs.matrices[static_cast<std::size_t>(j)]);
        }
    }
    const auto c = pam(d, 2);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK((c.labels[i] == c.labels[0]) == (truth[i] == truth[0]));
    std::vector<std::size_t> best;
    CHECK(c.total_cost == doctest::Approx(brute_force_cost(d, 2, &best)).epsilon(1e-14));
    CHECK(c.medoids == best);
}

TEST_CASE("pam labels point at their medoids and the result is locally optimal") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = random_instance(15, rng);
        const int k = 1 + trial % 4;
        const auto c = pam(d, k);
        CHECK(c.total_cost == doctest::Approx(medoid_cost(d, c.medoids)).epsilon(1e-12));
        for (std::size_t m = 0; m < c.medoids.size(); ++m) CHECK(c.labels[c.medoids[m]] == static_cast<int>(m));
        // No single swap improves the cost.
        for (std::size_t m = 0; m < c.medoids.size(); ++m) {
            for (std::size_t h = 0; h < 15; ++h) {
                if (std::find(c.medoids.begin(), c.medoids.end(), h) != c.medoids.end()) continue;
                auto swapped = c.medoids;
                swapped[m] = h;
                CHECK(medoid_cost(d, swapped) >= c.total_cost - 1e-12);
            }
        }
    }
}

TEST_CASE("pam beats random medoids") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_instance(20, rng);
        const int k = 2 + trial % 3;
        std::vector<std::size_t> idx(20);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(k));
        CHECK(pam(d, k).total_cost <= medoid_cost(d, idx) + 1e-12);
    }
}

TEST_CASE("pam reaches the exhaustive optimum on small instances") {
    std::mt19937_64 rng(99);
    int optimal = 0;
    const int trials = 100;
    double worst_ratio = 1.0;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = 5 + trial % 8;
        const int k = 1 + trial % 3;
        const auto d = random_instance(n, rng);
        const double best = brute_force_cost(d, k);
        const double got = pam(d, k).total_cost;
        if (got <= best * (1.0 + 1e-12) + 1e-15) {
            ++optimal;
        } else {
            worst_ratio = std::max(worst_ratio, got / best);
        }
    }
    MESSAGE("optimal in " << optimal << "/" << trials << ", worst ratio " << worst_ratio);
    CHECK(optimal >= 95);
}

TEST_CASE("pam is invariant under relabeling of the input") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = random_instance(14, rng);
        std::vector<Eigen::Index> perm(14);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const DistanceMatrix dp = d(perm, perm);
        const auto a = pam(d, 3);
        const auto b = pam(dp, 3);
        CHECK(a.total_cost == doctest::Approx(b.total_cost).epsilon(1e-12));
        // Same partition up to renaming.
        for (Eigen::Index i = 0; i < 14; ++i) {
            for (Eigen::Index j = 0; j < 14; ++j) {
                const bool together_a = a.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
                                        a.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
                const bool together_b = b.labels[static_cast<std::size_t>(i)] == b.labels[static_cast<std::size_t>(j)];
                CHECK(together_a == together_b);
            }
        }
    }
}

TEST_CASE("within-cluster dispersion hand case") {
    // Clusters {0, 1} and {10}: (1 + 1) / (2 * 2) + 0.
    const auto d = line_distances({0, 1, 10});
    const std::vector<int> labels{0, 0, 1};
    CHECK(within_dispersion(d, labels, 2) == doctest::Approx(0.5));
}

TEST_CASE("gap statistic finds three separated blobs") {
    const auto pts = blobs(20, {{0, 0}, {10, 0}, {5, 8}}, 0.5, 3);
    GapOptions o;
    o.kmax = 6;
    o.B = 20;
    o.metric = kernels::Metric::Frobenius;
    const auto g = gap_statistic(pts, o);
    CHECK(g.k == 3);
    CHECK(g.gap.size() == 6);
    CHECK(g.s.size() == 6);
}

TEST_CASE("gap statistic gives one cluster for a uniform blob") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(60, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
    GapOptions o;
    o.kmax = 6;
    o.B = 20;
    o.metric = kernels::Metric::Frobenius;
    CHECK(gap_statistic(pts, o).k == 1);
}

TEST_CASE("gap statistic edge cases and determinism") {
    const auto pts = blobs(10, {{0, 0}, {5, 5}}, 0.3, 4);
    GapOptions o;
    o.kmax = 1;
    CHECK(gap_statistic(pts, o).k == 1);
    o.kmax = 5;
    o.B = 10;
    o.seed = 77;
    const auto a = gap_statistic(pts, o);
    o.parallel = false;
    const auto b = gap_statistic(pts, o);
    CHECK(a.gap == b.gap);
    CHECK(a.s == b.s);
    CHECK(gap_statistic(Eigen::MatrixXd::Ones(10, 3), o).k == 1);
    o.B = 0;
    CHECK_THROWS_AS(gap_statistic(pts, o), ValidationError);
}

TEST_CASE("identify_states recovers a planted three-state sequence") {
    const std::vector<int> truth{1, 1, 1, 2, 2, 1, 2, 2, 3, 3, 3, 2, 3, 3, 1, 1, 2, 2, 2, 3,
                                3, 3, 1, 1, 1, 2, 3, 3, 2, 2};
    const auto epochs = planted_epochs(truth, {0.1, 0.4, 0.7}, 7);
    StateOptions o;
    o.gap.B = 20;
    o.gap.kmax = 6;
    const auto id = identify_states(epochs, o);
    CHECK(id.model.k == 3);
    // The planted sequence already numbers states by first appearance.
    CHECK(id.model.labels == truth);
    CHECK_NOTHROW(check_state_model(id.model));
    CHECK(id.model.state_avg_corr[2] == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("identical epochs form a single state") {
    const auto epochs = planted_epochs(std::vector<int>(10, 1), {0.3}, 1, 0.0);
    const auto id = identify_states(epochs, {});
    CHECK(id.model.k == 1);
    CHECK(id.model.labels == std::vector<int>(10, 1));
}

TEST_CASE("explicit k bypasses the gap statistic") {
    const auto epochs = planted_epochs(std::vector<int>(20, 1), {0.3}, 2);
    StateOptions o;
    o.k = 6;
    const auto id = identify_states(epochs, o);
    CHECK(id.model.k == 6);
    CHECK_FALSE(id.gap.has_value());
    // States numbered by first appearance.
    int seen = 0;
    for (int l : id.model.labels) {
        CHECK(l <= seen + 1);
        seen = std::max(seen, l);
    }
}
