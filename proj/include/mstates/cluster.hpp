#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mstates/corr.hpp"
#include "mstates/kernels.hpp"
#include "mstates/states.hpp"

namespace mstates {

/// Symmetric, zero-diagonal, non-negative n x n matrix.
using DistanceMatrix = Eigen::MatrixXd;

void check_distance_matrix(const DistanceMatrix& d);

struct Clustering {
    int k = 0;
    std::vector<std::size_t> medoids;  // sorted ascending
    std::vector<int> labels;           // 0-based index into medoids
    double total_cost = 0.0;
    int swap_iterations = 0;
};

/// Sum of distances from every point to its nearest medoid.
double medoid_cost(const DistanceMatrix& d, std::span<const std::size_t> medoids);

/// Partitioning Around Medoids: greedy BUILD followed by best-improvement
/// SWAP until no swap lowers the total cost. Deterministic; ties go to the
/// lowest index.
Clustering pam(const DistanceMatrix& d, int k);

/// Within-cluster dispersion: sum over clusters of (sum of pairwise
/// distances) / (2 * cluster size), counting ordered pairs.
double within_dispersion(const DistanceMatrix& d, std::span<const int> labels, int k);

struct GapOptions {
    int kmax = 10;
    int B = 50;
    std::uint64_t seed = 1;
    kernels::Metric metric = kernels::Metric::MeanAbsolute;
    bool parallel = true;
};

struct GapResult {
    int k = 1;
    std::vector<double> log_w;       // index k-1
    std::vector<double> gap;         // index k-1
    std::vector<double> s;           // s_k = sd_k * sqrt(1 + 1/B)
};

/// Gap statistic with a uniform reference over the bounding box of `points`
/// (rows are observations). Picks the smallest k with
/// Gap(k) >= Gap(k+1) - s_{k+1}.
GapResult gap_statistic(const Eigen::MatrixXd& points, const GapOptions& options);

struct StateOptions {
    std::optional<int> k;  // overrides the gap statistic
    GapOptions gap;
};

struct StateIdentification {
    StateModel model;
    Clustering clustering;       // labels remapped to state order (state - 1)
    std::optional<GapResult> gap;
    DistanceMatrix distances;
};

/// Clusters epoch matrices into market states and numbers them by first
/// appearance.
StateIdentification identify_states(const EpochSeries& epochs, const StateOptions& options);

}  // namespace mstates
