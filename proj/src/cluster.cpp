#include "mstates/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mstates/errors.hpp"
#include "mstates/random.hpp"

namespace mstates {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest and second-nearest medoid distance for every point.
struct Assignment {
    std::vector<std::size_t> nearest;  // position in the medoid list
    std::vector<double> d1;
    std::vector<double> d2;
    double cost = 0.0;
};

Assignment assign(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    const auto n = static_cast<std::size_t>(d.rows());
    Assignment a{std::vector<std::size_t>(n, 0), std::vector<double>(n, kInf), std::vector<double>(n, kInf), 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            const double dist = d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(medoids[m]));
            if (dist < a.d1[j]) {
                a.d2[j] = a.d1[j];
                a.d1[j] = dist;
                a.nearest[j] = m;
            } else if (dist < a.d2[j]) {
                a.d2[j] = dist;
            }
        }
        a.cost += a.d1[j];
    }
    return a;
}

}  // namespace

void check_distance_matrix(const DistanceMatrix& d) {
    if (d.rows() != d.cols()) throw ValidationError("distance matrix is not square");
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d(i, i) != 0.0) throw ValidationError("distance matrix has a non-zero diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (d(i, j) != d(j, i)) throw ValidationError("distance matrix is not symmetric");
            if (!(d(i, j) >= 0.0)) throw ValidationError("distance matrix has a negative or NaN entry");
        }
    }
}

double medoid_cost(const DistanceMatrix& d, std::span<const std::size_t> medoids) {
    double cost = 0.0;
    for (Eigen::Index j = 0; j < d.rows(); ++j) {
        double best = kInf;
        for (auto m : medoids) best = std::min(best, d(j, static_cast<Eigen::Index>(m)));
        cost += best;
    }
    return cost;
}

Clustering pam(const DistanceMatrix& d, int k) {
    const auto n = static_cast<std::size_t>(d.rows());
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw ValidationError("pam: k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
    const auto at = [&](std::size_t i, std::size_t j) {
        return d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };

    // BUILD
    std::vector<std::size_t> medoids;
    std::vector<char> is_medoid(n, 0);
    std::vector<double> nearest(n, kInf);
    {
        std::size_t first = 0;
        double best = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = d.col(static_cast<Eigen::Index>(i)).sum();
            if (s < best) {
                best = s;
                first = i;
            }
        }
        medoids.push_back(first);
        is_medoid[first] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = at(j, first);
    }
    while (medoids.size() < static_cast<std::size_t>(k)) {
        std::size_t pick = n;
        double best_gain = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) gain += std::max(nearest[j] - at(j, i), 0.0);
            if (gain > best_gain) {
                best_gain = gain;
                pick = i;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], at(j, pick));
    }
    std::sort(medoids.begin(), medoids.end());

    // SWAP
    Clustering result;
    result.k = k;
    auto a = assign(d, medoids);
    while (true) {
        const double tol = 1e-12 * std::max(a.cost, 1e-300);
        double best_delta = 0.0;
        std::size_t best_m = 0, best_h = n;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double delta = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double keep = a.nearest[j] == m ? a.d2[j] : a.d1[j];
                    delta += std::min(at(j, h), keep) - a.d1[j];
                }
                if (delta < best_delta - tol) {
                    best_delta = delta;
                    best_m = m;
                    best_h = h;
                }
            }
        }
        if (best_h == n) break;
        is_medoid[medoids[best_m]] = 0;
        is_medoid[best_h] = 1;
        medoids[best_m] = best_h;
        std::sort(medoids.begin(), medoids.end());
        const double previous = a.cost;
        a = assign(d, medoids);
        ++result.swap_iterations;
        if (!(a.cost < previous)) break;  // rounding; never cycle
    }

    result.medoids = medoids;
    result.total_cost = a.cost;
    result.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) result.labels[j] = static_cast<int>(a.nearest[j]);
    return result;
}

double within_dispersion(const DistanceMatrix& d, std::span<const int> labels, int k) {
    std::vector<double> pair_sum(static_cast<std::size_t>(k), 0.0);
    std::vector<double> size(static_cast<std::size_t>(k), 0.0);
    const auto n = static_cast<Eigen::Index>(labels.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
        size[li] += 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) pair_sum[li] += d(i, j);
        }
    }
    double w = 0.0;
    for (std::size_t r = 0; r < pair_sum.size(); ++r) {
        if (size[r] > 0.0) w += pair_sum[r] / (2.0 * size[r]);
    }
    return w;
}

namespace {

double safe_log(double w) {
    return std::log(std::max(w, std::numeric_limits<double>::min()));
}

std::vector<double> log_dispersions(const DistanceMatrix& d, int kmax) {
    std::vector<double> out;
    for (int k = 1; k <= kmax; ++k) {
        const auto cl = pam(d, k);
        out.push_back(safe_log(within_dispersion(d, cl.labels, k)));
    }
    return out;
}

}  // namespace

GapResult gap_statistic(const Eigen::MatrixXd& points, const GapOptions& options) {
    if (options.kmax < 1) throw ValidationError("gap_statistic: kmax must be >= 1");
    if (options.B < 1) throw ValidationError("gap_statistic: B must be >= 1");
    const Eigen::Index n = points.rows();
    if (n < 1) throw ValidationError("gap_statistic: no points");
    const int kmax = static_cast<int>(std::min<Eigen::Index>(options.kmax, n));

    GapResult result;
    result.k = 1;
    const Eigen::RowVectorXd lo = points.colwise().minCoeff();
    const Eigen::RowVectorXd hi = points.colwise().maxCoeff();
    if (kmax == 1 || (hi - lo).maxCoeff() <= 0.0) {
        result.log_w.assign(static_cast<std::size_t>(kmax), 0.0);
        result.gap.assign(static_cast<std::size_t>(kmax), 0.0);
        result.s.assign(static_cast<std::size_t>(kmax), 0.0);
        if (kmax == 1) {
            const auto d = kernels::parallel::distance_matrix(points, options.metric);
            result.log_w[0] = safe_log(within_dispersion(d, std::vector<int>(static_cast<std::size_t>(n), 0), 1));
        }
        return result;
    }

    const auto d = options.parallel ? kernels::parallel::distance_matrix(points, options.metric)
                                    : kernels::serial::distance_matrix(points, options.metric);
    result.log_w = log_dispersions(d, kmax);

    const auto B = static_cast<std::size_t>(options.B);
    std::vector<std::vector<double>> ref(B);
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(B); ++b) {
        Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(b)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Eigen::MatrixXd null(n, points.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < points.cols(); ++j) null(i, j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
        }
        ref[static_cast<std::size_t>(b)] = log_dispersions(kernels::serial::distance_matrix(null, options.metric), kmax);
    }

    for (int k = 1; k <= kmax; ++k) {
        const auto ki = static_cast<std::size_t>(k - 1);
        double mean = 0.0;
        for (const auto& r : ref) mean += r[ki];
        mean /= static_cast<double>(B);
        double var = 0.0;
        for (const auto& r : ref) var += (r[ki] - mean) * (r[ki] - mean);
        var /= static_cast<double>(B);
        result.gap.push_back(mean - result.log_w[ki]);
        result.s.push_back(std::sqrt(var) * std::sqrt(1.0 + 1.0 / static_cast<double>(B)));
    }
    result.k = kmax;
    for (int k = 1; k < kmax; ++k) {
        const auto ki = static_cast<std::size_t>(k - 1);
        if (result.gap[ki] >= result.gap[ki + 1] - result.s[ki + 1]) {
            result.k = k;
            break;
        }
    }
    return result;
}

StateIdentification identify_states(const EpochSeries& epochs, const StateOptions& options) {
    const auto n = epochs.matrices.size();
    if (n < 2) throw ValidationError("identify_states: need at least 2 epochs");
    const Eigen::Index p = epochs.matrices.front().size() * (epochs.matrices.front().size() - 1) / 2;
    Eigen::MatrixXd points(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
        if (epochs.matrices[i].labels != epochs.matrices.front().labels) {
            throw ValidationError("identify_states: epochs have inconsistent tickers");
        }
        points.row(static_cast<Eigen::Index>(i)) = upper_triangle(epochs.matrices[i]).transpose();
    }

    StateIdentification out;
    out.distances = options.gap.parallel ? kernels::parallel::distance_matrix(points, options.gap.metric)
                                         : kernels::serial::distance_matrix(points, options.gap.metric);
    int k = 0;
    if (options.k) {
        k = *options.k;
        if (k < 1 || static_cast<std::size_t>(k) > n) {
            throw ValidationError("identify_states: k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
        }
    } else {
        out.gap = gap_statistic(points, options.gap);
        k = out.gap->k;
    }
    auto cl = pam(out.distances, k);

    // Number states by first appearance.
    std::vector<int> state_of(static_cast<std::size_t>(k), 0);
    int next = 1;
    for (int label : cl.labels) {
        auto& s = state_of[static_cast<std::size_t>(label)];
        if (s == 0) s = next++;
    }

    auto& model = out.model;
    model.k = k;
    model.epochs = epochs.epochs;
    model.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.labels[i] = state_of[static_cast<std::size_t>(cl.labels[i])];
    model.medoid_epochs.resize(static_cast<std::size_t>(k));
    for (std::size_t m = 0; m < cl.medoids.size(); ++m) {
        model.medoid_epochs[static_cast<std::size_t>(state_of[m] - 1)] = cl.medoids[m];
    }
    for (int s = 1; s <= k; ++s) {
        std::vector<CorrelationMatrix> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (model.labels[i] == s) members.push_back(epochs.matrices[i]);
        }
        model.state_avg_matrices.push_back(average_matrix(members));
        model.state_avg_corr.push_back(mean_off_diagonal(model.state_avg_matrices.back()));
    }

    // Clustering re-expressed in state order.
    Clustering remapped = cl;
    for (std::size_t i = 0; i < n; ++i) remapped.labels[i] = model.labels[i] - 1;
    remapped.medoids = model.medoid_epochs;
    out.clustering = std::move(remapped);
    return out;
}

}  // namespace mstates
