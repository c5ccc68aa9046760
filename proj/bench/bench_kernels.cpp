// Times the serial and OpenMP kernels on the same inputs.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <omp.h>

#include "mstates/kernels.hpp"

namespace k = mstates::kernels;

namespace {

template <typename F>
double seconds(F&& f, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-16s serial %9.4f s  parallel %9.4f s  speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;

    std::vector<double> values(1'000'000);
    for (auto& v : values) v = normal(rng);
    volatile double sink = 0.0;
    report("log_likelihood", seconds([&] { sink = k::serial::log_likelihood(values, 8.0); }, 3),
           seconds([&] { sink = k::parallel::log_likelihood(values, 8.0); }, 3));

    Eigen::MatrixXd points(132, 4950);
    for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = normal(rng);
    report("distance_matrix", seconds([&] { sink = k::serial::distance_matrix(points, k::Metric::MeanAbsolute)(0, 1); }, 3),
           seconds([&] { sink = k::parallel::distance_matrix(points, k::Metric::MeanAbsolute)(0, 1); }, 3));

    Eigen::MatrixXd returns(300, 2000);
    for (Eigen::Index i = 0; i < returns.size(); ++i) returns.data()[i] = normal(rng);
    report("correlation", seconds([&] { sink = k::serial::correlation(returns)(0, 1); }, 3),
           seconds([&] { sink = k::parallel::correlation(returns)(0, 1); }, 3));
    (void)sink;
    return 0;
}
