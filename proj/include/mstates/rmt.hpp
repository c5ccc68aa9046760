#pragma once

// Random-matrix model of non-stationary correlations: correlation matrices
// are replaced by Wishart matrices W W^T whose K x N factor W fluctuates
// around the empirical correlation matrix C. N measures the fluctuation
// strength; large N means nearly stationary correlations.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mstates/bessel.hpp"
#include "mstates/corr.hpp"
#include "mstates/ingest.hpp"
#include "mstates/random.hpp"

namespace mstates {
struct StateModel;
}

namespace mstates::rmt {

/// Sigma = sigma C sigma with sigma = diag(vols).
class CovarianceModel {
public:
    CovarianceModel(CorrelationMatrix correlation, Eigen::VectorXd vols);

    /// Sample (population-normalized) covariance of the rows of `returns`.
    static CovarianceModel from_returns(const ReturnPanel& returns);

    const CorrelationMatrix& correlation() const { return correlation_; }
    const Eigen::VectorXd& vols() const { return vols_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    Eigen::Index size() const { return sigma_.rows(); }

private:
    CorrelationMatrix correlation_;
    Eigen::VectorXd vols_;
    Eigen::MatrixXd sigma_;
};

/// Log of the correlation-averaged multivariate return density for a K-vector.
/// Caches the Cholesky factor of Sigma so repeated evaluation is cheap.
class MultivariateDensity {
public:
    MultivariateDensity(const CovarianceModel& model, double N);

    double log_pdf(const Eigen::VectorXd& r) const;
    double pdf(const Eigen::VectorXd& r) const;

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double N_;
    double log_norm_;
    Eigen::Index K_;
};

double pdf_multivariate(const Eigen::VectorXd& r, const CovarianceModel& model, double N);

/// Univariate density of one rotated, rescaled return component, with the
/// N-dependent normalization precomputed.
class UnivariateDensity {
public:
    explicit UnivariateDensity(double N);

    double log_pdf(double r_tilde) const;
    double N() const { return N_; }

private:
    double N_;
    double sqrt_N_;
    double nu_;
    double log_norm_;
    double log_at_zero_;  // used for r~ = 0 when N > 1
};

double log_pdf_univariate(double r_tilde, double N);
double pdf_univariate(double r_tilde, double N);

struct RotatedReturns {
    std::vector<double> values;  // time-major: values[t * K + i]
    std::size_t source_K = 0;
    std::size_t source_T = 0;
};

/// Eigenvalues below floor_factor * trace(Sigma) / K are rejected.
inline constexpr double kEigenvalueFloorFactor = 1e-10;

/// r~(t) = Lambda^{-1/2} U^T r(t) for Sigma = U Lambda U^T, all components
/// aggregated. Throws NumericalError when Sigma has eigenvalues below the floor.
RotatedReturns rotate_and_rescale(const ReturnPanel& window, const CovarianceModel& model);

struct FitOptions {
    double N_min = 0.5;
    double N_max = 500.0;
    double rel_tol = 1e-4;
    /// Fewer points log a warning.
    std::size_t recommended_points = 1000;
    bool parallel = true;
};

struct FluctuationFit {
    double N = 0.0;
    double log_likelihood = 0.0;
    std::size_t sample_count = 0;
    std::string window;
    /// False when the optimum sits within 1% of a bracket edge.
    bool converged = false;
};

/// Maximum-likelihood N by golden-section search over log N.
FluctuationFit fit_N(std::span<const double> data, const FitOptions& options = {});

/// K x N factor with independent N(0, C/N) columns; `chol_C` is the lower
/// Cholesky factor of C.
Eigen::MatrixXd sample_wishart_factor(const Eigen::MatrixXd& chol_C, int N, Rng& rng);

/// Returns with per-step fluctuating correlations: r(t) = sigma W_t z(t) where
/// W_t is drawn fresh for every t and z(t) is a standard normal N-vector.
/// Result is K x T.
Eigen::MatrixXd sample_return_matrix(const Eigen::MatrixXd& chol_C, const Eigen::VectorXd& vols, int N,
                                     Eigen::Index T, Rng& rng);

/// Panel version; throws ValidationError if C is not positive definite.
ReturnPanel sample_returns(const CorrelationMatrix& C, const Eigen::VectorXd& vols, int N,
                           const std::vector<Date>& dates, std::uint64_t seed);

/// Lower Cholesky factor; ValidationError when C is not positive definite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& C);

struct DensityHistogram {
    std::vector<double> bin_centers;
    std::vector<double> empirical_density;
    std::vector<double> model_density;
};

/// Density-normalized histogram of `data` on [lo, hi] (points outside are
/// counted in the normalization but not binned) with the model curve at N.
DensityHistogram density_histogram(std::span<const double> data, double N, int bins = 101,
                                   double lo = -8.0, double hi = 8.0);

struct StateFit {
    FluctuationFit fit;
    DensityHistogram histogram;
};

/// Fits N on `returns` restricted to the epochs of one state (1-based).
StateFit fit_state(const ReturnPanel& returns, const StateModel& model, int state,
                   const FitOptions& options = {}, int hist_bins = 101);

/// Fits N on a whole panel.
StateFit fit_panel(const ReturnPanel& returns, const FitOptions& options = {}, int hist_bins = 101);

void write_fit_json(const std::filesystem::path& path, const FluctuationFit& fit,
                    const std::vector<std::string>& metadata);
void write_histogram_csv(const std::filesystem::path& path, const DensityHistogram& hist,
                         const std::vector<std::string>& metadata);

}  // namespace mstates::rmt
