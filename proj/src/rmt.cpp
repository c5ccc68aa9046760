#include "mstates/rmt.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mstates/errors.hpp"
#include "mstates/io.hpp"
#include "mstates/kernels.hpp"
#include "mstates/states.hpp"

namespace mstates::rmt {

namespace {

constexpr double kLn2 = std::numbers::ln2;
// |r~| is clamped here where the density has an integrable singularity at 0.
constexpr double kZeroClamp = 1e-12;

void check_N(double N) {
    if (!(N > 0.0) || !std::isfinite(N)) {
        throw ValidationError("fluctuation strength N must be positive and finite");
    }
}

}  // namespace

CovarianceModel::CovarianceModel(CorrelationMatrix correlation, Eigen::VectorXd vols)
    : correlation_(std::move(correlation)), vols_(std::move(vols)) {
    if (correlation_.entries.rows() != vols_.size() || correlation_.entries.cols() != vols_.size()) {
        throw ValidationError("covariance model: correlation and volatility sizes differ");
    }
    if (!(vols_.array() > 0.0).all()) throw ValidationError("covariance model: volatilities must be positive");
    sigma_ = vols_.asDiagonal() * correlation_.entries * vols_.asDiagonal();
    sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
}

CovarianceModel CovarianceModel::from_returns(const ReturnPanel& returns) {
    const Eigen::Index T = returns.returns.cols();
    if (T < 2) throw ValidationError("covariance model: need at least 2 observations");
    const Eigen::MatrixXd centered = returns.returns.colwise() - returns.returns.rowwise().mean();
    Eigen::MatrixXd s = centered * centered.transpose() / static_cast<double>(T);
    Eigen::VectorXd vols = s.diagonal().cwiseSqrt();
    for (Eigen::Index k = 0; k < vols.size(); ++k) {
        if (!(vols(k) > 0.0)) {
            throw NumericalError("covariance model: zero variance for " +
                                 returns.tickers.at(static_cast<std::size_t>(k)));
        }
    }
    CorrelationMatrix c;
    c.labels = returns.tickers;
    c.window = {returns.dates.front(), returns.dates.back()};
    c.entries = vols.cwiseInverse().asDiagonal() * s * vols.cwiseInverse().asDiagonal();
    c.entries = (0.5 * (c.entries + c.entries.transpose())).eval();
    c.entries.diagonal().setOnes();
    return CovarianceModel(std::move(c), std::move(vols));
}

MultivariateDensity::MultivariateDensity(const CovarianceModel& model, double N)
    : llt_(model.sigma()), N_(N), K_(model.size()) {
    check_N(N);
    if (llt_.info() != Eigen::Success) throw NumericalError("multivariate pdf: Sigma is not positive definite");
    const double K = static_cast<double>(K_);
    const double log_det = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_norm_ = 0.5 * (2.0 - N) * kLn2 + 0.5 * K * std::log(N) - std::lgamma(0.5 * N) -
                0.5 * (K * std::log(2.0 * std::numbers::pi) + log_det);
}

double MultivariateDensity::log_pdf(const Eigen::VectorXd& r) const {
    if (r.size() != K_) throw ValidationError("multivariate pdf: dimension mismatch");
    const double q = r.dot(llt_.solve(r));
    const double nu = 0.5 * (static_cast<double>(K_) - N_);
    double z = std::sqrt(N_ * std::max(q, 0.0));
    if (nu < 0.0 && (z == 0.0 || std::min(-nu, 1.0) * std::log(z) < -20.0)) {
        // z^{-nu} K_nu(z) -> Gamma(|nu|) 2^{|nu|-1} as z -> 0.
        return log_norm_ + std::lgamma(-nu) + (-nu - 1.0) * kLn2;
    }
    if (nu >= 0.0) z = std::max(z, std::sqrt(N_) * kZeroClamp);
    return log_norm_ + log_bessel_k(nu, z) - nu * std::log(z);
}

double MultivariateDensity::pdf(const Eigen::VectorXd& r) const {
    return std::exp(log_pdf(r));
}

double pdf_multivariate(const Eigen::VectorXd& r, const CovarianceModel& model, double N) {
    return MultivariateDensity(model, N).pdf(r);
}

UnivariateDensity::UnivariateDensity(double N) : N_(N) {
    check_N(N);
    sqrt_N_ = std::sqrt(N);
    nu_ = 0.5 * (N - 1.0);
    log_norm_ = 0.5 * (1.0 - N) * kLn2 + 0.5 * std::log(N) - 0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * N);
    // z^nu K_nu(z) -> Gamma(nu) 2^{nu-1} as z -> 0 (nu > 0).
    log_at_zero_ = N > 1.0 ? log_norm_ + std::lgamma(nu_) + (nu_ - 1.0) * kLn2 : 0.0;
}

double UnivariateDensity::log_pdf(double r_tilde) const {
    if (!std::isfinite(r_tilde)) return std::numeric_limits<double>::quiet_NaN();
    double a = std::abs(r_tilde);
    if (N_ > 1.0) {
        if (a == 0.0) return log_at_zero_;
    } else {
        a = std::max(a, kZeroClamp);
    }
    const double z = sqrt_N_ * a;
    // Below this z the small-argument correction is under one ulp.
    if (nu_ > 0.0 && std::min(nu_, 1.0) * std::log(z) < -20.0) return log_at_zero_;
    return log_norm_ + nu_ * std::log(z) + log_bessel_k(nu_, z);
}

double log_pdf_univariate(double r_tilde, double N) {
    return UnivariateDensity(N).log_pdf(r_tilde);
}

double pdf_univariate(double r_tilde, double N) {
    return std::exp(log_pdf_univariate(r_tilde, N));
}

RotatedReturns rotate_and_rescale(const ReturnPanel& window, const CovarianceModel& model) {
    const Eigen::Index K = model.size();
    if (window.returns.rows() != K) throw ValidationError("rotate_and_rescale: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.sigma());
    if (eig.info() != Eigen::Success) throw NumericalError("rotate_and_rescale: eigendecomposition failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double floor = kEigenvalueFloorFactor * model.sigma().trace() / static_cast<double>(K);
    if (lambda(0) < floor) {
        std::ostringstream msg;
        msg << "rotate_and_rescale: covariance eigenvalue(s) below floor " << floor << ":";
        for (Eigen::Index i = 0; i < K && lambda(i) < floor; ++i) msg << ' ' << lambda(i);
        msg << " (fewer observations than stocks, or degenerate data)";
        throw NumericalError(msg.str());
    }
    const Eigen::MatrixXd rotated =
        lambda.cwiseSqrt().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * window.returns);
    RotatedReturns out;
    out.source_K = static_cast<std::size_t>(K);
    out.source_T = static_cast<std::size_t>(window.returns.cols());
    out.values.assign(rotated.data(), rotated.data() + rotated.size());
    return out;
}

FluctuationFit fit_N(std::span<const double> data, const FitOptions& options) {
    if (!(options.N_min > 0.0) || !(options.N_max > options.N_min)) {
        throw ValidationError("fit_N: invalid bracket");
    }
    if (data.empty()) throw ValidationError("fit_N: no data");
    for (double v : data) {
        if (!std::isfinite(v)) throw NumericalError("fit_N: data contain non-finite values");
    }
    if (data.size() < options.recommended_points) {
        spdlog::warn("fit_N: only {} points (>= {} recommended)", data.size(), options.recommended_points);
    }
    const auto loglik = [&](double log_n) {
        const double N = std::exp(log_n);
        const double ll = options.parallel ? kernels::parallel::log_likelihood(data, N)
                                           : kernels::serial::log_likelihood(data, N);
        if (!std::isfinite(ll)) throw NumericalError("fit_N: non-finite log-likelihood at N = " + std::to_string(N));
        return ll;
    };

    // Golden-section search for the maximum over log N.
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(options.N_min), b = std::log(options.N_max);
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = loglik(x1), f2 = loglik(x2);
    while (b - a > options.rel_tol) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = loglik(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = loglik(x2);
        }
    }
    FluctuationFit fit;
    const double best = 0.5 * (a + b);
    fit.N = std::exp(best);
    fit.log_likelihood = loglik(best);
    fit.sample_count = data.size();
    fit.converged = fit.N > options.N_min * 1.01 && fit.N < options.N_max / 1.01;
    return fit;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& C) {
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) throw ValidationError("correlation matrix is not positive definite");
    return llt.matrixL();
}

namespace {

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    }
    return g;
}

}  // namespace

Eigen::MatrixXd sample_wishart_factor(const Eigen::MatrixXd& chol_C, int N, Rng& rng) {
    if (N < 1) throw ValidationError("Wishart factor: N must be >= 1");
    return chol_C * standard_normal(chol_C.rows(), N, rng) / std::sqrt(static_cast<double>(N));
}

Eigen::MatrixXd sample_return_matrix(const Eigen::MatrixXd& chol_C, const Eigen::VectorXd& vols, int N,
                                     Eigen::Index T, Rng& rng) {
    if (N < 1) throw ValidationError("sample_returns: N must be >= 1");
    const Eigen::Index K = chol_C.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    Eigen::MatrixXd out(K, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::MatrixXd g = standard_normal(K, N, rng);
        const Eigen::VectorXd z = standard_normal(N, 1, rng);
        // W z with W = L G / sqrt(N), grouped as L (G z) to avoid the K x N product.
        out.col(t) = vols.cwiseProduct(chol_C * (g * z)) * scale;
    }
    return out;
}

ReturnPanel sample_returns(const CorrelationMatrix& C, const Eigen::VectorXd& vols, int N,
                           const std::vector<Date>& dates, std::uint64_t seed) {
    if (vols.size() != C.size()) throw ValidationError("sample_returns: vols and C sizes differ");
    const auto L = cholesky_factor(C.entries);
    Rng rng(seed);
    ReturnPanel out;
    out.tickers = C.labels;
    out.dates = dates;
    out.returns = sample_return_matrix(L, vols, N, static_cast<Eigen::Index>(dates.size()), rng);
    return out;
}

DensityHistogram density_histogram(std::span<const double> data, double N, int bins, double lo, double hi) {
    if (bins < 1 || !(hi > lo)) throw ValidationError("histogram: invalid binning");
    DensityHistogram h;
    const double width = (hi - lo) / bins;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : data) {
        if (v < lo || v > hi) continue;
        auto b = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(b, counts.size() - 1)] += 1.0;
    }
    const double norm = data.empty() ? 0.0 : 1.0 / (static_cast<double>(data.size()) * width);
    const UnivariateDensity density(N);
    for (int b = 0; b < bins; ++b) {
        const double center = lo + (b + 0.5) * width;
        h.bin_centers.push_back(center);
        h.empirical_density.push_back(counts[static_cast<std::size_t>(b)] * norm);
        h.model_density.push_back(std::exp(density.log_pdf(center)));
    }
    return h;
}

StateFit fit_panel(const ReturnPanel& returns, const FitOptions& options, int hist_bins) {
    const auto model = CovarianceModel::from_returns(returns);
    const auto rotated = rotate_and_rescale(returns, model);
    StateFit out;
    out.fit = fit_N(rotated.values, options);
    out.fit.window = format_date(returns.dates.front()) + ".." + format_date(returns.dates.back());
    out.histogram = density_histogram(rotated.values, out.fit.N, hist_bins);
    return out;
}

StateFit fit_state(const ReturnPanel& returns, const StateModel& model, int state, const FitOptions& options,
                   int hist_bins) {
    const auto merged = state_returns(returns, model, state);
    if (merged.num_dates() < 2) {
        throw ValidationError("fit_state: state " + std::to_string(state) + " covers fewer than 2 return dates");
    }
    auto out = fit_panel(merged, options, hist_bins);
    out.fit.window = "state " + std::to_string(state);
    return out;
}

void write_fit_json(const std::filesystem::path& path, const FluctuationFit& fit,
                    const std::vector<std::string>& metadata) {
    nlohmann::ordered_json j;
    j["metadata"] = metadata;
    j["N"] = fit.N;
    j["log_likelihood"] = fit.log_likelihood;
    j["sample_count"] = fit.sample_count;
    j["converged"] = fit.converged;
    j["window"] = fit.window;
    auto out = io::open_with_metadata(path, {});
    out << j.dump(2) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const DensityHistogram& hist,
                         const std::vector<std::string>& metadata) {
    auto out = io::open_with_metadata(path, metadata);
    out << "bin_center,empirical_density,model_density\n";
    for (std::size_t i = 0; i < hist.bin_centers.size(); ++i) {
        out << io::format_double(hist.bin_centers[i]) << ',' << io::format_double(hist.empirical_density[i]) << ','
            << io::format_double(hist.model_density[i]) << '\n';
    }
}

}  // namespace mstates::rmt
