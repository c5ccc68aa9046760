#include "mstates/bessel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mstates/errors.hpp"

namespace mstates::rmt {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Taylor coefficients of 1/Gamma(z) = sum_{k>=1} c_k z^k (Abramowitz & Stegun 6.1.34).
constexpr std::array<double, 26> kRecipGamma{
    1.0,                 0.5772156649015329,  -0.6558780715202538, -0.0420026350340952,
    0.1665386113822915,  -0.0421977345555443, -0.0096219715278770, 0.0072189432466630,
    -0.0011651675918591, -0.0002152416741149, 0.0001280502823882,  -0.0000201348547807,
    -0.0000012504934821, 0.0000011330272320,  -0.0000002056338417, 0.0000000061160950,
    0.0000000050020075,  -0.0000000011812746, 0.0000000001043427,  0.0000000000077823,
    -0.0000000000036968, 0.0000000000005100,  -0.0000000000000206, -0.0000000000000054,
    0.0000000000000014,  0.0000000000000001};

struct TemmeGammas {
    double gam1;    // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;    // (1/G(1-mu) + 1/G(1+mu)) / 2
    double gampl;   // 1/G(1+mu)
    double gammi;   // 1/G(1-mu)
};

TemmeGammas temme_gammas(double mu) {
    // Split the series into even/odd powers of mu; for |mu| <= 1/2 this is
    // accurate to rounding without the cancellation of the direct formula.
    const double mu2 = mu * mu;
    double even = 0.0, odd = 0.0;
    for (int j = static_cast<int>(kRecipGamma.size()) - 1; j >= 0; --j) {
        if (j % 2 == 0) {
            even = even * mu2 + kRecipGamma[static_cast<std::size_t>(j)];
        } else {
            odd = odd * mu2 + kRecipGamma[static_cast<std::size_t>(j)];
        }
    }
    // 1/G(1+mu) = even(mu^2) + mu * odd(mu^2)
    return {-odd, even, even + mu * odd, even - mu * odd};
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2, x < 2 (Temme's series).
void temme_series(double mu, double x, double& k_mu, double& k_mu1) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const auto g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double fi = i;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= d / fi;
        p /= (fi - mu);
        q /= (fi + mu);
        const double del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    k_mu = sum;
    k_mu1 = sum1 * 2.0 / x;
}

// e^x K_mu(x) and e^x K_{mu+1}(x) for |mu| <= 1/2, x >= 2 (Steed's continued fraction).
void steed_cf2(double mu, double x, double& k_mu, double& k_mu1) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double log_bessel_k(double nu, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ValidationError("bessel_k: argument must be positive and finite, got " + std::to_string(x));
    }
    if (!std::isfinite(nu)) throw ValidationError("bessel_k: order must be finite");
    nu = std::abs(nu);
    const double steps = std::floor(nu + 0.5);
    const double mu = nu - steps;  // in [-1/2, 1/2)

    double k0 = 0.0, k1 = 0.0, log_scale = 0.0;
    if (x < 2.0) {
        temme_series(mu, x, k0, k1);
    } else {
        steed_cf2(mu, x, k0, k1);
        log_scale = -x;
    }

    // Forward recurrence K_{m+1} = K_{m-1} + (2m/x) K_m is stable for K.
    constexpr double kBig = 1e250;
    const double log_big = std::log(kBig);
    const long n = static_cast<long>(steps);
    for (long i = 1; i <= n; ++i) {
        const double factor = 2.0 * (mu + static_cast<double>(i)) / x;
        while (k1 > std::numeric_limits<double>::max() / (2.0 * factor + 2.0)) {
            k0 /= kBig;
            k1 /= kBig;
            log_scale += log_big;
        }
        const double next = k0 + factor * k1;
        k0 = k1;
        k1 = next;
        if (k1 > kBig) {
            k0 /= kBig;
            k1 /= kBig;
            log_scale += log_big;
        }
    }
    return std::log(k0) + log_scale;
}

double bessel_k(double nu, double x) {
    return std::exp(log_bessel_k(nu, x));
}

bool bessel_k_underflows(double nu, double x) {
    return log_bessel_k(nu, x) < std::log(std::numeric_limits<double>::min());
}

}  // namespace mstates::rmt
