#pragma once

namespace mstates::rmt {

/// log K_nu(x) for the modified Bessel function of the second kind.
///
/// Valid for x > 0 and any real order (K_{-nu} = K_nu). Works entirely with
/// scaled quantities, so the result is finite where K_nu itself would
/// overflow (large order, small argument) or underflow (large argument).
/// Relative accuracy of K is ~1e-14 for |nu| <= 200 and 1e-6 <= x <= 700.
double log_bessel_k(double nu, double x);

/// K_nu(x); returns 0 when the value underflows a double.
double bessel_k(double nu, double x);

/// True if K_nu(x) is below the smallest normal double.
bool bessel_k_underflows(double nu, double x);

}  // namespace mstates::rmt
