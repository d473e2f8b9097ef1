#pragma once

namespace pnl {

// Standard normal density, CDF, inverse CDF, and bivariate CDF.

double norm_pdf(double x);
double norm_cdf(double x);

// Inverse CDF, Wichura's AS241 (PPND16), accurate to ~1e-16 for p in (0,1).
double norm_ppf(double p);

// P(X < a, Y < b) for standard bivariate normal with correlation rho.
// Genz's rewrite of Drezner-Wesolowsky, absolute accuracy ~5e-16.
double bivar_norm_cdf(double a, double b, double rho);

} // namespace pnl
