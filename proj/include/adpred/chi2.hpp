#pragma once

namespace adpred {

// Chi-squared distribution with real df > 0. All functions are pure and
// deterministic; domain violations throw std::domain_error.

// P(X <= x). Throws for x < 0 or df <= 0.
double chi2_cdf(double x, double df);

// P(X > x), computed directly so deep tails keep full relative precision.
double chi2_sf(double x, double df);

// Smallest x with chi2_cdf(x, df) == p, resolved to ~1e-10 relative
// tolerance. p must lie in [0, 1); p == 0 returns 0. For df > 1e5 the
// root-find returns the Wilson-Hilferty value whenever the CDF saturates
// in double precision and no bracket can be established.
double chi2_quantile(double p, double df);

}  // namespace adpred
