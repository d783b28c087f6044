#include "adpred/chi2.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adpred {
namespace {

constexpr double kEps = 1.0e-16;
constexpr long kMaxIter = 1000000;
constexpr double kBig = 4.503599627370496e15;
constexpr double kBigInv = 2.22044604925031308085e-16;
// exp() underflows to 0 below this; decide saturated tails by comparing z to a
constexpr double kMinLogArg = -745.0;

// log of the prefactor z^a e^-z / Gamma(a) shared by both expansions
double log_prefactor(double a, double z) {
  return a * std::log(z) - z - std::lgamma(a);
}

// regularized lower incomplete gamma P(a, z), series expansion, valid z < a + 1
double gamma_p_series(double a, double z) {
  if (z <= 0.0) return 0.0;
  double lp = log_prefactor(a, z);
  if (lp < kMinLogArg) return z < a ? 0.0 : 1.0;
  double ax = std::exp(lp);
  double r = a;
  double c = 1.0;
  double ans = 1.0;
  for (long i = 0; i < kMaxIter; ++i) {
    r += 1.0;
    c *= z / r;
    ans += c;
    if (c <= ans * kEps) break;
  }
  return ans * ax / a;
}

// regularized upper incomplete gamma Q(a, z), continued fraction, valid z >= a + 1
double gamma_q_cf(double a, double z) {
  double lp = log_prefactor(a, z);
  if (lp < kMinLogArg) return z > a ? 0.0 : 1.0;
  double ax = std::exp(lp);
  double y = 1.0 - a;
  double v = z + y + 1.0;
  double c = 0.0;
  double pkm2 = 1.0;
  double qkm2 = z;
  double pkm1 = z + 1.0;
  double qkm1 = v * z;
  double ans = pkm1 / qkm1;
  for (long i = 0; i < kMaxIter; ++i) {
    c += 1.0;
    y += 1.0;
    v += 2.0;
    double yc = y * c;
    double pk = pkm1 * v - pkm2 * yc;
    double qk = qkm1 * v - qkm2 * yc;
    double t = 1.0;
    if (qk != 0.0) {
      double r = pk / qk;
      t = std::fabs((ans - r) / r);
      ans = r;
    }
    pkm2 = pkm1;
    pkm1 = pk;
    qkm2 = qkm1;
    qkm1 = qk;
    if (std::fabs(pk) > kBig) {
      pkm2 *= kBigInv;
      pkm1 *= kBigInv;
      qkm2 *= kBigInv;
      qkm1 *= kBigInv;
    }
    if (t <= kEps) break;
  }
  return ans * ax;
}

void check_domain(double x, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw std::domain_error("chi2: df out of domain (must be > 0)");
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error("chi2: x out of domain (must be >= 0)");
  }
}

// Acklam's rational approximation to the standard normal quantile; only used
// to seed the chi-squared root-find, which then refines against chi2_cdf.
double normal_quantile(double p) {
  static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    return (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
           (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
         ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
}

double wilson_hilferty(double p, double df) {
  double z = normal_quantile(p);
  double h = 2.0 / (9.0 * df);
  double t = 1.0 - h + z * std::sqrt(h);
  if (t <= 0.0) {
    // deep lower tail where the cube approximation collapses; tiny positive
    // seed keeps the bracket search on its feet
    return df * 1e-12;
  }
  return df * t * t * t;
}

double chi2_pdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  double a = 0.5 * df;
  double lp = (a - 1.0) * std::log(0.5 * x) - 0.5 * x - std::lgamma(a);
  if (lp < kMinLogArg) return 0.0;
  return 0.5 * std::exp(lp);
}

}  // namespace

double chi2_cdf(double x, double df) {
  check_domain(x, df);
  if (x == 0.0) return 0.0;
  double a = 0.5 * df;
  double z = 0.5 * x;
  if (z < a + 1.0) return gamma_p_series(a, z);
  return 1.0 - gamma_q_cf(a, z);
}

double chi2_sf(double x, double df) {
  check_domain(x, df);
  if (x == 0.0) return 1.0;
  double a = 0.5 * df;
  double z = 0.5 * x;
  if (z < a + 1.0) return 1.0 - gamma_p_series(a, z);
  return gamma_q_cf(a, z);
}

double chi2_quantile(double p, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw std::domain_error("chi2: df out of domain (must be > 0)");
  }
  if (!(p >= 0.0) || !(p < 1.0)) {
    throw std::domain_error("chi2: p out of domain (must be in [0, 1))");
  }
  if (p == 0.0) return 0.0;

  double x = wilson_hilferty(p, df);
  if (!(x > 0.0) || !std::isfinite(x)) x = df;

  // establish a bracket [lo, hi] with cdf(lo) <= p <= cdf(hi)
  double lo = x, hi = x;
  double f = chi2_cdf(x, df);
  int expand = 0;
  const int kMaxExpand = 2200;
  if (f < p) {
    for (; expand < kMaxExpand && f < p; ++expand) {
      lo = hi;
      hi *= 2.0;
      f = chi2_cdf(hi, df);
    }
  } else {
    for (; expand < kMaxExpand && f > p; ++expand) {
      hi = lo;
      lo *= 0.5;
      f = chi2_cdf(lo, df);
    }
  }
  if (expand >= kMaxExpand) {
    // documented fallback: for very large df the CDF saturates in double
    // precision before a bracket forms; return the deterministic seed
    if (df > 1e5) return wilson_hilferty(p, df);
    throw std::runtime_error("chi2_quantile: failed to bracket root");
  }

  // safeguarded Newton: bisect whenever the Newton step leaves the bracket
  for (int it = 0; it < 200; ++it) {
    double width = hi - lo;
    if (width <= 1e-11 * std::max(hi, 1e-300)) break;
    double fx = chi2_cdf(x, df);
    if (fx == p) break;
    if (fx < p) lo = std::max(lo, x); else hi = std::min(hi, x);
    double d = chi2_pdf(x, df);
    double step_x = d > 0.0 ? x - (fx - p) / d : lo - 1.0;
    if (step_x <= lo || step_x >= hi || !std::isfinite(step_x)) {
      step_x = 0.5 * (lo + hi);
    }
    x = step_x;
  }
  return x;
}

}  // namespace adpred
