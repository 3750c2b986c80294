#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testing {

/// Kolmogorov survival function Q(x) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test, asymptotic p-value with Stephens' correction.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

/// One-sample KS statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Upper-tail p-value of a chi-square statistic.
inline double chi_square_p(double statistic, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), statistic));
}

/// Pearson statistic for observed counts against expected probabilities;
/// cells with expected count below `min_expected` are pooled.
struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

inline ChiSquare chi_square(std::span<const double> observed, std::span<const double> prob, double min_expected = 5.0) {
  double total = 0.0;
  for (double o : observed) total += o;
  ChiSquare r;
  double pool_o = 0.0, pool_e = 0.0;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = prob[i] * total;
    if (e < min_expected) {
      pool_o += observed[i];
      pool_e += e;
      continue;
    }
    r.statistic += (observed[i] - e) * (observed[i] - e) / e;
    ++bins;
  }
  if (pool_e > 0.0) {
    r.statistic += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
    ++bins;
  }
  r.dof = static_cast<double>(bins) - 1.0;
  r.p_value = chi_square_p(r.statistic, r.dof);
  return r;
}

/// Exact Boltzmann weights of every configuration of a 3x3 periodic Ising
/// lattice; bit i of the index is cell i (row-major) pointing up.
inline std::vector<double> boltzmann_3x3(double J, double H, double T) {
  std::vector<double> p(512);
  double z = 0.0;
  for (int conf = 0; conf < 512; ++conf) {
    auto spin = [conf](int r, int c) { return (conf >> (((r + 3) % 3) * 3 + (c + 3) % 3)) & 1 ? 1 : -1; };
    double e = 0.0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        e -= J * spin(r, c) * (spin(r, c + 1) + spin(r + 1, c));
        e -= H * spin(r, c);
      }
    }
    p[static_cast<std::size_t>(conf)] = std::exp(-e / T);
    z += p[static_cast<std::size_t>(conf)];
  }
  for (double& x : p) x /= z;
  return p;
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace testing
