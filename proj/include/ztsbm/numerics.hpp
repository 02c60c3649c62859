#pragma once

// Poisson, Skellam and scaled modified-Bessel primitives shared by the solver
// modules. Series are evaluated in log space (one exponentiation per term) and
// truncated by an explicit tail policy, so that prefactors like e^-c stay
// representable for c in the hundreds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ztsbm {

struct PoissonSpec {
  double mean = 0.0;  // >= 0, finite
};

struct SkellamSpec {
  double mean_plus = 0.0;   // lambda_1, mean of the positive component
  double mean_minus = 0.0;  // lambda_2, mean of the subtracted component
};

// eps_tail: probability mass allowed beyond the truncation index.
// k_max_cap <= 0 selects the automatic cap 10*(mean+10).
struct TailPolicy {
  double eps_tail = 1e-12;
  long long k_max_cap = 0;
};

namespace detail {

inline void check_poisson_mean(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::domain_error("poisson mean must be finite and >= 0, got " +
                            std::to_string(mean));
  }
}

inline void check_count(long long k) {
  if (k < 0) throw std::domain_error("poisson count must be >= 0");
}

}  // namespace detail

inline double poisson_log_pmf(double mean, long long k) {
  detail::check_poisson_mean(mean);
  detail::check_count(k);
  if (mean == 0.0) {
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double kd = static_cast<double>(k);
  return -mean + kd * std::log(mean) - std::lgamma(kd + 1.0);
}

inline double poisson_pmf(const PoissonSpec& spec, long long k) {
  return std::exp(poisson_log_pmf(spec.mean, k));
}

// Strict lower tail P(X < k); the k = 0 sum is empty and returns 0 exactly.
inline double poisson_cdf_below(const PoissonSpec& spec, long long k) {
  detail::check_poisson_mean(spec.mean);
  detail::check_count(k);
  if (k == 0) return 0.0;
  if (spec.mean == 0.0) return 1.0;
  const double log_mean = std::log(spec.mean);
  double lp = -spec.mean;  // log pmf at j = 0
  double sum = 0.0;
  for (long long j = 0; j < k; ++j) {
    sum += std::exp(lp);
    lp += log_mean - std::log(static_cast<double>(j) + 1.0);
  }
  return std::min(sum, 1.0);
}

// Smallest k_max whose upper tail mass is below eps_tail, clamped to the cap
// and never below the mean. A zero-mean spec returns 0: all mass sits at k=0,
// so the tail beyond 0 is already empty.
inline long long truncation_bound(const PoissonSpec& spec,
                                  const TailPolicy& policy = {}) {
  detail::check_poisson_mean(spec.mean);
  if (!(policy.eps_tail > 0.0)) {
    throw std::domain_error("eps_tail must be > 0");
  }
  const long long cap =
      policy.k_max_cap > 0
          ? policy.k_max_cap
          : static_cast<long long>(std::ceil(10.0 * (spec.mean + 10.0)));
  if (spec.mean == 0.0) return 0;
  const double log_mean = std::log(spec.mean);
  double lp = -spec.mean;
  double cum = 0.0;
  for (long long k = 0; k < cap; ++k) {
    cum += std::exp(lp);
    if (1.0 - cum < policy.eps_tail && static_cast<double>(k) >= spec.mean) {
      return k;
    }
    lp += log_mean - std::log(static_cast<double>(k) + 1.0);
  }
  return cap;
}

// e^-x I_k(x) for k = 0..k_max by downward (Miller) recurrence, normalized
// with I_0(x) + 2 sum_{k>=1} I_k(x) = e^x. The start order is raised until
// the low-order values are stable to full precision.
inline std::vector<double> bessel_i_scaled_array(double x, int k_max) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error("bessel argument must be finite and >= 0");
  }
  if (k_max < 0) k_max = 0;
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double big = 1e250;
  const int base = std::max(k_max, static_cast<int>(std::ceil(x)));
  int start = base + 40 +
              static_cast<int>(3.0 * std::sqrt(static_cast<double>(base) + 10.0));
  double prev0 = -1.0, prev_top = -1.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    std::fill(out.begin(), out.end(), 0.0);
    double above = 0.0;    // I_{k+1}, unnormalized
    double cur = 1e-280;   // I_k at k = start
    double norm = 0.0;
    for (int k = start; k >= 0; --k) {
      if (k <= k_max) out[static_cast<std::size_t>(k)] = cur;
      norm += (k == 0) ? cur : 2.0 * cur;
      if (k > 0) {
        double below = above + (2.0 * k / x) * cur;  // I_{k-1}
        above = cur;
        cur = below;
        if (cur > big) {
          const double scale = 1.0 / big;
          cur *= scale;
          above *= scale;
          norm *= scale;
          for (auto& v : out) v *= scale;
        }
      }
    }
    for (auto& v : out) v /= norm;
    const double top = out[std::min<std::size_t>(out.size() - 1, 1)];
    if (prev0 >= 0.0 && std::abs(out[0] - prev0) <= 1e-15 * out[0] &&
        std::abs(top - prev_top) <= 1e-14 * (top + 1e-300)) {
      break;
    }
    prev0 = out[0];
    prev_top = top;
    start += start / 2 + 40;
  }
  return out;
}

inline double bessel_i_scaled(int order, double x) {
  if (order < 0) throw std::domain_error("bessel order must be >= 0");
  return bessel_i_scaled_array(x, order)[static_cast<std::size_t>(order)];
}

namespace detail {

inline void check_skellam(const SkellamSpec& s) {
  check_poisson_mean(s.mean_plus);
  check_poisson_mean(s.mean_minus);
}

// Truncated convolution sum_j P_{l1}(k+j) P_{l2}(j); robust for l2 -> 0.
inline double skellam_conv(double l1, double l2, long long k) {
  if (l2 == 0.0) return k >= 0 ? std::exp(poisson_log_pmf(l1, k)) : 0.0;
  if (l1 == 0.0) return k <= 0 ? std::exp(poisson_log_pmf(l2, -k)) : 0.0;
  const TailPolicy tight{1e-15, 0};
  const long long j_lo = std::max<long long>(0, -k);
  const long long j_hi = std::min(truncation_bound({l2}, tight),
                                  truncation_bound({l1}, tight) - k);
  if (j_hi < j_lo) return 0.0;
  const double ll1 = std::log(l1), ll2 = std::log(l2);
  double lp1 = poisson_log_pmf(l1, k + j_lo);
  double lp2 = poisson_log_pmf(l2, j_lo);
  double sum = 0.0;
  for (long long j = j_lo; j <= j_hi; ++j) {
    sum += std::exp(lp1 + lp2);
    lp1 += ll1 - std::log(static_cast<double>(k + j) + 1.0);
    lp2 += ll2 - std::log(static_cast<double>(j) + 1.0);
  }
  return sum;
}

}  // namespace detail

// P(k1 - k2 = k) for independent Poisson k1, k2. Default path is the Poisson
// convolution; arguments are canonicalized (larger mean first) so the swap
// symmetry P(l1,l2,k) = P(l2,l1,-k) holds bit-exactly.
inline double skellam_pmf(const SkellamSpec& s, long long k) {
  detail::check_skellam(s);
  if (s.mean_plus < s.mean_minus ||
      (s.mean_plus == s.mean_minus && k < 0)) {
    return detail::skellam_conv(s.mean_minus, s.mean_plus, -k);
  }
  return detail::skellam_conv(s.mean_plus, s.mean_minus, k);
}

// Bessel-form cross-check path. The (l1/l2)^(k/2) factor is singular when a
// mean vanishes; those cases fall back to the convolution path.
inline double skellam_pmf_bessel(const SkellamSpec& s, long long k) {
  detail::check_skellam(s);
  const double l1 = s.mean_plus, l2 = s.mean_minus;
  if (l1 == 0.0 || l2 == 0.0) return skellam_pmf(s, k);
  const double x = 2.0 * std::sqrt(l1) * std::sqrt(l2);
  const double y = 0.5 * (std::log(l1) - std::log(l2));
  const int a = static_cast<int>(k < 0 ? -k : k);
  const double scaled = bessel_i_scaled_array(x, a)[static_cast<std::size_t>(a)];
  if (scaled <= 0.0) return 0.0;
  return std::exp(std::log(scaled) + (x - l1 - l2) + static_cast<double>(k) * y);
}

// Full pmf table over [-K2, K1] with per-component tail mass below eps.
struct SkellamTable {
  long long k_min = 0;
  std::vector<double> pmf;  // pmf[i] = P(k_min + i)

  double at(long long k) const {
    const long long i = k - k_min;
    if (i < 0 || i >= static_cast<long long>(pmf.size())) return 0.0;
    return pmf[static_cast<std::size_t>(i)];
  }
  long long k_max() const {
    return k_min + static_cast<long long>(pmf.size()) - 1;
  }
};

inline SkellamTable skellam_table(const SkellamSpec& s, double eps = 1e-15) {
  detail::check_skellam(s);
  const TailPolicy pol{eps, 0};
  const long long k1 = truncation_bound({s.mean_plus}, pol);
  const long long k2 = truncation_bound({s.mean_minus}, pol);
  std::vector<double> p1(static_cast<std::size_t>(k1) + 1);
  std::vector<double> p2(static_cast<std::size_t>(k2) + 1);
  for (long long i = 0; i <= k1; ++i) {
    p1[static_cast<std::size_t>(i)] = std::exp(poisson_log_pmf(s.mean_plus, i));
  }
  for (long long j = 0; j <= k2; ++j) {
    p2[static_cast<std::size_t>(j)] = std::exp(poisson_log_pmf(s.mean_minus, j));
  }
  SkellamTable t;
  t.k_min = -k2;
  t.pmf.assign(static_cast<std::size_t>(k1 + k2) + 1, 0.0);
  for (long long i = 0; i <= k1; ++i) {
    for (long long j = 0; j <= k2; ++j) {
      t.pmf[static_cast<std::size_t>(i - j + k2)] +=
          p1[static_cast<std::size_t>(i)] * p2[static_cast<std::size_t>(j)];
    }
  }
  return t;
}

}  // namespace ztsbm
