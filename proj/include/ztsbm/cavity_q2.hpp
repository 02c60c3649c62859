#pragma once

// Closed-form two-group analysis: fixed-point maps for the (m, q_tilde)
// system without tiebreaking, the one-parameter magnetization map with
// tiebreaking, and the detectability thresholds of both variants.
//
// Every map is evaluated on two independent routes, a Skellam convolution
// table and a scaled-Bessel series; tests pin their agreement to 1e-10.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "ztsbm/numerics.hpp"

namespace ztsbm {

// Two groups: average degree c = alpha + gamma, structure strength
// delta = alpha - gamma.
struct Q2Params {
  double c;
  double delta;

  Q2Params(double c_, double delta_) : c(c_), delta(delta_) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("q2: c must be positive and finite");
    }
    if (!(delta >= 0.0) || !(delta <= c)) {
      throw std::invalid_argument("q2: need 0 <= delta <= c");
    }
  }
  double alpha() const { return 0.5 * (c + delta); }
  double gamma() const { return 0.5 * (c - delta); }
};

// Magnetization m = eta_plus - eta_minus and Edwards-Anderson parameter
// q_tilde = eta_plus + eta_minus.
struct Q2State {
  double m;
  double q_tilde;

  Q2State(double m_, double q_tilde_) : m(m_), q_tilde(q_tilde_) {
    if (!(std::abs(m) <= q_tilde + 1e-15) || !(q_tilde <= 1.0 + 1e-15)) {
      throw std::invalid_argument("q2: need |m| <= q_tilde <= 1");
    }
  }
  double eta_plus() const { return 0.5 * (q_tilde + m); }
  double eta_minus() const { return 0.5 * (q_tilde - m); }
  double eta_zero() const { return 1.0 - q_tilde; }
};

// Poisson means of the aligned and misaligned vote counts;
// lambda_1 + lambda_2 = c q_tilde and lambda_1 - lambda_2 = delta m.
inline std::pair<double, double> lambdas_q2(const Q2Params& p,
                                            const Q2State& s) {
  const double l1 = p.alpha() * s.eta_plus() + p.gamma() * s.eta_minus();
  const double l2 = p.alpha() * s.eta_minus() + p.gamma() * s.eta_plus();
  return {l1, l2};
}

// One step of the no-tiebreak map: the margin k = k1 - k2 is Skellam, the
// image has 1 - q_tilde' = P(0) and m' = P(k > 0) - P(k < 0).
inline Q2State rhs_no_tiebreak(const Q2Params& p, const Q2State& s) {
  if (s.q_tilde == 0.0) return {0.0, 0.0};
  const auto [l1, l2] = lambdas_q2(p, s);
  const SkellamTable t = skellam_table({l1, l2});
  double pos = 0.0, neg = 0.0;
  for (long long k = t.k_max(); k >= 1; --k) pos += t.at(k);
  for (long long k = t.k_min; k <= -1; ++k) neg += t.at(k);
  return {pos - neg, 1.0 - t.at(0)};
}

// Same map through the scaled-Bessel series
//   1 - q_tilde' = e^{-c q_tilde} I_0(x),
//   m' = 2 e^{-c q_tilde} sum_{k>=1} I_k(x) sinh(k y),
// with x = 2 sqrt(l1 l2) and y = atanh(delta m / (c q_tilde)). The series is
// singular as a ratio form when a mean vanishes; that case falls back to the
// convolution route.
inline Q2State rhs_no_tiebreak_bessel(const Q2Params& p, const Q2State& s) {
  if (s.q_tilde == 0.0) return {0.0, 0.0};
  const auto [l1, l2] = lambdas_q2(p, s);
  if (l1 < 1e-12 || l2 < 1e-12) return rhs_no_tiebreak(p, s);
  const double total = l1 + l2;
  const double x = 2.0 * std::sqrt(l1) * std::sqrt(l2);
  const double y = 0.5 * (std::log(l1) - std::log(l2));
  const long long k_hi =
      truncation_bound({std::max(l1, l2)}, {1e-15, 0}) + 10;
  const auto scaled = bessel_i_scaled_array(x, static_cast<int>(k_hi));
  const double q_new = 1.0 - std::exp(x - total) * scaled[0];
  double m_new = 0.0;
  for (long long k = k_hi; k >= 1; --k) {
    const double v = scaled[static_cast<std::size_t>(k)];
    if (v <= 0.0) continue;
    const double base = std::log(v) + (x - total);
    m_new += std::exp(base + k * y) - std::exp(base - k * y);
  }
  return {m_new, q_new};
}

// Largest root in [0, 1] of 1 - q_tilde = e^{-c q_tilde} I_0(c q_tilde).
// q_tilde = 0 always solves it; a sign scan at 1e-3 resolution locates the
// nontrivial branch before bisection, so the trivial root is not returned
// when a positive one exists.
inline double solve_q_tilde(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("q2: c must be positive");
  const auto f = [c](double t) { return (1.0 - t) - bessel_i_scaled(0, c * t); };
  const double step = 1e-3;
  double lo = 0.0, hi = 0.0;
  double prev_t = 1e-6, prev_f = f(prev_t);
  for (double t = prev_t + step; t <= 1.0 + 0.5 * step; t += step) {
    const double cur_t = std::min(t, 1.0);
    const double cur_f = f(cur_t);
    if (prev_f == 0.0) {
      lo = hi = prev_t;
    } else if ((prev_f > 0.0) != (cur_f > 0.0)) {
      lo = prev_t;
      hi = cur_t;
    }
    prev_t = cur_t;
    prev_f = cur_f;
  }
  if (hi == 0.0 && lo == 0.0) return 0.0;
  if (hi == lo) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) < 1e-12 || hi - lo < 1e-16) return mid;
    if ((fm > 0.0) == (f(lo) > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// delta_c = e^{c q_tilde} / (I_0(c q_tilde) + I_1(c q_tilde)), evaluated with
// scaled Bessels; empty when only the trivial q_tilde = 0 exists (c <= 1).
inline std::optional<double> threshold_no_tiebreak(double c) {
  const double qt = solve_q_tilde(c);
  if (qt <= 0.0) return std::nullopt;
  const auto scaled = bessel_i_scaled_array(c * qt, 1);
  return 1.0 / (scaled[0] + scaled[1]);
}

// delta_c = e^c / (I_0(c) + I_1(c)): the no-tiebreak expression with
// q_tilde pinned to 1.
inline double threshold_tiebreak(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("q2: c must be positive");
  const auto scaled = bessel_i_scaled_array(c, 1);
  return 1.0 / (scaled[0] + scaled[1]);
}

// Tiebreaking map for the magnetization: q_tilde = 1, so the vote margin is
// Skellam with means (c +- delta m)/2 and m' = P(k > 0) - P(k < 0).
inline double rhs_tiebreak_m(const Q2Params& p, double m) {
  if (!(std::abs(m) <= 1.0)) {
    throw std::invalid_argument("q2: need |m| <= 1");
  }
  const double l1 = 0.5 * (p.c + p.delta * m);
  const double l2 = 0.5 * (p.c - p.delta * m);
  const SkellamTable t = skellam_table({l1, l2});
  double pos = 0.0, neg = 0.0;
  for (long long k = t.k_max(); k >= 1; --k) pos += t.at(k);
  for (long long k = t.k_min; k <= -1; ++k) neg += t.at(k);
  return pos - neg;
}

// Bessel-series route of the same map: m' = 2 e^{-c} sum I_k(x) sinh(k y)
// with x = sqrt(c^2 - delta^2 m^2), y = atanh(delta m / c).
inline double rhs_tiebreak_m_bessel(const Q2Params& p, double m) {
  if (!(std::abs(m) <= 1.0)) {
    throw std::invalid_argument("q2: need |m| <= 1");
  }
  const double l1 = 0.5 * (p.c + p.delta * m);
  const double l2 = 0.5 * (p.c - p.delta * m);
  if (l1 < 1e-12 || l2 < 1e-12) return rhs_tiebreak_m(p, m);
  const double x = 2.0 * std::sqrt(l1) * std::sqrt(l2);
  const double y = 0.5 * (std::log(l1) - std::log(l2));
  const long long k_hi =
      truncation_bound({std::max(l1, l2)}, {1e-15, 0}) + 10;
  const auto scaled = bessel_i_scaled_array(x, static_cast<int>(k_hi));
  double m_new = 0.0;
  for (long long k = k_hi; k >= 1; --k) {
    const double v = scaled[static_cast<std::size_t>(k)];
    if (v <= 0.0) continue;
    const double base = std::log(v) + (x - p.c);
    m_new += std::exp(base + k * y) - std::exp(base - k * y);
  }
  return m_new;
}

// Slope of the tiebreaking map at m = 0: delta (I_0(c) + I_1(c)) e^{-c}.
// The threshold is where this equals 1.
inline double tiebreak_slope_at_zero(const Q2Params& p) {
  const auto scaled = bessel_i_scaled_array(p.c, 1);
  return p.delta * (scaled[0] + scaled[1]);
}

struct Q2FixedPoint {
  double m = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Nonnegative fixed point of the tiebreaking map reached from m0: damped
// iteration (damping 0.5) followed by bisection refinement on g(m) - m,
// which keeps the solver stable near tangency.
inline Q2FixedPoint tiebreak_fixed_point(const Q2Params& p, double m0 = 0.01) {
  double m = m0;
  int it = 0;
  for (; it < 200000; ++it) {
    const double next = 0.5 * m + 0.5 * rhs_tiebreak_m(p, m);
    const double change = std::abs(next - m);
    m = std::min(1.0, std::max(0.0, next));
    if (change < 1e-13) break;
  }
  const auto h = [&](double v) { return rhs_tiebreak_m(p, v) - v; };
  double lo = std::max(0.0, m - 1e-3);
  double hi = std::min(1.0, m + 1e-3);
  if ((h(lo) > 0.0) != (h(hi) > 0.0)) {
    for (int b = 0; b < 100; ++b) {
      const double mid = 0.5 * (lo + hi);
      if ((h(mid) > 0.0) == (h(lo) > 0.0)) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++it;
    }
    m = 0.5 * (lo + hi);
  }
  return {m, h(m), it};
}

// c solving threshold_tiebreak(c) = c: below this degree the tiebreaking
// variant cannot detect even fully separated groups (delta = c).
inline double tiebreak_threshold_crossing() {
  const auto h = [](double c) { return threshold_tiebreak(c) - c; };
  double lo = 1.0, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((h(mid) > 0.0) == (h(lo) > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ztsbm
