#pragma once

// General-q fixed-point analysis with tiebreaking: the update map g(eta), its
// analytic derivative, the two detectability thresholds, the one-dimensional
// flow, and the semisupervised extensions (revealed fraction rho, tiebreak
// weight beta).

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ztsbm/numerics.hpp"

namespace ztsbm {

// How a tiebreak weight beta > 1 on the correct label is turned into a win
// probability among n+1 tied labels. The normalized rule beta/(beta+n) is a
// proper probability for all n; the literal rule min(1, beta/(n+1)) keeps the
// published form of the biased update.
enum class TiebreakMode { normalized, literal };

inline double tiebreak_win_probability(double beta, int n_tied_wrong,
                                       TiebreakMode mode) {
  if (beta == 1.0) return 1.0 / (n_tied_wrong + 1.0);
  if (mode == TiebreakMode::normalized) return beta / (beta + n_tied_wrong);
  return std::min(1.0, beta / (n_tied_wrong + 1.0));
}

// Full parameter point of the phase diagram. Assortative region only:
// gamma = (c - delta)/q >= 0 and alpha = (c + (q-1) delta)/q.
struct ModelParams {
  int q = 2;
  double c = 1.0;
  double delta = 0.0;
  double rho = 0.0;   // revealed fraction
  double beta = 1.0;  // tiebreak weight on the correct label
  TiebreakMode beta_mode = TiebreakMode::normalized;

  double gamma() const { return (c - delta) / q; }
  double alpha() const { return (c + (q - 1) * delta) / q; }

  void validate() const {
    if (q < 2) throw std::invalid_argument("model: q must be >= 2");
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("model: c must be positive and finite");
    }
    if (!(delta >= 0.0) || !(delta <= c)) {
      throw std::invalid_argument("model: need 0 <= delta <= c");
    }
    if (!(rho >= 0.0) || !(rho <= 1.0)) {
      throw std::invalid_argument("model: need 0 <= rho <= 1");
    }
    if (!(beta >= 1.0)) throw std::invalid_argument("model: need beta >= 1");
  }
};

// Poisson means of the own-label count and of each wrong-label count. With a
// revealed fraction rho the incoming messages are a (rho, 1-rho) mixture of
// clamped-correct and pool messages, which thins the means to
// rho*alpha + (1-rho)*lambda_1 and rho*gamma + (1-rho)*lambda_2.
inline std::pair<double, double> lambdas_general(const ModelParams& p,
                                                 double eta_plus) {
  const double l1 = p.gamma() + p.delta * eta_plus;
  const double l2 = (p.c - p.gamma() - p.delta * eta_plus) / (p.q - 1);
  if (p.rho == 0.0) return {l1, l2};
  return {p.rho * p.alpha() + (1.0 - p.rho) * l1,
          p.rho * p.gamma() + (1.0 - p.rho) * l2};
}

namespace detail {

// Shared per-(params, eta) tables: Poisson pmfs of both means and the strict
// lower tail of the wrong-label count, up to the truncation index of the
// own-label mean plus one guard slot for k-1 shifts.
struct GEval {
  double l1 = 0.0, l2 = 0.0;
  long long k_hi = 0;
  std::vector<double> p1, p2, q2;  // indexed 0..k_hi+1
};

inline GEval g_tables(const ModelParams& p, double eta_plus) {
  GEval t;
  const auto l = lambdas_general(p, eta_plus);
  t.l1 = l.first;
  t.l2 = l.second;
  t.k_hi = truncation_bound({std::max(t.l1, t.l2)}, {1e-13, 0}) + 2;
  const std::size_t n = static_cast<std::size_t>(t.k_hi) + 2;
  t.p1.assign(n, 0.0);
  t.p2.assign(n, 0.0);
  t.q2.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    t.p1[k] = std::exp(poisson_log_pmf(t.l1, static_cast<long long>(k)));
    t.p2[k] = std::exp(poisson_log_pmf(t.l2, static_cast<long long>(k)));
  }
  for (std::size_t k = 1; k < n; ++k) t.q2[k] = t.q2[k - 1] + t.p2[k - 1];
  for (std::size_t k = 0; k < n; ++k) t.q2[k] = std::min(t.q2[k], 1.0);
  return t;
}

inline std::vector<double> binomials(int q_minus_1) {
  std::vector<double> b(static_cast<std::size_t>(q_minus_1) + 1, 1.0);
  for (int n = 1; n <= q_minus_1; ++n) {
    b[static_cast<std::size_t>(n)] =
        b[static_cast<std::size_t>(n - 1)] * (q_minus_1 - n + 1) / n;
  }
  return b;
}

}  // namespace detail

// Probability that exactly n of the q-1 wrong-label counts equal k while the
// remaining q-1-n stay below k.
inline double pbar(const ModelParams& p, double eta_plus, long long k, int n) {
  p.validate();
  if (k < 0) throw std::domain_error("pbar: k must be >= 0");
  if (n < 0 || n > p.q - 1) throw std::domain_error("pbar: need 0 <= n <= q-1");
  const auto [l1, l2] = lambdas_general(p, eta_plus);
  (void)l1;
  const double pk = std::exp(poisson_log_pmf(l2, k));
  const double qk = poisson_cdf_below({l2}, k);
  const auto binom = detail::binomials(p.q - 1);
  return binom[static_cast<std::size_t>(n)] * std::pow(pk, n) *
         std::pow(qk, p.q - 1 - n);
}

// Update map: probability that the refreshed message is correct. The own
// count k wins outright against all q-1 wrong counts, or ties n of them and
// survives the tiebreak.
inline double g(const ModelParams& p, double eta_plus) {
  p.validate();
  if (!(eta_plus >= 0.0) || !(eta_plus <= 1.0)) {
    throw std::invalid_argument("g: eta_plus must lie in [0, 1]");
  }
  const auto t = detail::g_tables(p, eta_plus);
  const int qm1 = p.q - 1;
  const auto binom = detail::binomials(qm1);
  std::vector<double> weight(static_cast<std::size_t>(qm1) + 1);
  for (int n = 0; n <= qm1; ++n) {
    weight[static_cast<std::size_t>(n)] =
        tiebreak_win_probability(p.beta, n, p.beta_mode);
  }
  std::vector<double> qpow(static_cast<std::size_t>(qm1) + 1);
  double total = 0.0;
  for (long long k = 0; k <= t.k_hi; ++k) {
    const double pk = t.p2[static_cast<std::size_t>(k)];
    const double qk = t.q2[static_cast<std::size_t>(k)];
    qpow[0] = 1.0;
    for (int i = 1; i <= qm1; ++i) qpow[static_cast<std::size_t>(i)] =
        qpow[static_cast<std::size_t>(i - 1)] * qk;
    double s = 0.0;
    double ppow = 1.0;
    for (int n = 0; n <= qm1; ++n) {
      s += weight[static_cast<std::size_t>(n)] *
           binom[static_cast<std::size_t>(n)] * ppow *
           qpow[static_cast<std::size_t>(qm1 - n)];
      ppow *= pk;
    }
    total += t.p1[static_cast<std::size_t>(k)] * s;
  }
  return total;
}

// Analytic d g / d eta via d lambda_1/d eta = (1-rho) delta,
// d lambda_2/d eta = -(1-rho) delta/(q-1) and the Poisson identities
// dP(k)/dl = P(k-1) - P(k), dQ(k)/dl = -P(k-1).
inline double g_prime(const ModelParams& p, double eta_plus) {
  p.validate();
  if (!(eta_plus >= 0.0) || !(eta_plus <= 1.0)) {
    throw std::invalid_argument("g_prime: eta_plus must lie in [0, 1]");
  }
  const auto t = detail::g_tables(p, eta_plus);
  const int qm1 = p.q - 1;
  const auto binom = detail::binomials(qm1);
  const double dl1 = (1.0 - p.rho) * p.delta;
  const double dl2 = -(1.0 - p.rho) * p.delta / qm1;
  std::vector<double> weight(static_cast<std::size_t>(qm1) + 1);
  for (int n = 0; n <= qm1; ++n) {
    weight[static_cast<std::size_t>(n)] =
        tiebreak_win_probability(p.beta, n, p.beta_mode);
  }
  std::vector<double> qpow(static_cast<std::size_t>(qm1) + 1);
  double total = 0.0;
  for (long long k = 0; k <= t.k_hi; ++k) {
    const double pk = t.p2[static_cast<std::size_t>(k)];
    const double qk = t.q2[static_cast<std::size_t>(k)];
    const double pk_prev = k >= 1 ? t.p2[static_cast<std::size_t>(k - 1)] : 0.0;
    const double dpk = pk_prev - pk;  // dP_{l2}(k)/dl2
    const double dqk = -pk_prev;      // dQ_{l2}(k)/dl2
    qpow[0] = 1.0;
    for (int i = 1; i <= qm1; ++i) qpow[static_cast<std::size_t>(i)] =
        qpow[static_cast<std::size_t>(i - 1)] * qk;
    double s = 0.0, ds = 0.0;
    double ppow = 1.0;       // pk^n
    double ppow_prev = 0.0;  // pk^(n-1)
    for (int n = 0; n <= qm1; ++n) {
      const double w = weight[static_cast<std::size_t>(n)] *
                       binom[static_cast<std::size_t>(n)];
      s += w * ppow * qpow[static_cast<std::size_t>(qm1 - n)];
      if (n >= 1) {
        ds += w * n * ppow_prev * dpk * qpow[static_cast<std::size_t>(qm1 - n)];
      }
      if (qm1 - n >= 1) {
        ds += w * ppow * (qm1 - n) * qpow[static_cast<std::size_t>(qm1 - n - 1)] *
              dqk;
      }
      ppow_prev = ppow;
      ppow *= pk;
    }
    const double p1k = t.p1[static_cast<std::size_t>(k)];
    const double dp1 = (k >= 1 ? t.p1[static_cast<std::size_t>(k - 1)] : 0.0) -
                       p1k;
    total += dp1 * dl1 * s + p1k * ds * dl2;
  }
  return total;
}

// A located root of g(eta) = eta with its local stability.
struct FixedPoint {
  double eta = 0.0;
  double residual = 0.0;
  double g_prime = 0.0;
  bool stable = false;
  int iterations = 0;
};

// All roots of g(eta) = eta on [1/q, 1], by sign scan at 1e-3 resolution and
// bisection to residual < 1e-10. The symmetric point 1/q is a root only in
// the unbiased case (rho = 0, beta = 1); it is never assumed otherwise.
inline std::vector<FixedPoint> solve_fixed_points(const ModelParams& p) {
  p.validate();
  const double lo = 1.0 / p.q;
  const auto h = [&](double e) { return g(p, e) - e; };

  std::vector<std::pair<double, int>> roots;  // (eta, iterations)
  const double h_lo = h(lo);
  if (p.rho == 0.0 && p.beta == 1.0 && std::abs(h_lo) < 1e-11) {
    roots.emplace_back(lo, 0);
  }
  const double step = 1e-3;
  double a = lo, ha = h_lo;
  while (a < 1.0) {
    const double b = std::min(a + step, 1.0);
    const double hb = h(b);
    if ((ha > 0.0) != (hb > 0.0)) {
      double x0 = a, x1 = b, hx0 = ha;
      int it = 0;
      double mid = 0.5 * (x0 + x1);
      for (; it < 200; ++it) {
        mid = 0.5 * (x0 + x1);
        const double hm = h(mid);
        if (std::abs(hm) < 1e-10 || x1 - x0 < 1e-15) break;
        if ((hm > 0.0) == (hx0 > 0.0)) {
          x0 = mid;
          hx0 = hm;
        } else {
          x1 = mid;
        }
      }
      roots.emplace_back(mid, it);
    } else if (hb == 0.0 && b < 1.0) {
      roots.emplace_back(b, 0);
    }
    a = b;
    ha = hb;
  }

  std::vector<FixedPoint> out;
  for (const auto& [eta, its] : roots) {
    if (!out.empty() && std::abs(out.back().eta - eta) < 1e-6) continue;
    FixedPoint fp;
    fp.eta = eta;
    fp.residual = h(eta);
    fp.g_prime = g_prime(p, eta);
    fp.stable = fp.g_prime < 1.0;
    fp.iterations = its;
    out.push_back(fp);
  }
  return out;
}

struct DeltaC2Result {
  double delta = 0.0;
  double residual = 0.0;      // |g'(1/q) - 1| at the returned delta
  bool slope_monotone = true; // coarse-grid check of d g'(1/q)/d delta > 0
};

// Instability threshold of the symmetric point: the delta in (0, c] where
// g'(1/q) = 1. Empty when the symmetric point stays stable for every
// admissible delta.
inline std::optional<DeltaC2Result> delta_c2(const ModelParams& base) {
  base.validate();
  if (base.rho != 0.0 || base.beta != 1.0) {
    throw std::invalid_argument(
        "delta_c2: the symmetric point exists only for rho = 0, beta = 1");
  }
  const double lo_eta = 1.0 / base.q;
  const auto slope = [&](double d) {
    ModelParams p = base;
    p.delta = d;
    return g_prime(p, lo_eta);
  };

  const int n_grid = 33;
  bool monotone = true;
  double prev = slope(0.0);
  double bracket_lo = 0.0, bracket_hi = -1.0;
  for (int i = 1; i < n_grid; ++i) {
    const double d = base.c * i / (n_grid - 1);
    const double s = slope(d);
    if (s < prev - 1e-9) monotone = false;
    if (bracket_hi < 0.0 && prev < 1.0 && s >= 1.0) {
      bracket_lo = base.c * (i - 1) / (n_grid - 1);
      bracket_hi = d;
    }
    prev = s;
  }
  if (bracket_hi < 0.0) return std::nullopt;

  double lo = bracket_lo, hi = bracket_hi;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double s = slope(mid);
    if (std::abs(s - 1.0) < 1e-9 || hi - lo < 1e-13) break;
    if (s < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return DeltaC2Result{mid, std::abs(slope(mid) - 1.0), monotone};
}

// Spinodal of the accurate branch: the smallest delta at which a second root
// eta_2 > 1/q exists, located by bisection on root existence and polished by
// a two-dimensional Newton iteration on the tangency system
// (g(eta) - eta, g'(eta) - 1). first_order records whether the tangency
// accuracy clears 1/q by more than the 1e-4 existence margin; at q = 2 the
// transition is continuous and the tangency collapses onto (delta_c2, 1/q).
struct SpinodalResult {
  double delta = 0.0;
  double eta2 = 0.0;
  bool first_order = false;
  double residual = 0.0;
  int iterations = 0;
};

inline std::optional<SpinodalResult> delta_c1(const ModelParams& base) {
  base.validate();
  if (base.rho != 0.0 || base.beta != 1.0) {
    throw std::invalid_argument(
        "delta_c1: defined for the unbiased model (rho = 0, beta = 1)");
  }
  const double lo_eta = 1.0 / base.q;
  const double margin = 1e-4;
  const auto second_roots = [&](double d) {
    ModelParams p = base;
    p.delta = d;
    std::vector<double> rs;
    for (const auto& fp : solve_fixed_points(p)) {
      if (fp.eta > lo_eta + margin) rs.push_back(fp.eta);
    }
    return rs;
  };

  if (second_roots(base.c).empty()) return std::nullopt;

  double lo = 0.0, hi = base.c;
  std::vector<double> hi_roots = second_roots(hi);
  int iters = 0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    auto rs = second_roots(mid);
    if (rs.empty()) {
      lo = mid;
    } else {
      hi = mid;
      hi_roots = rs;
    }
    ++iters;
  }

  // tangency guess: the newborn pair straddles the tangent point
  double eta_guess = hi_roots.front();
  if (hi_roots.size() >= 2) eta_guess = 0.5 * (hi_roots[0] + hi_roots[1]);
  double d_cur = hi, e_cur = eta_guess;

  const auto F = [&](double d, double e, double& f1, double& f2) {
    ModelParams p = base;
    p.delta = d;
    f1 = g(p, e) - e;
    f2 = g_prime(p, e) - 1.0;
  };
  bool newton_ok = false;
  double f1 = 0.0, f2 = 0.0;
  for (int it = 0; it < 60; ++it) {
    ++iters;
    F(d_cur, e_cur, f1, f2);
    if (std::abs(f1) < 1e-11 && std::abs(f2) < 1e-11) {
      newton_ok = true;
      break;
    }
    const double hd = 1e-6 * std::max(1.0, d_cur);
    const double he = 1e-6;
    double f1p, f2p, f1m, f2m;
    F(d_cur + hd, e_cur, f1p, f2p);
    F(d_cur - hd, e_cur, f1m, f2m);
    const double j11 = (f1p - f1m) / (2.0 * hd);  // dF1/dd
    const double j21 = (f2p - f2m) / (2.0 * hd);  // dF2/dd
    F(d_cur, std::min(1.0, e_cur + he), f1p, f2p);
    F(d_cur, std::max(0.0, e_cur - he), f1m, f2m);
    const double j12 = (f1p - f1m) / (2.0 * he);  // dF1/de
    const double j22 = (f2p - f2m) / (2.0 * he);  // dF2/de
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    double dd = -(f1 * j22 - f2 * j12) / det;
    double de = -(j11 * f2 - j21 * f1) / det;
    const double cap_d = 0.1 * base.c, cap_e = 0.1;
    if (std::abs(dd) > cap_d) dd = std::copysign(cap_d, dd);
    if (std::abs(de) > cap_e) de = std::copysign(cap_e, de);
    d_cur += dd;
    e_cur += de;
    d_cur = std::min(std::max(d_cur, 0.0), base.c);
    e_cur = std::min(std::max(e_cur, lo_eta - 1e-3), 1.0);
  }

  SpinodalResult res;
  if (newton_ok && e_cur >= lo_eta - 1e-6) {
    res.delta = d_cur;
    res.eta2 = std::max(e_cur, lo_eta);
    res.residual = std::max(std::abs(f1), std::abs(f2));
  } else {
    res.delta = hi;
    res.eta2 = eta_guess;
    F(res.delta, res.eta2, f1, f2);
    res.residual = std::max(std::abs(f1), std::abs(f2));
  }
  res.first_order = res.eta2 > lo_eta + margin;
  res.iterations = iters;
  return res;
}

// Explicit-Euler trajectory of d eta/dt = g(eta) - eta.
struct FlowResult {
  std::vector<double> trajectory;
  double terminal = 0.0;
  double residual = 0.0;
  bool converged = false;
};

inline FlowResult flow(const ModelParams& p, double eta0, double t_max = 1e4,
                       double dt = 0.1) {
  p.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("flow: dt must be positive");
  const long long max_steps =
      std::min<long long>(static_cast<long long>(t_max / dt), 100000);
  FlowResult res;
  double e = eta0;
  res.trajectory.push_back(e);
  double r = g(p, e) - e;
  for (long long s = 0; s < max_steps; ++s) {
    if (std::abs(r) < 1e-12) {
      res.converged = true;
      break;
    }
    e = std::min(1.0, std::max(0.0, e + dt * r));
    res.trajectory.push_back(e);
    r = g(p, e) - e;
  }
  res.terminal = e;
  res.residual = r;
  return res;
}

// Flow limit with a Newton polish on g(eta) - eta once the Euler iteration
// has settled; used to select branches in sweeps.
inline double flow_limit(const ModelParams& p, double eta0,
                         long long max_steps = 1000000) {
  p.validate();
  double e = eta0;
  double r = g(p, e) - e;
  const double dt = 0.1;
  for (long long s = 0; s < max_steps && std::abs(r) >= 1e-12; ++s) {
    e = std::min(1.0, std::max(0.0, e + dt * r));
    r = g(p, e) - e;
    // hand over to Newton early once a genuine root is near
    if ((s & 127) == 0 && std::abs(r) < 1e-8 &&
        std::abs(g_prime(p, e) - 1.0) > 1e-3) {
      break;
    }
  }
  for (int it = 0; it < 4; ++it) {
    const double gp = g_prime(p, e) - 1.0;
    if (std::abs(gp) < 1e-4) break;
    const double next = e - (g(p, e) - e) / gp;
    if (!(next >= 0.0) || !(next <= 1.0)) break;
    e = next;
  }
  return e;
}

// Saddle-node of the lower branch in rho at fixed (q, c, delta): the critical
// revealed fraction where the count of stable fixed points drops below two.
// Empty when the accuracy is continuous in rho (no bistable window).
inline std::optional<double> rho_critical(const ModelParams& base) {
  base.validate();
  if (base.beta != 1.0) {
    throw std::invalid_argument("rho_critical: defined for beta = 1");
  }
  const auto bistable = [&](double rho) {
    ModelParams p = base;
    p.rho = rho;
    int stable = 0;
    for (const auto& fp : solve_fixed_points(p)) {
      if (fp.stable) ++stable;
    }
    return stable >= 2;
  };

  const int n_grid = 400;
  int last_true = -1;
  for (int i = 0; i <= n_grid; ++i) {
    if (bistable(static_cast<double>(i) / n_grid)) last_true = i;
  }
  if (last_true < 0) return std::nullopt;
  if (last_true == n_grid) return 1.0;

  double lo = static_cast<double>(last_true) / n_grid;
  double hi = static_cast<double>(last_true + 1) / n_grid;
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    if (bistable(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace ztsbm
