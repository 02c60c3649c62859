#pragma once

// Annealed population dynamics: a pool of one-hot messages tagged
// correct/incorrect, rebuilt synchronously each sweep by redrawing every
// message's neighborhood from the degree distribution. Per-replacement random
// streams are keyed by (seed, sweep, index), so a sweep could be partitioned
// across workers without changing the result.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ztsbm/cavity_general.hpp"
#include "ztsbm/rng.hpp"

namespace ztsbm {

struct MessagePool {
  std::vector<std::uint8_t> correct;

  double eta_plus() const {
    if (correct.empty()) return 0.0;
    long long sum = 0;
    for (auto f : correct) sum += f;
    return static_cast<double>(sum) / static_cast<double>(correct.size());
  }
};

struct PopDynConfig {
  int pool_size = 100000;
  int sweeps = 200;
  int burn_in = 100;
  std::uint64_t seed = 1;
  double reveal_fraction = 0.0;
  double tiebreak_weight = 1.0;
  TiebreakMode beta_mode = TiebreakMode::normalized;

  void validate() const {
    if (pool_size < 1000) {
      throw std::invalid_argument("popdyn: pool size must be >= 1000");
    }
    if (sweeps < 1 || burn_in < 0 || burn_in >= sweeps) {
      throw std::invalid_argument("popdyn: need 0 <= burn_in < sweeps");
    }
  }
};

namespace detail {

inline constexpr std::uint64_t kPopDynTag = 0x706f7064796e0001ULL;

}  // namespace detail

// One synchronous sweep: every slot of the new pool is rebuilt from the old
// pool. The receiving node's true label is 0; a neighbor in group s sends s
// when its sampled message is correct (or it is revealed, probability rho)
// and a uniformly chosen other label when incorrect.
inline MessagePool popdyn_step(const MessagePool& pool, const ModelParams& mp,
                               std::uint64_t seed, long long sweep) {
  mp.validate();
  const int q = mp.q;
  const double alpha = mp.alpha();
  const double gamma = mp.gamma();
  const std::size_t pool_n = pool.correct.size();
  if (pool_n == 0) throw std::invalid_argument("popdyn: empty pool");

  MessagePool next;
  next.correct.resize(pool_n);
  std::vector<int> counts(static_cast<std::size_t>(q));
  for (std::size_t i = 0; i < pool_n; ++i) {
    Rng g = keyed_rng(seed, detail::kPopDynTag,
                      static_cast<std::uint64_t>(sweep), i);
    std::fill(counts.begin(), counts.end(), 0);

    for (int grp = 0; grp < q; ++grp) {
      const long long deg = poisson_draw(g, grp == 0 ? alpha : gamma);
      for (long long e = 0; e < deg; ++e) {
        bool msg_correct = mp.rho > 0.0 && uniform01(g) < mp.rho;
        if (!msg_correct) {
          msg_correct = pool.correct[uniform_below(g, pool_n)] != 0;
        }
        if (msg_correct) {
          ++counts[static_cast<std::size_t>(grp)];
        } else {
          // a wrong message lands uniformly on one of the q-1 other labels
          auto w = static_cast<int>(uniform_below(g, q - 1));
          if (w >= grp) ++w;
          ++counts[static_cast<std::size_t>(w)];
        }
      }
    }

    int best = counts[0];
    for (int l = 1; l < q; ++l) best = std::max(best, counts[l]);
    const bool own_tied = counts[0] == best;
    int wrong_tied = 0;
    for (int l = 1; l < q; ++l) wrong_tied += counts[l] == best;
    bool emit_correct = false;
    if (own_tied) {
      if (wrong_tied == 0) {
        emit_correct = true;
      } else {
        const double win =
            tiebreak_win_probability(mp.beta, wrong_tied, mp.beta_mode);
        emit_correct = uniform01(g) < win;
      }
    }
    next.correct[i] = emit_correct ? 1 : 0;
  }
  return next;
}

struct PopDynResult {
  std::vector<double> eta_series;  // one estimate per sweep
  double mean = 0.0;               // post-burn-in average
  double std_error = 0.0;          // batch-means standard error
};

// Full run from a pool seeded with ceil(init_eta * M) correct flags. The
// config's reveal fraction and tiebreak weight override the corresponding
// model fields so the CLI has a single source of truth.
inline PopDynResult popdyn_run(const PopDynConfig& cfg, ModelParams mp,
                               double init_eta) {
  cfg.validate();
  mp.rho = cfg.reveal_fraction;
  mp.beta = cfg.tiebreak_weight;
  mp.beta_mode = cfg.beta_mode;
  mp.validate();
  if (!(init_eta >= 1.0 / mp.q - 1e-12) || !(init_eta <= 1.0)) {
    throw std::invalid_argument("popdyn: init_eta must lie in [1/q, 1]");
  }

  MessagePool pool;
  pool.correct.assign(static_cast<std::size_t>(cfg.pool_size), 0);
  const auto n_correct = static_cast<std::size_t>(
      std::ceil(init_eta * cfg.pool_size));
  for (std::size_t i = 0; i < n_correct && i < pool.correct.size(); ++i) {
    pool.correct[i] = 1;
  }

  PopDynResult res;
  res.eta_series.reserve(static_cast<std::size_t>(cfg.sweeps));
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    pool = popdyn_step(pool, mp, cfg.seed, sweep);
    res.eta_series.push_back(pool.eta_plus());
  }

  const std::size_t first = static_cast<std::size_t>(cfg.burn_in);
  const std::size_t count = res.eta_series.size() - first;
  double mean = 0.0;
  for (std::size_t i = first; i < res.eta_series.size(); ++i) {
    mean += res.eta_series[i];
  }
  mean /= static_cast<double>(count);
  res.mean = mean;

  // batch means absorb the sweep-to-sweep autocorrelation
  const std::size_t n_batches = std::min<std::size_t>(10, count);
  const std::size_t batch = count / n_batches;
  double var = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    double bm = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      bm += res.eta_series[first + b * batch + i];
    }
    bm /= static_cast<double>(batch);
    var += (bm - mean) * (bm - mean);
  }
  var /= static_cast<double>(n_batches) * (n_batches > 1 ? n_batches - 1 : 1);
  res.std_error = std::sqrt(var);
  return res;
}

}  // namespace ztsbm
