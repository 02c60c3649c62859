#pragma once

// Quenched experiments on explicit block-model graphs: sparse O(edges)
// generation, zero-temperature message passing with randomized tiebreaking on
// the fixed graph, permutation-invariant scoring, and a line-oriented text
// format for graph exchange.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ztsbm/cavity_general.hpp"
#include "ztsbm/rng.hpp"

namespace ztsbm {

struct SbmGraph {
  long long n = 0;
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, u < v, no duplicates
  std::vector<int> planted;                // labels 0..q-1
  std::vector<std::uint8_t> revealed;

  double mean_degree() const {
    return n > 0 ? 2.0 * static_cast<double>(edges.size()) / n : 0.0;
  }
};

namespace detail {

inline constexpr std::uint64_t kGenEdgeTag = 0x73626d2d65646765ULL;
inline constexpr std::uint64_t kGenRevealTag = 0x73626d2d72657631ULL;
inline constexpr std::uint64_t kMpInitTag = 0x6d702d696e697431ULL;
inline constexpr std::uint64_t kMpSweepTag = 0x6d702d7377656570ULL;
inline constexpr std::uint64_t kMpTieTag = 0x6d702d7469653131ULL;
inline constexpr std::uint64_t kMpFinalTag = 0x6d702d66696e616cULL;

// Index of the t-th member of block b when labels are assigned round-robin.
inline long long block_member(int block, long long t, int q) {
  return block + t * q;
}

inline long long block_size(long long n, int block, int q) {
  return n / q + (block < n % q ? 1 : 0);
}

// Decode a linear index over pairs (r, s) with r < s: m = s(s-1)/2 + r.
inline std::pair<long long, long long> triangle_decode(unsigned long long m) {
  auto s = static_cast<long long>(
      (1.0L + std::sqrt(8.0L * static_cast<long double>(m) + 1.0L)) / 2.0L);
  while (s > 1 &&
         static_cast<unsigned long long>(s) * (s - 1) / 2 > m) {
    --s;
  }
  while (static_cast<unsigned long long>(s + 1) * s / 2 <= m) ++s;
  return {static_cast<long long>(m - static_cast<unsigned long long>(s) *
                                         (s - 1) / 2),
          s};
}

// Geometric gap for Bernoulli(p) skip sampling.
inline unsigned long long skip_gap(Rng& g, double p) {
  const double u = uniform01(g);
  return static_cast<unsigned long long>(
      std::floor(std::log1p(-u) / std::log1p(-p)));
}

}  // namespace detail

// Equal-size planted partition (remainder spread round-robin); each
// intra-group pair is linked with p_in = q*alpha/n, each inter-group pair
// with p_out = q*gamma/n, by geometric skip sampling over the pair space.
inline SbmGraph generate(const ModelParams& params, long long n,
                         std::uint64_t seed) {
  params.validate();
  if (n < params.q) throw std::invalid_argument("sbm: need n >= q");
  const double p_in = params.q * params.alpha() / static_cast<double>(n);
  const double p_out = params.q * params.gamma() / static_cast<double>(n);
  if (p_in > 1.0 || p_out > 1.0) {
    throw std::invalid_argument(
        "sbm: edge probability exceeds 1; n is too small for this (q, c)");
  }

  SbmGraph g;
  g.n = n;
  g.params = params;
  g.seed = seed;
  g.planted.resize(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    g.planted[static_cast<std::size_t>(i)] = static_cast<int>(i % params.q);
  }

  const int q = params.q;
  std::uint64_t block_pair = 0;
  for (int a = 0; a < q; ++a) {
    for (int b = a; b < q; ++b, ++block_pair) {
      const double p = a == b ? p_in : p_out;
      if (p <= 0.0) continue;
      const long long na = detail::block_size(n, a, q);
      const long long nb = detail::block_size(n, b, q);
      const unsigned long long total =
          a == b ? static_cast<unsigned long long>(na) * (na - 1) / 2
                 : static_cast<unsigned long long>(na) * nb;
      Rng rng = keyed_rng(seed, detail::kGenEdgeTag, block_pair);
      unsigned long long pos = 0;
      bool first = true;
      while (true) {
        const unsigned long long gap = p >= 1.0 ? 0 : detail::skip_gap(rng, p);
        pos += gap + (first ? 0 : 1);
        first = false;
        if (pos >= total) break;
        long long u, v;
        if (a == b) {
          const auto [r, s] = detail::triangle_decode(pos);
          u = detail::block_member(a, r, q);
          v = detail::block_member(a, s, q);
        } else {
          u = detail::block_member(a, static_cast<long long>(pos / nb), q);
          v = detail::block_member(b, static_cast<long long>(pos % nb), q);
        }
        if (u > v) std::swap(u, v);
        g.edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
      }
    }
  }

  // reveal ceil(rho * n) nodes, drawn by partial Fisher-Yates
  g.revealed.assign(static_cast<std::size_t>(n), 0);
  const auto n_reveal =
      static_cast<long long>(std::ceil(params.rho * static_cast<double>(n)));
  if (n_reveal > 0) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] =
        static_cast<int>(i);
    Rng rng = keyed_rng(seed, detail::kGenRevealTag);
    for (long long i = 0; i < n_reveal; ++i) {
      const auto j = i + static_cast<long long>(uniform_below(
                             rng, static_cast<std::uint64_t>(n - i)));
      std::swap(ids[static_cast<std::size_t>(i)],
                ids[static_cast<std::size_t>(j)]);
      g.revealed[static_cast<std::size_t>(
          ids[static_cast<std::size_t>(i)])] = 1;
    }
  }
  return g;
}

// One label per directed edge; directed edge 2e is u->v of undirected edge e
// and 2e+1 is v->u, so an edge's reverse is found by flipping the low bit.
struct MessageState {
  std::vector<std::int8_t> labels;
};

enum class MpInitKind { random, planted_fraction, from_messages };

struct MpInit {
  MpInitKind kind = MpInitKind::random;
  double fraction = 1.0;       // for planted_fraction
  MessageState messages;       // for from_messages

  static MpInit random() { return {}; }
  static MpInit planted(double f) {
    return {MpInitKind::planted_fraction, f, {}};
  }
};

struct MpSchedule {
  int max_sweeps = 1000;
  std::uint64_t seed = 0;  // schedule + tiebreak randomness
};

struct MaxProductResult {
  std::vector<int> labels;
  MessageState messages;
  bool converged = false;
  int sweeps = 0;
};

// Asynchronous randomized-order sweeps of the max-product update with
// uniform (or beta-weighted) tiebreaking. Tiebreak draws come from streams
// keyed by (seed, sweep, edge), so a run is reproducible regardless of how
// edge updates would be partitioned. Revealed nodes always emit their
// planted label. Non-convergence at max_sweeps is reported, not thrown.
inline MaxProductResult run_max_product(const SbmGraph& graph,
                                        const MpInit& init,
                                        const MpSchedule& schedule) {
  const int q = graph.params.q;
  const double beta = graph.params.beta;
  const auto beta_mode = graph.params.beta_mode;
  const std::size_t n_dir = 2 * graph.edges.size();

  // directed-edge endpoints
  std::vector<int> sender(n_dir), receiver(n_dir);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [u, v] = graph.edges[e];
    sender[2 * e] = u;
    receiver[2 * e] = v;
    sender[2 * e + 1] = v;
    receiver[2 * e + 1] = u;
  }

  // initial messages
  MessageState msg;
  msg.labels.resize(n_dir);
  if (init.kind == MpInitKind::from_messages) {
    if (init.messages.labels.size() != n_dir) {
      throw std::invalid_argument("max-product: message state size mismatch");
    }
    msg = init.messages;
  } else {
    for (std::size_t d = 0; d < n_dir; ++d) {
      Rng rng = keyed_rng(schedule.seed, detail::kMpInitTag, d);
      const int s = sender[d];
      if (init.kind == MpInitKind::planted_fraction &&
          uniform01(rng) < init.fraction) {
        msg.labels[d] =
            static_cast<std::int8_t>(graph.planted[static_cast<std::size_t>(s)]);
      } else {
        msg.labels[d] = static_cast<std::int8_t>(uniform_below(
            rng, static_cast<std::uint64_t>(q)));
      }
    }
  }
  for (std::size_t d = 0; d < n_dir; ++d) {
    const int s = sender[d];
    if (graph.revealed[static_cast<std::size_t>(s)]) {
      msg.labels[d] =
          static_cast<std::int8_t>(graph.planted[static_cast<std::size_t>(s)]);
    }
  }

  // full incoming field per node
  std::vector<std::int32_t> field(static_cast<std::size_t>(graph.n) * q, 0);
  for (std::size_t d = 0; d < n_dir; ++d) {
    ++field[static_cast<std::size_t>(receiver[d]) * q + msg.labels[d]];
  }

  std::vector<std::uint32_t> order(n_dir);
  for (std::size_t d = 0; d < n_dir; ++d) order[d] =
      static_cast<std::uint32_t>(d);

  MaxProductResult res;
  int sweep = 0;
  for (; sweep < schedule.max_sweeps; ++sweep) {
    Rng perm_rng = keyed_rng(schedule.seed, detail::kMpSweepTag,
                             static_cast<std::uint64_t>(sweep));
    for (std::size_t i = n_dir; i > 1; --i) {
      const auto j = uniform_below(perm_rng, i);
      std::swap(order[i - 1], order[static_cast<std::size_t>(j)]);
    }

    long long changed = 0;
    for (const auto d : order) {
      const int i = sender[d];
      if (graph.revealed[static_cast<std::size_t>(i)]) continue;
      const int j_label = msg.labels[d ^ 1U];  // message j -> i to subtract
      const std::int32_t* f = &field[static_cast<std::size_t>(i) * q];
      std::int32_t best = std::numeric_limits<std::int32_t>::min();
      int n_tied = 0;
      for (int l = 0; l < q; ++l) {
        const std::int32_t h = f[l] - (l == j_label ? 1 : 0);
        if (h > best) {
          best = h;
          n_tied = 1;
        } else if (h == best) {
          ++n_tied;
        }
      }
      int pick;
      if (n_tied == 1) {
        pick = 0;
        for (int l = 0; l < q; ++l) {
          if (f[l] - (l == j_label ? 1 : 0) == best) {
            pick = l;
            break;
          }
        }
      } else {
        Rng tie_rng = keyed_rng(schedule.seed, detail::kMpTieTag,
                                static_cast<std::uint64_t>(sweep), d);
        const int own = graph.planted[static_cast<std::size_t>(i)];
        const bool own_tied =
            f[own] - (own == j_label ? 1 : 0) == best;
        int take;
        if (beta > 1.0 && own_tied) {
          const double win =
              tiebreak_win_probability(beta, n_tied - 1, beta_mode);
          if (uniform01(tie_rng) < win) {
            take = -1;  // sentinel: pick the planted label
          } else {
            take = static_cast<int>(uniform_below(
                tie_rng, static_cast<std::uint64_t>(n_tied - 1)));
          }
        } else {
          take = static_cast<int>(
              uniform_below(tie_rng, static_cast<std::uint64_t>(n_tied)));
        }
        pick = own;
        if (take >= 0) {
          int seen = 0;
          for (int l = 0; l < q; ++l) {
            if (f[l] - (l == j_label ? 1 : 0) != best) continue;
            if (beta > 1.0 && own_tied && l == own) continue;
            if (seen == take) {
              pick = l;
              break;
            }
            ++seen;
          }
        }
      }
      const int old = msg.labels[d];
      if (pick != old) {
        msg.labels[d] = static_cast<std::int8_t>(pick);
        const std::size_t rbase = static_cast<std::size_t>(receiver[d]) * q;
        --field[rbase + old];
        ++field[rbase + pick];
        ++changed;
      }
    }
    if (changed == 0) {
      res.converged = true;
      ++sweep;
      break;
    }
  }

  res.sweeps = std::min(sweep, schedule.max_sweeps);
  res.messages = std::move(msg);
  res.labels.resize(static_cast<std::size_t>(graph.n));
  for (long long i = 0; i < graph.n; ++i) {
    if (graph.revealed[static_cast<std::size_t>(i)]) {
      res.labels[static_cast<std::size_t>(i)] =
          graph.planted[static_cast<std::size_t>(i)];
      continue;
    }
    const std::int32_t* f = &field[static_cast<std::size_t>(i) * q];
    std::int32_t best = std::numeric_limits<std::int32_t>::min();
    int n_tied = 0;
    for (int l = 0; l < q; ++l) {
      if (f[l] > best) {
        best = f[l];
        n_tied = 1;
      } else if (f[l] == best) {
        ++n_tied;
      }
    }
    int pick = 0;
    if (n_tied == 1) {
      for (int l = 0; l < q; ++l) {
        if (f[l] == best) {
          pick = l;
          break;
        }
      }
    } else {
      Rng tie_rng = keyed_rng(schedule.seed, detail::kMpFinalTag,
                              static_cast<std::uint64_t>(i));
      const int take = static_cast<int>(
          uniform_below(tie_rng, static_cast<std::uint64_t>(n_tied)));
      int seen = 0;
      for (int l = 0; l < q; ++l) {
        if (f[l] != best) continue;
        if (seen == take) {
          pick = l;
          break;
        }
        ++seen;
      }
    }
    res.labels[static_cast<std::size_t>(i)] = pick;
  }
  return res;
}

struct OverlapReport {
  double raw_agreement = 0.0;
  double permuted_agreement = 0.0;
  double normalized_overlap = 0.0;
  long long hamiltonian_energy = 0;  // ordered-pair convention: -2 per
                                     // monochromatic undirected edge
};

namespace detail {

// Hungarian algorithm (potentials form) on a q x q cost matrix; returns the
// minimum assignment cost.
inline long long min_assignment_cost(
    const std::vector<std::vector<long long>>& cost) {
  const int n = static_cast<int>(cost.size());
  const long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<long long> v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      long long delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const long long cur = cost[static_cast<std::size_t>(i0 - 1)]
                                  [static_cast<std::size_t>(j - 1)] -
                              u[static_cast<std::size_t>(i0)] -
                              v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] +=
              delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  long long total = 0;
  for (int j = 1; j <= n; ++j) {
    total += cost[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] -
                                           1)][static_cast<std::size_t>(j - 1)];
  }
  return total;
}

}  // namespace detail

// Agreement with the planted labels, maximized over label permutations via
// optimal assignment on the q x q confusion matrix.
inline OverlapReport score(const SbmGraph& graph,
                           const std::vector<int>& labels) {
  if (static_cast<long long>(labels.size()) != graph.n) {
    throw std::invalid_argument("score: one label per node required");
  }
  const int q = graph.params.q;
  std::vector<std::vector<long long>> confusion(
      static_cast<std::size_t>(q),
      std::vector<long long>(static_cast<std::size_t>(q), 0));
  long long raw = 0;
  for (long long i = 0; i < graph.n; ++i) {
    const int a = graph.planted[static_cast<std::size_t>(i)];
    const int b = labels[static_cast<std::size_t>(i)];
    if (b < 0 || b >= q) throw std::invalid_argument("score: label out of range");
    ++confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    raw += a == b;
  }

  long long max_count = 0;
  for (const auto& row : confusion) {
    for (long long cnt : row) max_count = std::max(max_count, cnt);
  }
  std::vector<std::vector<long long>> cost(
      static_cast<std::size_t>(q),
      std::vector<long long>(static_cast<std::size_t>(q), 0));
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      cost[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          max_count - confusion[static_cast<std::size_t>(a)]
                               [static_cast<std::size_t>(b)];
    }
  }
  const long long matched =
      q * max_count - detail::min_assignment_cost(cost);

  OverlapReport rep;
  rep.raw_agreement = static_cast<double>(raw) / static_cast<double>(graph.n);
  rep.permuted_agreement =
      static_cast<double>(matched) / static_cast<double>(graph.n);
  rep.normalized_overlap = (rep.permuted_agreement - 1.0 / q) / (1.0 - 1.0 / q);

  long long mono = 0;
  for (const auto& [u, v] : graph.edges) {
    mono += labels[static_cast<std::size_t>(u)] ==
            labels[static_cast<std::size_t>(v)];
  }
  rep.hamiltonian_energy = -2 * mono;
  return rep;
}

// Line-oriented text format:
//   n q c delta rho seed
//   <u> <v>              one per edge, 0-indexed
//   label <node> <label> planted label, 1-based
//   revealed <node>
inline void write_graph(std::ostream& os, const SbmGraph& g) {
  os.precision(17);
  os << g.n << ' ' << g.params.q << ' ' << g.params.c << ' ' << g.params.delta
     << ' ' << g.params.rho << ' ' << g.seed << '\n';
  for (const auto& [u, v] : g.edges) os << u << ' ' << v << '\n';
  for (long long i = 0; i < g.n; ++i) {
    os << "label " << i << ' '
       << g.planted[static_cast<std::size_t>(i)] + 1 << '\n';
  }
  for (long long i = 0; i < g.n; ++i) {
    if (g.revealed[static_cast<std::size_t>(i)]) os << "revealed " << i << '\n';
  }
}

inline SbmGraph read_graph(std::istream& is) {
  SbmGraph g;
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("graph file: missing header");
  }
  {
    std::istringstream hs(line);
    if (!(hs >> g.n >> g.params.q >> g.params.c >> g.params.delta >>
          g.params.rho >> g.seed)) {
      throw std::runtime_error("graph file: malformed header");
    }
  }
  g.params.validate();
  if (g.n < g.params.q) throw std::runtime_error("graph file: n < q");
  g.planted.assign(static_cast<std::size_t>(g.n), -1);
  g.revealed.assign(static_cast<std::size_t>(g.n), 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == 'l') {
      std::string kw;
      long long node = 0;
      int lab = 0;
      if (!(ls >> kw >> node >> lab) || kw != "label" || node < 0 ||
          node >= g.n || lab < 1 || lab > g.params.q) {
        throw std::runtime_error("graph file: bad label line: " + line);
      }
      g.planted[static_cast<std::size_t>(node)] = lab - 1;
    } else if (line[0] == 'r') {
      std::string kw;
      long long node = 0;
      if (!(ls >> kw >> node) || kw != "revealed" || node < 0 || node >= g.n) {
        throw std::runtime_error("graph file: bad revealed line: " + line);
      }
      g.revealed[static_cast<std::size_t>(node)] = 1;
    } else {
      long long u = 0, v = 0;
      if (!(ls >> u >> v) || u < 0 || v < 0 || u >= g.n || v >= g.n || u == v) {
        throw std::runtime_error("graph file: bad edge line: " + line);
      }
      g.edges.emplace_back(static_cast<int>(std::min(u, v)),
                           static_cast<int>(std::max(u, v)));
    }
  }
  for (long long i = 0; i < g.n; ++i) {
    if (g.planted[static_cast<std::size_t>(i)] < 0) {
      throw std::runtime_error("graph file: node without planted label");
    }
  }
  return g;
}

}  // namespace ztsbm
