#include "asyncell/perf_model.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "asyncell/rand_streams.hpp"
#include "asyncell/topology.hpp"

namespace asyncell {
namespace {

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) {
  Stream s(seed, {StreamKind::replicate, r});
  return s.next_u64();
}

int team_size(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

void check_rounds(std::size_t rounds, std::size_t warmup) {
  if (warmup >= rounds) throw std::invalid_argument("rounds must exceed warmup");
}

struct OneCellSetup {
  NeighborTable table;
  ArrivalClock clock;
  std::vector<Stream> streams;
  std::vector<double> t;

  OneCellSetup(int dim, int n, const ArrivalLaw& law, std::uint64_t seed)
      : table(Lattice(dim, n), 1, Neighborhood::von_neumann), clock(law, seed) {
    const std::size_t cells = table.lattice().cell_count();
    streams.reserve(cells);
    t.resize(cells);
    for (CellId c = 0; c < cells; ++c) {
      streams.emplace_back(seed, StreamId{StreamKind::per_cell, c});
      t[c] = clock.next(c, 0.0, streams[c]);
    }
  }
};

/// Reference sweep: counts eligible cells against the round-start times.
std::size_t one_cell_round(OneCellSetup& st, std::vector<double>& next) {
  std::size_t count = 0;
  for (CellId c = 0; c < st.t.size(); ++c) {
    double lowest = st.t[c];
    for (CellId x : st.table.of(c)) lowest = std::min(lowest, st.t[x]);
    if (st.t[c] <= lowest) {
      next[c] = st.clock.next(c, st.t[c], st.streams[c]);
      ++count;
    } else {
      next[c] = st.t[c];
    }
  }
  st.t.swap(next);
  return count;
}

struct Grid {
  int side;
  std::vector<std::array<std::uint32_t, 4>> nb;  // N, E, S, W

  explicit Grid(int g) : side(g), nb(static_cast<std::size_t>(g) * static_cast<std::size_t>(g)) {
    for (int y = 0; y < g; ++y) {
      for (int x = 0; x < g; ++x) {
        const auto at = [g](int yy, int xx) {
          return static_cast<std::uint32_t>(((yy + g) % g) * g + (xx + g) % g);
        };
        nb[static_cast<std::size_t>(y * g + x)] = {at(y - 1, x), at(y, x + 1), at(y + 1, x), at(y, x - 1)};
      }
    }
  }
  std::size_t size() const noexcept { return nb.size(); }
};

/// Pending case of one PE: -1 none, 0 unconditional, 1 one neighbor, 2 adjacent pair.
struct AggPe {
  double h = 0.0;
  std::int8_t kind = -1;
  std::uint8_t which = 0;
};

struct AggSetup {
  Grid grid;
  CaseProbabilities prob;
  std::vector<Stream> streams;
  std::vector<AggPe> pe;

  AggSetup(int n, int m, std::uint64_t seed) : grid(check(n, m)), prob(case_probabilities(m)) {
    streams.reserve(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) streams.emplace_back(seed, StreamId{StreamKind::per_pe, c});
    pe.resize(grid.size());
  }

  static int check(int n, int m) {
    if (m < 3) throw std::invalid_argument("subarray side must be at least 3");
    if (n < m || n % m != 0) throw std::invalid_argument("subarray side must divide the lattice side");
    return n / m;
  }

  /// Decision for PE c against the round-start values `cur`; writes its next record.
  bool attempt(std::size_t c, const std::vector<AggPe>& cur, AggPe& out, double lowest, double lag_bound) {
    AggPe p = cur[c];
    Stream& s = streams[c];
    if (p.kind < 0) {
      const double u = s.next_uniform();
      p.kind = u < prob.p0 ? 0 : u < prob.p0 + prob.p1 ? 1 : 2;
      if (p.kind > 0) p.which = static_cast<std::uint8_t>(std::min(3.0, std::floor(s.next_uniform() * 4.0)));
    }
    bool ok = p.h - lowest <= lag_bound;
    if (ok && p.kind == 1) {
      ok = cur[grid.nb[c][p.which]].h >= p.h;
    } else if (ok && p.kind == 2) {
      ok = cur[grid.nb[c][p.which]].h >= p.h && cur[grid.nb[c][(p.which + 1u) % 4u]].h >= p.h;
    }
    if (ok) {
      p.h -= std::log(s.next_uniform());
      p.kind = -1;
    }
    out = p;
    return ok;
  }

  double lowest() const {
    double lo = pe.front().h;
    for (const auto& p : pe) lo = std::min(lo, p.h);
    return lo;
  }
};

EfficiencyEstimate summarize(std::vector<double> samples, std::size_t rounds, std::size_t warmup, double level) {
  EfficiencyEstimate est;
  est.rounds = rounds;
  est.warmup = warmup;
  est.level = level;
  est.replicates = samples.size();
  est.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    const auto [lo, hi] = confidence_interval(samples, level);
    est.half_width = (hi - lo) / 2.0;
  }
  est.samples = std::move(samples);
  return est;
}

}  // namespace

std::size_t default_warmup(std::size_t rounds) {
  const std::size_t w = std::max<std::size_t>(100, rounds / 10);
  check_rounds(rounds, w);
  return w;
}

double one_cell_replicate(int dim, int n, const ArrivalLaw& law, std::size_t rounds, std::size_t warmup,
                          std::uint64_t seed, int workers) {
  check_rounds(rounds, warmup);
  OneCellSetup st(dim, n, law, seed);
  std::vector<double> next(st.t.size());
  const auto cells = static_cast<std::int64_t>(st.t.size());
  std::uint64_t total = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    std::uint64_t count = 0;
#pragma omp parallel for num_threads(team_size(workers)) schedule(static) reduction(+ : count)
    for (std::int64_t i = 0; i < cells; ++i) {
      const auto c = static_cast<CellId>(i);
      double lowest = st.t[c];
      for (CellId x : st.table.of(c)) lowest = std::min(lowest, st.t[x]);
      if (st.t[c] <= lowest) {
        next[c] = st.clock.next(c, st.t[c], st.streams[c]);
        ++count;
      } else {
        next[c] = st.t[c];
      }
    }
    st.t.swap(next);
    if (round >= warmup) total += count;
  }
  return static_cast<double>(total) / (static_cast<double>(rounds - warmup) * static_cast<double>(cells));
}

double one_cell_replicate_reference(int dim, int n, const ArrivalLaw& law, std::size_t rounds, std::size_t warmup,
                                    std::uint64_t seed) {
  check_rounds(rounds, warmup);
  OneCellSetup st(dim, n, law, seed);
  std::vector<double> next(st.t.size());
  std::uint64_t total = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    const std::size_t count = one_cell_round(st, next);
    if (round >= warmup) total += count;
  }
  return static_cast<double>(total) / (static_cast<double>(rounds - warmup) * static_cast<double>(st.t.size()));
}

std::vector<std::size_t> one_cell_round_counts(int dim, int n, const ArrivalLaw& law, std::size_t rounds,
                                               std::uint64_t seed) {
  OneCellSetup st(dim, n, law, seed);
  std::vector<double> next(st.t.size());
  std::vector<std::size_t> out;
  out.reserve(rounds);
  for (std::size_t round = 0; round < rounds; ++round) out.push_back(one_cell_round(st, next));
  return out;
}

EfficiencyEstimate predict_one_cell(const OneCellOptions& o) {
  if (o.replicates < 1) throw std::invalid_argument("need at least one replicate");
  const std::size_t warmup = o.warmup ? *o.warmup : default_warmup(o.rounds);
  std::vector<double> samples;
  for (std::size_t r = 0; r < o.replicates; ++r) {
    samples.push_back(one_cell_replicate(o.dim, o.n, o.law, o.rounds, warmup, replicate_seed(o.seed, r), o.workers));
  }
  return summarize(std::move(samples), o.rounds, warmup, o.level);
}

CaseProbabilities case_probabilities(int m) {
  if (m < 3) throw std::invalid_argument("subarray side must be at least 3");
  const double mm = static_cast<double>(m) * m;
  return {(m - 2.0) * (m - 2.0) / mm, 4.0 * (m - 2.0) / mm, 4.0 / mm};
}

double aggregated_replicate(int n, int m, std::size_t rounds, std::size_t warmup, std::uint64_t seed,
                            double lag_bound, int workers) {
  check_rounds(rounds, warmup);
  AggSetup st(n, m, seed);
  std::vector<AggPe> next(st.pe.size());
  const auto pes = static_cast<std::int64_t>(st.pe.size());
  std::uint64_t total = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    const double lowest = st.lowest();
    std::uint64_t count = 0;
#pragma omp parallel for num_threads(team_size(workers)) schedule(static) reduction(+ : count)
    for (std::int64_t i = 0; i < pes; ++i) {
      const auto c = static_cast<std::size_t>(i);
      if (st.attempt(c, st.pe, next[c], lowest, lag_bound)) ++count;
    }
    st.pe.swap(next);
    if (round >= warmup) total += count;
  }
  return static_cast<double>(total) / (static_cast<double>(rounds - warmup) * static_cast<double>(pes));
}

double aggregated_replicate_reference(int n, int m, std::size_t rounds, std::size_t warmup, std::uint64_t seed,
                                      double lag_bound) {
  check_rounds(rounds, warmup);
  AggSetup st(n, m, seed);
  std::vector<AggPe> next(st.pe.size());
  std::uint64_t total = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    const double lowest = st.lowest();
    std::uint64_t count = 0;
    for (std::size_t c = 0; c < st.pe.size(); ++c) {
      if (st.attempt(c, st.pe, next[c], lowest, lag_bound)) ++count;
    }
    st.pe.swap(next);
    if (round >= warmup) total += count;
  }
  return static_cast<double>(total) / (static_cast<double>(rounds - warmup) * static_cast<double>(st.pe.size()));
}

EfficiencyEstimate predict_aggregated(const AggregatedOptions& o) {
  if (o.replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (!(o.lag_bound > 0.0)) throw std::invalid_argument("lag bound must be positive");
  const std::size_t warmup = o.warmup ? *o.warmup : default_warmup(o.rounds);
  std::vector<double> samples;
  for (std::size_t r = 0; r < o.replicates; ++r) {
    samples.push_back(
        aggregated_replicate(o.n, o.m, o.rounds, warmup, replicate_seed(o.seed, r), o.lag_bound, o.workers));
  }
  return summarize(std::move(samples), o.rounds, warmup, o.level);
}

std::pair<double, double> confidence_interval(std::span<const double> samples, double level) {
  if (samples.size() < 2) throw std::invalid_argument("confidence interval needs at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0,1)");
  const double k = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / k;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (k - 1.0));
  const boost::math::students_t dist(k - 1.0);
  const double half = boost::math::quantile(dist, (1.0 + level) / 2.0) * sd / std::sqrt(k);
  return {mean - half, mean + half};
}

double measured_efficiency(double serial_time, int pes, double parallel_time) {
  if (!(serial_time > 0.0) || pes < 1 || !(parallel_time > 0.0)) {
    throw std::invalid_argument("times and PE count must be positive");
  }
  return serial_time / (static_cast<double>(pes) * parallel_time);
}

double speedup(double efficiency, int pes) { return efficiency * static_cast<double>(pes); }

}  // namespace asyncell
