#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "asyncell/asynchrony.hpp"

namespace asyncell {

struct EfficiencyEstimate {
  double mean = 0.0;
  double half_width = 0.0;
  double level = 0.9999;
  std::size_t rounds = 0;
  std::size_t warmup = 0;
  std::size_t replicates = 0;
  std::vector<double> samples;  // per-replicate efficiencies

  double low() const noexcept { return mean - half_width; }
  double high() const noexcept { return mean + half_width; }
};

/// 10% of the rounds, at least 100. Throws when that leaves no rounds to average.
std::size_t default_warmup(std::size_t rounds);

struct OneCellOptions {
  int dim = 2;
  int n = 128;
  ArrivalLaw law = ArrivalLaw::poisson(1.0);
  std::size_t rounds = 2500;
  std::optional<std::size_t> warmup;  // default_warmup(rounds) when empty
  std::size_t replicates = 5;
  std::uint64_t seed = 1;
  double level = 0.9999;
  int workers = 0;  // 0: OpenMP default
};

/// Local-time round model: each round every cell whose time does not
/// exceed its neighbors' minimum advances by one increment (synchronous
/// sweep). Efficiency is the mean eligible fraction after warmup.
EfficiencyEstimate predict_one_cell(const OneCellOptions& options);

/// One replicate with the OpenMP kernel; returns the mean eligible
/// fraction over rounds [warmup, rounds).
double one_cell_replicate(int dim, int n, const ArrivalLaw& law, std::size_t rounds, std::size_t warmup,
                          std::uint64_t seed, int workers = 0);
/// Same computation on one thread, kept as the reference for the kernel.
double one_cell_replicate_reference(int dim, int n, const ArrivalLaw& law, std::size_t rounds, std::size_t warmup,
                                    std::uint64_t seed);
/// Eligible counts N0 for every round (reference kernel), for invariant checks.
std::vector<std::size_t> one_cell_round_counts(int dim, int n, const ArrivalLaw& law, std::size_t rounds,
                                               std::uint64_t seed);

/// Case probabilities for a subarray of side m: (m-2)^2/m^2, 4(m-2)/m^2, 4/m^2.
struct CaseProbabilities {
  double p0 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};
CaseProbabilities case_probabilities(int m);

struct AggregatedOptions {
  int n = 120;
  int m = 24;
  std::size_t rounds = 2500;
  std::optional<std::size_t> warmup;
  std::size_t replicates = 5;
  std::uint64_t seed = 1;
  double lag_bound = std::numeric_limits<double>::infinity();
  double level = 0.9999;
  int workers = 0;
};

/// PE-level model on the (n/m) x (n/m) torus of subarrays. Each round a PE
/// holds a pending case (drawn when its previous update succeeded): always
/// succeed, one neighbor must not be behind, or an adjacent pair must not be
/// behind. A success advances h by an Exp(1) increment. A PE more than
/// lag_bound ahead of the global minimum skips the round.
EfficiencyEstimate predict_aggregated(const AggregatedOptions& options);

double aggregated_replicate(int n, int m, std::size_t rounds, std::size_t warmup, std::uint64_t seed,
                            double lag_bound, int workers = 0);
double aggregated_replicate_reference(int n, int m, std::size_t rounds, std::size_t warmup, std::uint64_t seed,
                                      double lag_bound);

/// mean -/+ t_{(1+level)/2, k-1} * s / sqrt(k). Throws for fewer than 2 samples.
std::pair<double, double> confidence_interval(std::span<const double> samples, double level);

/// serial / (pes * parallel). Throws for non-positive input.
double measured_efficiency(double serial_time, int pes, double parallel_time);
/// efficiency * pes
double speedup(double efficiency, int pes);

}  // namespace asyncell
