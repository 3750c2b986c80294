#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asyncell/topology.hpp"

namespace asyncell {

/// Cell state: an Ising spin (-1/+1) or a Life cell (0/1).
using State = std::int8_t;

/// Energy = -J sum s s' - H sum s, temperature T (all in energy units).
struct IsingParams {
  double J = 1.0;
  double H = 0.0;
  double T = 1.0;
};

/// Glauber flip probabilities x / (1 + x), x = exp(-dE / T), where
/// dE = 2 (J s sum + H s), tabulated over s in {-1,+1} and the even
/// neighbor sums in [-K, K] for K neighbors.
class FlipTable {
 public:
  FlipTable(IsingParams params, int neighbor_count = 4);

  const IsingParams& params() const noexcept { return params_; }
  int neighbor_count() const noexcept { return neighbor_count_; }
  std::size_t size() const noexcept { return prob_.size(); }
  double operator[](std::size_t index) const noexcept { return prob_[index]; }
  std::span<const double> entries() const noexcept { return prob_; }
  /// Probability for spin s and neighbor sum; validates arguments.
  double at(int spin, int neighbor_sum) const;

 private:
  IsingParams params_;
  int neighbor_count_;
  std::vector<double> prob_;
};

FlipTable flip_table(IsingParams params, int neighbor_count = 4);

/// Energy change of flipping spin s with neighbor sum `neighbor_sum`.
double flip_energy(const IsingParams& params, int spin, int neighbor_sum) noexcept;

/// (sum + K) / 2 + (K + 1) (s + 1) / 2; for K = 4 this is 0..9.
/// Throws std::invalid_argument for s not in {-1,+1} or an odd/out-of-range sum.
int ising_index(int spin, int neighbor_sum, int neighbor_count = 4);

/// Returns -s when r < p(s, sum), else s. `neighbors` excludes the cell itself.
State ising_next_state(State s, std::span<const State> neighbors, const FlipTable& table, double r);

/// Conway's rule evaluated at an arrival: survive on 2 or 3, birth on 3.
State life_next_state(State s, std::span<const State> neighbors);

enum class ModelKind : std::uint8_t { ising, life };

/// Parsed `--model` value, not yet bound to a neighborhood.
struct ModelSpec {
  ModelKind kind = ModelKind::ising;
  IsingParams ising{};

  /// `ising:J=<f>,H=<f>,T=<f>` (any subset, defaults J=1,H=0,T=1) or `life`.
  static ModelSpec parse(std::string_view text);
  std::string to_string() const;
  Neighborhood neighborhood() const noexcept {
    return kind == ModelKind::life ? Neighborhood::moore : Neighborhood::von_neumann;
  }
};

/// A next-state rule bound to a neighborhood size.
///
/// Both models are expressed through a finite key (cell state, neighbor
/// state sum) with a change probability per key, which is what BKL
/// classification needs. Life keys have probability 0 or 1.
class CellModel {
 public:
  static CellModel ising(IsingParams params, int neighbor_count = 4);
  static CellModel life();
  /// Binds a spec to the neighborhood of `table`; Life requires a 2-D Moore table.
  static CellModel bind(const ModelSpec& spec, const NeighborTable& table);

  ModelKind kind() const noexcept { return kind_; }
  int neighbor_count() const noexcept { return neighbor_count_; }
  const FlipTable& table() const noexcept { return table_; }

  int key(State s, int neighbor_sum) const noexcept {
    if (kind_ == ModelKind::ising) return (neighbor_sum + neighbor_count_) / 2 + (neighbor_count_ + 1) * ((s + 1) / 2);
    return s * 9 + neighbor_sum;
  }
  std::size_t key_count() const noexcept { return key_prob_.size(); }
  double key_probability(int key) const noexcept { return key_prob_[static_cast<std::size_t>(key)]; }
  State flipped(State s) const noexcept { return kind_ == ModelKind::ising ? static_cast<State>(-s) : static_cast<State>(1 - s); }

  double change_probability(State s, int neighbor_sum) const noexcept { return key_probability(key(s, neighbor_sum)); }
  State next_state(State s, int neighbor_sum, double r) const noexcept {
    return r < change_probability(s, neighbor_sum) ? flipped(s) : s;
  }

  /// Value of a state in pattern files and magnetization: +1 for an up spin or live cell.
  bool is_up(State s) const noexcept { return s > 0; }
  State from_bit(bool up) const noexcept {
    return kind_ == ModelKind::ising ? static_cast<State>(up ? 1 : -1) : static_cast<State>(up ? 1 : 0);
  }

 private:
  CellModel(ModelKind kind, int neighbor_count, FlipTable table, std::vector<double> key_prob);

  ModelKind kind_;
  int neighbor_count_;
  FlipTable table_;
  std::vector<double> key_prob_;
};

/// Initial configuration of a run.
enum class InitialConfig : std::uint8_t { random, all_up, all_down };

InitialConfig parse_initial_config(std::string_view text);
std::string to_string(InitialConfig init);

/// Initial state of cell c; `random` draws from a per-cell stream so the
/// result does not depend on the partition.
State initial_state(const CellModel& model, InitialConfig init, std::uint64_t seed, CellId c);

}  // namespace asyncell
