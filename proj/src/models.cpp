#include "asyncell/models.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "asyncell/rand_streams.hpp"

namespace asyncell {
namespace {

int state_sum(std::span<const State> states) {
  return std::accumulate(states.begin(), states.end(), 0, [](int a, State b) { return a + b; });
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

double flip_energy(const IsingParams& params, int spin, int neighbor_sum) noexcept {
  return 2.0 * (params.J * spin * neighbor_sum + params.H * spin);
}

FlipTable::FlipTable(IsingParams params, int neighbor_count) : params_(params), neighbor_count_(neighbor_count) {
  if (!(params.T > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (neighbor_count < 0) throw std::invalid_argument("neighbor count must be non-negative");
  const int sums = neighbor_count + 1;
  prob_.resize(static_cast<std::size_t>(2 * sums));
  for (int i = 0; i < sums; ++i) {
    for (int j = 0; j < 2; ++j) {
      const int spin = 2 * j - 1;
      const int sum = 2 * i - neighbor_count;
      const double x = std::exp(-flip_energy(params, spin, sum) / params.T);
      // exp overflow gives inf/inf; the limit is 1.
      prob_[static_cast<std::size_t>(i + sums * j)] = std::isinf(x) ? 1.0 : x / (1.0 + x);
    }
  }
}

double FlipTable::at(int spin, int neighbor_sum) const {
  return prob_[static_cast<std::size_t>(ising_index(spin, neighbor_sum, neighbor_count_))];
}

FlipTable flip_table(IsingParams params, int neighbor_count) { return FlipTable(params, neighbor_count); }

int ising_index(int spin, int neighbor_sum, int neighbor_count) {
  if (spin != -1 && spin != 1) throw std::invalid_argument("spin must be -1 or +1");
  if (neighbor_sum < -neighbor_count || neighbor_sum > neighbor_count ||
      (neighbor_sum + neighbor_count) % 2 != 0) {
    throw std::invalid_argument("neighbor sum out of range or of wrong parity");
  }
  return (neighbor_sum + neighbor_count) / 2 + (neighbor_count + 1) * (spin + 1) / 2;
}

State ising_next_state(State s, std::span<const State> neighbors, const FlipTable& table, double r) {
  if (neighbors.size() != static_cast<std::size_t>(table.neighbor_count())) {
    throw std::invalid_argument("neighbor count does not match the flip table");
  }
  return r < table.at(s, state_sum(neighbors)) ? static_cast<State>(-s) : s;
}

State life_next_state(State s, std::span<const State> neighbors) {
  const int live = state_sum(neighbors);
  if (s != 0) return (live == 2 || live == 3) ? State{1} : State{0};
  return live == 3 ? State{1} : State{0};
}

ModelSpec ModelSpec::parse(std::string_view text) {
  ModelSpec spec;
  if (text == "life") {
    spec.kind = ModelKind::life;
    return spec;
  }
  const auto colon = text.find(':');
  if (text.substr(0, colon) != "ising") throw std::invalid_argument("unknown model '" + std::string(text) + "'");
  spec.kind = ModelKind::ising;
  if (colon == std::string_view::npos) return spec;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("ising parameter needs name=value");
    const std::string_view name = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw std::invalid_argument("bad ising parameter value '" + std::string(value) + "'");
    }
    if (name == "J") spec.ising.J = v;
    else if (name == "H") spec.ising.H = v;
    else if (name == "T") spec.ising.T = v;
    else throw std::invalid_argument("unknown ising parameter '" + std::string(name) + "'");
  }
  if (!(spec.ising.T > 0.0)) throw std::invalid_argument("temperature must be positive");
  return spec;
}

std::string ModelSpec::to_string() const {
  if (kind == ModelKind::life) return "life";
  return "ising:J=" + format_double(ising.J) + ",H=" + format_double(ising.H) + ",T=" + format_double(ising.T);
}

CellModel::CellModel(ModelKind kind, int neighbor_count, FlipTable table, std::vector<double> key_prob)
    : kind_(kind), neighbor_count_(neighbor_count), table_(std::move(table)), key_prob_(std::move(key_prob)) {}

CellModel CellModel::ising(IsingParams params, int neighbor_count) {
  FlipTable table(params, neighbor_count);
  std::vector<double> keys(table.entries().begin(), table.entries().end());
  return CellModel(ModelKind::ising, neighbor_count, std::move(table), std::move(keys));
}

CellModel CellModel::life() {
  std::vector<double> keys(18);
  std::vector<State> nbrs(8, 0);
  for (int s = 0; s < 2; ++s) {
    for (int live = 0; live <= 8; ++live) {
      for (int i = 0; i < 8; ++i) nbrs[static_cast<std::size_t>(i)] = i < live ? 1 : 0;
      const State next = life_next_state(static_cast<State>(s), nbrs);
      keys[static_cast<std::size_t>(s * 9 + live)] = next != s ? 1.0 : 0.0;
    }
  }
  return CellModel(ModelKind::life, 8, FlipTable(IsingParams{}, 0), std::move(keys));
}

CellModel CellModel::bind(const ModelSpec& spec, const NeighborTable& table) {
  if (spec.kind == ModelKind::life) {
    if (table.lattice().dim() != 2 || table.kind() != Neighborhood::moore || table.degree() != 8) {
      throw std::invalid_argument("life needs a 2-D lattice (side >= 3) with the Moore neighborhood");
    }
    return life();
  }
  if (table.kind() != Neighborhood::von_neumann) {
    throw std::invalid_argument("ising uses the von Neumann neighborhood");
  }
  return ising(spec.ising, static_cast<int>(table.degree()));
}

InitialConfig parse_initial_config(std::string_view text) {
  if (text == "random") return InitialConfig::random;
  if (text == "up") return InitialConfig::all_up;
  if (text == "down") return InitialConfig::all_down;
  throw std::invalid_argument("initial configuration must be random, up or down");
}

std::string to_string(InitialConfig init) {
  switch (init) {
    case InitialConfig::random: return "random";
    case InitialConfig::all_up: return "up";
    case InitialConfig::all_down: return "down";
  }
  return "?";
}

State initial_state(const CellModel& model, InitialConfig init, std::uint64_t seed, CellId c) {
  switch (init) {
    case InitialConfig::all_up: return model.from_bit(true);
    case InitialConfig::all_down: return model.from_bit(false);
    case InitialConfig::random: {
      Stream s(seed, {StreamKind::cell_init, c});
      return model.from_bit(s.next_uniform() < 0.5);
    }
  }
  return model.from_bit(false);
}

}  // namespace asyncell
