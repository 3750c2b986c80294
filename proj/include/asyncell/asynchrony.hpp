#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "asyncell/rand_streams.hpp"
#include "asyncell/topology.hpp"

namespace asyncell {

/// Rule producing a cell's next arrival time from the previous one.
/// All parameters are in simulated-time units.
struct ArrivalLaw {
  enum class Kind : std::uint8_t {
    poisson,          ///< Exp(rate) increments
    uniform01,        ///< U(0,1) increments
    power,            ///< r^(1/k) increments
    gaussian_period,  ///< N(mean, sd) increments, non-positive samples redrawn
    gaussian_fixed,   ///< per-cell constant period drawn once from N(mean, sd)
    fixed,            ///< increment 1 (synchronous degenerate case)
  };

  Kind kind = Kind::poisson;
  double rate = 1.0;
  int power_k = 1;
  double mean = 1.0;
  double sd = 0.0;

  static ArrivalLaw poisson(double rate);
  static ArrivalLaw uniform01() { return {Kind::uniform01}; }
  static ArrivalLaw power(int k);
  static ArrivalLaw gaussian(double mean, double sd);
  static ArrivalLaw gaussian_fixed(double mean, double sd);
  static ArrivalLaw fixed() { return {Kind::fixed}; }

  /// Parses `poisson:<rate> | uniform | power:<k> | gaussian:<m>,<sd> |
  /// gaussian-fixed:<m>,<sd> | fixed`. Throws std::invalid_argument.
  static ArrivalLaw parse(std::string_view text);
  std::string to_string() const;

  bool continuous() const noexcept { return kind != Kind::fixed; }
};

/// Increment for one uniform draw, or nullopt when the Gaussian sample is
/// non-positive and must be redrawn. Throws for r outside (0, 1) and for the
/// gaussian_fixed law, whose increment is a per-cell constant.
std::optional<double> arrival_increment(const ArrivalLaw& law, double r);

/// t + increment. The result is always strictly greater than t (an increment
/// that vanishes in floating point is bumped to the next representable time).
/// Throws std::invalid_argument for r outside (0, 1) and std::domain_error
/// when a Gaussian sample is rejected.
double next_arrival(const ArrivalLaw& law, double t, double r);

/// Next event of a Poisson stream that is the sum of k cell streams of the
/// given rate: T - ln(r) / (rate * k).
double cumulative_next_arrival(double rate, std::size_t k, double t, double r);

/// Binds a law to a run seed. Handles redraws and the per-cell fixed period
/// of gaussian_fixed, so engines can treat every law the same way.
class ArrivalClock {
 public:
  ArrivalClock(ArrivalLaw law, std::uint64_t seed) : law_(law), seed_(seed) {}

  const ArrivalLaw& law() const noexcept { return law_; }
  /// Next arrival of cell c after time t, consuming draws from `stream`.
  double next(CellId c, double t, Stream& stream) const;
  /// Fixed period of cell c under gaussian_fixed.
  double cell_period(CellId c) const;

 private:
  ArrivalLaw law_;
  std::uint64_t seed_;
};

/// Strictly-greater guard shared by all laws.
double advance_strictly(double t, double increment) noexcept;

}  // namespace asyncell
