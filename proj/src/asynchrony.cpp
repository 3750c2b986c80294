#include "asyncell/asynchrony.hpp"

#include <boost/math/distributions/normal.hpp>

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace asyncell {
namespace {

void check_unit(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("uniform draw must lie in (0,1)");
}

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("bad number for ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

double gaussian_quantile(double mean, double sd, double r) {
  if (sd == 0.0) return mean;
  return boost::math::quantile(boost::math::normal_distribution<double>(mean, sd), r);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ArrivalLaw ArrivalLaw::poisson(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("poisson rate must be positive");
  ArrivalLaw law;
  law.kind = Kind::poisson;
  law.rate = rate;
  return law;
}

ArrivalLaw ArrivalLaw::power(int k) {
  if (k < 1) throw std::invalid_argument("power law exponent must be a positive integer");
  ArrivalLaw law;
  law.kind = Kind::power;
  law.power_k = k;
  return law;
}

ArrivalLaw ArrivalLaw::gaussian(double mean, double sd) {
  if (!(mean > 0.0) || !(sd >= 0.0)) throw std::invalid_argument("gaussian period needs mean > 0, sd >= 0");
  ArrivalLaw law;
  law.kind = Kind::gaussian_period;
  law.mean = mean;
  law.sd = sd;
  return law;
}

ArrivalLaw ArrivalLaw::gaussian_fixed(double mean, double sd) {
  ArrivalLaw law = gaussian(mean, sd);
  law.kind = Kind::gaussian_fixed;
  return law;
}

ArrivalLaw ArrivalLaw::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  auto two = [&](const char* what) {
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument(std::string(what) + " needs <mean>,<sd>");
    return std::pair{parse_double(arg.substr(0, comma), what), parse_double(arg.substr(comma + 1), what)};
  };
  if (name == "poisson") return poisson(colon == std::string_view::npos ? 1.0 : parse_double(arg, "poisson"));
  if ((name == "uniform" || name == "fixed") && colon != std::string_view::npos) {
    throw std::invalid_argument("law '" + std::string(name) + "' takes no parameter");
  }
  if (name == "uniform") return uniform01();
  if (name == "fixed") return fixed();
  if (name == "power") {
    const double k = parse_double(arg, "power");
    if (k != std::floor(k)) throw std::invalid_argument("power law exponent must be an integer");
    return power(static_cast<int>(k));
  }
  if (name == "gaussian") {
    const auto [m, s] = two("gaussian");
    return gaussian(m, s);
  }
  if (name == "gaussian-fixed") {
    const auto [m, s] = two("gaussian-fixed");
    return gaussian_fixed(m, s);
  }
  throw std::invalid_argument("unknown arrival law '" + std::string(text) + "'");
}

std::string ArrivalLaw::to_string() const {
  switch (kind) {
    case Kind::poisson: return "poisson:" + format_double(rate);
    case Kind::uniform01: return "uniform";
    case Kind::power: return "power:" + std::to_string(power_k);
    case Kind::gaussian_period: return "gaussian:" + format_double(mean) + "," + format_double(sd);
    case Kind::gaussian_fixed: return "gaussian-fixed:" + format_double(mean) + "," + format_double(sd);
    case Kind::fixed: return "fixed";
  }
  return "?";
}

double advance_strictly(double t, double increment) noexcept {
  const double next = t + increment;
  return next > t ? next : std::nextafter(t, std::numeric_limits<double>::infinity());
}

std::optional<double> arrival_increment(const ArrivalLaw& law, double r) {
  check_unit(r);
  switch (law.kind) {
    case ArrivalLaw::Kind::poisson: return -std::log(r) / law.rate;
    case ArrivalLaw::Kind::uniform01: return r;
    case ArrivalLaw::Kind::power: return std::pow(r, 1.0 / law.power_k);
    case ArrivalLaw::Kind::gaussian_period: {
      const double x = gaussian_quantile(law.mean, law.sd, r);
      if (!(x > 0.0)) return std::nullopt;
      return x;
    }
    case ArrivalLaw::Kind::gaussian_fixed:
      throw std::invalid_argument("gaussian-fixed increments are per-cell; use ArrivalClock");
    case ArrivalLaw::Kind::fixed: return 1.0;
  }
  return std::nullopt;
}

double next_arrival(const ArrivalLaw& law, double t, double r) {
  const auto inc = arrival_increment(law, r);
  if (!inc) throw std::domain_error("gaussian increment rejected (non-positive sample)");
  return advance_strictly(t, *inc);
}

double cumulative_next_arrival(double rate, std::size_t k, double t, double r) {
  if (k == 0) throw std::invalid_argument("cumulative stream needs at least one cell");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  check_unit(r);
  return advance_strictly(t, -std::log(r) / (rate * static_cast<double>(k)));
}

double ArrivalClock::cell_period(CellId c) const {
  Stream s(seed_, {StreamKind::cell_period, c});
  for (;;) {
    const double x = gaussian_quantile(law_.mean, law_.sd, s.next_uniform());
    if (x > 0.0) return x;
  }
}

double ArrivalClock::next(CellId c, double t, Stream& stream) const {
  if (law_.kind == ArrivalLaw::Kind::gaussian_fixed) return advance_strictly(t, cell_period(c));
  if (law_.kind == ArrivalLaw::Kind::fixed) return advance_strictly(t, 1.0);
  for (;;) {
    if (auto inc = arrival_increment(law_, stream.next_uniform())) return advance_strictly(t, *inc);
  }
}

}  // namespace asyncell
