#include "stochflow/noise.hpp"

#include <cmath>
#include <numbers>

#include "stochflow/errors.hpp"

namespace stochflow {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

namespace {

// Uniform in (0, 1) from 64 random bits.
double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

double gaussian(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t component) {
  const auto r = philox4x32({step, component, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const double u1 = open_unit(r[0], r[1]);
  const double u2 = open_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t component) {
  const auto r = philox4x32({step, component, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return open_unit(r[0], r[1]);
}

NoisePath::NoisePath(std::uint64_t seed, std::uint64_t path_index, int m, double dt, int steps,
                     std::vector<double> increments)
    : seed_(seed), path_index_(path_index), m_(m), dt_(dt), steps_(steps), increments_(std::move(increments)) {
  if (!(dt > 0.0)) throw ConfigurationError("noise step dt must be positive");
  if (steps < 1) throw ConfigurationError("noise path needs at least one step");
  if (m < 0) throw ConfigurationError("negative noise dimension");
  if (increments_.size() != static_cast<std::size_t>(m) * steps)
    throw ConfigurationError("noise increment array has the wrong shape");
}

NoisePath NoisePath::coarsened(int factor) const {
  if (factor < 1 || steps_ % factor != 0) throw ConfigurationError("coarsening factor must divide the step count");
  const int steps = steps_ / factor;
  std::vector<double> inc(static_cast<std::size_t>(steps) * m_, 0.0);
  for (int s = 0; s < steps; ++s)
    for (int f = 0; f < factor; ++f)
      for (int i = 0; i < m_; ++i) inc[static_cast<std::size_t>(s) * m_ + i] += increment(s * factor + f, i);
  return NoisePath(seed_, path_index_, m_, dt_ * factor, steps, std::move(inc));
}

NoisePath generate_noise(std::uint64_t seed, std::uint64_t path_index, int m, double dt, int steps) {
  if (!(dt > 0.0)) throw ConfigurationError("noise step dt must be positive");
  if (steps < 1) throw ConfigurationError("noise path needs at least one step");
  const double scale = std::sqrt(dt);
  std::vector<double> inc(static_cast<std::size_t>(steps) * m);
  for (int s = 0; s < steps; ++s)
    for (int i = 0; i < m; ++i)
      inc[static_cast<std::size_t>(s) * m + i] =
          scale * gaussian(seed, path_index, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(i));
  return NoisePath(seed, path_index, m, dt, steps, std::move(inc));
}

} // namespace stochflow
