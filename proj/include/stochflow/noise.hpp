#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace stochflow {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Standard normal draw determined entirely by (seed, path, step, component).
double gaussian(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t component);

/// Uniform draw in (0, 1) on the same counter space as gaussian().
double uniform(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t component);

/// Counter step reserved for per-path draws that are not Brownian increments.
inline constexpr std::uint32_t kAuxiliaryStep = 0xffffffffu;

/// Brownian increments for one path: steps x m draws of N(0, dt).
class NoisePath {
public:
  NoisePath(std::uint64_t seed, std::uint64_t path_index, int m, double dt, int steps, std::vector<double> increments);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t path_index() const noexcept { return path_index_; }
  int m() const noexcept { return m_; }
  double dt() const noexcept { return dt_; }
  int steps() const noexcept { return steps_; }

  double increment(int step, int component) const { return increments_[static_cast<std::size_t>(step) * m_ + component]; }
  std::span<const double> step_increments(int step) const {
    return {increments_.data() + static_cast<std::size_t>(step) * m_, static_cast<std::size_t>(m_)};
  }
  const std::vector<double>& increments() const noexcept { return increments_; }

  /// Same Brownian path sampled `factor` times coarser: consecutive groups of
  /// increments are summed.
  NoisePath coarsened(int factor) const;

  friend bool operator==(const NoisePath&, const NoisePath&) = default;

private:
  std::uint64_t seed_;
  std::uint64_t path_index_;
  int m_;
  double dt_;
  int steps_;
  std::vector<double> increments_;
};

NoisePath generate_noise(std::uint64_t seed, std::uint64_t path_index, int m, double dt, int steps);

} // namespace stochflow
