#pragma once

#include <array>
#include <cassert>
#include <initializer_list>
#include <span>

namespace stochflow {

inline constexpr int kMaxDim = 6;

/// Fixed-capacity coordinate tuple used for points and tangent vectors.
/// Lives on the stack so the integrators never allocate per step.
class Coords {
public:
  Coords() = default;
  explicit Coords(int dim) : dim_(dim) { assert(dim >= 0 && dim <= kMaxDim); }
  Coords(std::initializer_list<double> values) : dim_(static_cast<int>(values.size())) {
    assert(dim_ <= kMaxDim);
    int i = 0;
    for (double v : values) c_[i++] = v;
  }
  explicit Coords(std::span<const double> values) : dim_(static_cast<int>(values.size())) {
    assert(dim_ <= kMaxDim);
    for (int i = 0; i < dim_; ++i) c_[i] = values[i];
  }

  int dim() const noexcept { return dim_; }
  double& operator[](int i) noexcept { return c_[i]; }
  double operator[](int i) const noexcept { return c_[i]; }
  std::span<const double> values() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }
  std::span<double> values() noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  Coords& operator+=(const Coords& o) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Coords& operator-=(const Coords& o) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Coords& operator*=(double s) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }
  friend Coords operator+(Coords a, const Coords& b) noexcept { return a += b; }
  friend Coords operator-(Coords a, const Coords& b) noexcept { return a -= b; }
  friend Coords operator*(double s, Coords a) noexcept { return a *= s; }

  /// Adds s*v in place.
  void axpy(double s, const Coords& v) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] += s * v.c_[i];
  }

  friend bool operator==(const Coords& a, const Coords& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

using Point = Coords;
using Tangent = Coords;

double max_abs(const Coords& v) noexcept;

} // namespace stochflow
