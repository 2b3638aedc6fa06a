#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#ifdef __FAST_MATH__
#error "compensated summation is defeated by -ffast-math"
#endif

namespace lmoments {

/// Neumaier-compensated running sum. Order of additions is the caller's
/// responsibility; the same order always yields the same bits.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      carry_ += (sum_ - t) + value;
    } else {
      carry_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

namespace detail {
inline double pairwise_sum_impl(std::span<const double> v) {
  constexpr std::size_t leaf = 32;
  if (v.size() <= leaf) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value();
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum_impl(v.first(half)) + pairwise_sum_impl(v.subspan(half));
}
}  // namespace detail

/// Pairwise reduction with compensated leaves. The split points depend only
/// on v.size(), never on how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  return detail::pairwise_sum_impl(v);
}

}  // namespace lmoments
