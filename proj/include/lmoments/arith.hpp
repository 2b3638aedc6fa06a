#pragma once

// Integer arithmetic shared by the rest of the library: Kronecker symbols,
// squarefree and smallest-prime-factor sieves, and the few multiplicative
// functions the moment computations need.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lmoments/error.hpp"

namespace lmoments {

struct PrimePower {
  std::uint64_t prime;
  unsigned exponent;

  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// floor(sqrt(n)) without floating-point rounding surprises.
constexpr std::uint64_t isqrt(std::uint64_t n) noexcept {
  if (n < 2) return n;
  std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

constexpr bool is_perfect_square(std::uint64_t n) noexcept {
  const std::uint64_t r = isqrt(n);
  return r * r == n;
}

/// A positive integer together with its prime decomposition.
class FactoredInteger {
 public:
  FactoredInteger() = default;

  /// Validates that primes are strictly increasing with exponents >= 1 and
  /// that the product fits in 64 bits. Primality itself is trusted.
  static FactoredInteger from_factors(std::vector<PrimePower> factors) {
    FactoredInteger out;
    std::uint64_t prev = 1;
    unsigned __int128 n = 1;
    for (const auto& pp : factors) {
      if (pp.prime <= prev || pp.exponent == 0) {
        fail(ErrorKind::domain, "FactoredInteger: factors must have increasing primes and positive exponents");
      }
      for (unsigned e = 0; e < pp.exponent; ++e) {
        n *= pp.prime;
        if (n > UINT64_MAX) fail(ErrorKind::overflow, "FactoredInteger: value exceeds 64 bits");
      }
      prev = pp.prime;
    }
    out.n_ = static_cast<std::uint64_t>(n);
    out.factors_ = std::move(factors);
    return out;
  }

  std::uint64_t value() const noexcept { return n_; }
  std::span<const PrimePower> factors() const noexcept { return factors_; }
  std::size_t distinct_primes() const noexcept { return factors_.size(); }

  bool is_square() const noexcept {
    for (const auto& pp : factors_)
      if (pp.exponent % 2 != 0) return false;
    return true;
  }

  bool is_squarefree() const noexcept {
    for (const auto& pp : factors_)
      if (pp.exponent > 1) return false;
    return true;
  }

  friend bool operator==(const FactoredInteger&, const FactoredInteger&) = default;

 private:
  std::uint64_t n_ = 1;
  std::vector<PrimePower> factors_;
};

/// Smallest-prime-factor sieve. Immutable after construction; factor() on an
/// input above limit() is a resource error rather than a slow fallback.
class FactorSieve {
 public:
  explicit FactorSieve(std::uint32_t limit) : limit_(limit), spf_(std::size_t(limit) + 1, 0) {
    if (limit < 1) fail(ErrorKind::domain, "FactorSieve: limit must be >= 1");
    for (std::uint64_t i = 2; i <= limit; ++i) {
      if (spf_[i] != 0) continue;
      spf_[i] = static_cast<std::uint32_t>(i);
      for (std::uint64_t j = i * i; j <= limit; j += i)
        if (spf_[j] == 0) spf_[j] = static_cast<std::uint32_t>(i);
    }
  }

  std::uint32_t limit() const noexcept { return limit_; }

  std::uint32_t smallest_prime_factor(std::uint64_t n) const {
    check(n);
    return spf_[n];
  }

  bool is_prime(std::uint64_t n) const {
    check(n);
    return n >= 2 && spf_[n] == n;
  }

  FactoredInteger factor(std::uint64_t n) const {
    check(n);
    std::vector<PrimePower> f;
    while (n > 1) {
      const std::uint32_t p = spf_[n];
      unsigned e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      f.push_back({p, e});
    }
    return FactoredInteger::from_factors(std::move(f));
  }

 private:
  void check(std::uint64_t n) const {
    if (n == 0) fail(ErrorKind::domain, "FactorSieve: zero has no factorization");
    if (n > limit_) {
      fail(ErrorKind::resource, "FactorSieve: " + std::to_string(n) + " exceeds sieve limit " +
                                    std::to_string(limit_));
    }
  }

  std::uint32_t limit_;
  std::vector<std::uint32_t> spf_;
};

inline constexpr std::uint32_t kDefaultSieveLimit = 1u << 22;

/// Process-wide sieve up to kDefaultSieveLimit, built on first use.
inline const FactorSieve& default_sieve() {
  static const FactorSieve sieve(kDefaultSieveLimit);
  return sieve;
}

inline FactoredInteger factor(std::uint64_t n) { return default_sieve().factor(n); }

/// Kronecker symbol (m/n) for n >= 1, via the completely multiplicative
/// extension of the Jacobi symbol to even n.
inline int kronecker(std::int64_t m, std::uint64_t n) {
  if (n == 0) fail(ErrorKind::domain, "kronecker: n must be >= 1");
  int result = 1;
  if (n % 2 == 0) {
    if (m % 2 == 0) return 0;
    unsigned v = 0;
    while (n % 2 == 0) {
      n /= 2;
      ++v;
    }
    const std::int64_t m8 = ((m % 8) + 8) % 8;
    if ((v & 1u) && (m8 == 3 || m8 == 5)) result = -result;
  }
  if (n == 1) return result;

  // Jacobi symbol (a/n), n odd.
  std::uint64_t a = static_cast<std::uint64_t>(((m % static_cast<std::int64_t>(n)) + static_cast<std::int64_t>(n)) %
                                               static_cast<std::int64_t>(n));
  while (a != 0) {
    while (a % 2 == 0) {
      a /= 2;
      const std::uint64_t r = n % 8;
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(a, n);
    if (a % 4 == 3 && n % 4 == 3) result = -result;
    a %= n;
  }
  return n == 1 ? result : 0;
}

/// Indicator table of squarefree integers 0..limit (index 0 is false).
class SquarefreeTable {
 public:
  SquarefreeTable() = default;
  SquarefreeTable(std::uint64_t limit, std::vector<bool> flags) : limit_(limit), flags_(std::move(flags)) {}

  std::uint64_t limit() const noexcept { return limit_; }

  bool operator[](std::uint64_t m) const {
    if (m > limit_) {
      fail(ErrorKind::resource, "SquarefreeTable: " + std::to_string(m) + " beyond limit " +
                                    std::to_string(limit_));
    }
    return flags_[m];
  }

 private:
  std::uint64_t limit_ = 0;
  std::vector<bool> flags_;
};

inline constexpr std::uint64_t kDefaultSieveMemoryBytes = std::uint64_t(1) << 30;

inline SquarefreeTable build_squarefree_table(std::uint64_t limit,
                                              std::uint64_t memory_budget_bytes = kDefaultSieveMemoryBytes) {
  if (limit < 1) fail(ErrorKind::domain, "build_squarefree_table: limit must be >= 1");
  if (limit / 8 + 1 > memory_budget_bytes) {
    fail(ErrorKind::resource, "build_squarefree_table: limit " + std::to_string(limit) +
                                  " exceeds memory budget of " + std::to_string(memory_budget_bytes) + " bytes");
  }
  std::vector<bool> flags(limit + 1, true);
  flags[0] = false;
  const std::uint64_t root = isqrt(limit);
  std::vector<bool> composite(root + 1, false);
  for (std::uint64_t p = 2; p <= root; ++p) {
    if (composite[p]) continue;
    for (std::uint64_t j = p * p; j <= root; j += p) composite[j] = true;
    const std::uint64_t sq = p * p;
    for (std::uint64_t j = sq; j <= limit; j += sq) flags[j] = false;
  }
  return SquarefreeTable(limit, std::move(flags));
}

/// d_k(n) = number of ordered k-tuples with product n; d_k(p^a) = C(a+k-1, k-1).
inline std::uint64_t divisor_count(unsigned k, const FactoredInteger& n) {
  if (k < 1) fail(ErrorKind::domain, "divisor_count: k must be >= 1");
  unsigned __int128 total = 1;
  for (const auto& pp : n.factors()) {
    unsigned __int128 c = 1;
    for (unsigned i = 1; i <= pp.exponent; ++i) {
      c = c * (k - 1 + i) / i;
      if (c > UINT64_MAX) fail(ErrorKind::overflow, "divisor_count: overflow");
    }
    total *= c;
    if (total > UINT64_MAX) fail(ErrorKind::overflow, "divisor_count: overflow");
  }
  return static_cast<std::uint64_t>(total);
}

/// prod_{p | 2n} p/(p+1) over distinct primes.
inline double euler_local_product(const FactoredInteger& n) {
  double out = 2.0 / 3.0;
  for (const auto& pp : n.factors()) {
    if (pp.prime == 2) continue;
    const double p = static_cast<double>(pp.prime);
    out *= p / (p + 1.0);
  }
  return out;
}

namespace detail {
inline std::vector<std::uint64_t> small_primes(std::uint64_t limit) {
  std::vector<bool> composite(limit + 1, false);
  std::vector<std::uint64_t> primes;
  for (std::uint64_t p = 2; p <= limit; ++p) {
    if (composite[p]) continue;
    primes.push_back(p);
    for (std::uint64_t j = p * p; j <= limit; j += p) composite[j] = true;
  }
  return primes;
}
}  // namespace detail

/// Odd squarefree d with X/16 < d <= X/8, increasing. For each such d, 8d is
/// a fundamental discriminant.
inline std::vector<std::uint64_t> enumerate_family(double X) {
  if (!(X >= 32.0)) fail(ErrorKind::domain, "enumerate_family: X must be >= 32");
  const auto lo = static_cast<std::uint64_t>(std::floor(X / 16.0)) + 1;
  const auto hi = static_cast<std::uint64_t>(std::floor(X / 8.0));
  if (hi < lo) return {};
  std::vector<bool> ok(hi - lo + 1, true);
  for (std::uint64_t p : detail::small_primes(isqrt(hi))) {
    if (p == 2) continue;  // even d are dropped below
    const std::uint64_t sq = p * p;
    for (std::uint64_t j = (lo + sq - 1) / sq * sq; j <= hi; j += sq) ok[j - lo] = false;
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t d = lo; d <= hi; ++d)
    if (d % 2 == 1 && ok[d - lo]) out.push_back(d);
  return out;
}

}  // namespace lmoments
