#pragma once

// Quadratic characters chi_{8d} for odd squarefree d > 0: central values,
// an independent Hurwitz-zeta evaluator, partial sums and character sums.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "lmoments/arith.hpp"
#include "lmoments/error.hpp"
#include "lmoments/specfun.hpp"
#include "lmoments/summation.hpp"

namespace lmoments {

class QuadDiscriminant {
 public:
  explicit QuadDiscriminant(std::uint64_t d) : d_(d) {
    if (d == 0 || d % 2 == 0) fail(ErrorKind::domain, "QuadDiscriminant: d = " + std::to_string(d) + " is not odd and positive");
    for (std::uint64_t p = 3; p * p <= d; p += 2) {
      if (d % (p * p) == 0) fail(ErrorKind::domain, "QuadDiscriminant: d = " + std::to_string(d) + " is not squarefree");
    }
    if (d > (std::uint64_t(1) << 59)) fail(ErrorKind::overflow, "QuadDiscriminant: 8d does not fit");
  }

  std::uint64_t d() const noexcept { return d_; }
  std::uint64_t modulus() const noexcept { return 8 * d_; }

 private:
  std::uint64_t d_;
};

inline int chi(const QuadDiscriminant& dq, std::uint64_t n) {
  return kronecker(static_cast<std::int64_t>(dq.modulus()), n);
}

/// Bound on 2 sum_{n > N} n^{-1/2} W(n alpha), alpha = sqrt(pi/8d), from
/// W(xi) = Q(1/4, xi^2) <= xi^{-3/2} e^{-xi^2} / Gamma(1/4).
inline double chi_tail_bound(const QuadDiscriminant& dq, std::uint64_t N) {
  const double alpha = std::sqrt(std::numbers::pi / static_cast<double>(dq.modulus()));
  const double m = static_cast<double>(N + 1);
  const double xi = m * alpha;
  const double geometric = 1.0 / (-std::expm1(-2.0 * m * alpha * alpha));
  return 2.0 / std::sqrt(m) * std::pow(xi, -1.5) * std::exp(-xi * xi - log_gamma(0.25)) * geometric;
}

/// Truncation point for central_value_chi: the smallest N with certified
/// tail below eps, times 1.2.
inline std::uint64_t chi_cutoff(const QuadDiscriminant& dq, double eps) {
  const double alpha = std::sqrt(std::numbers::pi / static_cast<double>(dq.modulus()));
  std::uint64_t lo = 0, hi = static_cast<std::uint64_t>(std::ceil(1.0 / alpha));
  while (!(chi_tail_bound(dq, hi) < eps)) hi *= 2;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (chi_tail_bound(dq, mid) < eps ? hi : lo) = mid;
  }
  const std::uint64_t N = hi;
  return static_cast<std::uint64_t>(std::ceil(1.2 * static_cast<double>(N)));
}

/// L(1/2, chi_{8d}) = 2 sum chi(n) n^{-1/2} W(n sqrt(pi/8d)).
inline double central_value_chi(const QuadDiscriminant& dq, double eps,
                                std::optional<std::uint64_t> cutoff_override = std::nullopt) {
  if (!(eps > 0.0 && eps <= 1e-6)) fail(ErrorKind::domain, "central_value_chi: eps must lie in (0, 1e-6]");
  const std::uint64_t N = cutoff_override.value_or(chi_cutoff(dq, eps));
  const double alpha = std::sqrt(std::numbers::pi / static_cast<double>(dq.modulus()));
  CompensatedSum sum;
  for (std::uint64_t n = 1; n <= N; ++n) {
    const int c = chi(dq, n);
    if (c == 0) continue;
    const double nn = static_cast<double>(n);
    sum.add(c / std::sqrt(nn) * weight_W(nn * alpha));
  }
  return 2.0 * sum.value();
}

inline constexpr std::uint64_t kOracleModulusCap = 100000;

/// L(1/2, chi_{8d}) = (8d)^{-1/2} sum_{a=1}^{8d} chi(a) zeta(1/2, a/8d).
inline double central_value_chi_oracle(const QuadDiscriminant& dq) {
  const std::uint64_t q = dq.modulus();
  if (q > kOracleModulusCap) fail(ErrorKind::domain, "central_value_chi_oracle: modulus above " + std::to_string(kOracleModulusCap));
  CompensatedSum sum;
  for (std::uint64_t a = 1; a <= q; ++a) {
    const int c = chi(dq, a);
    if (c != 0) sum.add(c * hurwitz_zeta(0.5, static_cast<double>(a) / static_cast<double>(q)));
  }
  return sum.value() / std::sqrt(static_cast<double>(q));
}

/// A(8d) = sum_{n <= x} chi(n)/sqrt(n).
inline double partial_sum_A(const QuadDiscriminant& dq, double x) {
  if (!(x >= 1.0)) fail(ErrorKind::domain, "partial_sum_A: x must be >= 1");
  const auto N = static_cast<std::uint64_t>(std::floor(x));
  CompensatedSum sum;
  for (std::uint64_t n = 1; n <= N; ++n) {
    const int c = chi(dq, n);
    if (c != 0) sum.add(c / std::sqrt(static_cast<double>(n)));
  }
  return sum.value();
}

struct CharSumReport {
  std::uint64_t n = 0;
  double z = 0.0;
  std::int64_t exact_sum = 0;
  double predicted_main = 0.0;
  double bound_used = 0.0;
  bool square = false;
};

/// sum_{d <= z} mu^2(2d) (8d/n) by enumeration, with the predicted main term
/// (z/zeta(2)) prod_{p | 2n} p/(p+1) for square n and 0 otherwise. bound_used
/// is z^{0.6} in the square case and sqrt(z) n^{1/4} log(2n) otherwise.
inline CharSumReport charsum(std::uint64_t n, double z, std::uint64_t sieve_limit = kDefaultSieveLimit) {
  if (n == 0 || n % 2 == 0) fail(ErrorKind::domain, "charsum: n must be odd and positive");
  if (!(z >= 3.0)) fail(ErrorKind::domain, "charsum: z must be >= 3");
  const auto zmax = static_cast<std::uint64_t>(std::floor(z));
  if (zmax > sieve_limit) {
    fail(ErrorKind::resource, "charsum: z = " + std::to_string(zmax) + " exceeds sieve limit " + std::to_string(sieve_limit),
         "charsum");
  }
  const auto squarefree = build_squarefree_table(zmax);
  CharSumReport r;
  r.n = n;
  r.z = z;
  for (std::uint64_t d = 1; d <= zmax; d += 2) {
    if (squarefree[d]) r.exact_sum += kronecker(static_cast<std::int64_t>(8 * d), n);
  }
  r.square = is_perfect_square(n);
  if (r.square) {
    const FactoredInteger fn = factor(n);
    r.predicted_main = 6.0 / (std::numbers::pi * std::numbers::pi) * z * euler_local_product(fn);
    r.bound_used = std::pow(z, 0.6);
  } else {
    const double nn = static_cast<double>(n);
    r.predicted_main = 0.0;
    r.bound_used = std::sqrt(z) * std::pow(nn, 0.25) * std::log(2.0 * nn);
  }
  return r;
}

// ---------------------------------------------------------------------------
// L-value cache: a version line, then CSV rows d,epsilon,value. A file with a
// different version line loads as empty and is overwritten on save.

inline constexpr const char* kLValueCacheVersion = "lmoments-lvalues-v1";

class LValueCache {
 public:
  LValueCache() = default;

  static LValueCache load(const std::filesystem::path& path) {
    LValueCache cache;
    std::ifstream in(path);
    if (!in) return cache;
    std::string line;
    if (!std::getline(in, line) || line != std::string("# ") + kLValueCacheVersion) return cache;
    if (!std::getline(in, line) || line != "d,epsilon,value") return cache;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string d, e, v;
      if (!std::getline(row, d, ',') || !std::getline(row, e, ',') || !std::getline(row, v, ',')) {
        fail(ErrorKind::io, "malformed L-value cache row in " + path.string());
      }
      cache.values_[{std::stoull(d), std::strtod(e.c_str(), nullptr)}] = std::strtod(v.c_str(), nullptr);
    }
    return cache;
  }

  std::optional<double> find(std::uint64_t d, double eps) const {
    const auto it = values_.find({d, eps});
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  void insert(std::uint64_t d, double eps, double value) { values_[{d, eps}] = value; }
  std::size_t size() const noexcept { return values_.size(); }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
      out << "# " << kLValueCacheVersion << "\nd,epsilon,value\n";
      char buf[96];
      for (const auto& [key, v] : values_) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(key.first), key.second, v);
        out << buf;
      }
      if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::map<std::pair<std::uint64_t, double>, double> values_;
};

}  // namespace lmoments
