#pragma once

// Moment experiments for both families: the two Hoelder sums, direct
// moments, predicted main terms and growth-rate fits.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lmoments/arith.hpp"
#include "lmoments/error.hpp"
#include "lmoments/hecke.hpp"
#include "lmoments/modforms.hpp"
#include "lmoments/parallel.hpp"
#include "lmoments/quadfamily.hpp"
#include "lmoments/summation.hpp"

namespace lmoments {

struct OrthogonalRun {
  int k = 0;
  unsigned r = 0;
  double epsilon = 0.0;
  double x = 0.0;
  std::size_t family_size = 0;
  double S1 = 0.0;
  double S2 = 0.0;
  double S1_main = 0.0;
  double S2_main = 0.0;
  double lower_bound = 0.0;
  double direct_moment = 0.0;
};

struct SymplecticRun {
  double X = 0.0;
  unsigned k = 0;
  double epsilon = 0.0;
  double x = 0.0;
  std::size_t family_size = 0;
  double S1 = 0.0;
  double S2 = 0.0;
  double S2_main = 0.0;
  double S1_main_lb = 0.0;
  double lower_bound = 0.0;
  double direct_moment = 0.0;
};

struct OrthogonalOptions {
  unsigned threads = 1;
  std::optional<std::filesystem::path> cache_dir;
};

/// Harmonic averages over H_k with x = k^{1/(2r)}:
///   S1 = sum^h L(1/2,f) A(f)^{r-1},  S2 = sum^h A(f)^r,  direct = sum^h L(1/2,f)^r,
/// and the tuple sums S1_main = 2 sum_{n_1..n_{r-1} <= x, n_r <= sqrt k} b_1/sqrt(prod),
/// S2_main = sum_{n_i <= x} b_1/sqrt(prod).
inline OrthogonalRun run_orthogonal(int k, unsigned r, double eps, const OrthogonalOptions& opt = {}) {
  if (k < 12 || k % 4 != 0) fail(ErrorKind::domain, "run_orthogonal: k must be a multiple of 4 and >= 12");
  if (r < 2 || r % 2 != 0) fail(ErrorKind::domain, "run_orthogonal: r must be even and >= 2");
  if (!(eps > 0.0 && eps <= 1e-4)) fail(ErrorKind::domain, "run_orthogonal: eps must lie in (0, 1e-4]");

  OrthogonalRun run;
  run.k = k;
  run.r = r;
  run.epsilon = eps;
  run.x = std::pow(static_cast<double>(k), 1.0 / (2.0 * r));

  const std::size_t N = std::max({default_table_length(k), afe_cutoff(k, eps), 2 * static_cast<std::size_t>(cusp_dimension(k))});
  const auto forms = harmonic_weights(k, cached_eigenforms(k, N, opt.cache_dir), eps);
  run.family_size = forms.size();

  struct Terms {
    double s1, s2, direct;
  };
  const auto terms = parallel_map(forms.size(), opt.threads, [&](std::size_t i) {
    const auto& f = forms[i];
    const double L = central_value_f(f, eps);
    const double A = partial_sum_A_f(f, run.x);
    const double w = 1.0 / f.omega;
    return Terms{w * L * std::pow(A, r - 1), w * std::pow(A, r), w * std::pow(L, r)};
  });
  std::vector<double> s1, s2, direct;
  for (const auto& t : terms) {
    s1.push_back(t.s1);
    s2.push_back(t.s2);
    direct.push_back(t.direct);
  }
  run.S1 = pairwise_sum(s1);
  run.S2 = pairwise_sum(s2);
  run.direct_moment = pairwise_sum(direct);
  run.lower_bound = std::pow(run.S1, r) / std::pow(run.S2, r - 1);

  run.S1_main = 2.0 * b_sum_weighted(r, run.x, std::sqrt(static_cast<double>(k)));
  run.S2_main = b_sum_weighted(r, run.x);
  return run;
}

namespace detail {

/// Visits ordered tuples of odd integers in [1, x] of the given length with
/// their product. Budget counts visited tuples.
inline void for_each_odd_tuple(unsigned length, double x, std::uint64_t budget, const char* stage,
                               const std::function<void(std::uint64_t)>& fn) {
  const auto limit = static_cast<std::uint64_t>(std::floor(x));
  std::uint64_t steps = 0;
  std::function<void(unsigned, std::uint64_t)> rec = [&](unsigned depth, std::uint64_t prod) {
    if (++steps > budget) fail(ErrorKind::budget, std::string(stage) + ": work budget exceeded", stage);
    if (depth == length) {
      fn(prod);
      return;
    }
    for (std::uint64_t n = 1; n <= limit; n += 2) rec(depth + 1, checked_mul(prod, n, stage));
  };
  rec(0, 1);
}

inline double prime_ratio_product(const FactoredInteger& n, bool include_two) {
  double v = include_two ? 2.0 / 3.0 : 1.0;
  for (const auto& pp : n.factors()) {
    if (pp.prime == 2) continue;
    const double p = static_cast<double>(pp.prime);
    v *= p / (p + 1.0);
  }
  return v;
}

}  // namespace detail

/// prod_p (1 - 1/(p(p+1))).
inline double prime_constant_C0() {
  static const double value = [] {
    constexpr std::uint64_t limit = 2'000'000;
    double log_prod = 0.0;
    for (auto p : detail::small_primes(limit)) {
      const double pp = static_cast<double>(p);
      log_prod += std::log1p(-1.0 / (pp * (pp + 1.0)));
    }
    // sum_{p > P} 1/p^2 ~ 1/(P log P)
    log_prod -= 1.0 / (limit * std::log(static_cast<double>(limit)));
    return std::exp(log_prod);
  }();
  return value;
}

/// (X/(16 zeta(2))) sum over n_1..n_k <= x with odd square product of
/// (prod n)^{-1/2} prod_{p | 2 prod n} p/(p+1).
inline double symplectic_S2_main(double X, unsigned k, double x, std::uint64_t budget = kDefaultWorkBudget) {
  CompensatedSum sum;
  detail::for_each_odd_tuple(k, x, budget, "symplectic_S2_main", [&](std::uint64_t prod) {
    if (!is_perfect_square(prod)) return;
    const auto f = factor(prod);
    sum.add(detail::prime_ratio_product(f, true) / std::sqrt(static_cast<double>(prod)));
  });
  const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
  return X / (16.0 * zeta2) * sum.value();
}

/// Predicted main term of S1 from writing n_1...n_{k-1} = r s^2 and keeping
/// the leading (1/4) log(sqrt X / r) of the l-sum:
///   (X/(8 zeta(2))) sum (1/(rs)) prod_{p|2rs} p/(p+1) prod_{p not | 2rs} (1 - 1/(p(p+1))) (1/4) log(sqrt X / r).
/// Only a lower-bound predictor; the dropped O(1) is not small at desk scale.
inline double symplectic_S1_main_lb(double X, unsigned k, double x, std::uint64_t budget = kDefaultWorkBudget) {
  const double c0 = prime_constant_C0();
  CompensatedSum sum;
  detail::for_each_odd_tuple(k - 1, x, budget, "symplectic_S1_main_lb", [&](std::uint64_t prod) {
    const auto f = factor(prod);
    std::uint64_t rr = 1, ss = 1;
    double local = 1.0 / (1.0 - 1.0 / 6.0);  // p = 2 leaves the coprime product
    for (const auto& pp : f.factors()) {
      for (unsigned i = 0; i < pp.exponent / 2; ++i) ss *= pp.prime;
      if (pp.exponent % 2) rr *= pp.prime;
      const double p = static_cast<double>(pp.prime);
      local /= 1.0 - 1.0 / (p * (p + 1.0));
    }
    const double rd = static_cast<double>(rr);
    const double log_term = 0.25 * std::log(std::sqrt(X) / rd);
    sum.add(detail::prime_ratio_product(f, true) * c0 * local * log_term / (rd * static_cast<double>(ss)));
  });
  const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
  return X / (8.0 * zeta2) * sum.value();
}

struct SymplecticOptions {
  unsigned threads = 1;
  LValueCache* cache = nullptr;  // read before computing, filled afterwards
  std::uint64_t work_budget = kDefaultWorkBudget;
};

/// Sums over odd squarefree d in (X/16, X/8] with x = X^{1/(10k)}:
///   S1 = sum L(1/2, chi_8d) A(8d)^{k-1},  S2 = sum A(8d)^k,  direct = sum L(1/2, chi_8d)^k.
inline SymplecticRun run_symplectic(double X, unsigned k, double eps, const SymplecticOptions& opt = {}) {
  if (!(X >= 1e3)) fail(ErrorKind::domain, "run_symplectic: X must be >= 1000");
  if (k < 2 || k % 2 != 0) fail(ErrorKind::domain, "run_symplectic: k must be even and >= 2");
  if (!(eps > 0.0 && eps <= 1e-6)) fail(ErrorKind::domain, "run_symplectic: eps must lie in (0, 1e-6]");

  SymplecticRun run;
  run.X = X;
  run.k = k;
  run.epsilon = eps;
  run.x = std::pow(X, 1.0 / (10.0 * k));

  const auto family = enumerate_family(X);
  run.family_size = family.size();
  const std::uint64_t per_item = chi_cutoff(QuadDiscriminant(family.empty() ? 1 : family.back()), eps);
  if (static_cast<double>(per_item) * static_cast<double>(family.size()) > static_cast<double>(opt.work_budget)) {
    fail(ErrorKind::budget, "run_symplectic: central values need about " +
                                std::to_string(per_item * family.size()) + " terms", "central_value_chi");
  }

  std::vector<std::optional<double>> cached(family.size());
  if (opt.cache) {
    for (std::size_t i = 0; i < family.size(); ++i) cached[i] = opt.cache->find(family[i], eps);
  }
  struct Item {
    double L, A;
  };
  const auto items = parallel_map(family.size(), opt.threads, [&](std::size_t i) {
    const QuadDiscriminant dq(family[i]);
    const double L = cached[i] ? *cached[i] : central_value_chi(dq, eps);
    return Item{L, partial_sum_A(dq, run.x)};
  });
  if (opt.cache) {
    for (std::size_t i = 0; i < family.size(); ++i) opt.cache->insert(family[i], eps, items[i].L);
  }

  std::vector<double> s1(items.size()), s2(items.size()), direct(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto [L, A] = items[i];
    s1[i] = L * std::pow(A, k - 1);
    s2[i] = std::pow(A, k);
    direct[i] = std::pow(L, k);
  }
  run.S1 = pairwise_sum(s1);
  run.S2 = pairwise_sum(s2);
  run.direct_moment = pairwise_sum(direct);
  run.lower_bound = std::pow(run.S1, k) / std::pow(run.S2, k - 1);
  run.S2_main = symplectic_S2_main(X, k, run.x, opt.work_budget);
  run.S1_main_lb = symplectic_S1_main_lb(X, k, run.x, opt.work_budget);
  return run;
}

/// sum_{m <= z, m odd} d_k(m^2)/m prod_{p | 2m} p/(p+1).
inline double odd_square_divisor_sum(unsigned k, double z) {
  if (k < 1) fail(ErrorKind::domain, "odd_square_divisor_sum: k must be >= 1");
  if (!(z >= 1.0)) fail(ErrorKind::domain, "odd_square_divisor_sum: z must be >= 1");
  const auto limit = static_cast<std::uint64_t>(std::floor(z));
  CompensatedSum sum;
  for (std::uint64_t m = 1; m <= limit; m += 2) {
    const auto f = factor(m);
    // d_k(p^{2a}) = C(2a + k - 1, k - 1)
    double dk = 1.0;
    for (const auto& pp : f.factors()) {
      double c = 1.0;
      for (unsigned i = 1; i < k; ++i) c = c * (2.0 * pp.exponent + i) / i;
      dk *= c;
    }
    sum.add(dk / static_cast<double>(m) * detail::prime_ratio_product(f, true));
  }
  return sum.value();
}

struct SlopeDiagnostic {
  std::vector<std::pair<double, double>> grid;
  double fitted_exponent = 0.0;
  double intercept = 0.0;
  std::string model;
};

/// Least-squares slope of log v against log log z.
inline SlopeDiagnostic slope_fit(const std::vector<std::pair<double, double>>& values, std::string model = "") {
  if (values.size() < 4) fail(ErrorKind::domain, "slope_fit: need at least 4 grid points");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto [z, v] = values[i];
    if (!(z > 1.0)) fail(ErrorKind::domain, "slope_fit: scales must exceed 1");
    if (!(v > 0.0)) fail(ErrorKind::domain, "slope_fit: values must be positive");
    if (i > 0 && !(z > values[i - 1].first)) fail(ErrorKind::domain, "slope_fit: scales must be strictly increasing");
  }
  const double n = static_cast<double>(values.size());
  double mx = 0, my = 0;
  for (const auto& [z, v] : values) {
    mx += std::log(std::log(z));
    my += std::log(v);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (const auto& [z, v] : values) {
    const double dx = std::log(std::log(z)) - mx;
    sxy += dx * (std::log(v) - my);
    sxx += dx * dx;
  }
  SlopeDiagnostic out;
  out.grid = values;
  out.fitted_exponent = sxy / sxx;
  out.intercept = my - out.fitted_exponent * mx;
  out.model = std::move(model);
  return out;
}

struct LowerBoundRow {
  std::string family;
  double scale = 0.0;      // k or X
  unsigned exponent = 0;   // r or k
  double lower_bound = 0.0;
  double normaliser = 0.0;
  double ratio = 0.0;
};

/// lower_bound / (log k)^{r(r-1)/2}
inline LowerBoundRow lower_bound_report(const OrthogonalRun& run) {
  if (run.k % 4 != 0) fail(ErrorKind::domain, "lower_bound_report: k must be a multiple of 4");
  LowerBoundRow row{"orthogonal", static_cast<double>(run.k), run.r, run.lower_bound, 0.0, 0.0};
  row.normaliser = std::pow(std::log(static_cast<double>(run.k)), run.r * (run.r - 1) / 2.0);
  row.ratio = run.lower_bound / row.normaliser;
  return row;
}

/// lower_bound / (X (log X)^{k(k+1)/2})
inline LowerBoundRow lower_bound_report(const SymplecticRun& run) {
  LowerBoundRow row{"symplectic", run.X, run.k, run.lower_bound, 0.0, 0.0};
  row.normaliser = run.X * std::pow(std::log(run.X), run.k * (run.k + 1) / 2.0);
  row.ratio = run.lower_bound / row.normaliser;
  return row;
}

}  // namespace lmoments
