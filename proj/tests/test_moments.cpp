#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <numbers>
#include <vector>

#include "lmoments/moments.hpp"
#include "oracles.hpp"

using namespace lmoments;

namespace {

constexpr double kL_Delta = 0.7921228386;
constexpr double kInvOmegaDelta = 2.84028737517;

double zeta2() { return std::numbers::pi * std::numbers::pi / 6.0; }

std::vector<std::uint64_t> odd_prime_divisors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 3; p * p <= n; p += 2) {
    if (n % p) continue;
    out.push_back(p);
    while (n % p == 0) n /= p;
  }
  if (n > 1 && n % 2) out.push_back(n);
  return out;
}

// prod_{p | 2n} p/(p+1), n odd
double local_ratio(std::uint64_t n) {
  double v = 2.0 / 3.0;
  for (auto p : odd_prime_divisors(n)) v *= static_cast<double>(p) / (p + 1.0);
  return v;
}

void odd_tuples(unsigned len, std::uint64_t limit, const std::function<void(std::uint64_t)>& fn) {
  std::function<void(unsigned, std::uint64_t)> rec = [&](unsigned depth, std::uint64_t prod) {
    if (depth == len) return fn(prod);
    for (std::uint64_t n = 1; n <= limit; n += 2) rec(depth + 1, prod * n);
  };
  rec(0, 1);
}

double c0_oracle(std::uint64_t limit) {
  std::vector<bool> composite(limit + 1, false);
  double log_prod = 0.0;
  for (std::uint64_t p = 2; p <= limit; ++p) {
    if (composite[p]) continue;
    for (std::uint64_t j = p * p; j <= limit; j += p) composite[j] = true;
    const double q = static_cast<double>(p);
    log_prod += std::log1p(-1.0 / (q * (q + 1.0)));
  }
  return std::exp(log_prod);
}

bool holder_holds(double s1, double s2, double direct, unsigned m) {
  return std::pow(s1, m) <= direct * std::pow(s2, m - 1) * (1 + 1e-8);
}

}  // namespace

TEST(RunOrthogonal, WeightTwelveSingleForm) {
  const auto run = run_orthogonal(12, 2, 1e-10);
  EXPECT_EQ(run.family_size, 1u);
  EXPECT_DOUBLE_EQ(run.x, std::pow(12.0, 0.25));
  // x < 2, so A(Delta) = 1
  EXPECT_NEAR(run.S2, kInvOmegaDelta, 1e-8);
  EXPECT_NEAR(run.S1, kL_Delta * kInvOmegaDelta, 1e-8);
  EXPECT_NEAR(run.direct_moment, kL_Delta * kL_Delta * kInvOmegaDelta, 1e-8);
  // one form: Hoelder is an equality
  EXPECT_NEAR(run.lower_bound, run.direct_moment, 1e-12 * run.direct_moment);
}

TEST(RunOrthogonal, WeightTwelveS2GapIsThePeterssonTail) {
  // S2 = 1/omega and S2_main = 1, so S2 - S2_main is the whole off-diagonal term
  const auto run = run_orthogonal(12, 2, 1e-10);
  EXPECT_DOUBLE_EQ(run.S2_main, 1.0);
  const auto tail = petersson_tail(1, 1, 12, 1e-11);
  EXPECT_NEAR(run.S2 - run.S2_main, tail.value, 1e-8);
  std::cout << "[ info ] k=12 relative gap |S2 - S2_main|/S2 = " << (run.S2 - run.S2_main) / run.S2 << "\n";
}

TEST(RunOrthogonal, MainTermsMatchBruteTupleSums) {
  for (int k : {12, 16, 20, 24, 28}) {
    for (unsigned r : {2u, 4u}) {
      const auto run = run_orthogonal(k, r, 1e-10);
      const auto x = static_cast<std::uint64_t>(std::floor(run.x));
      const auto cap = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(k))));
      EXPECT_NEAR(run.S1_main, 2 * oracle::b_sum_brute(r, x, cap), 1e-12) << k << " " << r;
      EXPECT_NEAR(run.S2_main, oracle::b_sum_brute(r, x, x), 1e-12) << k << " " << r;
    }
  }
}

TEST(RunOrthogonal, InequalitiesOnRegressionGrid) {
  for (int k : {12, 16, 20, 24, 28}) {
    for (unsigned r : {2u, 4u}) {
      const auto run = run_orthogonal(k, r, 1e-10);
      EXPECT_TRUE(holder_holds(run.S1, run.S2, run.direct_moment, r)) << k << " " << r;
      EXPECT_LE(run.lower_bound, run.direct_moment * (1 + 1e-8)) << k << " " << r;
      EXPECT_GE(run.S1_main, 2 * run.S2_main - 1e-8 * run.S1_main) << k << " " << r;
      EXPECT_GT(lower_bound_report(run).ratio, 0.0);
    }
  }
}

TEST(RunOrthogonal, ThreadCountDoesNotChangeResults) {
  const auto a = run_orthogonal(28, 4, 1e-10, {.threads = 1});
  const auto b = run_orthogonal(28, 4, 1e-10, {.threads = 4});
  EXPECT_EQ(a.S1, b.S1);
  EXPECT_EQ(a.S2, b.S2);
  EXPECT_EQ(a.direct_moment, b.direct_moment);
}

TEST(RunOrthogonal, RejectsBadParameters) {
  EXPECT_THROW(run_orthogonal(14, 2, 1e-10), Error);
  EXPECT_THROW(run_orthogonal(8, 2, 1e-10), Error);
  EXPECT_THROW(run_orthogonal(12, 3, 1e-10), Error);
  EXPECT_THROW(run_orthogonal(12, 2, 1e-3), Error);
}

TEST(SymplecticMainTerms, S2ClosedFormWhenXBelowTwo) {
  // only the tuple (1, ..., 1) survives: X/(16 zeta(2)) * 2/3 = X/(4 pi^2)
  for (unsigned k : {2u, 4u, 6u})
    EXPECT_NEAR(symplectic_S2_main(1e5, k, 1.9), 1e5 / (4 * std::numbers::pi * std::numbers::pi), 1e-9);
}

TEST(SymplecticMainTerms, S2MatchesBruteForce) {
  for (unsigned k : {2u, 3u, 4u}) {
    for (double x : {7.0, 20.0}) {
      double s = 0.0;
      odd_tuples(k, static_cast<std::uint64_t>(x), [&](std::uint64_t prod) {
        const auto root = static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(prod))));
        if (root * root == prod) s += local_ratio(prod) / static_cast<double>(root);
      });
      EXPECT_NEAR(symplectic_S2_main(1e6, k, x), 1e6 / (16 * zeta2()) * s, 1e-9 * s * 1e6) << k << " " << x;
    }
  }
}

TEST(SymplecticMainTerms, PrimeConstant) {
  EXPECT_NEAR(prime_constant_C0(), c0_oracle(20'000'000), 1e-8);
  EXPECT_NEAR(prime_constant_C0(), 0.7044422, 1e-6);
}

TEST(SymplecticMainTerms, S1LowerBoundMatchesDecomposition) {
  const double X = 1e6, c0 = c0_oracle(1'000'000);
  for (unsigned k : {2u, 4u}) {
    const double x = 9.0;
    double s = 0.0;
    odd_tuples(k - 1, 9, [&](std::uint64_t prod) {
      // prod = r s^2 with r squarefree
      std::uint64_t r = 1, sq = 1, m = prod;
      double coprime = c0;
      for (auto p : odd_prime_divisors(prod)) {
        unsigned e = 0;
        while (m % p == 0) m /= p, ++e;
        for (unsigned i = 0; i < e / 2; ++i) sq *= p;
        if (e % 2) r *= p;
        coprime /= 1.0 - 1.0 / (p * (p + 1.0));
      }
      coprime /= 1.0 - 1.0 / 6.0;
      const double rd = static_cast<double>(r);
      s += local_ratio(prod) * coprime * 0.25 * std::log(std::sqrt(X) / rd) / (rd * sq);
    });
    EXPECT_NEAR(symplectic_S1_main_lb(X, k, x), X / (8 * zeta2()) * s, 1e-6 * X * s) << k;
  }
}

TEST(RunSymplectic, SmallFamilyAgainstHurwitzOracle) {
  const double X = 1e4;
  const auto run = run_symplectic(X, 2, 1e-10);
  double s1 = 0.0, direct = 0.0;
  std::size_t count = 0;
  for (std::uint64_t d = 625 + 1; d <= 1250; ++d) {
    if (d % 2 == 0 || !oracle::squarefree(d)) continue;
    ++count;
    const double L = central_value_chi_oracle(QuadDiscriminant(d));
    s1 += L;
    direct += L * L;
  }
  EXPECT_EQ(run.family_size, count);
  EXPECT_LT(run.x, 2.0);
  EXPECT_EQ(run.S2, static_cast<double>(count));
  EXPECT_NEAR(run.S1, s1, 1e-8 * count);
  EXPECT_NEAR(run.direct_moment, direct, 1e-7 * count);
  EXPECT_NEAR(run.lower_bound, s1 * s1 / count, 1e-7 * count);
}

TEST(RunSymplectic, HolderAndMainTermDeviation) {
  double prev_rel = 1e300;
  std::vector<double> ratios;
  for (double X : {1e4, 1e5}) {
    for (unsigned k : {2u, 4u}) {
      const auto run = run_symplectic(X, k, 1e-8);
      EXPECT_TRUE(holder_holds(run.S1, run.S2, run.direct_moment, k)) << X << " " << k;
      EXPECT_LE(run.lower_bound, run.direct_moment * (1 + 1e-8));
      EXPECT_GT(run.direct_moment, 0.0);
      const auto row = lower_bound_report(run);
      EXPECT_GT(row.ratio, 0.0);
      if (k == 2) {
        const double rel = std::abs(run.S2 - run.S2_main) / run.S2;
        EXPECT_LT(rel, prev_rel) << X;
        prev_rel = rel;
        ratios.push_back(row.ratio);
      }
    }
  }
  EXPECT_LT(std::max(ratios[0], ratios[1]) / std::min(ratios[0], ratios[1]), 10.0);
}

TEST(RunSymplectic, ThreadCountAndCacheDoNotChangeResults) {
  LValueCache cache;
  const auto a = run_symplectic(2e4, 2, 1e-8, {.threads = 1});
  const auto b = run_symplectic(2e4, 2, 1e-8, {.threads = 4, .cache = &cache});
  EXPECT_EQ(cache.size(), a.family_size);
  const auto c = run_symplectic(2e4, 2, 1e-8, {.threads = 3, .cache = &cache});
  for (const auto* r : {&b, &c}) {
    EXPECT_EQ(a.S1, r->S1);
    EXPECT_EQ(a.S2, r->S2);
    EXPECT_EQ(a.direct_moment, r->direct_moment);
  }
}

TEST(RunSymplectic, BudgetAndDomain) {
  try {
    run_symplectic(1e5, 2, 1e-8, {.work_budget = 1000});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::budget);
    EXPECT_EQ(e.stage(), "central_value_chi");
  }
  EXPECT_THROW(run_symplectic(500, 2, 1e-8), Error);
  EXPECT_THROW(run_symplectic(1e4, 3, 1e-8), Error);
  EXPECT_THROW(run_symplectic(1e4, 2, 1e-5), Error);
}

TEST(OddSquareDivisorSum, MatchesDivisorCounting) {
  for (unsigned k : {1u, 2u, 3u}) {
    double s = 0.0;
    for (std::uint64_t m = 1; m <= 301; m += 2) {
      // d_k(m^2) by counting ordered factorisations
      std::uint64_t dk = 0;
      oracle::for_each_tuple(k, m * m, [&](const std::vector<std::uint64_t>& t) {
        std::uint64_t p = 1;
        for (auto n : t) p *= n;
        if (p == m * m) ++dk;
      });
      s += static_cast<double>(dk) / m * local_ratio(m);
    }
    EXPECT_NEAR(odd_square_divisor_sum(k, 301.5), s, 1e-10 * s) << k;
  }
}

TEST(SlopeFit, ExactPowerOfLog) {
  std::vector<std::pair<double, double>> grid;
  for (double z : {1e2, 1e3, 1e4, 1e5, 1e6}) grid.emplace_back(z, std::pow(std::log(z), 3));
  const auto fit = slope_fit(grid, "(log z)^3");
  EXPECT_NEAR(fit.fitted_exponent, 3.0, 1e-6);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-6);
  EXPECT_EQ(fit.model, "(log z)^3");
}

TEST(SlopeFit, PartialSumsOfB2) {
  std::vector<std::pair<double, double>> grid;
  for (double z : {1e2, 1e3, 1e4, 1e5, 1e6}) grid.emplace_back(z, B_partial_sum(2, z));
  const double e = slope_fit(grid).fitted_exponent;
  EXPECT_GE(e, 0.8);
  EXPECT_LE(e, 1.2);
}

TEST(SlopeFit, DivisorSumExponentIsReported) {
  std::vector<std::pair<double, double>> grid;
  for (double z : {1e2, 1e3, 1e4, 1e5, 1e6}) grid.emplace_back(z, odd_square_divisor_sum(2, z));
  const double e = slope_fit(grid).fitted_exponent;
  RecordProperty("divisor_sum_exponent", std::to_string(e));
  std::cout << "[ info ] k=2 divisor-sum fitted exponent " << e << " (model 3)\n";
  EXPECT_GT(e, 1.0);
}

TEST(SlopeFit, RejectsBadGrids) {
  EXPECT_THROW(slope_fit({{10, 1}, {100, 2}, {1000, 3}}), Error);
  EXPECT_THROW(slope_fit({{10, 1}, {100, 2}, {1000, 0}, {1e4, 3}}), Error);
  EXPECT_THROW(slope_fit({{10, 1}, {100, 2}, {100, 3}, {1e4, 3}}), Error);
  EXPECT_THROW(slope_fit({{1, 1}, {100, 2}, {1000, 3}, {1e4, 3}}), Error);
}

TEST(LowerBoundReport, RefusesWeightsTwoModFour) {
  OrthogonalRun run;
  run.k = 14;
  run.r = 2;
  EXPECT_THROW(lower_bound_report(run), Error);
}
