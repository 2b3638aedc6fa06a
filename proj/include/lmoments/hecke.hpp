#pragma once

// Exact arithmetic in the abstract Hecke ring generated by symbols x(n) with
//   x(1) = 1,   x(m) x(n) = sum_{d | (m,n)} x(mn / d^2),
// and the structure constants b_t(n_1, ..., n_r) of products of symbols.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmoments/arith.hpp"
#include "lmoments/error.hpp"
#include "lmoments/summation.hpp"

namespace lmoments {

namespace detail {
inline std::int64_t checked_mul(std::int64_t a, std::int64_t b, const char* what) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorKind::overflow, std::string(what) + ": coefficient overflow");
  return out;
}
inline std::int64_t checked_add(std::int64_t a, std::int64_t b, const char* what) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorKind::overflow, std::string(what) + ": coefficient overflow");
  return out;
}
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorKind::overflow, std::string(what) + ": overflow");
  return out;
}
inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorKind::overflow, std::string(what) + ": overflow");
  return out;
}
}  // namespace detail

/// Finite integer combination of Hecke symbols, stored sorted by index with no
/// zero coefficients. The default-constructed element is 0; one() is x(1).
class HeckeElement {
 public:
  using Term = std::pair<std::uint64_t, std::int64_t>;

  HeckeElement() = default;

  static HeckeElement one() { return symbol(1); }

  static HeckeElement symbol(std::uint64_t n, std::int64_t coefficient = 1) {
    if (n == 0) fail(ErrorKind::domain, "HeckeElement: index must be positive");
    HeckeElement e;
    if (coefficient != 0) e.terms_.push_back({n, coefficient});
    return e;
  }

  /// Builds the canonical form from arbitrary (index, coefficient) pairs,
  /// merging duplicates and dropping zeros.
  static HeckeElement from_terms(std::vector<Term> terms) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    HeckeElement e;
    for (const auto& [n, c] : terms) {
      if (n == 0) fail(ErrorKind::domain, "HeckeElement: index must be positive");
      if (!e.terms_.empty() && e.terms_.back().first == n) {
        e.terms_.back().second = detail::checked_add(e.terms_.back().second, c, "HeckeElement");
      } else {
        e.terms_.push_back({n, c});
      }
    }
    std::erase_if(e.terms_, [](const Term& t) { return t.second == 0; });
    return e;
  }

  std::int64_t coefficient(std::uint64_t n) const noexcept {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), n,
                               [](const Term& t, std::uint64_t key) { return t.first < key; });
    return (it != terms_.end() && it->first == n) ? it->second : 0;
  }

  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  friend bool operator==(const HeckeElement&, const HeckeElement&) = default;

 private:
  std::vector<Term> terms_;
};

namespace detail {
inline void for_each_divisor(std::uint64_t g, auto&& fn) {
  for (std::uint64_t d = 1; d * d <= g; ++d) {
    if (g % d != 0) continue;
    fn(d);
    if (d * d != g) fn(g / d);
  }
}
}  // namespace detail

/// Bilinear extension of x(m) x(n) = sum_{d | (m,n)} x(mn/d^2).
inline HeckeElement hecke_multiply(const HeckeElement& a, const HeckeElement& b) {
  std::vector<HeckeElement::Term> raw;
  for (const auto& [m, cm] : a.terms()) {
    for (const auto& [n, cn] : b.terms()) {
      const std::int64_t c = detail::checked_mul(cm, cn, "hecke_multiply");
      detail::for_each_divisor(std::gcd(m, n), [&](std::uint64_t d) {
        raw.push_back({detail::checked_mul(m / d, n / d, "hecke_multiply index"), c});
      });
    }
  }
  return HeckeElement::from_terms(std::move(raw));
}

/// Coefficients of x(p^a_1) ... x(p^a_r) over the basis x(1), x(p), x(p^2), ...
/// computed with the one-prime rule x(p^i) x(p^a) = sum_{j<=min(i,a)} x(p^{i+a-2j}).
/// Independent of p.
inline std::vector<std::uint64_t> local_expand(std::span<const unsigned> exponents) {
  std::vector<std::uint64_t> cur{1};
  for (unsigned a : exponents) {
    if (a == 0) continue;
    std::vector<std::uint64_t> next(cur.size() + a, 0);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i] == 0) continue;
      for (std::size_t j = 0; j <= std::min<std::size_t>(i, a); ++j) {
        auto& slot = next[i + a - 2 * j];
        slot = detail::checked_add(slot, cur[i], "local_expand");
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// b_1(p^a_1, ..., p^a_r): coefficient of x(1) in the local product.
inline std::uint64_t b1_local(std::span<const unsigned> exponents) {
  unsigned total = 0;
  for (unsigned a : exponents) total += a;
  if (total % 2 != 0) return 0;
  return local_expand(exponents)[0];
}

inline std::uint64_t b1_local(std::initializer_list<unsigned> exponents) {
  return b1_local(std::span<const unsigned>(exponents.begin(), exponents.size()));
}

/// x(n_1) ... x(n_r) = sum_t b_t(n_1, ..., n_r) x(t), computed prime by prime
/// from local_expand and reassembled multiplicatively.
inline HeckeElement expand_product(std::span<const std::uint64_t> ns) {
  if (ns.empty()) fail(ErrorKind::domain, "expand_product: need at least one factor");
  std::uint64_t product = 1;
  std::map<std::uint64_t, std::vector<unsigned>> exps;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    if (ns[j] == 0) fail(ErrorKind::domain, "expand_product: indices must be positive");
    product = detail::checked_mul(product, ns[j], "expand_product index");
    const auto fj = factor(ns[j]);
    for (const auto& pp : fj.factors()) {
      auto& v = exps[pp.prime];
      v.resize(ns.size(), 0);
      v[j] = pp.exponent;
    }
  }

  std::vector<HeckeElement::Term> acc{{1, 1}};
  for (const auto& [p, e] : exps) {
    const auto local = local_expand(e);
    std::vector<HeckeElement::Term> next;
    for (const auto& [t, c] : acc) {
      std::uint64_t pj = 1;
      for (std::size_t j = 0; j < local.size(); ++j) {
        if (local[j] != 0) {
          if (local[j] > static_cast<std::uint64_t>(INT64_MAX)) fail(ErrorKind::overflow, "expand_product: overflow");
          next.push_back({t * pj, detail::checked_mul(c, static_cast<std::int64_t>(local[j]), "expand_product")});
        }
        if (j + 1 < local.size()) pj *= p;  // t * p^j divides the product, so no overflow
      }
    }
    acc = std::move(next);
  }
  return HeckeElement::from_terms(std::move(acc));
}

inline HeckeElement expand_product(std::initializer_list<std::uint64_t> ns) {
  return expand_product(std::span<const std::uint64_t>(ns.begin(), ns.size()));
}

/// B_r(p^a) = sum over a_1 + ... + a_r = a of b_1(p^a_1, ..., p^a_r).
/// Dynamic programme over (total exponent, current x(p^j) index).
inline std::uint64_t local_B(unsigned r, unsigned a) {
  if (r < 1) fail(ErrorKind::domain, "local_B: r must be >= 1");
  if (a % 2 != 0) return 0;
  // state[e][j]: coefficient of x(p^j) among partial products of total exponent e
  std::vector<std::vector<std::uint64_t>> state(a + 1, std::vector<std::uint64_t>(a + 1, 0));
  state[0][0] = 1;
  for (unsigned f = 0; f < r; ++f) {
    std::vector<std::vector<std::uint64_t>> next(a + 1, std::vector<std::uint64_t>(a + 1, 0));
    for (unsigned e = 0; e <= a; ++e) {
      for (unsigned j = 0; j <= e; ++j) {
        const std::uint64_t c = state[e][j];
        if (c == 0) continue;
        for (unsigned b = 0; e + b <= a; ++b) {
          for (unsigned i = 0; i <= std::min(j, b); ++i) {
            const unsigned idx = j + b - 2 * i;
            next[e + b][idx] = detail::checked_add(next[e + b][idx], c, "local_B");
          }
        }
      }
    }
    state = std::move(next);
  }
  return state[a][0];
}

/// B_r(n) = sum_{n_1 ... n_r = n} b_1(n_1, ..., n_r), via multiplicativity.
inline std::uint64_t big_B(unsigned r, const FactoredInteger& n) {
  if (r < 1) fail(ErrorKind::domain, "big_B: r must be >= 1");
  std::uint64_t out = 1;
  for (const auto& pp : n.factors()) {
    const std::uint64_t local = local_B(r, pp.exponent);
    if (local == 0) return 0;
    out = detail::checked_mul(out, local, "big_B");
  }
  return out;
}

/// B_r(1..nmax) as a dense table (index 0 unused).
inline std::vector<std::uint64_t> big_B_table(unsigned r, std::uint64_t nmax) {
  std::vector<std::uint64_t> out(nmax + 1, 0);
  std::map<unsigned, std::uint64_t> memo;
  for (std::uint64_t n = 1; n <= nmax; ++n) {
    std::uint64_t v = 1;
    const auto fn = factor(n);
    for (const auto& pp : fn.factors()) {
      auto it = memo.find(pp.exponent);
      if (it == memo.end()) it = memo.emplace(pp.exponent, local_B(r, pp.exponent)).first;
      v = detail::checked_mul(v, it->second, "big_B_table");
      if (v == 0) break;
    }
    out[n] = v;
  }
  return out;
}

inline constexpr std::uint64_t kDefaultWorkBudget = 1'000'000'000;

namespace detail {

/// Recursive tuple walk for b_sum_weighted. The last variable is restricted to
/// values that make the product a square, which is where b_1 can be nonzero.
class TupleWalker {
 public:
  TupleWalker(unsigned r, std::uint64_t first_limit, std::uint64_t last_limit, std::uint64_t budget)
      : r_(r), first_limit_(first_limit), last_limit_(last_limit), budget_(budget) {
    const std::uint64_t top = std::max(first_limit, last_limit);
    factors_.reserve(top + 1);
    factors_.emplace_back();
    for (std::uint64_t n = 1; n <= top; ++n) factors_.push_back(factor(n));
    chosen_.reserve(r);
  }

  double run() {
    descend();
    return sum_.value();
  }

 private:
  void tick() {
    if (++work_ > budget_) {
      fail(ErrorKind::budget, "b_sum_weighted: work budget of " + std::to_string(budget_) + " steps exceeded",
           "b_sum_weighted");
    }
  }

  void descend() {
    tick();
    if (chosen_.size() + 1 == r_) {
      finish();
      return;
    }
    for (std::uint64_t n = 1; n <= first_limit_; ++n) {
      chosen_.push_back(n);
      descend();
      chosen_.pop_back();
    }
  }

  void finish() {
    // kernel = product of primes with odd total exponent so far
    std::map<std::uint64_t, unsigned> parity;
    for (std::uint64_t n : chosen_)
      for (const auto& pp : factors_[n].factors()) parity[pp.prime] += pp.exponent;
    std::uint64_t kernel = 1;
    for (const auto& [p, e] : parity) {
      if (e % 2 == 0) continue;
      if (kernel > last_limit_ / p) return;
      kernel *= p;
    }
    double prefix_norm = 1.0;
    for (std::uint64_t n : chosen_) prefix_norm *= static_cast<double>(n);
    for (std::uint64_t s = 1; kernel * s * s <= last_limit_; ++s) {
      tick();
      const std::uint64_t last = kernel * s * s;
      chosen_.push_back(last);
      const std::uint64_t b1 = b1_of_chosen();
      chosen_.pop_back();
      if (b1 != 0) sum_.add(static_cast<double>(b1) / std::sqrt(prefix_norm * static_cast<double>(last)));
    }
  }

  std::uint64_t b1_of_chosen() {
    std::map<std::uint64_t, std::vector<unsigned>> per_prime;
    for (std::uint64_t n : chosen_)
      for (const auto& pp : factors_[n].factors()) per_prime[pp.prime].push_back(pp.exponent);
    std::uint64_t out = 1;
    for (auto& [p, exps] : per_prime) {
      std::sort(exps.begin(), exps.end());
      auto it = memo_.find(exps);
      if (it == memo_.end()) it = memo_.emplace(exps, b1_local(exps)).first;
      if (it->second == 0) return 0;
      out = checked_mul(out, it->second, "b_sum_weighted");
    }
    return out;
  }

  unsigned r_;
  std::uint64_t first_limit_;
  std::uint64_t last_limit_;
  std::uint64_t budget_;
  std::uint64_t work_ = 0;
  std::vector<FactoredInteger> factors_;
  std::vector<std::uint64_t> chosen_;
  std::map<std::vector<unsigned>, std::uint64_t> memo_;
  CompensatedSum sum_;
};

}  // namespace detail

/// sum over n_1..n_{r-1} <= x and n_r <= cap (default x) of
/// b_1(n_1, ..., n_r) / sqrt(n_1 ... n_r).
inline double b_sum_weighted(unsigned r, double x, std::optional<double> cap = std::nullopt,
                             std::uint64_t work_budget = kDefaultWorkBudget) {
  if (r < 1) fail(ErrorKind::domain, "b_sum_weighted: r must be >= 1");
  if (!(x >= 1.0)) fail(ErrorKind::domain, "b_sum_weighted: x must be >= 1");
  const double last = cap.value_or(x);
  if (!(last >= 1.0)) fail(ErrorKind::domain, "b_sum_weighted: cap must be >= 1");
  const auto first_limit = static_cast<std::uint64_t>(std::floor(x));
  const auto last_limit = static_cast<std::uint64_t>(std::floor(last));
  return detail::TupleWalker(r, first_limit, last_limit, work_budget).run();
}

/// sum_{n <= z} B_r(n) / sqrt(n). Only squares n = m^2 contribute.
inline double B_partial_sum(unsigned r, double z) {
  if (r < 1) fail(ErrorKind::domain, "B_partial_sum: r must be >= 1");
  if (!(z >= 1.0)) fail(ErrorKind::domain, "B_partial_sum: z must be >= 1");
  const std::uint64_t mmax = isqrt(static_cast<std::uint64_t>(std::floor(z)));
  std::map<unsigned, std::uint64_t> memo;
  CompensatedSum sum;
  for (std::uint64_t m = 1; m <= mmax; ++m) {
    std::uint64_t v = 1;
    const auto fm = factor(m);
    for (const auto& pp : fm.factors()) {
      const unsigned a = 2 * pp.exponent;
      auto it = memo.find(a);
      if (it == memo.end()) it = memo.emplace(a, local_B(r, a)).first;
      v = detail::checked_mul(v, it->second, "B_partial_sum");
    }
    sum.add(static_cast<double>(v) / static_cast<double>(m));
  }
  return sum.value();
}

}  // namespace lmoments
