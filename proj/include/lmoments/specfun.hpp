#pragma once

// Special functions behind the approximate functional equations and the
// Petersson formula.
//
// The two smoothing weights are Mellin-Barnes integrals
//   W(xi)   = (1/2 pi i) int_(c) Gamma(s/2 + 1/4)/Gamma(1/4) xi^-s ds/s
//   W_k(xi) = (1/2 pi i) int_(c) Gamma(s + k/2)/Gamma(k/2) (2 pi xi)^-s ds/s
// which close to regularised incomplete gammas, Q(1/4, xi^2) and
// Q(k/2, 2 pi xi). Production code uses the closed forms; the contour path is
// kept as an independent check.

#include <mpfr.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "lmoments/error.hpp"
#include "lmoments/summation.hpp"

namespace lmoments {

inline double log_gamma(double a) {
  int sign = 0;
  return ::lgamma_r(a, &sign);
}

/// Regularised upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a).
/// Series for P when x < a + 1, Lentz continued fraction for Q otherwise.
inline double reg_upper_gamma(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) fail(ErrorKind::domain, "reg_upper_gamma: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  constexpr double eps = std::numeric_limits<double>::epsilon() * 0.25;
  constexpr int max_iter = 100000;
  const double log_prefactor = a * std::log(x) - x - log_gamma(a);

  if (x < a + 1.0) {
    double ap = a, del = 1.0 / a, sum = del;
    for (int i = 0; i < max_iter; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    const double p = sum * std::exp(log_prefactor);
    return 1.0 - p;
  }

  constexpr double tiny = std::numeric_limits<double>::min() / eps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return std::exp(log_prefactor) * h;
}

/// log Gamma(z) for Re z > 0, up to a multiple of 2 pi i in the imaginary
/// part (callers only exponentiate). Recurrence up to |z| >= 15, then Stirling.
inline std::complex<double> log_gamma(std::complex<double> z) {
  if (!(z.real() > 0.0)) fail(ErrorKind::domain, "log_gamma: need Re z > 0");
  std::complex<double> shift = 0.0;
  while (std::abs(z) < 15.0) {
    shift += std::log(z);
    z += 1.0;
  }
  static constexpr std::array<double, 10> b2j = {
      1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6, -3617.0 / 510, 43867.0 / 798,
      -174611.0 / 330};
  const std::complex<double> inv = 1.0 / z;
  const std::complex<double> inv2 = inv * inv;
  std::complex<double> series = 0.0;
  std::complex<double> power = inv;
  for (std::size_t j = 1; j <= b2j.size(); ++j) {
    series += b2j[j - 1] / (2.0 * j * (2.0 * j - 1.0)) * power;
    power *= inv2;
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (z - 0.5) * std::log(z) - z + half_log_2pi + series - shift;
}

namespace detail {

struct GaussLegendre {
  static constexpr std::size_t n = 20;
  std::array<double, n> nodes{};
  std::array<double, n> weights{};

  GaussLegendre() {
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      nodes[i] = -z;
      nodes[n - 1 - i] = z;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

inline const GaussLegendre& gauss_legendre() {
  static const GaussLegendre rule;
  return rule;
}

/// (1/pi) int_0^inf Re F(c + i t) dt for an integrand whose modulus is
/// nonincreasing in t. Composite 20-point Gauss-Legendre on panels of width
/// 1/2, stopped once |F| at a panel edge falls below eps/100.
template <class LogIntegrand>
double vertical_line_integral(LogIntegrand&& log_f, double c, double eps) {
  const auto& gl = gauss_legendre();
  constexpr double panel = 0.5;
  constexpr double t_max = 1e4;
  CompensatedSum sum;
  for (double a = 0.0;; a += panel) {
    if (a > t_max) fail(ErrorKind::budget, "contour quadrature: envelope did not decay", "contour_quadrature");
    const double mid = a + 0.5 * panel, half = 0.5 * panel;
    double panel_sum = 0.0;
    for (std::size_t i = 0; i < gl.n; ++i) {
      const std::complex<double> s(c, mid + half * gl.nodes[i]);
      panel_sum += gl.weights[i] * std::exp(log_f(s)).real();
    }
    sum.add(panel_sum * half);
    const std::complex<double> edge(c, a + panel);
    if (std::exp(log_f(edge).real()) < eps * 1e-2) break;
  }
  return sum.value() / std::numbers::pi;
}

}  // namespace detail

enum class WeightMethod { closed_form, contour_quadrature };

/// Symplectic-family weight W(xi) = Q(1/4, xi^2).
inline double weight_W(double xi) {
  if (!(xi > 0.0)) fail(ErrorKind::domain, "weight_W: xi must be positive");
  return reg_upper_gamma(0.25, xi * xi);
}

/// Orthogonal-family weight W_k(xi) = Q(k/2, 2 pi xi).
inline double weight_Wk(int k, double xi) {
  if (k < 2 || k % 2 != 0) fail(ErrorKind::domain, "weight_Wk: k must be a positive even integer");
  if (!(xi > 0.0)) fail(ErrorKind::domain, "weight_Wk: xi must be positive");
  return reg_upper_gamma(0.5 * k, 2.0 * std::numbers::pi * xi);
}

inline double contour_W(double xi, double eps = 1e-13, double c = 1.0) {
  if (!(xi > 0.0)) fail(ErrorKind::domain, "contour_W: xi must be positive");
  const double lg14 = log_gamma(0.25);
  const double log_xi = std::log(xi);
  return detail::vertical_line_integral(
      [&](std::complex<double> s) { return log_gamma(0.5 * s + 0.25) - lg14 - s * log_xi - std::log(s); }, c, eps);
}

inline double contour_Wk(int k, double xi, double eps = 1e-13, double c = 1.0) {
  if (k < 2 || k % 2 != 0) fail(ErrorKind::domain, "contour_Wk: k must be a positive even integer");
  if (!(xi > 0.0)) fail(ErrorKind::domain, "contour_Wk: xi must be positive");
  const double half_k = 0.5 * k;
  const double lgk = log_gamma(half_k);
  const double log_arg = std::log(2.0 * std::numbers::pi * xi);
  return detail::vertical_line_integral(
      [&](std::complex<double> s) { return log_gamma(s + half_k) - lgk - s * log_arg - std::log(s); }, c, eps);
}

/// Evaluates both weights by a chosen method at a fixed target accuracy.
class WeightEvaluator {
 public:
  explicit WeightEvaluator(double target_accuracy = 1e-12, WeightMethod method = WeightMethod::closed_form)
      : eps_(target_accuracy), method_(method) {
    if (!(eps_ > 0.0 && eps_ <= 1e-4)) fail(ErrorKind::domain, "WeightEvaluator: accuracy must lie in (0, 1e-4]");
  }

  double target_accuracy() const noexcept { return eps_; }
  WeightMethod method() const noexcept { return method_; }

  double W(double xi) const {
    return method_ == WeightMethod::closed_form ? weight_W(xi) : contour_W(xi, eps_);
  }

  double Wk(int k, double xi) const {
    return method_ == WeightMethod::closed_form ? weight_Wk(k, xi) : contour_Wk(k, xi, eps_);
  }

 private:
  double eps_;
  WeightMethod method_;
};

// ---------------------------------------------------------------------------
// Bessel J of integer order

namespace detail {

class MpfrValue {
 public:
  explicit MpfrValue(mpfr_prec_t bits) { mpfr_init2(v_, bits); }
  ~MpfrValue() { mpfr_clear(v_); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;
  mpfr_ptr get() noexcept { return v_; }

 private:
  mpfr_t v_;
};

/// sum_l (-1)^l (z/2)^{2l+nu} / (l! (l+nu)!) in MPFR with enough guard bits
/// to absorb the cancellation, which is bounded by e^z.
inline double bessel_j_series_mp(int nu, double z) {
  const auto bits = static_cast<mpfr_prec_t>(96 + std::ceil(z * std::numbers::log2e) + 2 * std::log2(nu + 2.0));
  MpfrValue half(bits), half2(bits), term(bits), sum(bits), tmp(bits);
  mpfr_set_d(half.get(), z, MPFR_RNDN);
  mpfr_div_ui(half.get(), half.get(), 2, MPFR_RNDN);
  mpfr_sqr(half2.get(), half.get(), MPFR_RNDN);
  // term_0 = (z/2)^nu / nu!
  mpfr_pow_ui(term.get(), half.get(), static_cast<unsigned long>(nu), MPFR_RNDN);
  mpfr_fac_ui(tmp.get(), static_cast<unsigned long>(nu), MPFR_RNDN);
  mpfr_div(term.get(), term.get(), tmp.get(), MPFR_RNDN);
  mpfr_set(sum.get(), term.get(), MPFR_RNDN);
  const double zz = 0.25 * z * z;
  for (unsigned long l = 0;; ++l) {
    mpfr_mul(term.get(), term.get(), half2.get(), MPFR_RNDN);
    mpfr_div_ui(term.get(), term.get(), (l + 1) * (l + 1 + static_cast<unsigned long>(nu)), MPFR_RNDN);
    mpfr_neg(term.get(), term.get(), MPFR_RNDN);
    mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
    const bool decreasing = static_cast<double>((l + 1) * (l + 1 + nu)) > zz;
    if (decreasing && mpfr_zero_p(term.get())) break;
    if (decreasing && mpfr_get_exp(term.get()) < mpfr_get_exp(sum.get()) - 70 && mpfr_get_exp(term.get()) < -70)
      break;
    if (mpfr_zero_p(sum.get()) && l > 10000) break;
  }
  return mpfr_get_d(sum.get(), MPFR_RNDN);
}

}  // namespace detail

/// Upper envelope ((z/2)^nu / Gamma(nu)) e^{z/2}, valid for 0 <= z <= 2 nu.
inline double bessel_j_envelope(int nu, double z) {
  if (nu < 1 || z < 0.0) fail(ErrorKind::domain, "bessel_j_envelope: need nu >= 1 and z >= 0");
  if (z == 0.0) return 0.0;
  return std::exp(nu * std::log(0.5 * z) - log_gamma(static_cast<double>(nu)) + 0.5 * z);
}

/// J_nu(z) by its power series, restricted to 0 <= z <= 2(nu + 1). The sum is
/// accumulated in long double; when the magnitude of the cancelling terms
/// could cost accuracy below 1e-15 max(1, |J|), it is redone in MPFR.
inline double bessel_j(int nu, double z) {
  if (nu < 1) fail(ErrorKind::domain, "bessel_j: order must be >= 1");
  if (!(z >= 0.0) || z > 2.0 * (nu + 1)) {
    fail(ErrorKind::domain, "bessel_j: z = " + std::to_string(z) + " outside the series regime [0, 2(nu+1)]");
  }
  if (z == 0.0) return 0.0;
  using ld = long double;
  const ld half = static_cast<ld>(z) / 2;
  const ld half2 = half * half;
  ld term = std::exp(nu * std::log(half) - std::lgamma(static_cast<ld>(nu) + 1));
  ld sum = term;
  ld abs_sum = std::abs(term);
  int count = 1;
  for (long l = 0;; ++l) {
    term *= -half2 / static_cast<ld>((l + 1) * (l + 1 + nu));
    sum += term;
    abs_sum += std::abs(term);
    ++count;
    const bool decreasing = static_cast<ld>((l + 1) * (l + 1 + nu)) > half2;
    if (decreasing && std::abs(term) <= 1e-21L * std::max<ld>(1, std::abs(sum))) break;
  }
  const ld rounding = abs_sum * count * std::numeric_limits<ld>::epsilon();
  if (rounding > 1e-16L * std::max<ld>(1, std::abs(sum))) return detail::bessel_j_series_mp(nu, z);
  return static_cast<double>(sum);
}

// ---------------------------------------------------------------------------
// Kloosterman sums and the Petersson off-diagonal term

namespace detail {
inline std::uint64_t inverse_mod(std::uint64_t x, std::uint64_t m) {
  std::int64_t r0 = static_cast<std::int64_t>(m), r1 = static_cast<std::int64_t>(x % m);
  std::int64_t s0 = 0, s1 = 1;
  while (r1 != 0) {
    const std::int64_t q = r0 / r1;
    std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
    std::tie(s0, s1) = std::make_pair(s1, s0 - q * s1);
  }
  const std::int64_t mm = static_cast<std::int64_t>(m);
  return static_cast<std::uint64_t>(((s0 % mm) + mm) % mm);
}
}  // namespace detail

/// S(t, u; c) = sum_{x mod c, (x,c)=1} cos(2 pi (t x + u xbar)/c). The sum
/// is real because x -> -x conjugates each term.
inline double kloosterman(std::uint64_t t, std::uint64_t u, std::uint64_t c) {
  if (c == 0) fail(ErrorKind::domain, "kloosterman: c must be positive");
  if (c == 1) return 1.0;
  std::vector<double> cos_table(c);
  for (std::uint64_t j = 0; j < c; ++j) cos_table[j] = std::cos(2.0 * std::numbers::pi * j / c);
  const std::uint64_t tm = t % c, um = u % c;
  CompensatedSum sum;
  for (std::uint64_t x = 1; x < c; ++x) {
    if (std::gcd(x, c) != 1) continue;
    const std::uint64_t xbar = detail::inverse_mod(x, c);
    const auto phase = static_cast<std::uint64_t>(
        ((unsigned __int128)tm * x + (unsigned __int128)um * xbar) % c);
    sum.add(cos_table[phase]);
  }
  return sum.value();
}

struct PetersonTailResult {
  double value = 0.0;
  std::uint64_t truncation_c = 0;
  double certified_remainder = 0.0;
};

/// Bound on 2 pi sum_{c > C} |S(t,u;c)/c| |J_{k-1}(4 pi sqrt(tu)/c)| from
/// |S| <= c and the envelope; +inf when the envelope does not apply at C+1.
inline double petersson_remainder_bound(std::uint64_t t, std::uint64_t u, int k, std::uint64_t C) {
  const int nu = k - 1;
  const double root = std::sqrt(static_cast<double>(t) * static_cast<double>(u));
  const double z_next = 4.0 * std::numbers::pi * root / static_cast<double>(C + 1);
  if (C == 0 || z_next > 2.0 * nu || k < 4) return std::numeric_limits<double>::infinity();
  const double log_bound = std::log(2.0 * std::numbers::pi) + nu * std::log(2.0 * std::numbers::pi * root) -
                           log_gamma(static_cast<double>(nu)) + 0.5 * z_next -
                           (k - 2) * std::log(static_cast<double>(C)) - std::log(static_cast<double>(k - 2));
  return std::exp(log_bound);
}

/// Partial sum 2 pi sum_{c <= C} S(t,u;c)/c J_{k-1}(4 pi sqrt(tu)/c), with
/// i^k = 1. Terms outside the series regime use the multiprecision series.
inline PetersonTailResult petersson_tail_truncated(std::uint64_t t, std::uint64_t u, int k, std::uint64_t C) {
  if (t == 0 || u == 0) fail(ErrorKind::domain, "petersson_tail: t and u must be positive");
  if (k < 4 || k % 4 != 0) fail(ErrorKind::domain, "petersson_tail: k must be a multiple of 4");
  const int nu = k - 1;
  const double root = std::sqrt(static_cast<double>(t) * static_cast<double>(u));
  CompensatedSum sum;
  for (std::uint64_t c = 1; c <= C; ++c) {
    const double z = 4.0 * std::numbers::pi * root / static_cast<double>(c);
    const double j = (z <= 2.0 * (nu + 1)) ? bessel_j(nu, z) : detail::bessel_j_series_mp(nu, z);
    sum.add(kloosterman(t, u, c) / static_cast<double>(c) * j);
  }
  return {2.0 * std::numbers::pi * sum.value(), C, petersson_remainder_bound(t, u, k, C)};
}

inline constexpr std::uint64_t kDefaultMaxTruncation = 1'000'000;

/// Off-diagonal Petersson term truncated at the smallest C whose certified
/// remainder is below eps.
inline PetersonTailResult petersson_tail(std::uint64_t t, std::uint64_t u, int k, double eps,
                                         std::uint64_t max_c = kDefaultMaxTruncation) {
  if (!(eps > 0.0)) fail(ErrorKind::domain, "petersson_tail: eps must be positive");
  if (k < 4 || k % 4 != 0) fail(ErrorKind::domain, "petersson_tail: k must be a multiple of 4");
  std::uint64_t hi = 1;
  while (!(petersson_remainder_bound(t, u, k, hi) < eps)) {
    if (hi > max_c) {
      fail(ErrorKind::budget, "petersson_tail: accuracy " + std::to_string(eps) + " needs more than " +
                                  std::to_string(max_c) + " terms", "petersson_tail");
    }
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // bound(lo) >= eps or lo == 0
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (petersson_remainder_bound(t, u, k, mid) < eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (hi > max_c) fail(ErrorKind::budget, "petersson_tail: truncation exceeds budget", "petersson_tail");
  return petersson_tail_truncated(t, u, k, hi);
}

// ---------------------------------------------------------------------------
// Hurwitz zeta

/// zeta(s, a) for s > 0, s != 1, a > 0 by Euler-Maclaurin with 15 direct
/// terms and Bernoulli corrections through B_20.
inline double hurwitz_zeta(double s, double a) {
  if (!(s > 0.0) || s == 1.0 || !(a > 0.0)) fail(ErrorKind::domain, "hurwitz_zeta: need s > 0, s != 1, a > 0");
  constexpr int direct = 15;
  static constexpr std::array<double, 10> b2j = {
      1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6, -3617.0 / 510, 43867.0 / 798,
      -174611.0 / 330};
  CompensatedSum sum;
  for (int n = 0; n < direct; ++n) sum.add(std::pow(n + a, -s));
  const double x = direct + a;
  sum.add(std::pow(x, 1.0 - s) / (s - 1.0));
  sum.add(0.5 * std::pow(x, -s));
  // B_{2j}/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
  double rising = s;                    // s (s+1) ... (s+2j-2)
  double fact = 2.0;                    // (2j)!
  double xpow = std::pow(x, -s - 1.0);  // x^{-s-2j+1}
  const double inv_x2 = 1.0 / (x * x);
  for (std::size_t j = 1; j <= b2j.size(); ++j) {
    sum.add(b2j[j - 1] / fact * rising * xpow);
    rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
    fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    xpow *= inv_x2;
  }
  return sum.value();
}

}  // namespace lmoments
