#pragma once

// Level-one cusp forms: exact q-expansions, Hecke eigenforms, harmonic
// weights and central values.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lmoments/error.hpp"
#include "lmoments/specfun.hpp"
#include "lmoments/summation.hpp"

namespace lmoments {

using BigInt = boost::multiprecision::mpz_int;
using HighFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<200>,
                                                boost::multiprecision::et_off>;

/// Truncated power series in q with exact coefficients, index n = 0..N.
using Series = std::vector<BigInt>;

struct QExpansion {
  int weight = 0;
  Series coefficients;  // coefficients[n] = a(n)

  std::size_t length() const noexcept { return coefficients.empty() ? 0 : coefficients.size() - 1; }
  const BigInt& a(std::size_t n) const {
    if (n > length()) fail(ErrorKind::insufficient_data, "q-expansion known only to n = " + std::to_string(length()));
    return coefficients[n];
  }
};

inline int cusp_dimension(int k) {
  if (k < 0 || k % 2 != 0) fail(ErrorKind::domain, "cusp_dimension: k must be even and nonnegative");
  if (k < 12) return 0;
  return k / 12 - (k % 12 == 2 ? 1 : 0);
}

namespace detail {

inline Series series_mul(const Series& a, const Series& b) {
  const std::size_t n = a.size();
  Series c(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; i + j < n; ++j) {
      if (b[j] != 0) c[i + j] += a[i] * b[j];
    }
  }
  return c;
}

/// 1 + scale * sum sigma_power(n) q^n
inline Series eisenstein(unsigned power, long scale, std::size_t N) {
  Series s(N + 1);
  for (std::size_t d = 1; d <= N; ++d) {
    BigInt dp = 1;
    for (unsigned i = 0; i < power; ++i) dp *= static_cast<unsigned long>(d);
    for (std::size_t m = d; m <= N; m += d) s[m] += dp;
  }
  for (std::size_t n = 1; n <= N; ++n) s[n] *= scale;
  s[0] = 1;
  return s;
}

class SeriesPowers {
 public:
  explicit SeriesPowers(Series base) : powers_{Series(), std::move(base)} {
    powers_[0].assign(powers_[1].size(), BigInt(0));
    powers_[0][0] = 1;
  }
  const Series& operator()(std::size_t e) {
    while (powers_.size() <= e) powers_.push_back(series_mul(powers_.back(), powers_[1]));
    return powers_[e];
  }

 private:
  std::vector<Series> powers_;
};

}  // namespace detail

inline Series eisenstein_E4(std::size_t N) { return detail::eisenstein(3, 240, N); }
inline Series eisenstein_E6(std::size_t N) { return detail::eisenstein(5, -504, N); }

/// Delta = (E4^3 - E6^2)/1728.
inline Series discriminant_delta(std::size_t N) {
  const auto e4 = eisenstein_E4(N), e6 = eisenstein_E6(N);
  auto d = detail::series_mul(detail::series_mul(e4, e4), e4);
  const auto e6sq = detail::series_mul(e6, e6);
  for (std::size_t n = 0; n <= N; ++n) {
    d[n] -= e6sq[n];
    d[n] /= 1728;
  }
  return d;
}

/// Basis of S_k in reduced echelon form: the i-th form has a(j) = delta_ij
/// for 1 <= j <= dim. Built from Delta^i E4^a E6^b with 12i + 4a + 6b = k.
inline std::vector<QExpansion> cuspform_basis(int k, std::size_t N) {
  if (k < 12 || k % 2 != 0) fail(ErrorKind::domain, "cuspform_basis: weight must be even and >= 12");
  const int dim = cusp_dimension(k);
  if (N < 2 * static_cast<std::size_t>(dim)) fail(ErrorKind::domain, "cuspform_basis: need N >= 2 dim");
  if (dim == 0) return {};

  detail::SeriesPowers e4(eisenstein_E4(N)), delta(discriminant_delta(N));
  const Series e6 = eisenstein_E6(N);

  std::vector<QExpansion> basis;
  for (int i = 1; i <= dim; ++i) {
    const int rest = k - 12 * i;
    const int b = (rest % 4 == 0) ? 0 : 1;
    const int a = (rest - 6 * b) / 4;
    Series f = detail::series_mul(delta(i), e4(a));
    if (b == 1) f = detail::series_mul(f, e6);
    basis.push_back({k, std::move(f)});
  }
  // Delta^i = q^i + ..., so the leading block is unitriangular already
  for (int i = dim - 1; i >= 1; --i) {
    auto& fi = basis[i - 1].coefficients;
    for (int j = i + 1; j <= dim; ++j) {
      const BigInt c = fi[j];
      if (c == 0) continue;
      const auto& fj = basis[j - 1].coefficients;
      for (std::size_t n = 0; n <= N; ++n) fi[n] -= c * fj[n];
    }
  }
  return basis;
}

using BigMatrix = std::vector<std::vector<BigInt>>;

/// Matrix of T_m on an echelon basis: entry (i, j) is the i-th coefficient
/// of T_m f_j, where (T_m f)(n) = sum_{d | (m, n)} d^{k-1} a(mn/d^2).
inline BigMatrix hecke_matrix(const std::vector<QExpansion>& basis, std::uint64_t m) {
  const std::size_t dim = basis.size();
  if (dim == 0) return {};
  if (m == 0) fail(ErrorKind::domain, "hecke_matrix: m must be positive");
  const int k = basis.front().weight;
  if (basis.front().length() < m * dim) {
    fail(ErrorKind::insufficient_data, "hecke_matrix: T_" + std::to_string(m) + " needs coefficients to n = " +
                                           std::to_string(m * dim));
  }
  BigMatrix M(dim, std::vector<BigInt>(dim));
  for (std::size_t i = 1; i <= dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      BigInt v = 0;
      for (std::uint64_t d = 1; d <= std::min<std::uint64_t>(m, i); ++d) {
        if (m % d != 0 || i % d != 0) continue;
        BigInt dk = 1;
        for (int e = 0; e < k - 1; ++e) dk *= static_cast<unsigned long>(d);
        v += dk * basis[j].a(m * i / (d * d));
      }
      M[i - 1][j] = v;
    }
  }
  return M;
}

/// Characteristic polynomial det(x I - M), coefficients from x^0 upward,
/// by Faddeev-LeVerrier (all divisions exact over the integers).
inline std::vector<BigInt> characteristic_polynomial(const BigMatrix& A) {
  const std::size_t n = A.size();
  std::vector<BigInt> c(n + 1);
  c[n] = 1;
  BigMatrix Mk(n, std::vector<BigInt>(n));  // M_0 = 0
  for (std::size_t kk = 1; kk <= n; ++kk) {
    BigMatrix next(n, std::vector<BigInt>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        BigInt s = 0;
        for (std::size_t l = 0; l < n; ++l) s += A[i][l] * Mk[l][j];
        next[i][j] = s;
      }
      next[i][i] += c[n - kk + 1];
    }
    Mk = std::move(next);
    BigInt trace = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l) trace += A[i][l] * Mk[l][i];
    c[n - kk] = -trace / static_cast<long>(kk);
  }
  return c;
}

struct Eigenform {
  int weight = 0;
  int eigen_index = 0;
  std::vector<double> lambda;  // lambda[n], n >= 1; lambda[0] unused
  double omega = 0.0;          // 0 until harmonic_weights has run

  std::size_t length() const noexcept { return lambda.empty() ? 0 : lambda.size() - 1; }
  double lambda_at(std::size_t n) const {
    if (n == 0 || n > length()) {
      fail(ErrorKind::insufficient_data, "eigenform k=" + std::to_string(weight) + ": lambda(" + std::to_string(n) +
                                             ") requested but table ends at " + std::to_string(length()));
    }
    return lambda[n];
  }
};

inline std::size_t default_table_length(int k) { return std::max<std::size_t>(1000, 2 * static_cast<std::size_t>(k)); }

namespace detail {

inline HighFloat eval_poly(const std::vector<HighFloat>& c, const HighFloat& x) {
  HighFloat v = 0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

/// Solves (M - lambda I) v = 0 with v_1 = 1.
inline std::vector<HighFloat> eigenvector(const BigMatrix& M, const HighFloat& lambda) {
  const std::size_t n = M.size();
  std::vector<HighFloat> v(n, HighFloat(0));
  v[0] = 1;
  if (n == 1) return v;
  const std::size_t m = n - 1;
  std::vector<std::vector<HighFloat>> A(m, std::vector<HighFloat>(m + 1));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      A[r][c] = HighFloat(M[r + 1][c + 1]);
      if (r == c) A[r][c] -= lambda;
    }
    A[r][m] = -HighFloat(M[r + 1][0]);
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (abs(A[r][col]) > abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    if (A[col][col] == 0) fail(ErrorKind::diagonalization, "eigenvector: singular reduced system");
    for (std::size_t r = col + 1; r < m; ++r) {
      const HighFloat f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= m; ++c) A[r][c] -= f * A[col][c];
    }
  }
  for (std::size_t r = m; r-- > 0;) {
    HighFloat s = A[r][m];
    for (std::size_t c = r + 1; c < m; ++c) s -= A[r][c] * v[c + 1];
    v[r + 1] = s / A[r][r];
  }
  return v;
}

}  // namespace detail

/// Roots of det(x I - T), ascending. Hecke operators are self-adjoint, so
/// the polynomial is real-rooted; Newton started above the largest root
/// converges to it monotonically, and the roots are peeled off by deflation
/// and polished on the undeflated polynomial.
inline std::vector<HighFloat> hecke_eigenvalues(const BigMatrix& T) {
  const std::size_t n = T.size();
  if (n == 0) return {};
  const auto poly = characteristic_polynomial(T);
  const std::vector<HighFloat> full(poly.begin(), poly.end());
  auto derivative = [](const std::vector<HighFloat>& c) {
    std::vector<HighFloat> d(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<long>(i);
    return d;
  };
  const auto dfull = derivative(full);
  const HighFloat tol("1e-180");

  // Cauchy bound on the roots
  HighFloat start = 0;
  for (std::size_t i = 0; i < n; ++i) start = std::max(start, HighFloat(abs(full[i])));
  start += 1;

  std::vector<HighFloat> roots;
  auto c = full;
  while (c.size() > 1) {
    const auto dc = derivative(c);
    HighFloat x = start;
    for (int it = 0; it < 100000; ++it) {
      const HighFloat step = detail::eval_poly(c, x) / detail::eval_poly(dc, x);
      x -= step;
      if (abs(step) <= abs(x) * tol || step == 0) break;
    }
    for (int it = 0; it < 8; ++it) {
      const HighFloat dv = detail::eval_poly(dfull, x);
      if (dv == 0) break;
      x -= detail::eval_poly(full, x) / dv;
    }
    roots.push_back(x);
    // synthetic division by (y - x)
    std::vector<HighFloat> q(c.size() - 1);
    HighFloat carry = 0;
    for (std::size_t i = c.size() - 1; i-- > 0;) {
      carry = c[i + 1] + carry * x;
      q[i] = carry;
    }
    c = std::move(q);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Hecke eigenforms of weight k with normalized eigenvalues to n = N.
inline std::vector<Eigenform> eigenforms(int k, std::size_t N) {
  if (k < 12 || k % 2 != 0) fail(ErrorKind::domain, "eigenforms: weight must be even and >= 12");
  if (N == 0) fail(ErrorKind::domain, "eigenforms: N must be positive");
  const std::size_t dim = cusp_dimension(k);
  if (dim == 0) return {};
  const auto basis = cuspform_basis(k, std::max(N, 2 * dim));
  const auto T2 = hecke_matrix(basis, 2);
  const auto roots = hecke_eigenvalues(T2);

  double scale = 0.0;
  for (const auto& r : roots) scale = std::max(scale, std::abs(r.convert_to<double>()));
  for (std::size_t i = 1; i < roots.size(); ++i) {
    const double gap = (roots[i] - roots[i - 1]).convert_to<double>();
    if (!(gap > 1e-6 * scale)) {
      fail(ErrorKind::diagonalization, "eigenforms: T_2 has (nearly) repeated eigenvalues at weight " +
                                           std::to_string(k));
    }
  }

  std::vector<Eigenform> out;
  const HighFloat exponent = HighFloat(k - 1) / 2;
  for (std::size_t e = 0; e < roots.size(); ++e) {
    const auto v = detail::eigenvector(T2, roots[e]);
    Eigenform f;
    f.weight = k;
    f.eigen_index = static_cast<int>(e);
    f.lambda.assign(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) {
      HighFloat a = 0;
      for (std::size_t j = 0; j < dim; ++j) a += v[j] * HighFloat(basis[j].coefficients[n]);
      f.lambda[n] = (a / pow(HighFloat(static_cast<unsigned long>(n)), exponent)).convert_to<double>();
    }
    out.push_back(std::move(f));
  }
  return out;
}

struct HarmonicWeightDiagnostics {
  double condition_number = 0.0;
  double max_heldout_residual = 0.0;
  double max_tail_remainder = 0.0;
};

/// Fills in omega_f by solving sum_f lambda_f(u)/omega_f = delta(1,u) +
/// tail(1,u) for u = 1..dim, then checks the equations u = dim+1..2 dim.
inline std::vector<Eigenform> harmonic_weights(int k, std::vector<Eigenform> forms, double eps,
                                               HarmonicWeightDiagnostics* diagnostics = nullptr) {
  if (k % 4 != 0) fail(ErrorKind::domain, "harmonic_weights: k must be a multiple of 4");
  const std::size_t dim = forms.size();
  if (dim == 0) return forms;
  if (dim != static_cast<std::size_t>(cusp_dimension(k))) fail(ErrorKind::domain, "harmonic_weights: incomplete basis");
  for (const auto& f : forms) {
    if (f.weight != k) fail(ErrorKind::domain, "harmonic_weights: mixed weights");
    if (f.length() < 2 * dim) fail(ErrorKind::insufficient_data, "harmonic_weights: need lambda to n = " + std::to_string(2 * dim));
  }

  HarmonicWeightDiagnostics diag;
  auto rhs = [&](std::uint64_t u) {
    const auto t = petersson_tail(1, u, k, eps);
    diag.max_tail_remainder = std::max(diag.max_tail_remainder, t.certified_remainder);
    return (u == 1 ? 1.0 : 0.0) + t.value;
  };

  Eigen::MatrixXd A(dim, dim);
  Eigen::VectorXd b(dim);
  for (std::size_t u = 1; u <= dim; ++u) {
    for (std::size_t f = 0; f < dim; ++f) A(u - 1, f) = forms[f].lambda_at(u);
    b(u - 1) = rhs(u);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  diag.condition_number = sv(0) / sv(sv.size() - 1);
  if (!(diag.condition_number <= 1e12)) {
    fail(ErrorKind::conditioning, "harmonic_weights: system condition " + std::to_string(diag.condition_number) +
                                      " at weight " + std::to_string(k));
  }
  const Eigen::VectorXd w = A.fullPivLu().solve(b);

  for (std::size_t u = dim + 1; u <= 2 * dim; ++u) {
    double lhs = 0.0;
    for (std::size_t f = 0; f < dim; ++f) lhs += forms[f].lambda_at(u) * w(f);
    diag.max_heldout_residual = std::max(diag.max_heldout_residual, std::abs(lhs - rhs(u)));
  }
  if (diagnostics) *diagnostics = diag;
  if (!(diag.max_heldout_residual < 10 * eps + 1e-8)) {
    fail(ErrorKind::conditioning, "harmonic_weights: held-out residual " + std::to_string(diag.max_heldout_residual) +
                                      " at weight " + std::to_string(k));
  }
  for (std::size_t f = 0; f < dim; ++f) {
    if (!(w(f) > 0.0)) fail(ErrorKind::conditioning, "harmonic_weights: nonpositive 1/omega recovered");
    forms[f].omega = 1.0 / w(f);
  }
  return forms;
}

/// Smallest N with a certified bound < eps on 2 sum_{n > N} |lambda(n)| n^{-1/2} W_k(n).
/// Uses |lambda(n)| <= tau(n) <= 2 sqrt(n) and
/// Gamma(a, x) <= x^{a-1} e^{-x} / (1 - (a-1)/x) for x > a - 1.
inline std::size_t afe_cutoff(int k, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::domain, "afe_cutoff: eps must be positive");
  const double a = 0.5 * k;
  auto term_bound = [&](double n) {
    const double x = 2.0 * std::numbers::pi * n;
    return 4.0 * std::exp((a - 1.0) * std::log(x) - x - log_gamma(a)) / (1.0 - (a - 1.0) / x);
  };
  // past n = k/2 consecutive bounds shrink by at least e^{1 - 2 pi}
  const double ratio = std::exp(1.0 - 2.0 * std::numbers::pi);
  for (std::size_t N = std::max<std::size_t>(1, static_cast<std::size_t>(a)); N < 100000000; ++N) {
    if (term_bound(static_cast<double>(N + 1)) / (1.0 - ratio) < eps) return N;
  }
  fail(ErrorKind::budget, "afe_cutoff: no cutoff found", "central_value_f");
}

/// L(1/2, f) = 2 sum lambda(n) n^{-1/2} W_k(n), truncated with certified tail < eps.
inline double central_value_f(const Eigenform& f, double eps, const WeightEvaluator& weights = WeightEvaluator(),
                              std::optional<std::size_t> cutoff_override = std::nullopt) {
  if (f.weight % 4 != 0) {
    fail(ErrorKind::domain, "central_value_f: k = " + std::to_string(f.weight) +
                                " is 2 mod 4, the root number is -1 and L(1/2, f) = 0");
  }
  const std::size_t N = cutoff_override.value_or(afe_cutoff(f.weight, eps));
  if (f.length() < N) {
    fail(ErrorKind::insufficient_data, "central_value_f: lambda table has length " + std::to_string(f.length()) +
                                           ", need " + std::to_string(N));
  }
  CompensatedSum sum;
  for (std::size_t n = 1; n <= N; ++n) {
    const double nn = static_cast<double>(n);
    sum.add(f.lambda[n] / std::sqrt(nn) * weights.Wk(f.weight, nn));
  }
  return 2.0 * sum.value();
}

/// A(f, x) = sum_{n <= x} lambda(n)/sqrt(n).
inline double partial_sum_A_f(const Eigenform& f, double x) {
  if (!(x >= 1.0)) fail(ErrorKind::domain, "partial_sum_A_f: x must be >= 1");
  const auto N = static_cast<std::size_t>(std::floor(x));
  if (f.length() < N) {
    fail(ErrorKind::insufficient_data, "partial_sum_A_f: need lambda to n = " + std::to_string(N));
  }
  CompensatedSum sum;
  for (std::size_t n = 1; n <= N; ++n) sum.add(f.lambda[n] / std::sqrt(static_cast<double>(n)));
  return sum.value();
}

// ---------------------------------------------------------------------------
// Eigenvalue cache

inline constexpr const char* kEigenCacheVersion = "lmoments-eigen-v1";

inline std::filesystem::path eigen_cache_path(const std::filesystem::path& dir, int k, std::size_t N) {
  return dir / ("eigen_k" + std::to_string(k) + "_N" + std::to_string(N) + ".csv");
}

inline void save_eigenforms_csv(const std::filesystem::path& path, const std::vector<Eigenform>& forms) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << "# " << kEigenCacheVersion << "\n";
  out << "k,eigen_index,n,lambda\n";
  char buf[64];
  for (const auto& f : forms) {
    for (std::size_t n = 1; n <= f.length(); ++n) {
      std::snprintf(buf, sizeof buf, "%.17g", f.lambda[n]);
      out << f.weight << ',' << f.eigen_index << ',' << n << ',' << buf << '\n';
    }
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

/// Returns nullopt when the file is absent or carries another version stamp.
inline std::optional<std::vector<Eigenform>> load_eigenforms_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != std::string("# ") + kEigenCacheVersion) return std::nullopt;
  if (!std::getline(in, line) || line != "k,eigen_index,n,lambda") return std::nullopt;
  std::map<int, Eigenform> forms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[4];
    for (auto& s : field)
      if (!std::getline(row, s, ',')) fail(ErrorKind::io, "malformed cache row in " + path.string());
    auto& f = forms[std::stoi(field[1])];
    f.weight = std::stoi(field[0]);
    f.eigen_index = std::stoi(field[1]);
    const auto n = static_cast<std::size_t>(std::stoull(field[2]));
    if (f.lambda.empty()) f.lambda.push_back(0.0);
    if (n != f.lambda.size()) fail(ErrorKind::io, "cache rows out of order in " + path.string());
    f.lambda.push_back(std::strtod(field[3].c_str(), nullptr));
  }
  std::vector<Eigenform> out;
  for (auto& [idx, f] : forms) out.push_back(std::move(f));
  return out;
}

/// eigenforms(k, N) through an on-disk cache when dir is given.
inline std::vector<Eigenform> cached_eigenforms(int k, std::size_t N, const std::optional<std::filesystem::path>& dir) {
  if (dir) {
    const auto path = eigen_cache_path(*dir, k, N);
    if (auto hit = load_eigenforms_csv(path)) return *hit;
    auto forms = eigenforms(k, N);
    std::filesystem::create_directories(*dir);
    // write then rename so concurrent readers never see a partial file
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    save_eigenforms_csv(tmp, forms);
    std::filesystem::rename(tmp, path);
    return forms;
  }
  return eigenforms(k, N);
}

}  // namespace lmoments
