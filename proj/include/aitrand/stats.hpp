#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aitrand/errors.hpp"

namespace aitrand {

inline constexpr double kDefaultSignificance = 0.05;

struct FiveNumberSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double mean = 0, sd = 0;

  friend bool operator==(const FiveNumberSummary&, const FiveNumberSummary&) = default;
};

enum class StatMethod { ks_exact, ks_asymptotic, shapiro_wilk, welch_t };

inline std::string_view to_string(StatMethod m) noexcept {
  switch (m) {
    case StatMethod::ks_exact: return "ks_exact";
    case StatMethod::ks_asymptotic: return "ks_asymptotic";
    case StatMethod::shapiro_wilk: return "shapiro_wilk";
    case StatMethod::welch_t: return "welch_t";
  }
  return "unknown";
}

inline StatMethod stat_method_from_string(std::string_view s) {
  for (StatMethod m : {StatMethod::ks_exact, StatMethod::ks_asymptotic, StatMethod::shapiro_wilk, StatMethod::welch_t}) {
    if (to_string(m) == s) return m;
  }
  throw ParameterError("unknown statistical method '" + std::string(s) + "'");
}

struct StatTestResult {
  StatMethod method = StatMethod::ks_exact;
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> df;  // Welch only
  bool significant = false;  // p_value < threshold
  bool ties = false;         // KS fell back to the asymptotic law because of ties

  friend bool operator==(const StatTestResult&, const StatTestResult&) = default;
};

namespace detail {

inline void require_finite(std::span<const double> data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw ParameterError("sample contains a non-finite value");
  }
}

inline double mean_of(std::span<const double> d) {
  double s = 0;
  for (double v : d) s += v;
  return s / static_cast<double>(d.size());
}

// Sample variance, divisor n - 1, two-pass.
inline double variance_of(std::span<const double> d, double mean) {
  double s = 0;
  for (double v : d) s += (v - mean) * (v - mean);
  return s / static_cast<double>(d.size() - 1);
}

inline double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

}  // namespace detail

// Quartiles by linear interpolation at (n-1)q on the sorted data; sd uses n - 1.
inline FiveNumberSummary five_number_summary(std::span<const double> data) {
  if (data.size() < 2) throw ParameterError("summary needs at least two values");
  detail::require_finite(data);
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  FiveNumberSummary f;
  f.min = s.front();
  f.max = s.back();
  f.q1 = detail::quantile_sorted(s, 0.25);
  f.median = detail::quantile_sorted(s, 0.5);
  f.q3 = detail::quantile_sorted(s, 0.75);
  f.mean = detail::mean_of(data);
  f.sd = std::sqrt(detail::variance_of(data, f.mean));
  return f;
}

// ---------------------------------------------------------------------------
// Distribution functions
// ---------------------------------------------------------------------------

inline double normal_upper_tail(double z) noexcept { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Inverse standard normal CDF, Wichura's AS 241 (PPND16).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal quantile needs p in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw ParameterError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double students_t_cdf(double t, double df) {
  if (!(df > 0)) throw ParameterError("degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double scale = -pi2 / (8.0 * lambda * lambda);
    double cdf = 0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(odd * odd * scale);
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kKsExactCellLimit = 10'000;

// D scaled by n*m: max over the pooled order of |i*m - j*n| where i, j count
// elements of a and b at or below the current value.
inline std::uint64_t ks_scaled_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto n = static_cast<std::int64_t>(sa.size());
  const auto m = static_cast<std::int64_t>(sb.size());
  std::size_t i = 0, j = 0;
  std::int64_t best = 0;
  while (i < sa.size() || j < sb.size()) {
    double v;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      v = sa[i];
    } else {
      v = sb[j];
    }
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    const std::int64_t dev = static_cast<std::int64_t>(i) * m - static_cast<std::int64_t>(j) * n;
    best = std::max(best, dev < 0 ? -dev : dev);
  }
  return static_cast<std::uint64_t>(best);
}

// Exact upper tail as a fraction of lattice paths.
struct KsExactTail {
  std::uint64_t paths_reaching = 0;  // orderings with scaled deviation >= d
  std::uint64_t paths_total = 0;     // C(n + m, n)
};

namespace detail {

// C(k, r) or nullopt when it exceeds 2^62.
inline std::optional<std::uint64_t> binomial_u64(std::uint64_t k, std::uint64_t r) {
  if (r > k) return 0;
  r = std::min(r, k - r);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    c = c * (k - r + i) / i;
    if (c > (static_cast<unsigned __int128>(1) << 62)) return std::nullopt;
  }
  return static_cast<std::uint64_t>(c);
}

// Counts monotone paths (0,0) -> (n,m) that touch |i*m - j*n| >= d, by summing over
// the first boundary point: (paths staying inside up to it) x (free paths after it).
// T is an unsigned integer for exact counts or a floating type otherwise.
template <class T>
T ks_paths_reaching(std::uint64_t n, std::uint64_t m, std::uint64_t d) {
  if (d == 0) {
    std::vector<T> row(m + 1, T(1));
    for (std::uint64_t i = 1; i <= n; ++i) {
      for (std::uint64_t j = 1; j <= m; ++j) row[j] += row[j - 1];
    }
    return row[m];
  }
  auto outside = [&](std::uint64_t i, std::uint64_t j) {
    const auto dev = static_cast<std::int64_t>(i * m) - static_cast<std::int64_t>(j * n);
    return static_cast<std::uint64_t>(dev < 0 ? -dev : dev) >= d;
  };
  // free[i][j] = paths from (i, j) to (n, m) = C(n - i + m - j, n - i), built by DP.
  std::vector<std::vector<T>> free_paths(n + 1, std::vector<T>(m + 1, T(0)));
  for (std::uint64_t i = n + 1; i-- > 0;) {
    for (std::uint64_t j = m + 1; j-- > 0;) {
      if (i == n || j == m) {
        free_paths[i][j] = T(1);
      } else {
        free_paths[i][j] = free_paths[i + 1][j] + free_paths[i][j + 1];
      }
    }
  }
  std::vector<T> prev(m + 1, T(0)), cur(m + 1, T(0));
  T reaching = T(0);
  for (std::uint64_t i = 0; i <= n; ++i) {
    for (std::uint64_t j = 0; j <= m; ++j) {
      T arrivals;
      if (i == 0 && j == 0) {
        arrivals = T(1);
      } else {
        arrivals = (i > 0 ? prev[j] : T(0)) + (j > 0 ? cur[j - 1] : T(0));
      }
      if (outside(i, j)) {
        reaching += arrivals * free_paths[i][j];
        cur[j] = T(0);
      } else {
        cur[j] = arrivals;
      }
    }
    std::swap(prev, cur);
  }
  return reaching;
}

}  // namespace detail

// Exact rational tail for small samples; throws when C(n + m, n) exceeds 2^62.
inline KsExactTail ks_exact_tail(std::uint64_t n, std::uint64_t m, std::uint64_t d_scaled) {
  if (n == 0 || m == 0) throw ParameterError("KS needs non-empty samples");
  const auto total = detail::binomial_u64(n + m, n);
  if (!total) throw ParameterError("exact lattice count overflows 64 bits");
  return {detail::ks_paths_reaching<std::uint64_t>(n, m, d_scaled), *total};
}

inline double ks_exact_pvalue(std::uint64_t n, std::uint64_t m, std::uint64_t d_scaled) {
  if (detail::binomial_u64(n + m, n)) {
    const KsExactTail t = ks_exact_tail(n, m, d_scaled);
    return static_cast<double>(t.paths_reaching) / static_cast<double>(t.paths_total);
  }
  const long double reach = detail::ks_paths_reaching<long double>(n, m, d_scaled);
  const long double total = detail::ks_paths_reaching<long double>(n, m, 0);
  return std::clamp(static_cast<double>(reach / total), 0.0, 1.0);
}

inline bool has_ties(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

// Two-sided two-sample KS. Exact lattice-path p-value when the pooled sample has
// no ties and n*m <= 10^4, otherwise the asymptotic Kolmogorov law.
inline StatTestResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                                    double threshold = kDefaultSignificance) {
  if (a.empty() || b.empty()) throw ParameterError("KS test needs two non-empty samples");
  detail::require_finite(a);
  detail::require_finite(b);
  const std::uint64_t n = a.size(), m = b.size();
  const std::uint64_t d_scaled = ks_scaled_statistic(a, b);
  StatTestResult r;
  r.statistic = static_cast<double>(d_scaled) / static_cast<double>(n * m);
  r.ties = has_ties(a, b);
  if (!r.ties && n * m <= kKsExactCellLimit) {
    r.method = StatMethod::ks_exact;
    r.p_value = ks_exact_pvalue(n, m, d_scaled);
  } else {
    r.method = StatMethod::ks_asymptotic;
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    r.p_value = kolmogorov_survival(r.statistic * std::sqrt(nd * md / (nd + md)));
  }
  r.significant = r.p_value < threshold;
  return r;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk (Royston 1995, AS R94), complete samples
// ---------------------------------------------------------------------------

namespace detail {

template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = 0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

}  // namespace detail

inline StatTestResult shapiro_wilk(std::span<const double> data, double threshold = kDefaultSignificance) {
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const std::size_t n = data.size();
  if (n < 3 || n > 5000) throw ParameterError("Shapiro-Wilk needs 3 <= n <= 5000, got " + std::to_string(n));
  detail::require_finite(data);
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  if (x.back() - x.front() <= 0.0) throw DegenerateSampleError("Shapiro-Wilk sample has zero range");

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    const double an25 = an + 0.25;
    double summ2 = 0;
    for (std::size_t i = 0; i < half; ++i) {
      a[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / an25);
      summ2 += a[i] * a[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - a[0] / ssumm2;
    std::size_t first_plain;
    double fac;
    if (n > 5) {
      first_plain = 2;
      const double a2 = -a[1] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first_plain = 1;
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first_plain; i < half; ++i) a[i] = -a[i] / fac;
  }

  // W = (sum a_i (x_(n+1-i) - x_(i)))^2 / SS, computed on range-scaled data.
  const double range = x.back() - x.front();
  double mean = 0;
  for (double& v : x) {
    v /= range;
    mean += v;
  }
  mean /= an;
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double b = 0;
  for (std::size_t i = 0; i < half; ++i) b += a[i] * (x[n - 1 - i] - x[i]);
  const double w = std::min(1.0, b * b / ss);
  const double w1 = 1.0 - w;

  const auto p_value = [&]() -> double {
    if (n == 3) {
      constexpr double pi6 = 6.0 / std::numbers::pi;
      constexpr double stqr = std::numbers::pi / 3.0;
      return std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    }
    if (w1 <= 0.0) return 1.0;
    double y = std::log(w1);
    double mu, sigma;
    if (n <= 11) {
      const double gamma = detail::poly(g, an);
      if (y >= gamma) return 1e-99;
      y = -std::log(gamma - y);
      mu = detail::poly(c3, an);
      sigma = std::exp(detail::poly(c4, an));
    } else {
      const double log_n = std::log(an);
      mu = detail::poly(c5, log_n);
      sigma = std::exp(detail::poly(c6, log_n));
    }
    return normal_upper_tail((y - mu) / sigma);
  };

  StatTestResult r;
  r.method = StatMethod::shapiro_wilk;
  r.statistic = w;
  r.p_value = std::clamp(p_value(), 0.0, 1.0);
  r.significant = r.p_value < threshold;
  return r;
}

// ---------------------------------------------------------------------------
// Welch t
// ---------------------------------------------------------------------------

inline StatTestResult welch_t(std::span<const double> a, std::span<const double> b,
                              double threshold = kDefaultSignificance) {
  if (a.size() < 2 || b.size() < 2) throw ParameterError("Welch t-test needs at least two values per sample");
  detail::require_finite(a);
  detail::require_finite(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = detail::mean_of(a), mb = detail::mean_of(b);
  const double va = detail::variance_of(a, ma) / na;
  const double vb = detail::variance_of(b, mb) / nb;
  const double se2 = va + vb;
  if (se2 <= 0.0) throw DegenerateSampleError("Welch t-test with both variances zero");
  StatTestResult r;
  r.method = StatMethod::welch_t;
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.df = df;
  const double x = df / (df + r.statistic * r.statistic);
  r.p_value = std::clamp(regularized_incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
  r.significant = r.p_value < threshold;
  return r;
}

}  // namespace aitrand
