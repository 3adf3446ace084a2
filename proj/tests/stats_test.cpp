#include "aitrand/stats.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <random>

#include "sw_reference.hpp"

namespace {

using Vec = std::vector<double>;

TEST(FiveNumberSummary, Examples) {
  const auto a = aitrand::five_number_summary(Vec{5, 3, 1, 4, 2});
  EXPECT_EQ(a.min, 1);
  EXPECT_EQ(a.q1, 2);
  EXPECT_EQ(a.median, 3);
  EXPECT_EQ(a.q3, 4);
  EXPECT_EQ(a.max, 5);
  EXPECT_DOUBLE_EQ(a.mean, 3);
  EXPECT_DOUBLE_EQ(a.sd, std::sqrt(2.5));

  const auto b = aitrand::five_number_summary(Vec{7, 7});
  EXPECT_EQ(b.min, 7);
  EXPECT_EQ(b.q3, 7);
  EXPECT_EQ(b.sd, 0);

  const auto c = aitrand::five_number_summary(Vec{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(c.q1, 1.75);
  EXPECT_DOUBLE_EQ(c.median, 2.5);
  EXPECT_DOUBLE_EQ(c.q3, 3.25);
}

TEST(FiveNumberSummary, Errors) {
  EXPECT_THROW(aitrand::five_number_summary(Vec{1}), aitrand::ParameterError);
  EXPECT_THROW(aitrand::five_number_summary(Vec{1, NAN}), aitrand::ParameterError);
}

TEST(FiveNumberSummary, OrderedAndBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int iter = 0; iter < 200; ++iter) {
    Vec v(2 + rng() % 50);
    for (auto& x : v) x = nd(rng);
    const auto s = aitrand::five_number_summary(v);
    ASSERT_LE(s.min, s.q1);
    ASSERT_LE(s.q1, s.median);
    ASSERT_LE(s.median, s.q3);
    ASSERT_LE(s.q3, s.max);
    ASSERT_GE(s.mean, s.min);
    ASSERT_LE(s.mean, s.max);
  }
}

// --- distribution helpers --------------------------------------------------

TEST(Distributions, NormalQuantileAgreesWithBoost) {
  const boost::math::normal_distribution<double> nd;
  for (double p : {1e-300, 1e-12, 1e-4, 0.01, 0.2, 0.5, 0.75, 0.975, 1 - 1e-9}) {
    EXPECT_NEAR(aitrand::normal_quantile(p), boost::math::quantile(nd, p), 1e-9 * std::max(1.0, std::abs(boost::math::quantile(nd, p)))) << p;
  }
  EXPECT_THROW(aitrand::normal_quantile(0.0), aitrand::ParameterError);
  EXPECT_THROW(aitrand::normal_quantile(1.0), aitrand::ParameterError);
}

TEST(Distributions, NormalTail) {
  EXPECT_DOUBLE_EQ(aitrand::normal_upper_tail(0), 0.5);
  const boost::math::normal_distribution<double> nd;
  for (double z : {-3.0, -1.0, 0.3, 2.0, 8.0, 30.0}) {
    EXPECT_NEAR(aitrand::normal_upper_tail(z) / boost::math::cdf(boost::math::complement(nd, z)), 1.0, 1e-12) << z;
  }
}

TEST(Distributions, StudentTAgreesWithBoost) {
  EXPECT_DOUBLE_EQ(aitrand::students_t_cdf(0, 3), 0.5);
  std::mt19937_64 rng(2);
  for (int iter = 0; iter < 500; ++iter) {
    const double df = 0.5 + static_cast<double>(rng() % 10000) / 100.0;
    const double t = (static_cast<double>(rng() % 20001) - 10000.0) / 1000.0;
    const boost::math::students_t_distribution<double> dist(df);
    ASSERT_NEAR(aitrand::students_t_cdf(t, df), boost::math::cdf(dist, t), 1e-12) << t << " " << df;
  }
}

TEST(Distributions, StudentTMonotone) {
  double prev = 0;
  for (double t = -20; t <= 20; t += 0.25) {
    const double c = aitrand::students_t_cdf(t, 4.5);
    ASSERT_GE(c, prev);
    prev = c;
  }
}

TEST(Distributions, KolmogorovSurvival) {
  EXPECT_EQ(aitrand::kolmogorov_survival(0), 1.0);
  // Standard critical values of the Kolmogorov law.
  EXPECT_NEAR(aitrand::kolmogorov_survival(1.3580986), 0.05, 1e-6);
  EXPECT_NEAR(aitrand::kolmogorov_survival(1.2238479), 0.10, 1e-6);
  EXPECT_NEAR(aitrand::kolmogorov_survival(1.6276236), 0.01, 1e-6);
  // Both series agree near the switch point.
  double prev = 1;
  for (double l = 0.2; l < 3; l += 0.01) {
    const double s = aitrand::kolmogorov_survival(l);
    ASSERT_LE(s, prev + 1e-12);
    prev = s;
  }
}

// --- KS --------------------------------------------------------------------

TEST(KsTwoSample, IdenticalSamples) {
  const Vec a{1, 2, 3, 4, 5};
  const auto r = aitrand::ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.ties);
  EXPECT_EQ(r.method, aitrand::StatMethod::ks_asymptotic);
}

TEST(KsTwoSample, SeparatedSamplesExact) {
  const auto r = aitrand::ks_two_sample(Vec{1, 2, 3, 4, 5}, Vec{6, 7, 8, 9, 10});
  EXPECT_EQ(r.statistic, 1.0);
  EXPECT_EQ(r.method, aitrand::StatMethod::ks_exact);
  EXPECT_NEAR(r.p_value, 2.0 / 252.0, 1e-15);
  EXPECT_TRUE(r.significant);
  EXPECT_FALSE(r.ties);

  const auto ten = aitrand::ks_two_sample(Vec{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                          Vec{11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
  EXPECT_NEAR(ten.p_value, 2.0 / 184756.0, 1e-18);
}

TEST(KsTwoSample, CrossSampleTiesUseAsymptotic) {
  const auto r = aitrand::ks_two_sample(Vec{1, 2, 3}, Vec{3, 4, 5});
  EXPECT_TRUE(r.ties);
  EXPECT_EQ(r.method, aitrand::StatMethod::ks_asymptotic);
}

TEST(KsTwoSample, LargeSamplesUseAsymptotic) {
  Vec a(101), b(100);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(2 * i);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(2 * i + 1);
  const auto r = aitrand::ks_two_sample(a, b);
  EXPECT_FALSE(r.ties);
  EXPECT_EQ(r.method, aitrand::StatMethod::ks_asymptotic);
  EXPECT_FALSE(r.significant);
}

// Exhaustive enumeration of every labelling of the pooled order.
std::pair<std::uint64_t, std::uint64_t> brute_force_tail(unsigned n, unsigned m, std::uint64_t d) {
  std::uint64_t hits = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << (n + m)); ++mask) {
    if (static_cast<unsigned>(__builtin_popcount(mask)) != n) continue;
    ++total;
    std::int64_t i = 0, j = 0, best = 0;
    for (unsigned k = 0; k < n + m; ++k) {
      if (mask >> k & 1) ++i;
      else ++j;
      best = std::max<std::int64_t>(best, std::abs(i * m - j * n));
    }
    hits += static_cast<std::uint64_t>(best) >= d;
  }
  return {hits, total};
}

TEST(KsExact, MatchesBruteForceForSmallSamples) {
  for (unsigned n = 1; n <= 6; ++n) {
    for (unsigned m = 1; m <= 6; ++m) {
      for (std::uint64_t d = 0; d <= n * m; ++d) {
        const auto t = aitrand::ks_exact_tail(n, m, d);
        const auto [hits, total] = brute_force_tail(n, m, d);
        ASSERT_EQ(t.paths_total, total);
        ASSERT_EQ(t.paths_reaching, hits) << n << "," << m << "," << d;
      }
    }
  }
}

TEST(KsExact, LongDoublePathAgreesWithInteger) {
  // C(60, 30) fits in 64 bits: force both code paths and compare.
  for (std::uint64_t d : {300u, 450u, 600u, 900u}) {
    const auto t = aitrand::ks_exact_tail(30, 30, d);
    const long double reach = aitrand::detail::ks_paths_reaching<long double>(30, 30, d);
    EXPECT_NEAR(static_cast<double>(reach / static_cast<long double>(t.paths_total)),
                static_cast<double>(t.paths_reaching) / static_cast<double>(t.paths_total), 1e-15);
  }
  // 100 x 100 overflows the integer path but is within the exact cell limit.
  const double p = aitrand::ks_exact_pvalue(100, 100, 10000);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1e-50);
}

TEST(KsTwoSample, SymmetricAndInvariantUnderMonotoneMaps) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int iter = 0; iter < 100; ++iter) {
    Vec a(3 + rng() % 20), b(3 + rng() % 20);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng) + 0.7;
    const auto ab = aitrand::ks_two_sample(a, b);
    const auto ba = aitrand::ks_two_sample(b, a);
    ASSERT_EQ(ab.statistic, ba.statistic);
    ASSERT_NEAR(ab.p_value, ba.p_value, 1e-14);
    Vec ea = a, eb = b;
    for (auto& x : ea) x = std::exp(x);
    for (auto& x : eb) x = std::exp(x);
    ASSERT_EQ(aitrand::ks_two_sample(ea, eb).statistic, ab.statistic);
    ASSERT_GE(ab.p_value, 0.0);
    ASSERT_LE(ab.p_value, 1.0);
  }
}

TEST(KsTwoSample, Errors) {
  EXPECT_THROW(aitrand::ks_two_sample(Vec{}, Vec{1}), aitrand::ParameterError);
  EXPECT_THROW(aitrand::ks_two_sample(Vec{1, INFINITY}, Vec{1}), aitrand::ParameterError);
}

// --- Welch -----------------------------------------------------------------

TEST(WelchT, Example) {
  const auto r = aitrand::welch_t(Vec{1, 2, 3, 4, 5}, Vec{2, 3, 4, 5, 6});
  EXPECT_DOUBLE_EQ(r.statistic, -1.0);
  ASSERT_TRUE(r.df.has_value());
  EXPECT_DOUBLE_EQ(*r.df, 8.0);
  EXPECT_NEAR(r.p_value, 0.34659350708733416, 1e-12);  // scipy.stats.ttest_ind(equal_var=False)
  EXPECT_FALSE(r.significant);
}

TEST(WelchT, AgreesWithBoostTwoSidedTail) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int iter = 0; iter < 200; ++iter) {
    Vec a(2 + rng() % 30), b(2 + rng() % 30);
    for (auto& x : a) x = nd(rng) * 2.0;
    for (auto& x : b) x = nd(rng) + 0.5;
    const auto r = aitrand::welch_t(a, b);
    const boost::math::students_t_distribution<double> dist(*r.df);
    const double expect = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
    ASSERT_NEAR(r.p_value, expect, 1e-10 * std::max(1.0, expect));
  }
}

TEST(WelchT, NegationAndShift) {
  const Vec a{1.5, 2.25, 3.0, 9.0}, b{0.1, 0.2, 0.35, 0.4, 1.0};
  const auto ab = aitrand::welch_t(a, b);
  const auto ba = aitrand::welch_t(b, a);
  EXPECT_DOUBLE_EQ(ab.statistic, -ba.statistic);
  EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);
  Vec sa = a, sb = b;
  for (auto& x : sa) x += 100.0;
  for (auto& x : sb) x += 100.0;
  EXPECT_NEAR(aitrand::welch_t(sa, sb).statistic, ab.statistic, 1e-9);
}

TEST(WelchT, Errors) {
  EXPECT_THROW(aitrand::welch_t(Vec{1, 1, 1}, Vec{2, 2}), aitrand::DegenerateSampleError);
  EXPECT_THROW(aitrand::welch_t(Vec{1}, Vec{2, 3}), aitrand::ParameterError);
}

// --- Shapiro-Wilk ----------------------------------------------------------

TEST(ShapiroWilk, MatchesReferenceImplementation) {
  for (const auto& c : sw_reference::cases()) {
    const auto r = aitrand::shapiro_wilk(c.sample);
    EXPECT_NEAR(r.statistic, c.w, 1e-6) << "n=" << c.sample.size();
    EXPECT_NEAR(r.p_value, c.p, 1e-3) << "n=" << c.sample.size();
  }
}

TEST(ShapiroWilk, PowersOfTwoAreNotNormal) {
  Vec v;
  for (int i = 0; i < 10; ++i) v.push_back(std::ldexp(1.0, i));
  const auto r = aitrand::shapiro_wilk(v);
  EXPECT_NEAR(r.statistic, 0.68924, 1e-5);
  EXPECT_NEAR(r.p_value, 0.00065264, 1e-6);
  EXPECT_TRUE(r.significant);
}

TEST(ShapiroWilk, AffineInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int iter = 0; iter < 50; ++iter) {
    Vec v(3 + rng() % 200);
    for (auto& x : v) x = nd(rng);
    Vec w = v;
    for (auto& x : w) x = 3.5 * x - 1e3;
    const auto a = aitrand::shapiro_wilk(v), b = aitrand::shapiro_wilk(w);
    ASSERT_NEAR(a.statistic, b.statistic, 1e-9);
    ASSERT_NEAR(a.p_value, b.p_value, 1e-9);
    ASSERT_GT(a.statistic, 0.0);
    ASSERT_LE(a.statistic, 1.0);
  }
}

TEST(ShapiroWilk, Errors) {
  EXPECT_THROW(aitrand::shapiro_wilk(Vec{4, 4, 4, 4}), aitrand::DegenerateSampleError);
  EXPECT_THROW(aitrand::shapiro_wilk(Vec{1, 2}), aitrand::ParameterError);
  EXPECT_THROW(aitrand::shapiro_wilk(Vec(5001, 1.0)), aitrand::ParameterError);
}

TEST(StatMethod, StringRoundTrip) {
  for (auto m : {aitrand::StatMethod::ks_exact, aitrand::StatMethod::ks_asymptotic, aitrand::StatMethod::shapiro_wilk,
                 aitrand::StatMethod::welch_t}) {
    EXPECT_EQ(aitrand::stat_method_from_string(aitrand::to_string(m)), m);
  }
  EXPECT_THROW(aitrand::stat_method_from_string("anova"), aitrand::ParameterError);
}

}  // namespace
