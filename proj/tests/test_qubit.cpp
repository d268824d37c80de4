#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "heatstat/exact.hpp"
#include "heatstat/qubit.hpp"
#include "oracles.hpp"

using namespace heatstat;
using qubit::QubitParams;

namespace {

QubitParams params(double a2, double c1, double p1, double tau1, double tau2, long long m, double e = 1.0) {
  QubitParams q;
  q.energy = e;
  q.a = std::sqrt(a2);
  q.b = std::sqrt(1.0 - a2);
  q.c1 = c1;
  q.c2 = 1.0 - c1;
  q.p1 = p1;
  q.p2 = 1.0 - p1;
  q.tau1 = tau1;
  q.tau2 = tau2;
  q.measurements = m;
  return q;
}

}  // namespace

TEST(QubitParams, Validation) {
  QubitParams q = params(0.5, 0.3, 0.4, 0.2, 0.9, 3);
  EXPECT_NO_THROW(q.validate());
  q.b = Complex(0.0, std::sqrt(0.5));  // a* b imaginary
  EXPECT_THROW(q.validate(), Error);
  q = params(0.5, 0.3, 0.4, 0.2, 0.9, 3);
  q.c1 = 0.9;
  EXPECT_THROW(q.validate(), Error);
  q = params(0.5, 0.3, 0.4, 0.2, 0.9, 0);
  EXPECT_THROW(q.validate(), Error);
}

TEST(QubitParams, ComplexPhasesAllowedWhenAStarBReal) {
  QubitParams q = params(0.36, 0.3, 0.4, 0.2, 0.9, 4);
  const Complex phase = std::polar(1.0, 0.7);
  q.a *= phase;
  q.b *= phase;
  EXPECT_NO_THROW(q.validate());
  const QubitParams real = params(0.36, 0.3, 0.4, 0.2, 0.9, 4);
  EXPECT_LE(std::abs(qubit::qubit_char_fn(q, 1.1).value - qubit::qubit_char_fn(real, 1.1).value), 1e-14);
}

TEST(QubitCharFn, NormalizedAtZero) {
  EXPECT_LE(std::abs(qubit::qubit_char_fn(params(0.3, 0.2, 0.6, 0.5, 1.5, 8), 0.0).value - 1.0), 1e-15);
}

TEST(QubitCharFn, CommutingObservableGivesOne) {
  for (double a2 : {0.0, 1.0})
    for (long long m : {1LL, 5LL, 40LL})
      for (Complex u : {Complex(0.3, 0.0), Complex(2.0, 0.5)}) {
        EXPECT_LE(std::abs(qubit::qubit_char_fn(params(a2, 0.3, 0.4, 0.2, 0.9, m), u).value - 1.0), 1e-14);
      }
}

TEST(QubitCharFn, MatchesExactEngine) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const auto q = params(unit(rng), unit(rng), 0.05 + 0.9 * unit(rng), 3.0 * unit(rng), 3.0 * unit(rng) + 0.01,
                          1 + t % 9, 0.5 + unit(rng));
    const auto spec = qubit::to_protocol(q);
    const Complex u(4.0 * unit(rng) - 2.0, unit(rng) - 0.5);
    EXPECT_LE(std::abs(qubit::qubit_char_fn(q, u).value - char_fn(spec, u).value), 1e-10);
  }
}

TEST(QubitCharFn, BinomialSumEqualsCommutingForm) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const auto q = params(unit(rng), unit(rng), unit(rng), 2.0 * unit(rng), 2.0 * unit(rng), 1 + t % 60);
    const Complex u(3.0 * unit(rng), 0.3 * unit(rng));
    EXPECT_LE(std::abs(qubit::qubit_char_fn_binomial(q, u).value - qubit::qubit_char_fn(q, u).value), 1e-12);
  }
}

TEST(QubitCharFn, JarzynskiForGibbsWeights) {
  for (double beta : {0.1, 0.5, 1.0, 2.5})
    for (long long m : {1LL, 3LL, 17LL, 250LL}) {
      const double c1 = std::exp(-beta) / (std::exp(-beta) + std::exp(beta));
      const auto q = params(0.3, c1, 0.35, 0.4, 1.9, m);
      EXPECT_LE(std::abs(qubit::qubit_char_fn(q, Complex(0.0, beta)).value - 1.0), 1e-10);
    }
}

TEST(QubitLimit, NormalizedAndThermal) {
  EXPECT_LE(std::abs(qubit::qubit_char_fn_limit(params(0.3, 0.2, 0.5, 0.5, 1.0, 10), 0.0).value - 1.0), 1e-15);
  for (double beta : {0.2, 1.0, 3.0}) {
    const double c1 = std::exp(-beta) / (std::exp(-beta) + std::exp(beta));
    const auto q = params(0.3, c1, 0.5, 0.5, 1.0, 10);
    EXPECT_LE(std::abs(qubit::qubit_char_fn_limit(q, Complex(0.0, beta)).value - 1.0), 1e-12);
  }
}

TEST(QubitLimit, IndependentOfObservable) {
  const Complex u(0.8, 0.1);
  const auto g1 = qubit::qubit_char_fn_limit(params(0.2, 0.3, 0.5, 0.5, 1.0, 10), u).value;
  const auto g2 = qubit::qubit_char_fn_limit(params(0.7, 0.3, 0.5, 0.5, 1.0, 10), u).value;
  EXPECT_EQ(g1, g2);
}

TEST(QubitLimit, ReachedAtFourHundredMeasurements) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  while (checked < 30) {
    const auto q = params(0.1 + 0.8 * unit(rng), unit(rng), unit(rng), 2.0 * unit(rng), 2.0 * unit(rng), 400);
    if (qubit::zeta(q) < 0.05) continue;
    const Complex u(2.0 * unit(rng) - 1.0, 0.0);
    EXPECT_LE(std::abs(qubit::qubit_char_fn(q, u).value - qubit::qubit_char_fn_limit(q, u).value), 1e-8);
    ++checked;
  }
}

TEST(QubitLimit, ZeroZetaIsDegenerate) {
  try {
    qubit::qubit_char_fn_limit(params(1.0, 0.3, 0.5, 0.5, 1.0, 10), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_observable);
  }
}

TEST(QubitLimit, DiscontinuityWitness) {
  // |a|^2 = 1e-6: the chain mixes, but only after ~1/zeta measurements.
  auto q = params(1e-6, 0.3, 1.0, std::numbers::pi / 2, std::numbers::pi / 2, 10);
  const Complex u(0.5, 0.0);
  const Complex limit = qubit::qubit_char_fn_limit(q, u).value;
  ASSERT_GT(std::abs(limit - 1.0), 0.1);
  EXPECT_LE(std::abs(qubit::qubit_char_fn(q, u).value - 1.0), 1e-4);
  q.measurements = 1000000;
  const Complex far = qubit::qubit_char_fn(q, u).value;
  EXPECT_GT(std::abs(far - 1.0), 0.1);
  EXPECT_LT(std::abs(far - limit), 1e-3);
  // At a = 0 exactly, G stays 1 for every M.
  q.a = 0.0;
  q.b = 1.0;
  EXPECT_LE(std::abs(qubit::qubit_char_fn(q, u).value - 1.0), 1e-15);
}

TEST(QubitDerivative, OrderZeroIsTheFunction) {
  const auto q = params(0.3, 0.2, 0.6, 0.5, 1.5, 8);
  const Complex u(0.7, 0.1);
  EXPECT_LE(std::abs(qubit::qubit_char_fn_derivative(q, u, 0) - qubit::qubit_char_fn(q, u).value), 1e-15);
}

TEST(QubitDerivative, CommutingCaseFirstDerivativeVanishes) {
  const auto q = params(1.0, 0.2, 0.6, 0.5, 1.5, 8);
  EXPECT_LE(std::abs(qubit::qubit_char_fn_derivative(q, 0.0, 1)), 1e-15);
}

TEST(QubitDerivative, MatchesFiniteDifferences) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    const double e = 0.5 + unit(rng);
    const auto q = params(unit(rng), unit(rng), unit(rng), 2.0 * unit(rng), 2.0 * unit(rng), 1 + t % 12, e);
    const double x = 2.0 * unit(rng) - 1.0;
    const double h = 1e-4 / e;
    auto g = [&](double u) { return qubit::qubit_char_fn(q, u).value; };
    auto d2 = [&](double u) { return qubit::qubit_char_fn_derivative(q, u, 2); };
    const Complex fd1 = oracle::central_first(g, x, h);
    const Complex fd2 = oracle::central_second(g, x, h);
    const Complex fd3 = oracle::central_first(d2, x, h);
    const Complex an1 = qubit::qubit_char_fn_derivative(q, x, 1);
    const Complex an2 = qubit::qubit_char_fn_derivative(q, x, 2);
    const Complex an3 = qubit::qubit_char_fn_derivative(q, x, 3);
    const double scale = e * e * e;
    EXPECT_LE(std::abs(fd1 - an1), 1e-5 * std::max(std::abs(an1), e)) << t;
    EXPECT_LE(std::abs(fd2 - an2), 1e-5 * std::max(std::abs(an2), e * e)) << t;
    EXPECT_LE(std::abs(fd3 - an3), 1e-5 * std::max(std::abs(an3), scale)) << t;
  }
}

TEST(QubitDerivative, OrderAboveThreeRejected) {
  try {
    qubit::qubit_char_fn_derivative(params(0.3, 0.2, 0.6, 0.5, 1.5, 8), 0.0, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::order_too_high);
  }
}

TEST(QubitDerivative, MomentsAtZero) {
  const auto q = params(0.45, 0.3, 0.35, 0.4, 1.2, 6);
  const auto spec = qubit::to_protocol(q);
  const Complex i(0.0, 1.0);
  EXPECT_NEAR((qubit::qubit_char_fn_derivative(q, 0.0, 1) / i).real(), moments(spec, 1), 1e-12);
  EXPECT_NEAR((qubit::qubit_char_fn_derivative(q, 0.0, 2) / (i * i)).real(), moments(spec, 2), 1e-12);
  EXPECT_NEAR((qubit::qubit_char_fn_derivative(q, 0.0, 3) / (i * i * i)).real(), moments(spec, 3), 1e-12);
}
