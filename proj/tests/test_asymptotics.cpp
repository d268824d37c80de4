#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heatstat/asymptotics.hpp"
#include "heatstat/qubit.hpp"
#include "oracles.hpp"

using namespace heatstat;

namespace {

ComplexMatrix block_basis(std::mt19937_64& rng) {
  const ComplexMatrix u2 = oracle::random_unitary(2, rng);
  ComplexMatrix w(3, 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) w(i, j) = u2(i, j);
  w(2, 2) = 1.0;
  return w;
}

ProtocolSpec partial_spec(std::mt19937_64& rng, int m) {
  return ProtocolSpec{HermitianSpec::from_energies({-2.0, 0.0, 1.0}), Observable{{0.0, 1.0, 2.0}, block_basis(rng)},
                      InitialState::explicit_weights({0.5, 0.2, 0.3}),
                      WaitingTimeDistribution::from_atoms({{0.4, 0.5}, {1.3, 0.5}}), m};
}

ProtocolSpec qubit_spec(double a, double b, double tau, int m) {
  ComplexMatrix w{{-b, a}, {a, b}};
  return ProtocolSpec{HermitianSpec::from_energies({-1.0, 1.0}), Observable::from_basis({1.0, -1.0}, w),
                      InitialState::explicit_weights({0.5, 0.5}), WaitingTimeDistribution::deterministic(tau), m};
}

}  // namespace

TEST(Blocks, EnergyBasisObservableGivesSingletons) {
  const auto b = detect_blocks(HermitianSpec::from_energies({-1.0, 0.0, 1.0, 4.0}), Observable::energy_basis(4));
  EXPECT_EQ(b.count(), 4u);
  EXPECT_EQ(limiting_conditional(b), RealMatrix::identity(4));
}

TEST(Blocks, GenericQubitIsOneBlock) {
  const auto spec = qubit_spec(0.8, 0.6, 0.5, 3);
  EXPECT_EQ(detect_blocks(spec).count(), 1u);
}

TEST(Blocks, TwoPlusOneInstance) {
  std::mt19937_64 rng(3);
  const auto spec = partial_spec(rng, 10);
  const auto b = detect_blocks(spec);
  ASSERT_EQ(b.count(), 2u);
  EXPECT_EQ(b.dims(), (std::vector<std::size_t>{2, 1}));
  const RealMatrix expected{{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}};
  EXPECT_EQ(limiting_conditional(b), expected);
}

TEST(Blocks, PartitionCoversEveryIndexOnce) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto spec = oracle::random_spec({5, 2, 1, std::nullopt}, rng);
    const auto b = detect_blocks(spec);
    std::vector<int> seen(5, 0);
    for (const auto& block : b.blocks)
      for (std::size_t i : block) ++seen[i];
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_EQ(b.count(), 1u);
  }
}

TEST(Limiting, GenericThreeLevelIsUniform) {
  std::mt19937_64 rng(5);
  const auto p = limiting_conditional(oracle::random_spec({3, 2, 1, std::nullopt}, rng));
  for (double x : p.values()) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(Limiting, IsIdempotentAndStochastic) {
  std::mt19937_64 rng(6);
  const auto p = limiting_conditional(partial_spec(rng, 3));
  EXPECT_LE(max_abs_diff(matmul(p, p), p), 1e-10);
  EXPECT_LE(column_sum_error(p), 1e-10);
}

TEST(Convergence, EnergyBasisObservableHasZeroDistance) {
  ProtocolSpec spec{HermitianSpec::from_energies({-1.0, 0.5}), Observable::energy_basis(2),
                    InitialState::explicit_weights({0.5, 0.5}), WaitingTimeDistribution::deterministic(0.3), 2};
  const std::vector<long long> ms{1, 5, 50};
  for (const auto& p : convergence_profile(spec, ms)) EXPECT_LE(p.distance, 1e-13);
}

TEST(Convergence, QubitDecaysGeometrically) {
  // Choose tau so that nu = 4 a^2 b^2 sin^2(tau) = 0.3 with a = b.
  const double tau = std::asin(std::sqrt(0.3));
  const double r = std::sqrt(0.5);
  const auto spec = qubit_spec(r, r, tau, 2);
  const std::vector<long long> ms{1, 2, 3, 5, 10, 20};
  for (const auto& p : convergence_profile(spec, ms)) {
    EXPECT_NEAR(p.distance, 0.5 * std::pow(0.4, static_cast<double>(p.measurements - 1)), 1e-14);
  }
  const auto rep = thermalization_report(spec);
  EXPECT_NEAR(rep.rate, 0.4, 1e-10);
}

TEST(Convergence, GenericThreeLevelReachesTolerance) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const auto spec = oracle::random_spec({3, 2, 2, std::nullopt}, rng);
    const std::vector<long long> ms{1, 10, 50, 100, 200};
    const auto prof = convergence_profile(spec, ms);
    // Bounded by the dominant mode estimate, which is below one.
    const auto rep = thermalization_report(spec);
    EXPECT_LT(rep.rate, 1.0);
    for (const auto& p : prof) {
      if (p.measurements < 10) continue;
      EXPECT_LE(p.distance, 10.0 * std::pow(rep.rate, static_cast<double>(p.measurements - 1)) + 1e-13);
    }
    const long long far = static_cast<long long>(std::ceil(std::log(1e-8) / std::log(rep.rate))) + 2;
    const std::vector<long long> tail{far};
    EXPECT_LT(convergence_profile(spec, tail)[0].distance, 1e-6);
  }
}

TEST(Convergence, RejectsUnsortedList) {
  std::mt19937_64 rng(8);
  const auto spec = oracle::random_spec({3, 2, 2, std::nullopt}, rng);
  const std::vector<long long> bad{5, 3};
  EXPECT_THROW(convergence_profile(spec, bad), Error);
}

TEST(Regime, Tags) {
  std::mt19937_64 rng(9);
  auto generic = oracle::random_spec({3, 400, 2, std::nullopt}, rng);
  EXPECT_EQ(thermalization_report(generic).regime, Regime::InfiniteTemperature);
  EXPECT_EQ(thermalization_report(partial_spec(rng, 400)).regime, Regime::Partial);
  ProtocolSpec frozen{HermitianSpec::from_energies({-1.0, 0.5}), Observable::energy_basis(2),
                      InitialState::explicit_weights({0.5, 0.5}), WaitingTimeDistribution::deterministic(0.3), 50};
  EXPECT_EQ(thermalization_report(frozen).regime, Regime::ZenoFrozen);
  auto few = generic;
  few.measurements = 2;
  EXPECT_EQ(thermalization_report(few).regime, Regime::ZenoFrozen);
}

TEST(Regime, UnitMultiplicityMatchesBlockCount) {
  std::mt19937_64 rng(10);
  const auto partial = partial_spec(rng, 10);
  EXPECT_EQ(thermalization_report(partial).unit_multiplicity, std::optional<int>(2));
  const auto generic = oracle::random_spec({4, 10, 2, std::nullopt}, rng);
  EXPECT_EQ(thermalization_report(generic).unit_multiplicity, std::optional<int>(1));
}

TEST(Thermalization, InfiniteTemperatureFinalDistribution) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    const auto spec = oracle::random_spec({3, 500, 2, std::nullopt}, rng);
    const auto p = final_energy_probabilities(spec, conditional_table(spec));
    for (double x : p) EXPECT_NEAR(x, 1.0 / 3.0, 1e-6);
  }
}

TEST(Thermalization, PartialBlockFormula) {
  std::mt19937_64 rng(12);
  const auto spec = partial_spec(rng, 500);
  const auto p = final_energy_probabilities(spec, conditional_table(spec));
  const auto& c = spec.initial.weights;
  EXPECT_NEAR(p[0], 0.5 * (c[0] + c[1]), 1e-6);
  EXPECT_NEAR(p[1], 0.5 * (c[0] + c[1]), 1e-6);
  EXPECT_NEAR(p[2], c[2], 1e-6);
}

TEST(AsymptoticCharFn, NormalizedAtZero) {
  std::mt19937_64 rng(13);
  EXPECT_LE(std::abs(asymptotic_char_fn(partial_spec(rng, 5), Complex{}).value - 1.0), 1e-14);
  EXPECT_LE(std::abs(asymptotic_char_fn(oracle::random_spec({4, 5, 2, std::nullopt}, rng), Complex{}).value - 1.0),
            1e-14);
}

TEST(AsymptoticCharFn, QubitMatchesClosedLimit) {
  qubit::QubitParams q;
  q.a = 0.8;
  q.b = 0.6;
  q.c1 = 0.3;
  q.c2 = 0.7;
  q.tau1 = q.tau2 = 0.7;
  q.measurements = 5;
  const auto spec = qubit::to_protocol(q);
  for (Complex u : {Complex(0.4, 0.0), Complex(1.3, -0.2), Complex(0.0, 0.9)}) {
    EXPECT_LE(std::abs(asymptotic_char_fn(spec, u).value - qubit::qubit_char_fn_limit(q, u).value), 1e-13);
  }
}

TEST(AsymptoticCharFn, MatchesExactEngineAtLargeM) {
  std::mt19937_64 rng(14);
  const auto generic = oracle::random_spec({3, 500, 2, std::nullopt}, rng);
  const Complex u(0.0, 0.7);
  EXPECT_LE(std::abs(asymptotic_char_fn(generic, u).value - char_fn(generic, u).value), 1e-6);
  const auto partial = partial_spec(rng, 500);
  EXPECT_LE(std::abs(asymptotic_char_fn(partial, u).value - char_fn(partial, u).value), 1e-6);
}

TEST(Zeno, EnergyBasisObservableIsDegenerate) {
  ProtocolSpec spec{HermitianSpec::from_energies({-1.0, 1.0}), Observable::energy_basis(2),
                    InitialState::explicit_weights({0.5, 0.5}), WaitingTimeDistribution::deterministic(0.3), 2};
  const std::vector<long long> ms{10, 100, 1000};
  EXPECT_EQ(escape_probability(spec, 1.0, 100), 0.0);
  try {
    zeno_scaling(spec, 1.0, ms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_fit);
  }
}

TEST(Zeno, SlopeIsMinusOne) {
  const double r = std::sqrt(0.5);
  const auto spec = qubit_spec(r, r, 0.1, 10);
  const std::vector<long long> ms{10, 20, 50, 100, 200, 500, 1000};
  const auto fit = zeno_scaling(spec, 1.0, ms);
  EXPECT_NEAR(fit.slope, -1.0, 0.1);
}

TEST(Zeno, DoublingMHalvesEscape) {
  const double r = std::sqrt(0.5);
  const auto spec = qubit_spec(r, r, 0.1, 10);
  for (long long m : {500LL, 1000LL, 4000LL}) {
    const double ratio = escape_probability(spec, 1.0, 2 * m) / escape_probability(spec, 1.0, m);
    EXPECT_NEAR(ratio, 0.5, 0.05);
  }
}

TEST(Zeno, NeedsOneAndAHalfDecades) {
  const auto spec = qubit_spec(0.8, 0.6, 0.1, 10);
  const std::vector<long long> ms{10, 20, 300};
  EXPECT_THROW(zeno_scaling(spec, 1.0, ms), Error);
}
