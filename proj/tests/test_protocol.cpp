#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "heatstat/protocol.hpp"
#include "oracles.hpp"

using namespace heatstat;

namespace {

Observable qubit_observable(double a, double b) {
  // |alpha_1> = a|E+> - b|E->, |alpha_2> = b|E+> + a|E->, levels ordered (E-, E+).
  ComplexMatrix w{{-b, a}, {a, b}};
  return Observable::from_basis({1.0, -1.0}, w);
}

}  // namespace

TEST(Observable, NonUnitaryBasisRejected) {
  try {
    Observable::from_basis({0.0, 1.0}, ComplexMatrix{{1.0, 0.5}, {0.0, 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_unitary);
  }
}

TEST(Observable, ValueCountMustMatch) {
  EXPECT_THROW(Observable::from_basis({0.0}, ComplexMatrix::identity(2)), Error);
}

TEST(Observable, FromHermitianDiagonalizes) {
  const ComplexMatrix op{{0.0, 1.0}, {1.0, 0.0}};
  const Observable obs = Observable::from_hermitian(op);
  EXPECT_NEAR(obs.values[0], -1.0, 1e-14);
  EXPECT_LE(unitarity_deviation(obs.basis), 1e-12);
}

TEST(InitialState, GibbsWeights) {
  const std::vector<double> e{-1.0, 0.5, 2.0};
  const auto s = InitialState::gibbs(e, 0.8);
  double z = 0.0;
  for (double x : e) z += std::exp(-0.8 * x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.weights[k], std::exp(-0.8 * e[k]) / z, 1e-15);
  const auto& g = std::get<InitialState::Gibbs>(s.mode);
  EXPECT_NEAR(g.partition_function, z, 1e-13 * z);
}

TEST(InitialState, GibbsSurvivesLargeBeta) {
  const auto s = InitialState::gibbs(std::vector<double>{0.0, 1.0}, 500.0);
  EXPECT_NEAR(s.weights[0], 1.0, 1e-15);
  EXPECT_THROW(InitialState::gibbs(std::vector<double>{-10.0, 1.0}, 80.0), Error);
}

TEST(InitialState, WeightsValidated) {
  EXPECT_THROW(InitialState::explicit_weights({0.5, 0.6}), Error);
  EXPECT_THROW(InitialState::explicit_weights({1.2, -0.2}), Error);
  EXPECT_NO_THROW(InitialState::explicit_weights({0.25, 0.75}));
}

TEST(Waits, AtomsValidated) {
  using A = WaitingTimeDistribution::Atom;
  EXPECT_THROW(WaitingTimeDistribution::from_atoms({A{0.1, 0.5}, A{0.1, 0.5}}), Error);
  EXPECT_THROW(WaitingTimeDistribution::from_atoms({A{-0.1, 1.0}}), Error);
  EXPECT_THROW(WaitingTimeDistribution::from_atoms({A{0.1, 0.5}, A{0.2, 0.4}}), Error);
  EXPECT_THROW(WaitingTimeDistribution::from_atoms({A{0.1, 0.0}, A{0.2, 1.0}}), Error);
  EXPECT_NEAR(WaitingTimeDistribution::from_atoms({A{1.0, 0.25}, A{3.0, 0.75}}).mean(), 2.5, 1e-15);
}

TEST(Waits, GaussLegendreIsExactForPolynomials) {
  const auto [x, w] = gauss_legendre(8);
  // Integral of t^k over [-1, 1] is 2/(k+1) for even k and 0 for odd k.
  for (int k = 0; k <= 15; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], k);
    EXPECT_NEAR(s, k % 2 == 0 ? 2.0 / (k + 1) : 0.0, 1e-14) << "k=" << k;
  }
}

TEST(Waits, DensityQuadratureMatchesMoments) {
  const double rate = 1.7;
  const auto w = WaitingTimeDistribution::from_density([&](double t) { return rate * std::exp(-rate * t); },
                                                       0.0, 30.0);
  EXPECT_EQ(w.atoms.size(), 64u);
  EXPECT_NEAR(w.mean(), 1.0 / rate, 1e-10);
  EXPECT_THROW(WaitingTimeDistribution::from_density([](double) { return 1.0; }, 2.0, 1.0), Error);
}

TEST(TransitionMatrix, EnergyBasisObservableFreezes) {
  const auto h = HermitianSpec::from_energies({-1.0, 0.3, 2.0});
  const auto obs = Observable::energy_basis(3);
  for (double tau : {0.0, 0.4, 17.0}) {
    EXPECT_LE(max_abs_diff(transition_matrix_L(h, obs, tau), RealMatrix::identity(3)), 1e-15);
    EXPECT_LE(max_abs_diff(boundary_matrix_A(h, obs, tau), RealMatrix::identity(3)), 1e-15);
  }
  EXPECT_EQ(boundary_matrix_B(h, obs), RealMatrix::identity(3));
}

TEST(TransitionMatrix, TwoLevelClosedForm) {
  // Off-diagonal entry |a* b e^{-iE tau} - a b* e^{iE tau}|^2 = 4 a^2 b^2 sin^2(E tau) for real a, b.
  const double a = 0.8, b = 0.6, e = 1.3;
  const auto h = HermitianSpec::from_energies({-e, e});
  const auto obs = qubit_observable(a, b);
  for (double tau : {0.0, 0.2, 0.9, 2.5}) {
    const double nu = 4.0 * a * a * b * b * std::pow(std::sin(e * tau), 2);
    const RealMatrix expected{{1.0 - nu, nu}, {nu, 1.0 - nu}};
    EXPECT_LE(max_abs_diff(transition_matrix_L(h, obs, tau), expected), 1e-15) << tau;
  }
}

TEST(TransitionMatrix, RandomObservableDoublyStochastic) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 50; ++t) {
    const auto h = HermitianSpec::from_energies(oracle::random_energies(3, rng));
    const Observable obs{{0.0, 1.0, 2.0}, oracle::random_unitary(3, rng)};
    const auto l = transition_matrix_L(h, obs, 0.7);
    EXPECT_LE(column_sum_error(l), 1e-12);
    EXPECT_LE(row_sum_error(l), 1e-12);
    EXPECT_TRUE(is_column_stochastic(l));
    EXPECT_LE(max_abs_diff(transition_matrix_L(h, obs, 0.0), RealMatrix::identity(3)), 1e-14);
  }
}

TEST(BoundaryMatrices, AtZeroTimeAreOverlaps) {
  std::mt19937_64 rng(23);
  const auto h = HermitianSpec::from_energies(oracle::random_energies(4, rng));
  const Observable obs{{0.0, 1.0, 2.0, 3.0}, oracle::random_unitary(4, rng)};
  const auto a0 = boundary_matrix_A(h, obs, 0.0);
  const auto b = boundary_matrix_B(h, obs);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(a0(k, n), std::norm(obs.basis(n, k)), 1e-15);
  EXPECT_EQ(b, transpose(a0));
  EXPECT_LE(column_sum_error(b), 1e-12);
  EXPECT_LE(row_sum_error(b), 1e-12);
  EXPECT_LE(column_sum_error(boundary_matrix_A(h, obs, 1.3)), 1e-12);
  // B A(0) maps probability vectors to probability vectors.
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto q = matvec(matmul(b, a0), std::span<const double>(p));
  double s = 0.0;
  for (double x : q) s += x;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(AveragedMatrix, SingleAtomIsTheMatrix) {
  std::mt19937_64 rng(29);
  const auto h = HermitianSpec::from_energies(oracle::random_energies(3, rng));
  const Observable obs{{0.0, 1.0, 2.0}, oracle::random_unitary(3, rng)};
  const auto waits = WaitingTimeDistribution::deterministic(0.45);
  const auto avg = averaged_matrix([&](double t) { return transition_matrix_L(h, obs, t); }, waits);
  EXPECT_EQ(avg, transition_matrix_L(h, obs, 0.45));
}

TEST(AveragedMatrix, TwoLevelBimodal) {
  const double a = 0.6, b = 0.8, e = 1.0;
  const auto h = HermitianSpec::from_energies({-e, e});
  const auto obs = qubit_observable(a, b);
  const auto waits = WaitingTimeDistribution::from_atoms({{0.3, 0.35}, {1.4, 0.65}});
  auto nu = [&](double tau) { return 4.0 * a * a * b * b * std::pow(std::sin(e * tau), 2); };
  const double zeta = 0.35 * nu(0.3) + 0.65 * nu(1.4);
  const auto avg = averaged_matrix([&](double t) { return transition_matrix_L(h, obs, t); }, waits);
  const RealMatrix expected{{1.0 - zeta, zeta}, {zeta, 1.0 - zeta}};
  EXPECT_LE(max_abs_diff(avg, expected), 1e-15);
}

TEST(AveragedMatrix, ThreeAtomsConvexCombination) {
  std::mt19937_64 rng(31);
  const auto h = HermitianSpec::from_energies(oracle::random_energies(3, rng));
  const Observable obs{{0.0, 1.0, 2.0}, oracle::random_unitary(3, rng)};
  const auto waits = WaitingTimeDistribution::from_atoms({{0.2, 0.2}, {0.9, 0.5}, {2.2, 0.3}});
  const auto avg = averaged_matrix([&](double t) { return transition_matrix_L(h, obs, t); }, waits);
  const auto l1 = transition_matrix_L(h, obs, 0.2);
  const auto l2 = transition_matrix_L(h, obs, 0.9);
  const auto l3 = transition_matrix_L(h, obs, 2.2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_NEAR(avg(i, j), 0.2 * l1(i, j) + 0.5 * l2(i, j) + 0.3 * l3(i, j), 1e-15);
  EXPECT_LE(column_sum_error(avg), 1e-12);
}

TEST(ProtocolSpec, ValidateCatchesMismatches) {
  ProtocolSpec spec{HermitianSpec::from_energies({0.0, 1.0}), Observable::energy_basis(3),
                    InitialState::explicit_weights({0.5, 0.5}), WaitingTimeDistribution::deterministic(1.0), 2};
  try {
    spec.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
  spec.observable = Observable::energy_basis(2);
  spec.measurements = 0;
  EXPECT_THROW(spec.validate(), Error);
  spec.measurements = 1;
  EXPECT_NO_THROW(spec.validate());
}
