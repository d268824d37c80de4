#pragma once

// Measurement protocol: observable, initial state, waiting-time law, and the
// classical stochastic matrices that drive the outcome chain.
//
// Convention: stochastic matrices are column-stochastic, entry (i, j) is the
// probability of going from j to i. Probability vectors are columns.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/qcore.hpp"

namespace heatstat {

using StochasticMatrix = RealMatrix;

/// Eigen-decomposition of the intermediate observable; column k of `basis` is
/// |alpha_k> in the energy basis. Outcome values never enter heat statistics.
struct Observable {
  std::vector<double> values;
  ComplexMatrix basis;

  std::size_t dimension() const noexcept { return values.size(); }

  static Observable from_basis(std::vector<double> values, ComplexMatrix basis, double tol = 1e-10) {
    if (!basis.is_square() || basis.rows() != values.size()) {
      throw Error(Errc::dimension_mismatch, "observable values and basis disagree in size");
    }
    if (!basis.all_finite()) throw Error(Errc::invalid_argument, "observable basis not finite");
    if (unitarity_deviation(basis) > tol) {
      throw Error(Errc::not_unitary, "observable basis is not unitary");
    }
    return Observable{std::move(values), std::move(basis)};
  }

  /// Observable diagonal in the energy basis (commutes with H).
  static Observable energy_basis(std::size_t n) {
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = static_cast<double>(k);
    return Observable{std::move(values), ComplexMatrix::identity(n)};
  }

  /// Observable given as a Hermitian matrix in the energy basis.
  static Observable from_hermitian(const ComplexMatrix& op, double tol = 1e-12) {
    HermitianSpec spec = jacobi_eigh(op, tol);
    return Observable{std::move(spec.eigenvalues), std::move(spec.eigenvectors)};
  }
};

/// Diagonal initial state rho_0 = sum_k c_k |E_k><E_k|.
struct InitialState {
  struct Explicit {};
  struct Gibbs {
    double beta;
    double partition_function;
  };
  struct ThreeLevelAlphaBeta {
    double alpha;
    double beta;
  };
  using Mode = std::variant<Explicit, Gibbs, ThreeLevelAlphaBeta>;

  std::vector<double> weights;
  Mode mode = Explicit{};

  std::size_t dimension() const noexcept { return weights.size(); }

  static void check_weights(const std::vector<double>& w) {
    if (w.empty()) throw Error(Errc::invalid_argument, "initial weights must be non-empty");
    double total = 0.0;
    for (double c : w) {
      if (!std::isfinite(c) || c < 0.0) {
        throw Error(Errc::invalid_argument, "initial weights must be finite and >= 0");
      }
      total += c;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(Errc::invalid_argument, "initial weights must sum to 1 (got " +
                                              std::to_string(total) + ")");
    }
  }

  static InitialState explicit_weights(std::vector<double> w) {
    check_weights(w);
    return InitialState{std::move(w), Explicit{}};
  }

  /// c_k = e^{-beta E_k} / Z.
  static InitialState gibbs(std::span<const double> energies, double beta) {
    if (!std::isfinite(beta)) throw Error(Errc::invalid_argument, "beta must be finite");
    if (energies.empty()) throw Error(Errc::invalid_argument, "energies must be non-empty");
    double shift = -beta * energies[0];
    for (double e : energies) shift = std::max(shift, -beta * e);
    std::vector<double> w(energies.size());
    double scaled_z = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
      w[k] = std::exp(-beta * energies[k] - shift);
      scaled_z += w[k];
    }
    for (double& c : w) c /= scaled_z;
    const double log_z = shift + std::log(scaled_z);
    if (log_z > 700.0) throw Error(Errc::range_exceeded, "partition function overflows");
    return InitialState{std::move(w), Gibbs{beta, std::exp(log_z)}};
  }
};

/// Finite-support law of one waiting time: atoms (tau_k, p_k).
struct WaitingTimeDistribution {
  struct Atom {
    double tau;
    double prob;
  };
  std::vector<Atom> atoms;

  static WaitingTimeDistribution deterministic(double tau) { return from_atoms({{tau, 1.0}}); }

  static WaitingTimeDistribution from_atoms(std::vector<Atom> atoms) {
    WaitingTimeDistribution w{std::move(atoms)};
    w.validate();
    return w;
  }

  /// Reduces a density on [lo, hi] to `nodes` Gauss-Legendre atoms weighted by
  /// w_i * density(tau_i), renormalized to one.
  static WaitingTimeDistribution from_density(const std::function<double(double)>& density,
                                              double lo, double hi, int nodes = 64);

  void validate() const {
    if (atoms.empty()) throw Error(Errc::invalid_argument, "waiting-time law has no atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!std::isfinite(a.tau) || a.tau < 0.0) {
        throw Error(Errc::invalid_argument, "waiting times must be finite and >= 0");
      }
      if (!(a.prob > 0.0) || !std::isfinite(a.prob)) {
        throw Error(Errc::invalid_argument, "waiting-time probabilities must be > 0");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (atoms[j].tau == a.tau) throw Error(Errc::invalid_argument, "waiting times must be distinct");
      }
      total += a.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(Errc::invalid_argument, "waiting-time probabilities must sum to 1");
    }
  }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.prob * a.tau;
    return m;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw Error(Errc::invalid_argument, "quadrature needs at least one node");
  std::vector<double> x(n), w(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

inline WaitingTimeDistribution WaitingTimeDistribution::from_density(
    const std::function<double(double)>& density, double lo, double hi, int nodes) {
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw Error(Errc::invalid_argument, "quadrature interval must satisfy 0 <= lo < hi");
  }
  auto [x, w] = gauss_legendre(nodes);
  std::vector<Atom> atoms;
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double tau = 0.5 * (hi - lo) * x[i] + 0.5 * (hi + lo);
    const double mass = w[i] * density(tau);
    if (!std::isfinite(mass) || mass < 0.0) {
      throw Error(Errc::invalid_argument, "density must be finite and >= 0 on the interval");
    }
    if (mass > 0.0) {
      atoms.push_back({tau, mass});
      total += mass;
    }
  }
  if (!(total > 0.0)) throw Error(Errc::invalid_argument, "density integrates to zero");
  for (auto& a : atoms) a.prob /= total;
  // Renormalize against rounding so the sum passes the 1e-12 invariant.
  double sum = 0.0;
  for (const auto& a : atoms) sum += a.prob;
  for (auto& a : atoms) a.prob /= sum;
  return from_atoms(std::move(atoms));
}

/// Full protocol: TPM energy measurement, `measurements` intermediate
/// projective measurements separated by i.i.d. waits, final energy measurement.
struct ProtocolSpec {
  HermitianSpec system;
  Observable observable;
  InitialState initial;
  WaitingTimeDistribution waits;
  int measurements = 1;

  std::size_t dimension() const noexcept { return system.dimension(); }

  void validate() const {
    const std::size_t n = system.dimension();
    if (n == 0) throw Error(Errc::invalid_argument, "system has no levels");
    if (observable.dimension() != n || observable.basis.rows() != n) {
      throw Error(Errc::dimension_mismatch, "observable dimension differs from system");
    }
    if (initial.dimension() != n) {
      throw Error(Errc::dimension_mismatch, "initial state dimension differs from system");
    }
    if (measurements < 1) throw Error(Errc::invalid_argument, "M must be >= 1");
    if (unitarity_deviation(observable.basis) > 1e-10) {
      throw Error(Errc::not_unitary, "observable basis is not unitary");
    }
    InitialState::check_weights(initial.weights);
    waits.validate();
  }
};

namespace detail {

inline void require_same_dimension(const HermitianSpec& h, const Observable& obs) {
  if (h.dimension() != obs.dimension() || obs.basis.rows() != h.dimension()) {
    throw Error(Errc::dimension_mismatch, "system and observable dimensions differ");
  }
}

}  // namespace detail

/// L(tau)_{ij} = |<alpha_i| U(tau) |alpha_j>|^2 (unistochastic, doubly stochastic).
inline StochasticMatrix transition_matrix_L(const HermitianSpec& h, const Observable& obs, double tau) {
  detail::require_same_dimension(h, obs);
  const std::size_t n = h.dimension();
  const auto u = propagator(h, tau);
  const auto& w = obs.basis;
  StochasticMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex amp{};
      for (std::size_t k = 0; k < n; ++k) amp += std::conj(w(k, i)) * u.phases[k] * w(k, j);
      l(i, j) = std::norm(amp);
    }
  }
  return l;
}

/// A(tau)_{kn} = |<alpha_k| U(tau) |E_n>|^2: energy eigenstate to first outcome.
inline StochasticMatrix boundary_matrix_A(const HermitianSpec& h, const Observable& obs, double tau) {
  detail::require_same_dimension(h, obs);
  const std::size_t n = h.dimension();
  const auto u = propagator(h, tau);
  StochasticMatrix a(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t e = 0; e < n; ++e) a(k, e) = std::norm(std::conj(obs.basis(e, k)) * u.phases[e]);
  return a;
}

/// B_{mk} = |<E_m|alpha_k>|^2: last outcome to final energy.
inline StochasticMatrix boundary_matrix_B(const HermitianSpec& h, const Observable& obs) {
  detail::require_same_dimension(h, obs);
  const std::size_t n = h.dimension();
  StochasticMatrix b(n, n);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = 0; k < n; ++k) b(m, k) = std::norm(obs.basis(m, k));
  return b;
}

/// sum_k p_k build(tau_k)
template <class Build>
StochasticMatrix averaged_matrix(Build&& build, const WaitingTimeDistribution& waits) {
  waits.validate();
  StochasticMatrix acc;
  for (const auto& atom : waits.atoms) {
    StochasticMatrix term = build(atom.tau);
    if (acc.empty()) {
      acc = scaled(term, atom.prob);
    } else {
      if (term.rows() != acc.rows() || term.cols() != acc.cols()) {
        throw Error(Errc::dimension_mismatch, "averaged_matrix: inconsistent sizes");
      }
      auto av = acc.values();
      auto tv = term.values();
      for (std::size_t i = 0; i < av.size(); ++i) av[i] += atom.prob * tv[i];
    }
  }
  return acc;
}

inline double column_sum_error(const StochasticMatrix& m) {
  double worst = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

inline double row_sum_error(const StochasticMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

/// Entries in [0, 1] (to within tol) and every column summing to 1.
inline bool is_column_stochastic(const StochasticMatrix& m, double tol = 1e-12) {
  for (double x : m.values())
    if (x < -tol || x > 1.0 + tol) return false;
  return column_sum_error(m) <= tol;
}

}  // namespace heatstat
