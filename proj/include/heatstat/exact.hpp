#pragma once

// Exact heat statistics for i.i.d. finite-support waiting times.
//
// The outcome chain factorizes: p_{m|n} = [B * Lbar^{M-1} * Abar]_{mn}, with
// Abar, Lbar the waiting-time averages of the boundary and transition matrices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/parallel.hpp"
#include "heatstat/protocol.hpp"
#include "heatstat/qcore.hpp"

namespace heatstat {

/// p_{m|n}: probability of final energy index m given initial index n.
struct ConditionalTable {
  RealMatrix probs;

  std::size_t dimension() const noexcept { return probs.rows(); }
  double operator()(std::size_t m, std::size_t n) const { return probs(m, n); }
};

/// Discrete law of Q = E_m - E_n. Support is strictly increasing.
struct HeatDistribution {
  std::vector<double> support;
  std::vector<double> probs;
  double merge_tolerance = 0.0;

  double total_mass() const {
    KahanSum s;
    for (double p : probs) s.add(p);
    return s.value();
  }

  double moment(int order) const {
    KahanSum s;
    for (std::size_t i = 0; i < support.size(); ++i) s.add(std::pow(support[i], order) * probs[i]);
    return s.value();
  }

  /// Probability at the atom within merge tolerance of q, 0 if absent.
  double mass_at(double q) const {
    for (std::size_t i = 0; i < support.size(); ++i)
      if (std::abs(support[i] - q) <= std::max(merge_tolerance, 1e-15)) return probs[i];
    return 0.0;
  }
};

struct CharFnValue {
  Complex u;
  Complex value;
};

/// Gaps closer than this are the same heat value.
inline double heat_merge_tolerance(std::span<const double> energies) {
  const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
  const double spread = *hi - *lo;
  return 1e-9 * (spread > 0.0 ? spread : 1.0);
}

/// Waiting-time averages of the first-step and transition matrices.
inline StochasticMatrix averaged_boundary_A(const ProtocolSpec& spec) {
  return averaged_matrix(
      [&](double tau) { return boundary_matrix_A(spec.system, spec.observable, tau); }, spec.waits);
}

inline StochasticMatrix averaged_transition(const ProtocolSpec& spec) {
  return averaged_matrix(
      [&](double tau) { return transition_matrix_L(spec.system, spec.observable, tau); },
      spec.waits);
}

inline ConditionalTable conditional_table(const ProtocolSpec& spec) {
  spec.validate();
  const StochasticMatrix a = averaged_boundary_A(spec);
  const StochasticMatrix l = averaged_transition(spec);
  const StochasticMatrix b = boundary_matrix_B(spec.system, spec.observable);
  return ConditionalTable{matmul(b, matmul(matrix_power(l, spec.measurements - 1), a))};
}

/// Final energy outcome probabilities p~_m = sum_n p_{m|n} c_n.
inline std::vector<double> final_energy_probabilities(const ProtocolSpec& spec,
                                                      const ConditionalTable& table) {
  const std::size_t n = spec.dimension();
  std::vector<double> out(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    KahanSum s;
    for (std::size_t k = 0; k < n; ++k) s.add(table(m, k) * spec.initial.weights[k]);
    out[m] = s.value();
  }
  return out;
}

inline HeatDistribution heat_distribution(const ProtocolSpec& spec, const ConditionalTable& table) {
  const auto& energies = spec.system.eigenvalues;
  const std::size_t n = energies.size();
  struct Atom {
    double q;
    double mass;
  };
  std::vector<Atom> atoms;
  atoms.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < n; ++m) {
      const double mass = table(m, i) * spec.initial.weights[i];
      if (mass > 0.0) atoms.push_back({energies[m] - energies[i], mass});
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.q < y.q; });

  HeatDistribution dist;
  dist.merge_tolerance = heat_merge_tolerance(energies);
  double cluster_start = 0.0;
  KahanSum cluster_mass;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i == 0 || atoms[i].q - cluster_start > dist.merge_tolerance) {
      if (i > 0) dist.probs.push_back(cluster_mass.value());
      cluster_start = atoms[i].q;
      cluster_mass = KahanSum{};
      dist.support.push_back(atoms[i].q);
    }
    cluster_mass.add(atoms[i].mass);
  }
  if (!atoms.empty()) dist.probs.push_back(cluster_mass.value());
  // A cluster containing an exact zero gap reports Q = 0 exactly.
  for (double& q : dist.support)
    if (std::abs(q) <= dist.merge_tolerance) q = 0.0;
  return dist;
}

inline HeatDistribution heat_distribution(const ProtocolSpec& spec) {
  return heat_distribution(spec, conditional_table(spec));
}

/// G(u) = sum_{n,m} c_n e^{iu(E_m - E_n)} p_{m|n}, for complex u.
inline CharFnValue char_fn(const ProtocolSpec& spec, const ConditionalTable& table, Complex u) {
  if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) {
    throw Error(Errc::invalid_argument, "char_fn argument must be finite");
  }
  const auto& energies = spec.system.eigenvalues;
  const std::size_t n = energies.size();
  const Complex iu = Complex(0.0, 1.0) * u;
  Complex total{};
  for (std::size_t k = 0; k < n; ++k) {
    Complex row{};
    for (std::size_t m = 0; m < n; ++m) {
      const double p = table(m, k);
      if (p == 0.0) continue;
      const double gap = energies[m] - energies[k];
      const double exponent = -u.imag() * gap;
      if (exponent > 700.0) {
        throw Error(Errc::range_exceeded, "char_fn exponent exceeds 700");
      }
      row += p * std::exp(iu * gap);
    }
    total += spec.initial.weights[k] * row;
  }
  return {u, total};
}

inline CharFnValue char_fn(const ProtocolSpec& spec, Complex u) {
  return char_fn(spec, conditional_table(spec), u);
}

/// Same values as mapping char_fn over `us`; points may run concurrently.
inline std::vector<CharFnValue> char_fn_batch(const ProtocolSpec& spec, std::span<const Complex> us,
                                              unsigned threads = 1) {
  const ConditionalTable table = conditional_table(spec);
  std::vector<CharFnValue> out(us.size());
  parallel_for(us.size(), threads, [&](std::size_t i) { out[i] = char_fn(spec, table, us[i]); });
  return out;
}

/// <Q^order> from the heat distribution, order <= 4.
inline double moments(const ProtocolSpec& spec, int order) {
  if (order < 0) throw Error(Errc::invalid_argument, "moment order must be >= 0");
  if (order > 4) throw Error(Errc::order_too_high, "moment order must be <= 4");
  if (order == 0) return 1.0;
  return heat_distribution(spec).moment(order);
}

/// ||sum_{k,tau} p(tau) V V^dagger - I||_max by enumerating every outcome
/// sequence and every waiting-atom sequence, where
/// V = P_{k_M} U(tau_M) ... P_{k_1} U(tau_1) is formed as a full matrix.
inline double unitality_check(const ProtocolSpec& spec, double max_enumeration = 1e5) {
  spec.validate();
  const std::size_t n = spec.dimension();
  const int depth = spec.measurements;
  const std::size_t atoms = spec.waits.atoms.size();
  if (std::pow(static_cast<double>(n * atoms), depth) > max_enumeration) {
    throw Error(Errc::too_large, "unitality enumeration exceeds bound");
  }
  const auto& w = spec.observable.basis;

  // bra[a][k][e] = <alpha_k| U(tau_a) |E_e>
  std::vector<std::vector<std::vector<Complex>>> bra(atoms);
  for (std::size_t a = 0; a < atoms; ++a) {
    const auto u = propagator(spec.system, spec.waits.atoms[a].tau);
    bra[a].assign(n, std::vector<Complex>(n));
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t e = 0; e < n; ++e) bra[a][k][e] = std::conj(w(e, k)) * u.phases[e];
  }

  ComplexMatrix acc(n, n);
  std::vector<ComplexMatrix> stack(depth + 1);
  stack[0] = ComplexMatrix::identity(n);
  std::vector<Complex> row(n);

  auto recurse = [&](auto&& self, int level, double weight) -> void {
    const ComplexMatrix& v = stack[level];
    if (level == depth) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          Complex s{};
          for (std::size_t l = 0; l < n; ++l) s += v(i, l) * std::conj(v(j, l));
          acc(i, j) += weight * s;
        }
      return;
    }
    for (std::size_t a = 0; a < atoms; ++a) {
      for (std::size_t k = 0; k < n; ++k) {
        // next = |alpha_k><alpha_k| U(tau_a) v
        for (std::size_t j = 0; j < n; ++j) {
          Complex s{};
          for (std::size_t e = 0; e < n; ++e) s += bra[a][k][e] * v(e, j);
          row[j] = s;
        }
        ComplexMatrix next(n, n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) next(i, j) = w(i, k) * row[j];
        stack[level + 1] = std::move(next);
        self(self, level + 1, weight * spec.waits.atoms[a].prob);
      }
    }
  };
  recurse(recurse, 0, 1.0);
  return max_abs_diff(acc, ComplexMatrix::identity(n));
}

}  // namespace heatstat
