#pragma once

// Large-M behaviour of the outcome chain: invariant blocks shared by H and the
// observable, the block-uniform limit of Lbar^{M-1}, convergence rates and the
// Zeno regime where the chain freezes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/exact.hpp"
#include "heatstat/protocol.hpp"
#include "heatstat/qcore.hpp"

namespace heatstat {

/// Partition of outcome indices into subspaces S_r left invariant by H.
struct BlockStructure {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> block_of;

  std::size_t count() const noexcept { return blocks.size(); }

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    for (const auto& b : blocks) d.push_back(b.size());
    return d;
  }
};

/// Connected components of the graph with an edge (i, j) whenever
/// |<alpha_i|H|alpha_j>| > tol * ||H||_max.
inline BlockStructure detect_blocks(const HermitianSpec& h, const Observable& obs, double tol = 1e-10) {
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "block tolerance must be > 0");
  const ComplexMatrix h_alpha = hamiltonian_in_basis(h, obs.basis);
  const std::size_t n = h.dimension();
  const double threshold = tol * max_abs(h_alpha);

  // Union-find over outcome indices.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(h_alpha(i, j)) > threshold) parent[find(i)] = find(j);

  BlockStructure out;
  out.block_of.assign(n, 0);
  std::vector<long> root_to_block(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_to_block[r] < 0) {
      root_to_block[r] = static_cast<long>(out.blocks.size());
      out.blocks.emplace_back();
    }
    out.block_of[i] = static_cast<std::size_t>(root_to_block[r]);
    out.blocks[out.block_of[i]].push_back(i);
  }
  return out;
}

inline BlockStructure detect_blocks(const ProtocolSpec& spec, double tol = 1e-10) {
  return detect_blocks(spec.system, spec.observable, tol);
}

/// pi_{k_M|k_1} in the M -> infinity limit: 1/dim S_r inside a block, 0 across.
inline RealMatrix limiting_conditional(const BlockStructure& blocks) {
  const std::size_t n = blocks.block_of.size();
  RealMatrix p(n, n);
  for (const auto& block : blocks.blocks) {
    const double w = 1.0 / static_cast<double>(block.size());
    for (std::size_t i : block)
      for (std::size_t j : block) p(i, j) = w;
  }
  return p;
}

inline RealMatrix limiting_conditional(const ProtocolSpec& spec) {
  return limiting_conditional(detect_blocks(spec));
}

struct ConvergencePoint {
  long long measurements;
  double distance;
};

/// ||Lbar^{M-1} - P||_max for each M in the (increasing) list.
inline std::vector<ConvergencePoint> convergence_profile(const ProtocolSpec& spec,
                                                         std::span<const long long> m_list) {
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    if (m_list[i] < 1) throw Error(Errc::invalid_argument, "M values must be >= 1");
    if (i > 0 && m_list[i] <= m_list[i - 1]) {
      throw Error(Errc::invalid_argument, "M list must be strictly increasing");
    }
  }
  spec.validate();
  const RealMatrix lbar = averaged_transition(spec);
  const RealMatrix limit = limiting_conditional(spec);
  std::vector<ConvergencePoint> out;
  out.reserve(m_list.size());
  for (long long m : m_list) out.push_back({m, max_abs_diff(matrix_power(lbar, m - 1), limit)});
  return out;
}

/// Modulus of the dominant mode of (Lbar - P), from power iteration with a
/// geometric mean of the norm ratios over the second half of the run.
inline double subdominant_rate(const RealMatrix& lbar, const RealMatrix& projector, int iterations = 400) {
  const std::size_t n = lbar.rows();
  const RealMatrix d = lbar - projector;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(1.0 + 1.7 * static_cast<double>(i)) + 0.1;
  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  double nx = norm2(x);
  if (nx == 0.0) return 0.0;
  for (double& e : x) e /= nx;
  double log_sum = 0.0;
  int counted = 0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> y = matvec(d, std::span<const double>(x));
    const double ny = norm2(y);
    if (ny < 1e-300) return 0.0;
    if (it >= iterations / 2) {
      log_sum += std::log(ny);
      ++counted;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  return std::exp(log_sum / counted);
}

/// Number of eigenvalues equal to one, read off as the trace of the limit of
/// repeated squaring. Empty when the powers do not settle (modulus-one
/// eigenvalues other than 1, e.g. resonant waiting times).
inline std::optional<int> unit_eigenvalue_multiplicity(const RealMatrix& lbar, int max_squarings = 60) {
  RealMatrix p = lbar;
  for (int i = 0; i < max_squarings; ++i) {
    RealMatrix next = matmul(p, p);
    const double change = max_abs_diff(next, p);
    p = std::move(next);
    if (change < 1e-13) {
      const double t = trace(p);
      return static_cast<int>(std::lround(t));
    }
  }
  return std::nullopt;
}

enum class Regime { InfiniteTemperature, Partial, ZenoFrozen };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::InfiniteTemperature: return "InfiniteTemperature";
    case Regime::Partial: return "Partial";
    case Regime::ZenoFrozen: return "ZenoFrozen";
  }
  return "Unknown";
}

struct ThermalizationReport {
  Regime regime = Regime::ZenoFrozen;
  BlockStructure blocks;
  RealMatrix limiting;
  /// ||Lbar^{M-1} - limiting||_max at the protocol's M.
  double conditional_distance = 0.0;
  /// max_k |pi~_k - 1/N|, outcome distribution after the M-th measurement.
  double distance_to_mixed = 0.0;
  double rate = 0.0;
  std::optional<int> unit_multiplicity;
};

inline ThermalizationReport thermalization_report(const ProtocolSpec& spec, double tol = 1e-6) {
  spec.validate();
  ThermalizationReport r;
  r.blocks = detect_blocks(spec);
  r.limiting = limiting_conditional(r.blocks);
  const RealMatrix lbar = averaged_transition(spec);
  const RealMatrix power = matrix_power(lbar, spec.measurements - 1);
  r.conditional_distance = max_abs_diff(power, r.limiting);

  const RealMatrix abar = averaged_boundary_A(spec);
  const auto first = matvec(abar, std::span<const double>(spec.initial.weights));
  const auto last = matvec(power, std::span<const double>(first));
  const double uniform = 1.0 / static_cast<double>(spec.dimension());
  for (double p : last) r.distance_to_mixed = std::max(r.distance_to_mixed, std::abs(p - uniform));

  r.rate = subdominant_rate(lbar, r.limiting);
  r.unit_multiplicity = unit_eigenvalue_multiplicity(lbar);

  const bool converged = r.conditional_distance <= tol;
  if (r.blocks.count() == spec.dimension() || !converged) {
    r.regime = Regime::ZenoFrozen;
  } else if (r.blocks.count() == 1) {
    r.regime = Regime::InfiniteTemperature;
  } else {
    r.regime = Regime::Partial;
  }
  return r;
}

/// Large-M characteristic function, one term per invariant block:
/// G(u) = sum_r (1/dim S_r) Tr[rho_0 Pi_r e^{-iHu}] Tr[Pi_r e^{iHu}],
/// with Pi_r the projector onto S_r.
inline CharFnValue asymptotic_char_fn(const ProtocolSpec& spec, Complex u) {
  spec.validate();
  const BlockStructure blocks = detect_blocks(spec);
  const auto& e = spec.system.eigenvalues;
  const auto& w = spec.observable.basis;
  const std::size_t n = e.size();
  const Complex i_unit(0.0, 1.0);
  for (double energy : e) {
    if (std::abs(u.imag() * energy) > 700.0) {
      throw Error(Errc::range_exceeded, "asymptotic_char_fn exponent exceeds 700");
    }
  }
  Complex total{};
  for (const auto& block : blocks.blocks) {
    Complex initial_trace{};
    Complex final_trace{};
    for (std::size_t k = 0; k < n; ++k) {
      double projector_diag = 0.0;
      for (std::size_t idx : block) projector_diag += std::norm(w(k, idx));
      initial_trace += spec.initial.weights[k] * projector_diag * std::exp(-i_unit * u * e[k]);
      final_trace += projector_diag * std::exp(i_unit * u * e[k]);
    }
    total += initial_trace * final_trace / static_cast<double>(block.size());
  }
  return {u, total};
}

/// 1 - mean_k [L(T/M)^{M-1}]_{kk} for regular measurements over total time T.
inline double escape_probability(const ProtocolSpec& spec, double total_time, long long measurements) {
  if (measurements < 1) throw Error(Errc::invalid_argument, "M must be >= 1");
  const double tau = total_time / static_cast<double>(measurements);
  const RealMatrix l = transition_matrix_L(spec.system, spec.observable, tau);
  const RealMatrix power = matrix_power(l, measurements - 1);
  const std::size_t n = spec.dimension();
  KahanSum stay;
  for (std::size_t k = 0; k < n; ++k) stay.add(power(k, k));
  return 1.0 - stay.value() / static_cast<double>(n);
}

struct ZenoFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<std::pair<long long, double>> escapes;
};

/// Least-squares slope of log(escape) against log(M) with tau = T / M.
inline ZenoFit zeno_scaling(const ProtocolSpec& spec, double total_time, std::span<const long long> m_list) {
  if (!(total_time > 0.0)) throw Error(Errc::invalid_argument, "total time must be > 0");
  if (m_list.size() < 2) throw Error(Errc::invalid_argument, "need at least two M values");
  const auto [lo, hi] = std::minmax_element(m_list.begin(), m_list.end());
  if (*lo < 1 || std::log10(static_cast<double>(*hi) / static_cast<double>(*lo)) < 1.5) {
    throw Error(Errc::invalid_argument, "M list must span at least 1.5 decades");
  }
  ZenoFit fit;
  std::vector<double> xs, ys;
  for (long long m : m_list) {
    const double esc = escape_probability(spec, total_time, m);
    fit.escapes.emplace_back(m, esc);
    if (esc >= 1e-14) {
      xs.push_back(std::log(static_cast<double>(m)));
      ys.push_back(std::log(esc));
    }
  }
  if (xs.size() < 2) throw Error(Errc::degenerate_fit, "escape probability underflows for all M");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace heatstat
