#pragma once

// Effective inverse temperature of a three-level system after infinite-
// temperature thermalization. The diagonal initial state is parametrized by a
// thermal coordinate beta and a non-thermal coordinate alpha:
//   c_k ~ exp(-beta E_k + (alpha / v) (gap between the two other levels)^2)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/parallel.hpp"
#include "heatstat/protocol.hpp"

namespace heatstat::qutrit {

using Energies = std::array<double, 3>;

namespace detail {

inline double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline void check_energies(const Energies& e) {
  for (double x : e)
    if (!std::isfinite(x)) throw Error(Errc::invalid_argument, "energies must be finite");
  if (!(e[0] < e[1] && e[1] < e[2])) {
    throw Error(Errc::invalid_argument, "qutrit energies must satisfy E1 < E2 < E3");
  }
}

}  // namespace detail

/// (Delta_1, Delta_2, Delta_3) = (E2 - E1, E3 - E2, E1 - E3); they sum to zero.
inline Energies gaps(const Energies& e) {
  const double d1 = e[1] - e[0];
  const double d2 = e[2] - e[1];
  return {d1, d2, -(d1 + d2)};
}

/// v = sqrt(3 (Delta_1^2 + Delta_2^2 + Delta_3^2))
inline double normalization(const Energies& e) {
  const auto d = gaps(e);
  return std::sqrt(3.0 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
}

struct QutritEnsemble {
  Energies energies;
  double alpha = 0.0;
  double beta = 0.0;

  static QutritEnsemble make(const Energies& e, double alpha, double beta) {
    detail::check_energies(e);
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
      throw Error(Errc::invalid_argument, "alpha and beta must be finite");
    }
    return QutritEnsemble{e, alpha, beta};
  }

  Energies deltas() const { return gaps(energies); }
  double v() const { return normalization(energies); }

  /// b = beta (1,1,1) + (alpha/v)(Delta_3 - Delta_2, Delta_1 - Delta_3, Delta_2 - Delta_1)
  Energies b_vector() const {
    const auto d = deltas();
    const double s = alpha / v();
    return {beta + s * (d[2] - d[1]), beta + s * (d[0] - d[2]), beta + s * (d[1] - d[0])};
  }

  /// Unnormalized log weights at (alpha, b), b playing the role of beta.
  Energies log_weights(double b) const {
    const double s = alpha / v();
    const auto& e = energies;
    return {-b * e[0] + s * (e[1] - e[2]) * (e[1] - e[2]),
            -b * e[1] + s * (e[2] - e[0]) * (e[2] - e[0]),
            -b * e[2] + s * (e[0] - e[1]) * (e[0] - e[1])};
  }

  /// log Z~(alpha, b)
  double log_pseudo_partition(double b) const {
    const auto lw = log_weights(b);
    return detail::log_sum_exp(lw);
  }

  double pseudo_partition(double b) const {
    const double lz = log_pseudo_partition(b);
    if (lz > 700.0) throw Error(Errc::range_exceeded, "pseudo-partition function overflows");
    return std::exp(lz);
  }

  Energies weights() const {
    const auto lw = log_weights(beta);
    const double lz = detail::log_sum_exp(lw);
    Energies c{};
    for (std::size_t k = 0; k < 3; ++k) c[k] = std::exp(lw[k] - lz);
    return c;
  }
};

inline InitialState initial_state(const QutritEnsemble& ens) {
  const auto c = ens.weights();
  std::vector<double> w(c.begin(), c.end());
  const double total = w[0] + w[1] + w[2];
  for (double& x : w) x /= total;
  InitialState::check_weights(w);
  return InitialState{std::move(w), InitialState::ThreeLevelAlphaBeta{ens.alpha, ens.beta}};
}

/// log G(i eps) = log[Z(eps)/Z(0)] + log[Z~(alpha, beta - eps)/Z~(alpha, beta)]
inline double log_asymptotic_G(const QutritEnsemble& ens, double eps) {
  const auto& e = ens.energies;
  const std::array<double, 3> z_terms{-eps * e[0], -eps * e[1], -eps * e[2]};
  return detail::log_sum_exp(z_terms) - std::log(3.0) + ens.log_pseudo_partition(ens.beta - eps) -
         ens.log_pseudo_partition(ens.beta);
}

/// G(i eps) = <e^{-eps Q}> once the final energy is uniform over the levels.
inline double asymptotic_G(const QutritEnsemble& ens, double eps) {
  if (!std::isfinite(eps)) throw Error(Errc::invalid_argument, "eps must be finite");
  const double lg = log_asymptotic_G(ens, eps);
  if (lg > 700.0) throw Error(Errc::range_exceeded, "asymptotic G exceeds exp(700)");
  return std::exp(lg);
}

/// (1/3) sum_m e^{-eps E_m} sum_n c_n e^{eps E_n}
inline double asymptotic_G_direct(const QutritEnsemble& ens, double eps) {
  const auto c = ens.weights();
  const auto& e = ens.energies;
  double left = 0.0, right = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (std::abs(eps * e[k]) > 700.0) throw Error(Errc::range_exceeded, "exponent exceeds 700");
    left += std::exp(-eps * e[k]);
    right += c[k] * std::exp(eps * e[k]);
  }
  return left * right / 3.0;
}

struct BetaEffSearch {
  /// Defaults are derived from the spectrum when left unset.
  std::optional<double> eps_max;
  std::optional<double> exclusion;
  int scan_points = 10000;
};

struct BetaEffSolution {
  double value = 0.0;
  bool multiple_roots = false;
};

namespace detail {

inline BetaEffSolution solve_positive_beta(const QutritEnsemble& ens, const BetaEffSearch& search) {
  const double width = ens.energies[2] - ens.energies[0];
  const double eps_max = search.eps_max.value_or(50.0 / width);
  const double delta = search.exclusion.value_or(1e-6 * width);
  if (!(eps_max > delta) || search.scan_points < 2) {
    throw Error(Errc::invalid_argument, "bracket search needs eps_max > exclusion and >= 2 points");
  }
  auto h = [&](double eps) { return log_asymptotic_G(ens, eps); };  // same sign as G - 1

  std::vector<double> grid;
  grid.reserve(search.scan_points + 3);
  for (int i = 0; i <= search.scan_points; ++i) {
    const double eps = -eps_max + 2.0 * eps_max * i / search.scan_points;
    if (std::abs(eps) >= delta) grid.push_back(eps);
  }
  grid.push_back(-delta);
  grid.push_back(delta);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = h(grid[i]);

  std::vector<std::pair<double, double>> brackets;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (grid[i] < 0.0 && grid[i + 1] > 0.0) continue;  // straddles the trivial root
    if (vals[i] == 0.0) {
      brackets.emplace_back(grid[i], grid[i]);
    } else if ((vals[i] < 0.0) != (vals[i + 1] < 0.0) && vals[i + 1] != 0.0) {
      brackets.emplace_back(grid[i], grid[i + 1]);
    }
  }
  if (brackets.empty()) {
    const auto min_it = std::min_element(vals.begin(), vals.end());
    const double at = grid[static_cast<std::size_t>(min_it - vals.begin())];
    if (std::abs(at) <= delta * (1.0 + 1e-12)) {
      throw Error(Errc::degenerate_root,
                  "nontrivial root merges with eps = 0 within " + std::to_string(delta));
    }
    throw Error(Errc::no_root_in_bracket, "no sign change of G(i eps) - 1 on [" +
                                              std::to_string(-eps_max) + ", " +
                                              std::to_string(eps_max) + "]");
  }

  auto bisect = [&](double lo, double hi) {
    if (lo == hi) return lo;
    double flo = h(lo);
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = h(mid);
      if (std::abs(std::expm1(fm)) <= 1e-12 && hi - lo < 1e-12 * std::max(1.0, std::abs(mid))) {
        return mid;
      }
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  BetaEffSolution sol;
  sol.multiple_roots = brackets.size() > 1;
  double best = 0.0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& [lo, hi] : brackets) {
    const double root = bisect(lo, hi);
    if (std::abs(root - ens.beta) < best_distance) {
      best_distance = std::abs(root - ens.beta);
      best = root;
    }
  }
  sol.value = best;
  return sol;
}

}  // namespace detail

/// Non-zero root of G(i beta_eff) = 1. For alpha = 0 the state is thermal and
/// beta is returned. Negative beta is solved on the mirrored spectrum.
inline BetaEffSolution solve_beta_eff(const QutritEnsemble& ens, const BetaEffSearch& search = {}) {
  detail::check_energies(ens.energies);
  if (ens.alpha == 0.0) return {ens.beta, false};
  if (ens.beta < 0.0) {
    const auto& e = ens.energies;
    const QutritEnsemble mirrored = QutritEnsemble::make({-e[2], -e[1], -e[0]}, ens.alpha, -ens.beta);
    BetaEffSolution s = detail::solve_positive_beta(mirrored, search);
    s.value = -s.value;
    return s;
  }
  return detail::solve_positive_beta(ens, search);
}

/// Nontrivial root of e^{b (E2 - E1)} + e^{-b (E3 - E2)} = 2, the large-alpha
/// plateau. Lies strictly inside (-ln2 / (E3 - E2), ln2 / (E2 - E1)).
inline double asymptotic_beta_bar(const Energies& e) {
  detail::check_energies(e);
  const double d1 = e[1] - e[0];
  const double d2 = e[2] - e[1];
  auto k = [&](double b) { return std::exp(b * d1) + std::exp(-b * d2) - 2.0; };
  if (d1 == d2) return 0.0;
  // k is convex with k(0) = 0 and k'(0) = d1 - d2; the other root sits on the
  // side where k dips below zero, bounded by the ln2 limits.
  const double outer = d1 > d2 ? -std::numbers::ln2 / d2 : std::numbers::ln2 / d1;
  double inner = outer;
  for (int i = 0; i < 1100 && !(k(inner) < 0.0); ++i) inner *= 0.5;
  if (!(k(inner) < 0.0)) return 0.0;
  double lo = std::min(outer, inner), hi = std::max(outer, inner);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const bool mid_negative = k(mid) < 0.0;
    const bool lo_negative = k(lo) < 0.0;
    if (mid_negative == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Slope r of beta_eff ~ r alpha as alpha -> -infinity.
inline double beta_eff_slope(const Energies& e) {
  detail::check_energies(e);
  return (e[0] + e[2] - 2.0 * e[1]) / normalization(e);
}

struct Fig1Row {
  double beta = 0.0;
  double alpha = 0.0;
  std::optional<double> beta_eff;
  std::string error;
};

/// beta_eff over the (beta, alpha) grid, rows ordered by beta then alpha.
/// Per-point failures are recorded in `error` with an empty beta_eff.
inline std::vector<Fig1Row> sweep_fig1(const Energies& e, std::span<const double> betas,
                                       std::span<const double> alphas, unsigned threads = 1) {
  detail::check_energies(e);
  std::vector<Fig1Row> rows(betas.size() * alphas.size());
  parallel_for(rows.size(), threads, [&](std::size_t idx) {
    Fig1Row& row = rows[idx];
    row.beta = betas[idx / alphas.size()];
    row.alpha = alphas[idx % alphas.size()];
    try {
      row.beta_eff = solve_beta_eff(QutritEnsemble::make(e, row.alpha, row.beta)).value;
    } catch (const Error& err) {
      row.error = std::string(to_string(err.code()));
    }
  });
  return rows;
}

}  // namespace heatstat::qutrit
