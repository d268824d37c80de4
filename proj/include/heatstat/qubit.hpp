#pragma once

// Closed-form heat statistics of a two-level system with levels +-E, an
// observable with eigenbasis
//   |alpha_1> = a|E+> - b|E->,   |alpha_2> = b|E+> + a|E->,
// initial weights c1 (on E+) and c2 (on E-), and bimodal i.i.d. waiting times.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/exact.hpp"
#include "heatstat/protocol.hpp"

namespace heatstat::qubit {

struct QubitParams {
  double energy = 1.0;
  Complex a{1.0, 0.0};
  Complex b{0.0, 0.0};
  double c1 = 0.5;
  double c2 = 0.5;
  double p1 = 1.0;
  double p2 = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  long long measurements = 1;

  /// Enforces |a|^2 + |b|^2 = 1, a* b real, c1 + c2 = 1, p1 + p2 = 1.
  void validate() const {
    if (!(energy > 0.0) || !std::isfinite(energy)) {
      throw Error(Errc::invalid_argument, "qubit energy E must be finite and > 0");
    }
    if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-12) {
      throw Error(Errc::invalid_argument, "|a|^2 + |b|^2 must equal 1");
    }
    if (std::abs((std::conj(a) * b).imag()) > 1e-12) {
      throw Error(Errc::invalid_argument, "a* b must be real (a* b = a b*)");
    }
    if (c1 < 0.0 || c2 < 0.0 || std::abs(c1 + c2 - 1.0) > 1e-12) {
      throw Error(Errc::invalid_argument, "c1, c2 must be >= 0 and sum to 1");
    }
    if (p1 < 0.0 || p2 < 0.0 || std::abs(p1 + p2 - 1.0) > 1e-12) {
      throw Error(Errc::invalid_argument, "p1, p2 must be >= 0 and sum to 1");
    }
    if (tau1 < 0.0 || tau2 < 0.0 || !std::isfinite(tau1) || !std::isfinite(tau2)) {
      throw Error(Errc::invalid_argument, "waiting atoms must be finite and >= 0");
    }
    if (measurements < 1) throw Error(Errc::invalid_argument, "M must be >= 1");
  }
};

using Vec2 = std::array<Complex, 2>;

/// Off-diagonal entry of L(tau): |a* b e^{-iE tau} - a b* e^{iE tau}|^2.
inline double nu(const QubitParams& q, double tau) {
  const Complex phase = std::polar(1.0, -q.energy * tau);
  return std::norm(std::conj(q.a) * q.b * phase - q.a * std::conj(q.b) * std::conj(phase));
}

/// p1 nu(tau1) + p2 nu(tau2); Lbar = [[1-zeta, zeta], [zeta, 1-zeta]].
inline double zeta(const QubitParams& q) { return q.p1 * nu(q, q.tau1) + q.p2 * nu(q, q.tau2); }

namespace detail {

inline void check_exponent(const QubitParams& q, Complex u) {
  if (std::abs(u.imag()) * q.energy > 700.0) {
    throw Error(Errc::range_exceeded, "qubit characteristic function exponent exceeds 700");
  }
}

/// x^T S^n y for S = [[1-s, s], [s, 1-s]], whose eigenvalues are 1 and 1 - 2s.
inline Complex symmetric_form(const Vec2& x, double s, long long n, const Vec2& y) {
  const double lam = n == 0 ? 1.0 : std::pow(1.0 - 2.0 * s, static_cast<double>(n));
  const double diag = 0.5 * (1.0 + lam);
  const double off = 0.5 * (1.0 - lam);
  return x[0] * (diag * y[0] + off * y[1]) + x[1] * (off * y[0] + diag * y[1]);
}

/// Applies S^n to y.
inline Vec2 symmetric_apply(double s, long long n, const Vec2& y) {
  const double lam = n == 0 ? 1.0 : std::pow(1.0 - 2.0 * s, static_cast<double>(n));
  const double diag = 0.5 * (1.0 + lam);
  const double off = 0.5 * (1.0 - lam);
  return {diag * y[0] + off * y[1], off * y[0] + diag * y[1]};
}

}  // namespace detail

/// f_k(u) = <alpha_k| e^{iuH} |alpha_k>
inline Vec2 f_vector(const QubitParams& q, Complex u) {
  const Complex iu(0.0, 1.0);
  const Complex up = std::exp(iu * u * q.energy);
  const Complex down = std::exp(-iu * u * q.energy);
  const double aa = std::norm(q.a), bb = std::norm(q.b);
  return {aa * up + bb * down, aa * down + bb * up};
}

/// g_k(u) = <alpha_k| e^{-iuH} rho_0 |alpha_k>
inline Vec2 g_vector(const QubitParams& q, Complex u) {
  const Complex iu(0.0, 1.0);
  const Complex up = std::exp(iu * u * q.energy);
  const Complex down = std::exp(-iu * u * q.energy);
  const double aa = std::norm(q.a), bb = std::norm(q.b);
  return {aa * q.c1 * down + bb * q.c2 * up, aa * q.c2 * up + bb * q.c1 * down};
}

/// G(u) = f^T (p1 L1 + p2 L2)^{M-1} g. The two transition matrices share
/// eigenvectors, so this equals the binomial sum over j.
inline CharFnValue qubit_char_fn(const QubitParams& q, Complex u) {
  q.validate();
  detail::check_exponent(q, u);
  return {u, detail::symmetric_form(f_vector(q, u), zeta(q), q.measurements - 1, g_vector(q, u))};
}

/// Literal binomial sum over the number j of tau1 waits, with the weights
/// C(M-1, j) p1^j p2^{M-1-j} formed in log space.
inline CharFnValue qubit_char_fn_binomial(const QubitParams& q, Complex u) {
  q.validate();
  detail::check_exponent(q, u);
  const Vec2 f = f_vector(q, u);
  const Vec2 g = g_vector(q, u);
  const double nu1 = nu(q, q.tau1);
  const double nu2 = nu(q, q.tau2);
  const long long steps = q.measurements - 1;
  Complex total{};
  for (long long j = 0; j <= steps; ++j) {
    const long long rest = steps - j;
    if ((j > 0 && q.p1 == 0.0) || (rest > 0 && q.p2 == 0.0)) continue;
    double log_w = std::lgamma(static_cast<double>(steps) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
                   std::lgamma(static_cast<double>(rest) + 1.0);
    if (j > 0) log_w += static_cast<double>(j) * std::log(q.p1);
    if (rest > 0) log_w += static_cast<double>(rest) * std::log(q.p2);
    const Vec2 right = detail::symmetric_apply(nu2, rest, g);
    total += std::exp(log_w) * detail::symmetric_form(f, nu1, j, right);
  }
  return {u, total};
}

/// M -> infinity limit: (1 + e^{2iuE})/2 - c1 sinh(2iuE). Independent of a.
inline CharFnValue qubit_char_fn_limit(const QubitParams& q, Complex u) {
  q.validate();
  detail::check_exponent(q, u);
  if (zeta(q) <= 1e-15) {
    throw Error(Errc::degenerate_observable, "zeta = 0: the chain never mixes, no M -> infinity limit");
  }
  const Complex two_iue = Complex(0.0, 2.0) * u * q.energy;
  return {u, 0.5 * (1.0 + std::exp(two_iue)) - q.c1 * std::sinh(two_iue)};
}

/// d^n G / du^n = sum_l C(n, l) A^l(u)^T Lbar^{M-1} B^{n-l}(u), with
/// A^l_k = i^l <alpha_k|H^l e^{iuH}|alpha_k> and
/// B^l_k = (-i)^l <alpha_k|H^l e^{-iuH} rho_0|alpha_k>.
inline Complex qubit_char_fn_derivative(const QubitParams& q, Complex u, int order) {
  if (order < 0) throw Error(Errc::invalid_argument, "derivative order must be >= 0");
  if (order > 3) throw Error(Errc::order_too_high, "derivative order must be <= 3");
  q.validate();
  detail::check_exponent(q, u);
  const Complex iu(0.0, 1.0);
  const double e = q.energy;
  const Complex up = std::exp(iu * u * e);
  const Complex down = std::exp(-iu * u * e);
  const double aa = std::norm(q.a), bb = std::norm(q.b);

  auto a_vec = [&](int l) -> Vec2 {
    const Complex pre = std::pow(iu, l);
    const double ep = std::pow(e, l), em = std::pow(-e, l);
    return {pre * (aa * ep * up + bb * em * down), pre * (aa * em * down + bb * ep * up)};
  };
  auto b_vec = [&](int l) -> Vec2 {
    const Complex pre = std::pow(-iu, l);
    const double ep = std::pow(e, l), em = std::pow(-e, l);
    return {pre * (aa * q.c1 * ep * down + bb * q.c2 * em * up),
            pre * (aa * q.c2 * em * up + bb * q.c1 * ep * down)};
  };

  const double z = zeta(q);
  Complex total{};
  double binom = 1.0;
  for (int l = 0; l <= order; ++l) {
    total += binom * detail::symmetric_form(a_vec(l), z, q.measurements - 1, b_vec(order - l));
    binom = binom * (order - l) / (l + 1);
  }
  return total;
}

/// The same protocol for the general engine. Levels are ordered ascending
/// (E-, E+), so c = (c2, c1) and the basis columns are written in that order.
inline ProtocolSpec to_protocol(const QubitParams& q) {
  q.validate();
  ComplexMatrix w(2, 2);
  // |alpha_1> = a|E+> - b|E->
  w(0, 0) = -q.b;
  w(1, 0) = q.a;
  // |alpha_2> = b|E+> + a|E->
  w(0, 1) = q.a;
  w(1, 1) = q.b;

  std::vector<WaitingTimeDistribution::Atom> atoms;
  if (q.tau1 == q.tau2) {
    atoms.push_back({q.tau1, 1.0});
  } else {
    if (q.p1 > 0.0) atoms.push_back({q.tau1, q.p1});
    if (q.p2 > 0.0) atoms.push_back({q.tau2, q.p2});
  }
  ProtocolSpec spec{HermitianSpec::from_energies({-q.energy, q.energy}),
                    Observable::from_basis({1.0, -1.0}, w),
                    InitialState::explicit_weights({q.c2, q.c1}),
                    WaitingTimeDistribution::from_atoms(std::move(atoms)),
                    static_cast<int>(q.measurements)};
  return spec;
}

}  // namespace heatstat::qubit
