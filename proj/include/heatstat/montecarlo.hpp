#pragma once

// Trajectory sampling of the full measurement protocol. Only the classical
// outcome chain is simulated: after every projective measurement the state is
// a known projector, so each step needs one column of a stochastic matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "heatstat/error.hpp"
#include "heatstat/exact.hpp"
#include "heatstat/parallel.hpp"
#include "heatstat/protocol.hpp"

namespace heatstat {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random stream for one trajectory, derived from (master seed, index) only.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t master_seed, std::uint64_t index)
      : engine_(splitmix64(master_seed ^ splitmix64(index + 0x632be59bd9b4e019ULL))) {}

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Draws an index from a (possibly unnormalized by rounding) probability list.
template <class Probs>
std::size_t sample_index(const Probs& probs, double u) {
  double total = 0.0;
  for (double p : probs) total += p;
  double target = u * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    if (target < probs[i]) return i;
    target -= probs[i];
  }
  return last_positive;
}

struct Trajectory {
  std::size_t initial = 0;
  std::vector<std::size_t> outcomes;
  std::vector<double> waits;
  std::size_t final = 0;
  double heat = 0.0;
};

/// Samples the whole waiting sequence tau_1..tau_M at once (correlated laws).
using WaitSequenceSampler = std::function<std::vector<double>(TrajectoryRng&, int)>;

class TrajectorySampler {
 public:
  explicit TrajectorySampler(ProtocolSpec spec, WaitSequenceSampler sequence_sampler = {})
      : spec_(std::move(spec)), sequence_sampler_(std::move(sequence_sampler)) {
    spec_.validate();
    b_ = boundary_matrix_B(spec_.system, spec_.observable);
    if (!sequence_sampler_) {
      for (const auto& atom : spec_.waits.atoms) {
        a_.push_back(boundary_matrix_A(spec_.system, spec_.observable, atom.tau));
        l_.push_back(transition_matrix_L(spec_.system, spec_.observable, atom.tau));
      }
      for (const auto& atom : spec_.waits.atoms) atom_probs_.push_back(atom.prob);
    }
  }

  const ProtocolSpec& spec() const noexcept { return spec_; }

  Trajectory sample(TrajectoryRng& rng) const {
    const std::size_t n = spec_.dimension();
    const int steps = spec_.measurements;
    Trajectory t;
    t.outcomes.reserve(steps);
    t.waits.reserve(steps);
    t.initial = sample_index(spec_.initial.weights, rng.uniform());

    std::vector<double> column(n);
    if (sequence_sampler_) {
      t.waits = sequence_sampler_(rng, steps);
      if (t.waits.size() != static_cast<std::size_t>(steps)) {
        throw Error(Errc::invalid_argument, "wait sequence sampler returned wrong length");
      }
      std::size_t prev = t.initial;
      for (int j = 0; j < steps; ++j) {
        if (!(t.waits[j] >= 0.0) || !std::isfinite(t.waits[j])) {
          throw Error(Errc::invalid_argument, "sampled waiting time must be finite and >= 0");
        }
        if (j == 0) {
          first_step_column(t.waits[j], prev, column);
        } else {
          transition_column(t.waits[j], prev, column);
        }
        prev = sample_index(column, rng.uniform());
        t.outcomes.push_back(prev);
      }
    } else {
      std::size_t prev = t.initial;
      for (int j = 0; j < steps; ++j) {
        const std::size_t atom = sample_index(atom_probs_, rng.uniform());
        t.waits.push_back(spec_.waits.atoms[atom].tau);
        const RealMatrix& m = j == 0 ? a_[atom] : l_[atom];
        for (std::size_t i = 0; i < n; ++i) column[i] = m(i, prev);
        prev = sample_index(column, rng.uniform());
        t.outcomes.push_back(prev);
      }
    }
    for (std::size_t i = 0; i < n; ++i) column[i] = b_(i, t.outcomes.back());
    t.final = sample_index(column, rng.uniform());
    t.heat = spec_.system.eigenvalues[t.final] - spec_.system.eigenvalues[t.initial];
    return t;
  }

  Trajectory sample(std::uint64_t seed, std::uint64_t index) const {
    TrajectoryRng rng(seed, index);
    return sample(rng);
  }

 private:
  void first_step_column(double tau, std::size_t energy_index, std::vector<double>& out) const {
    const auto& w = spec_.observable.basis;
    const Complex phase = std::polar(1.0, -spec_.system.eigenvalues[energy_index] * tau);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(std::conj(w(energy_index, k)) * phase);
  }

  void transition_column(double tau, std::size_t from, std::vector<double>& out) const {
    const auto& w = spec_.observable.basis;
    const std::size_t n = out.size();
    const auto u = propagator(spec_.system, tau);
    for (std::size_t i = 0; i < n; ++i) {
      Complex amp{};
      for (std::size_t e = 0; e < n; ++e) amp += std::conj(w(e, i)) * u.phases[e] * w(e, from);
      out[i] = std::norm(amp);
    }
  }

  ProtocolSpec spec_;
  WaitSequenceSampler sequence_sampler_;
  std::vector<RealMatrix> a_;
  std::vector<RealMatrix> l_;
  std::vector<double> atom_probs_;
  RealMatrix b_;
};

inline Trajectory sample_trajectory(const ProtocolSpec& spec, TrajectoryRng& rng) {
  return TrajectorySampler(spec).sample(rng);
}

/// Compact per-trajectory record used for aggregation.
struct TrajectoryEndpoints {
  std::size_t initial = 0;
  std::size_t final = 0;
  double heat = 0.0;
};

/// Endpoints of trajectories 0..count-1, independent of `threads`.
inline std::vector<TrajectoryEndpoints> sample_endpoints(const TrajectorySampler& sampler,
                                                         std::size_t count, std::uint64_t seed,
                                                         unsigned threads = 1) {
  std::vector<TrajectoryEndpoints> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const Trajectory t = sampler.sample(seed, i);
    out[i] = {t.initial, t.final, t.heat};
  });
  return out;
}

struct JarzynskiExp {
  double beta;
};
struct MomentQ {
  int order;
};
using EstimatorTarget = std::variant<JarzynskiExp, MomentQ>;

inline std::string target_name(const EstimatorTarget& target) {
  if (const auto* j = std::get_if<JarzynskiExp>(&target)) {
    return "JarzynskiExp(" + std::to_string(j->beta) + ")";
  }
  return "MomentQ(" + std::to_string(std::get<MomentQ>(target).order) + ")";
}

/// Sample mean with standard error = sample std / sqrt(count).
struct EstimatorReport {
  std::size_t count = 0;
  double mean = 0.0;
  double standard_error = 0.0;
  EstimatorTarget target = JarzynskiExp{0.0};
  bool pass = false;
};

inline EstimatorReport summarize(std::span<const double> values, EstimatorTarget target) {
  EstimatorReport r;
  r.count = values.size();
  r.target = target;
  if (values.empty()) return r;
  KahanSum s;
  for (double v : values) s.add(v);
  r.mean = s.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    KahanSum ss;
    for (double v : values) ss.add((v - r.mean) * (v - r.mean));
    const double var = ss.value() / static_cast<double>(values.size() - 1);
    r.standard_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return r;
}

/// Mean of e^{-beta Q}; passes when |mean - 1| <= 3 standard errors.
inline EstimatorReport estimate_jarzynski(const ProtocolSpec& spec, std::size_t count,
                                          std::uint64_t seed, unsigned threads = 1) {
  const auto* gibbs = std::get_if<InitialState::Gibbs>(&spec.initial.mode);
  if (gibbs == nullptr) {
    throw Error(Errc::invalid_argument, "Jarzynski estimator needs a Gibbs initial state");
  }
  const double beta = gibbs->beta;
  TrajectorySampler sampler(spec);
  const auto ends = sample_endpoints(sampler, count, seed, threads);
  std::vector<double> values(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) values[i] = std::exp(-beta * ends[i].heat);
  EstimatorReport r = summarize(values, JarzynskiExp{beta});
  r.pass = std::abs(r.mean - 1.0) <= 3.0 * r.standard_error;
  return r;
}

inline EstimatorReport estimate_moment(const ProtocolSpec& spec, int order, std::size_t count,
                                       std::uint64_t seed, unsigned threads = 1) {
  TrajectorySampler sampler(spec);
  const auto ends = sample_endpoints(sampler, count, seed, threads);
  std::vector<double> values(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) values[i] = std::pow(ends[i].heat, order);
  EstimatorReport r = summarize(values, MomentQ{order});
  const double exact = moments(spec, order);
  r.pass = std::abs(r.mean - exact) <= 3.0 * r.standard_error;
  return r;
}

/// Bin width 0 snaps every sample to the exact heat support.
struct HeatBinning {
  double width = 0.0;
};

inline HeatDistribution empirical_heat_histogram(const ProtocolSpec& spec,
                                                 std::span<const TrajectoryEndpoints> ends,
                                                 HeatBinning binning = {}) {
  HeatDistribution out;
  out.merge_tolerance = heat_merge_tolerance(spec.system.eigenvalues);
  std::map<double, std::size_t> counts;
  if (binning.width > 0.0) {
    for (const auto& e : ends) counts[std::round(e.heat / binning.width) * binning.width] += 1;
  } else {
    const HeatDistribution exact = heat_distribution(spec);
    for (const auto& e : ends) {
      double key = e.heat;
      double best = out.merge_tolerance;
      for (double q : exact.support) {
        if (std::abs(q - e.heat) <= best) {
          best = std::abs(q - e.heat);
          key = q;
        }
      }
      counts[key] += 1;
    }
  }
  const double total = static_cast<double>(ends.size());
  for (const auto& [q, c] : counts) {
    out.support.push_back(q);
    out.probs.push_back(static_cast<double>(c) / total);
  }
  return out;
}

inline HeatDistribution empirical_heat_histogram(const ProtocolSpec& spec, std::size_t count,
                                                 std::uint64_t seed, unsigned threads = 1,
                                                 HeatBinning binning = {}) {
  TrajectorySampler sampler(spec);
  const auto ends = sample_endpoints(sampler, count, seed, threads);
  return empirical_heat_histogram(spec, ends, binning);
}

/// Empirical p(m|n): column n holds the final-index frequencies among
/// trajectories that started in n. `starts[n]` is that trajectory count.
struct EmpiricalConditional {
  RealMatrix frequencies;
  std::vector<std::size_t> starts;
};

inline EmpiricalConditional empirical_conditional(std::size_t dimension,
                                                  std::span<const TrajectoryEndpoints> ends) {
  EmpiricalConditional out{RealMatrix(dimension, dimension), std::vector<std::size_t>(dimension, 0)};
  RealMatrix counts(dimension, dimension);
  for (const auto& e : ends) {
    counts(e.final, e.initial) += 1.0;
    out.starts[e.initial] += 1;
  }
  for (std::size_t n = 0; n < dimension; ++n) {
    if (out.starts[n] == 0) continue;
    for (std::size_t m = 0; m < dimension; ++m) {
      out.frequencies(m, n) = counts(m, n) / static_cast<double>(out.starts[n]);
    }
  }
  return out;
}

/// Largest |freq - p| / sigma over cells with at least one start, where
/// sigma = sqrt(p (1 - p) / starts). Cells with p in {0, 1} must match exactly
/// and report infinity otherwise.
inline double max_conditional_zscore(const ConditionalTable& exact, const EmpiricalConditional& emp) {
  double worst = 0.0;
  const std::size_t n = exact.dimension();
  for (std::size_t k = 0; k < n; ++k) {
    if (emp.starts[k] == 0) continue;
    for (std::size_t m = 0; m < n; ++m) {
      const double p = exact(m, k);
      const double f = emp.frequencies(m, k);
      const double var = p * (1.0 - p) / static_cast<double>(emp.starts[k]);
      if (var <= 1e-300) {
        if (std::abs(f - p) > 1e-12) return std::numeric_limits<double>::infinity();
        continue;
      }
      worst = std::max(worst, std::abs(f - p) / std::sqrt(var));
    }
  }
  return worst;
}

/// Total-variation distance between two heat distributions on merged supports.
inline double total_variation(const HeatDistribution& a, const HeatDistribution& b) {
  const double tol = std::max({a.merge_tolerance, b.merge_tolerance, 1e-12});
  std::vector<std::pair<double, double>> diff;
  auto accumulate = [&](const HeatDistribution& d, double sign) {
    for (std::size_t i = 0; i < d.support.size(); ++i) {
      bool found = false;
      for (auto& [q, v] : diff) {
        if (std::abs(q - d.support[i]) <= tol) {
          v += sign * d.probs[i];
          found = true;
          break;
        }
      }
      if (!found) diff.emplace_back(d.support[i], sign * d.probs[i]);
    }
  };
  accumulate(a, 1.0);
  accumulate(b, -1.0);
  double tv = 0.0;
  for (const auto& [q, v] : diff) tv += std::abs(v);
  return 0.5 * tv;
}

}  // namespace heatstat
