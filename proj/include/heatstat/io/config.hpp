#pragma once

// Strict JSON experiment configuration. Every object rejects unknown keys and
// every failure names the offending field path. See docs/config.md.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heatstat/error.hpp"
#include "heatstat/protocol.hpp"
#include "heatstat/qcore.hpp"
#include "heatstat/qutrit.hpp"

namespace heatstat::io {

using Json = nlohmann::json;

struct ComplexGrid {
  Complex start{-5.0, 0.0};
  Complex stop{5.0, 0.0};
  int count = 101;

  std::vector<Complex> points() const {
    std::vector<Complex> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out[static_cast<std::size_t>(i)] = start + t * (stop - start);
    }
    return out;
  }
};

struct RealGrid {
  double start = -30.0;
  double stop = 10.0;
  int count = 401;

  std::vector<double> points() const {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out[static_cast<std::size_t>(i)] = start + t * (stop - start);
    }
    return out;
  }
};

struct ExactTask {
  ComplexGrid u_grid;
  int max_order = 4;
  bool svg = true;
};

struct SampleTask {
  std::size_t count = 100000;
  std::size_t log_trajectories = 100;
  double bin_width = 0.0;
};

struct ThermalizeTask {
  std::vector<long long> m_list{1, 2, 5, 10, 20, 50, 100, 200, 500};
  double tolerance = 1e-6;
};

struct ZenoTask {
  double total_time = 1.0;
  std::vector<long long> m_list{10, 20, 50, 100, 200, 500, 1000};
};

struct Fig1Task {
  qutrit::Energies energies{-2.0, 0.0, 1.0};
  std::vector<double> betas{0.0, 1.0, 2.0, 3.0};
  RealGrid alpha_grid;
  bool svg = true;
};

struct ExperimentConfig {
  /// Present when the document contains a "system" block.
  std::optional<ProtocolSpec> protocol;
  std::optional<std::uint64_t> seed;
  ExactTask exact;
  SampleTask sample;
  ThermalizeTask thermalize;
  ZenoTask zeno;
  Fig1Task fig1;
  /// Canonical dump of the parsed document, hashed into output manifests.
  std::string canonical;

  const ProtocolSpec& require_protocol() const {
    if (!protocol) throw ConfigError("system", "this command needs system/observable/initial/waits/M");
    return *protocol;
  }
};

namespace detail {

/// Walks one JSON object, remembering which keys were read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& get(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(child(key), "is required");
    seen_.insert(key);
    return j_.at(key);
  }

  const Json* find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  /// Exactly one of `keys` must be present; returns it.
  std::string one_of(std::initializer_list<const char*> keys) {
    std::string found;
    std::string names;
    for (const char* k : keys) {
      names += names.empty() ? k : std::string(" | ") + k;
      if (j_.contains(k)) {
        if (!found.empty()) throw ConfigError(path_, "give only one of " + names);
        found = k;
      }
    }
    if (found.empty()) throw ConfigError(path_.empty() ? "<root>" : path_, "needs one of " + names);
    return found;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(child(it.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

inline double positive(const Json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
  return v;
}

inline long long integer(const Json& j, const std::string& path, long long lo) {
  if (!j.is_number_integer()) throw ConfigError(path, "must be an integer");
  const long long v = j.get<long long>();
  if (v < lo) throw ConfigError(path, "must be >= " + std::to_string(lo));
  return v;
}

inline bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "must be true or false");
  return j.get<bool>();
}

/// A number, or [re, im].
inline Complex complex_number(const Json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  throw ConfigError(path, "must be a number or [re, im]");
}

inline std::vector<double> number_list(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<long long> increasing_integers(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "must be a non-empty array of integers");
  std::vector<long long> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(integer(j[i], path + "[" + std::to_string(i) + "]", 1));
    if (i > 0 && out[i] <= out[i - 1]) throw ConfigError(path, "must be strictly increasing");
  }
  return out;
}

/// Square matrix given as a list of rows; entries are numbers or [re, im].
inline ComplexMatrix complex_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "must be a non-empty list of rows");
  const std::size_t n = j.size();
  ComplexMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != n) throw ConfigError(rp, "row must have " + std::to_string(n) + " entries");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = complex_number(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline ComplexGrid complex_grid(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  ComplexGrid g;
  g.start = complex_number(r.get("start"), r.child("start"));
  g.stop = complex_number(r.get("stop"), r.child("stop"));
  g.count = static_cast<int>(integer(r.get("count"), r.child("count"), 1));
  if (g.count > 1000000) throw ConfigError(r.child("count"), "must be <= 1000000");
  r.finish();
  return g;
}

inline RealGrid real_grid(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  RealGrid g;
  g.start = number(r.get("start"), r.child("start"));
  g.stop = number(r.get("stop"), r.child("stop"));
  g.count = static_cast<int>(integer(r.get("count"), r.child("count"), 1));
  if (g.count > 1000000) throw ConfigError(r.child("count"), "must be <= 1000000");
  r.finish();
  return g;
}

/// System block; returns the spectrum and the matrix V whose columns are the
/// energy eigenvectors in the input basis (identity for an energies list).
inline HermitianSpec system_block(const Json& j) {
  ObjectReader r(j, "system");
  const std::string kind = r.one_of({"energies", "hamiltonian"});
  HermitianSpec h;
  if (kind == "energies") {
    auto e = number_list(r.get("energies"), "system.energies");
    for (std::size_t i = 1; i < e.size(); ++i)
      if (!(e[i] >= e[i - 1])) throw ConfigError("system.energies", "must be in ascending order");
    h = HermitianSpec::from_energies(std::move(e));
  } else {
    const ComplexMatrix m = complex_matrix(r.get("hamiltonian"), "system.hamiltonian");
    if (hermitian_deviation(m) > 1e-12) throw ConfigError("system.hamiltonian", "must be Hermitian");
    try {
      h = jacobi_eigh(m);
    } catch (const Error& e) {
      throw ConfigError("system.hamiltonian", e.what());
    }
  }
  r.finish();
  return h;
}

inline Observable observable_block(const Json& j, const HermitianSpec& h) {
  ObjectReader r(j, "observable");
  const std::size_t n = h.dimension();
  const ComplexMatrix v_dag = adjoint(h.eigenvectors);
  const std::string kind = r.one_of({"preset", "basis", "matrix"});
  Observable obs;
  if (kind == "preset") {
    const Json& p = r.get("preset");
    if (!p.is_string()) throw ConfigError("observable.preset", "must be a string");
    const std::string name = p.get<std::string>();
    if (name == "identity") {
      obs = Observable::energy_basis(n);
    } else if (name == "qubit") {
      if (n != 2) throw ConfigError("observable.preset", "qubit preset needs a two-level system");
      const Complex a = complex_number(r.get("a"), "observable.a");
      const Complex b = complex_number(r.get("b"), "observable.b");
      if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-10) {
        throw ConfigError("observable.a", "|a|^2 + |b|^2 must equal 1");
      }
      ComplexMatrix w(2, 2);
      w(0, 0) = -b;
      w(1, 0) = a;
      w(0, 1) = a;
      w(1, 1) = b;
      // Columns are orthogonal only when a* b is real.
      if (unitarity_deviation(w) > 1e-10) throw ConfigError("observable.b", "a* b must be real");
      obs = Observable{{1.0, -1.0}, w};
    } else {
      throw ConfigError("observable.preset", "unknown preset '" + name + "' (identity | qubit)");
    }
  } else if (kind == "basis") {
    const ComplexMatrix w = complex_matrix(r.get("basis"), "observable.basis");
    if (w.rows() != n) throw ConfigError("observable.basis", "dimension differs from system");
    const double dev = unitarity_deviation(w);
    if (dev > 1e-10) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3g", dev);
      throw ConfigError("observable.basis", std::string("must be unitary (||W^dagger W - I||_max = ") + buf + ")");
    }
    std::vector<double> values(n);
    if (const Json* vals = r.find("values")) {
      values = number_list(*vals, "observable.values");
      if (values.size() != n) throw ConfigError("observable.values", "must have one value per level");
    } else {
      for (std::size_t k = 0; k < n; ++k) values[k] = static_cast<double>(k);
    }
    obs = Observable{std::move(values), matmul(v_dag, w)};
  } else {
    const ComplexMatrix m = complex_matrix(r.get("matrix"), "observable.matrix");
    if (m.rows() != n) throw ConfigError("observable.matrix", "dimension differs from system");
    if (hermitian_deviation(m) > 1e-12) throw ConfigError("observable.matrix", "must be Hermitian");
    try {
      obs = Observable::from_hermitian(matmul(v_dag, matmul(m, h.eigenvectors)));
    } catch (const Error& e) {
      throw ConfigError("observable.matrix", e.what());
    }
  }
  r.finish();
  return obs;
}

inline InitialState initial_block(const Json& j, const HermitianSpec& h) {
  ObjectReader r(j, "initial");
  const std::string kind = r.one_of({"weights", "gibbs", "qutrit"});
  InitialState s;
  if (kind == "weights") {
    auto w = number_list(r.get("weights"), "initial.weights");
    if (w.size() != h.dimension()) throw ConfigError("initial.weights", "must have one weight per level");
    try {
      s = InitialState::explicit_weights(std::move(w));
    } catch (const Error& e) {
      throw ConfigError("initial.weights", e.what());
    }
  } else if (kind == "gibbs") {
    ObjectReader g(r.get("gibbs"), "initial.gibbs");
    const double beta = number(g.get("beta"), "initial.gibbs.beta");
    g.finish();
    s = InitialState::gibbs(h.eigenvalues, beta);
  } else {
    ObjectReader q(r.get("qutrit"), "initial.qutrit");
    const double alpha = number(q.get("alpha"), "initial.qutrit.alpha");
    const double beta = number(q.get("beta"), "initial.qutrit.beta");
    q.finish();
    if (h.dimension() != 3) throw ConfigError("initial.qutrit", "needs a three-level system");
    const auto& e = h.eigenvalues;
    if (!(e[0] < e[1] && e[1] < e[2])) throw ConfigError("initial.qutrit", "needs non-degenerate energies");
    s = qutrit::initial_state(qutrit::QutritEnsemble::make({e[0], e[1], e[2]}, alpha, beta));
  }
  r.finish();
  return s;
}

inline WaitingTimeDistribution waits_block(const Json& j) {
  ObjectReader r(j, "waits");
  const std::string kind = r.one_of({"deterministic", "atoms", "quadrature"});
  WaitingTimeDistribution w;
  if (kind == "deterministic") {
    const double tau = number(r.get("deterministic"), "waits.deterministic");
    if (tau < 0.0) throw ConfigError("waits.deterministic", "must be >= 0");
    w = WaitingTimeDistribution::deterministic(tau);
  } else if (kind == "atoms") {
    const Json& list = r.get("atoms");
    if (!list.is_array() || list.empty()) throw ConfigError("waits.atoms", "must be a non-empty array");
    std::vector<WaitingTimeDistribution::Atom> atoms;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "waits.atoms[" + std::to_string(i) + "]";
      ObjectReader a(list[i], p);
      const double tau = number(a.get("tau"), p + ".tau");
      const double prob = number(a.get("p"), p + ".p");
      a.finish();
      if (tau < 0.0) throw ConfigError(p + ".tau", "must be >= 0");
      if (prob < 0.0) throw ConfigError(p + ".p", "must be >= 0");
      atoms.push_back({tau, prob});
    }
    try {
      w = WaitingTimeDistribution::from_atoms(std::move(atoms));
    } catch (const Error& e) {
      throw ConfigError("waits.atoms", e.what());
    }
  } else {
    ObjectReader q(r.get("quadrature"), "waits.quadrature");
    const Json& d = q.get("density");
    if (!d.is_string()) throw ConfigError("waits.quadrature.density", "must be a string");
    const std::string density = d.get<std::string>();
    const auto interval = number_list(q.get("interval"), "waits.quadrature.interval");
    if (interval.size() != 2 || !(interval[0] >= 0.0) || !(interval[1] > interval[0])) {
      throw ConfigError("waits.quadrature.interval", "must be [lo, hi] with 0 <= lo < hi");
    }
    int nodes = 64;
    if (const Json* nj = q.find("nodes")) {
      nodes = static_cast<int>(integer(*nj, "waits.quadrature.nodes", 1));
      if (nodes > 512) throw ConfigError("waits.quadrature.nodes", "must be <= 512");
    }
    std::function<double(double)> fn;
    if (density == "uniform") {
      fn = [](double) { return 1.0; };
    } else if (density == "exponential") {
      const double rate = positive(q.get("rate"), "waits.quadrature.rate");
      fn = [rate](double t) { return rate * std::exp(-rate * t); };
    } else {
      throw ConfigError("waits.quadrature.density", "unknown density '" + density + "' (uniform | exponential)");
    }
    q.finish();
    try {
      w = WaitingTimeDistribution::from_density(fn, interval[0], interval[1], nodes);
    } catch (const Error& e) {
      throw ConfigError("waits.quadrature", e.what());
    }
  }
  r.finish();
  return w;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& doc) {
  using namespace detail;
  ExperimentConfig cfg;
  ObjectReader root(doc, "");
  cfg.canonical = doc.dump();

  const bool any_protocol = root.has("system") || root.has("observable") || root.has("initial") ||
                            root.has("waits") || root.has("M");
  if (any_protocol) {
    const HermitianSpec h = system_block(root.get("system"));
    Observable obs = observable_block(root.get("observable"), h);
    InitialState init = initial_block(root.get("initial"), h);
    WaitingTimeDistribution waits = waits_block(root.get("waits"));
    const long long m = integer(root.get("M"), "M", 1);
    if (m > 1000000000LL) throw ConfigError("M", "must be <= 1e9");
    // The protocol runs in the energy eigenbasis; the spectrum is kept, the
    // eigenvectors were folded into the observable.
    cfg.protocol = ProtocolSpec{HermitianSpec::from_energies(h.eigenvalues), std::move(obs), std::move(init),
                                std::move(waits), static_cast<int>(m)};
  }

  if (const Json* s = root.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
      throw ConfigError("seed", "must be a non-negative integer");
    }
    cfg.seed = s->get<std::uint64_t>();
  }

  if (const Json* e = root.find("exact")) {
    ObjectReader r(*e, "exact");
    if (const Json* g = r.find("u_grid")) cfg.exact.u_grid = complex_grid(*g, "exact.u_grid");
    if (const Json* o = r.find("max_order")) {
      cfg.exact.max_order = static_cast<int>(integer(*o, "exact.max_order", 0));
      if (cfg.exact.max_order > 4) throw ConfigError("exact.max_order", "must be <= 4");
    }
    if (const Json* s = r.find("svg")) cfg.exact.svg = boolean(*s, "exact.svg");
    r.finish();
  }

  if (const Json* s = root.find("sample")) {
    ObjectReader r(*s, "sample");
    if (const Json* c = r.find("count")) cfg.sample.count = static_cast<std::size_t>(integer(*c, "sample.count", 1));
    if (const Json* l = r.find("log_trajectories")) {
      cfg.sample.log_trajectories = static_cast<std::size_t>(integer(*l, "sample.log_trajectories", 0));
    }
    if (const Json* b = r.find("bin_width")) {
      cfg.sample.bin_width = number(*b, "sample.bin_width");
      if (cfg.sample.bin_width < 0.0) throw ConfigError("sample.bin_width", "must be >= 0");
    }
    r.finish();
  }

  if (const Json* t = root.find("thermalize")) {
    ObjectReader r(*t, "thermalize");
    if (const Json* l = r.find("M_list")) cfg.thermalize.m_list = increasing_integers(*l, "thermalize.M_list");
    if (const Json* tol = r.find("tolerance")) cfg.thermalize.tolerance = positive(*tol, "thermalize.tolerance");
    r.finish();
  }

  if (const Json* z = root.find("zeno")) {
    ObjectReader r(*z, "zeno");
    if (const Json* t = r.find("total_time")) cfg.zeno.total_time = positive(*t, "zeno.total_time");
    if (const Json* l = r.find("M_list")) cfg.zeno.m_list = increasing_integers(*l, "zeno.M_list");
    r.finish();
  }

  if (const Json* f = root.find("fig1")) {
    ObjectReader r(*f, "fig1");
    if (const Json* e = r.find("energies")) {
      const auto list = number_list(*e, "fig1.energies");
      if (list.size() != 3) throw ConfigError("fig1.energies", "must have exactly three entries");
      if (!(list[0] < list[1] && list[1] < list[2])) {
        throw ConfigError("fig1.energies", "must be strictly ascending");
      }
      cfg.fig1.energies = {list[0], list[1], list[2]};
    }
    if (const Json* b = r.find("betas")) cfg.fig1.betas = number_list(*b, "fig1.betas");
    if (const Json* a = r.find("alpha_grid")) cfg.fig1.alpha_grid = real_grid(*a, "fig1.alpha_grid");
    if (const Json* s = r.find("svg")) cfg.fig1.svg = boolean(*s, "fig1.svg");
    r.finish();
  }

  root.finish();
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace heatstat::io
