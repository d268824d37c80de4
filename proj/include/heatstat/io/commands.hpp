#pragma once

// Subcommands of the heatstat tool. Each one reads an ExperimentConfig and
// writes flat files into an output directory, plus manifest.json.
//
// Exit codes: 0 success, 1 failed invariant or I/O error, 2 invalid
// configuration, 3 numerical range failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heatstat/asymptotics.hpp"
#include "heatstat/error.hpp"
#include "heatstat/exact.hpp"
#include "heatstat/io/config.hpp"
#include "heatstat/io/svg.hpp"
#include "heatstat/io/table.hpp"
#include "heatstat/montecarlo.hpp"
#include "heatstat/parallel.hpp"
#include "heatstat/qutrit.hpp"

namespace heatstat::io {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigInvalid = 2, kNumericalRange = 3 };

inline int exit_code_for(Errc code) {
  if (is_numerical_range_error(code)) return kNumericalRange;
  return kConfigInvalid;
}

namespace detail {

class OutputDir {
 public:
  OutputDir(std::string dir, const ExperimentConfig& cfg, std::string command, std::optional<std::uint64_t> seed)
      : dir_(std::move(dir)), command_(std::move(command)), seed_(seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_ + ": " + ec.message());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.canonical)));
    hash_ = hash;
  }

  void table(const std::string& name, const ResultTable& t) { text(name, t.to_csv()); }

  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

  void text(const std::string& name, const std::string& content) {
    write_text((std::filesystem::path(dir_) / name).string(), content);
    files_.push_back(name);
  }

  void finish() {
    Json m;
    m["tool"] = "heatstat";
    m["tool_version"] = kToolVersion;
    m["command"] = command_;
    m["config_hash"] = "fnv1a64:" + hash_;
    m["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    m["files"] = files_;
    write_text((std::filesystem::path(dir_) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string dir_;
  std::string command_;
  std::optional<std::uint64_t> seed_;
  std::string hash_;
  std::vector<std::string> files_;
};

inline std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

inline Json matrix_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline int cmd_exact(const ExperimentConfig& cfg, const RunOptions& opt) {
  const ProtocolSpec& spec = cfg.require_protocol();
  const unsigned threads = resolve_thread_count(opt.threads);
  const ConditionalTable table = conditional_table(spec);
  const HeatDistribution dist = heat_distribution(spec, table);
  const std::vector<Complex> us = cfg.exact.u_grid.points();
  const auto values = char_fn_batch(spec, us, threads);

  detail::OutputDir out(opt.out_dir, cfg, "exact", std::nullopt);

  ResultTable heat{{"Q", "prob"}, {}};
  for (std::size_t i = 0; i < dist.support.size(); ++i) heat.add_row({dist.support[i], dist.probs[i]});
  out.table("heat_distribution.csv", heat);

  ResultTable g{{"re_u", "im_u", "re_G", "im_G"}, {}};
  for (const auto& v : values) g.add_row({v.u.real(), v.u.imag(), v.value.real(), v.value.imag()});
  out.table("charfn.csv", g);

  ResultTable mom{{"order", "moment"}, {}};
  for (int k = 0; k <= cfg.exact.max_order; ++k) {
    mom.add_row({static_cast<long long>(k), k == 0 ? 1.0 : dist.moment(k)});
  }
  out.table("moments.csv", mom);

  ResultTable cond{{"m", "n", "prob"}, {}};
  for (std::size_t n = 0; n < table.dimension(); ++n)
    for (std::size_t m = 0; m < table.dimension(); ++m) {
      cond.add_row({static_cast<long long>(m), static_cast<long long>(n), table(m, n)});
    }
  out.table("conditional_table.csv", cond);

  if (cfg.exact.svg) {
    const auto& grid = cfg.exact.u_grid;
    const bool along_real = grid.start.imag() == grid.stop.imag();
    const bool along_imag = !along_real && grid.start.real() == grid.stop.real();
    LinePlot plot;
    plot.title = "Characteristic function over the u-grid";
    plot.x_label = along_real ? "Re u" : along_imag ? "Im u" : "grid parameter t";
    plot.y_label = "|G(u)|, arg G(u)";
    Series mod{"|G|", {}}, arg{"arg G", {}};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = along_real   ? values[i].u.real()
                       : along_imag ? values[i].u.imag()
                                    : (values.size() > 1 ? static_cast<double>(i) / (values.size() - 1) : 0.0);
      mod.points.emplace_back(x, std::abs(values[i].value));
      arg.points.emplace_back(x, std::arg(values[i].value));
    }
    plot.series = {mod, arg};
    out.text("charfn.svg", render_svg(plot));
  }
  out.finish();
  return kOk;
}

inline int cmd_sample(const ExperimentConfig& cfg, const RunOptions& opt) {
  const ProtocolSpec& spec = cfg.require_protocol();
  const unsigned threads = resolve_thread_count(opt.threads);
  const std::uint64_t seed = opt.seed ? *opt.seed : cfg.seed.value_or(0);
  const std::size_t count = cfg.sample.count;

  const TrajectorySampler sampler(spec);
  const auto ends = sample_endpoints(sampler, count, seed, threads);
  const ConditionalTable table = conditional_table(spec);
  const HeatDistribution exact = heat_distribution(spec, table);
  const HeatDistribution empirical = empirical_heat_histogram(spec, ends, HeatBinning{cfg.sample.bin_width});
  const EmpiricalConditional cond = empirical_conditional(spec.dimension(), ends);

  detail::OutputDir out(opt.out_dir, cfg, "sample", seed);

  ResultTable traj{{"index", "initial", "final", "heat", "outcomes", "waits"}, {}};
  const std::size_t logged = std::min(cfg.sample.log_trajectories, count);
  for (std::size_t i = 0; i < logged; ++i) {
    const Trajectory t = sampler.sample(seed, i);
    traj.add_row({static_cast<long long>(i), static_cast<long long>(t.initial), static_cast<long long>(t.final),
                  t.heat, detail::join_indices(t.outcomes), detail::join_doubles(t.waits)});
  }
  out.table("trajectories.csv", traj);

  ResultTable hist{{"Q", "prob", "exact_prob"}, {}};
  for (std::size_t i = 0; i < empirical.support.size(); ++i) {
    hist.add_row({empirical.support[i], empirical.probs[i], exact.mass_at(empirical.support[i])});
  }
  out.table("empirical_histogram.csv", hist);

  ResultTable freq{{"m", "n", "frequency", "exact", "starts"}, {}};
  for (std::size_t n = 0; n < spec.dimension(); ++n)
    for (std::size_t m = 0; m < spec.dimension(); ++m) {
      freq.add_row({static_cast<long long>(m), static_cast<long long>(n), cond.frequencies(m, n), table(m, n),
                    static_cast<long long>(cond.starts[n])});
    }
  out.table("empirical_conditional.csv", freq);

  std::vector<double> heats(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) heats[i] = ends[i].heat;
  const EstimatorReport heat_report = summarize(heats, MomentQ{1});
  Json summary;
  summary["n"] = count;
  summary["seed"] = seed;
  summary["mean_heat"] = heat_report.mean;
  summary["stderr_heat"] = heat_report.standard_error;
  summary["exact_mean_heat"] = exact.moment(1);
  summary["total_variation"] = total_variation(empirical, exact);
  summary["max_conditional_zscore"] = max_conditional_zscore(table, cond);
  out.json("trajectory_summary.json", summary);

  Json jar;
  if (const auto* gibbs = std::get_if<InitialState::Gibbs>(&spec.initial.mode)) {
    std::vector<double> values(ends.size());
    for (std::size_t i = 0; i < ends.size(); ++i) values[i] = std::exp(-gibbs->beta * ends[i].heat);
    EstimatorReport r = summarize(values, JarzynskiExp{gibbs->beta});
    r.pass = std::abs(r.mean - 1.0) <= 3.0 * r.standard_error;
    jar["mean"] = r.mean;
    jar["stderr"] = r.standard_error;
    jar["n"] = r.count;
    jar["pass"] = r.pass;
    jar["beta"] = gibbs->beta;
  } else {
    jar["applicable"] = false;
    jar["n"] = count;
    jar["reason"] = "initial state is not a Gibbs state";
  }
  out.json("jarzynski.json", jar);
  out.finish();
  return kOk;
}

inline int cmd_thermalize(const ExperimentConfig& cfg, const RunOptions& opt) {
  const ProtocolSpec& spec = cfg.require_protocol();
  const ThermalizationReport rep = thermalization_report(spec, cfg.thermalize.tolerance);
  const auto profile = convergence_profile(spec, cfg.thermalize.m_list);

  detail::OutputDir out(opt.out_dir, cfg, "thermalize", std::nullopt);
  Json blocks;
  blocks["R"] = rep.blocks.count();
  blocks["blocks"] = rep.blocks.blocks;
  blocks["dims"] = rep.blocks.dims();
  blocks["regime"] = to_string(rep.regime);
  blocks["M"] = spec.measurements;
  blocks["conditional_distance"] = rep.conditional_distance;
  blocks["distance_to_mixed"] = rep.distance_to_mixed;
  blocks["subdominant_rate"] = rep.rate;
  blocks["unit_eigenvalue_multiplicity"] =
      rep.unit_multiplicity ? Json(*rep.unit_multiplicity) : Json(nullptr);
  blocks["limiting_conditional"] = detail::matrix_json(rep.limiting);
  out.json("blocks.json", blocks);

  ResultTable conv{{"M", "distance"}, {}};
  for (const auto& p : profile) conv.add_row({p.measurements, p.distance});
  out.table("convergence.csv", conv);
  out.text("regime.txt", to_string(rep.regime) + "\n");
  out.finish();
  return kOk;
}

inline int cmd_zeno(const ExperimentConfig& cfg, const RunOptions& opt) {
  const ProtocolSpec& spec = cfg.require_protocol();
  const ZenoFit fit = zeno_scaling(spec, cfg.zeno.total_time, cfg.zeno.m_list);

  detail::OutputDir out(opt.out_dir, cfg, "zeno", std::nullopt);
  ResultTable esc{{"M", "escape"}, {}};
  for (const auto& [m, e] : fit.escapes) esc.add_row({m, e});
  out.table("escape.csv", esc);
  Json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["total_time"] = cfg.zeno.total_time;
  j["M_list"] = cfg.zeno.m_list;
  out.json("zeno_fit.json", j);
  out.finish();
  return kOk;
}

inline int cmd_fig1(const ExperimentConfig& cfg, const RunOptions& opt) {
  const unsigned threads = resolve_thread_count(opt.threads);
  const auto& task = cfg.fig1;
  std::vector<double> alphas = task.alpha_grid.points();
  const double span = std::abs(task.alpha_grid.stop - task.alpha_grid.start);
  // Grid points that are zero up to rounding are the alpha = 0 anchor.
  for (double& a : alphas)
    if (std::abs(a) <= 1e-12 * span) a = 0.0;
  const auto rows = qutrit::sweep_fig1(task.energies, task.betas, alphas, threads);

  detail::OutputDir out(opt.out_dir, cfg, "fig1", std::nullopt);
  ResultTable t{{"beta", "alpha", "beta_eff"}, {}};
  Json failures = Json::array();
  for (const auto& r : rows) {
    t.add_row({r.beta, r.alpha, r.beta_eff ? Cell(*r.beta_eff) : Cell(std::monostate{})});
    if (!r.beta_eff) failures.push_back({{"beta", r.beta}, {"alpha", r.alpha}, {"error", r.error}});
  }
  out.table("beta_eff.csv", t);

  Json summary;
  summary["energies"] = task.energies;
  summary["beta_bar"] = qutrit::asymptotic_beta_bar(task.energies);
  summary["slope_r"] = qutrit::beta_eff_slope(task.energies);
  summary["failures"] = failures;
  out.json("fig1_summary.json", summary);

  if (task.svg) {
    LinePlot plot;
    plot.title = "Effective inverse temperature of the three-level ensemble";
    plot.x_label = "alpha";
    plot.y_label = "beta_eff";
    for (std::size_t b = 0; b < task.betas.size(); ++b) {
      Series s{"beta = " + detail::fmt(task.betas[b]), {}};
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto& r = rows[b * alphas.size() + a];
        s.points.emplace_back(r.alpha, r.beta_eff ? *r.beta_eff : std::nan(""));
      }
      plot.series.push_back(std::move(s));
    }
    out.text("beta_eff.svg", render_svg(plot));
  }
  out.finish();
  return kOk;
}

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool skipped = false;
  std::string note;

  Check(std::string n, double v, double tol, bool skip = false, std::string why = {})
      : name(std::move(n)), value(v), tolerance(tol), skipped(skip), note(std::move(why)) {}

  bool pass() const { return skipped || value <= tolerance; }
};

/// Cheap invariant suite over one protocol.
inline std::vector<Check> validation_checks(const ProtocolSpec& spec) {
  std::vector<Check> checks;
  const std::size_t n = spec.dimension();
  checks.push_back({"observable_unitarity", unitarity_deviation(spec.observable.basis), 1e-10});

  const StochasticMatrix lbar = averaged_transition(spec);
  checks.push_back({"transition_column_sums", column_sum_error(lbar), 1e-12});
  checks.push_back({"transition_row_sums", row_sum_error(lbar), 1e-12});
  checks.push_back({"first_step_column_sums", column_sum_error(averaged_boundary_A(spec)), 1e-12});
  checks.push_back({"last_step_column_sums", column_sum_error(boundary_matrix_B(spec.system, spec.observable)), 1e-12});

  const ConditionalTable table = conditional_table(spec);
  checks.push_back({"conditional_column_sums", column_sum_error(table.probs), 1e-12});
  checks.push_back({"heat_total_mass", std::abs(heat_distribution(spec, table).total_mass() - 1.0), 1e-12});
  checks.push_back({"charfn_at_zero", std::abs(char_fn(spec, table, Complex{}).value - 1.0), 1e-12});

  // Largest M' <= M whose full enumeration stays below 1e4 sequences.
  const double branching = static_cast<double>(n * spec.waits.atoms.size());
  int depth = 0;
  while (depth < spec.measurements && std::pow(branching, depth + 1) <= 1e4) ++depth;
  if (depth == 0) {
    checks.push_back({"unitality", 0.0, 1e-10, true, "enumeration too large even at M = 1"});
  } else {
    ProtocolSpec small = spec;
    small.measurements = depth;
    checks.push_back({"unitality", unitality_check(small, 1e4), 1e-10, false, "M = " + std::to_string(depth)});
  }

  if (const auto* gibbs = std::get_if<InitialState::Gibbs>(&spec.initial.mode)) {
    try {
      const Complex g = char_fn(spec, table, Complex(0.0, gibbs->beta)).value;
      checks.push_back({"fluctuation_theorem", std::abs(g - 1.0), 1e-10});
    } catch (const Error& e) {
      checks.push_back({"fluctuation_theorem", 0.0, 1e-10, true, e.what()});
    }
  }
  return checks;
}

inline int cmd_validate(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& os) {
  const auto checks = validation_checks(cfg.require_protocol());
  bool ok = true;
  Json report = Json::array();
  for (const auto& c : checks) {
    ok = ok && c.pass();
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-26s %.3e (tol %.0e)%s%s\n", c.skipped ? "SKIP" : c.pass() ? "PASS" : "FAIL",
                  c.name.c_str(), c.value, c.tolerance, c.note.empty() ? "" : "  ", c.note.c_str());
    os << line;
    report.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                      {"status", c.skipped ? "skip" : c.pass() ? "pass" : "fail"}, {"note", c.note}});
  }
  if (!opt.out_dir.empty()) {
    detail::OutputDir out(opt.out_dir, cfg, "validate", std::nullopt);
    out.json("validate.json", Json{{"checks", report}, {"pass", ok}});
    out.finish();
  }
  return ok ? kOk : kFailure;
}

inline void write_error_json(std::ostream& err, const std::string& kind, const std::string& code,
                             const std::string& field, const std::string& message) {
  Json j;
  j["error"] = kind;
  j["code"] = code;
  if (!field.empty()) j["field"] = field;
  j["message"] = message;
  err << j.dump() << "\n";
}

/// Loads the config and dispatches; exceptions become exit codes with a JSON
/// error object on `err`.
inline int run_command(const std::string& command, const RunOptions& opt, std::ostream& os, std::ostream& err) {
  try {
    std::string text;
    try {
      text = read_text(opt.config_path);
    } catch (const std::runtime_error& e) {
      throw ConfigError("--config", e.what());
    }
    const ExperimentConfig cfg = parse_config_text(text);
    if (command != "validate" && opt.out_dir.empty()) throw ConfigError("--out", "output directory is required");
    if (command == "exact") return cmd_exact(cfg, opt);
    if (command == "sample") return cmd_sample(cfg, opt);
    if (command == "thermalize") return cmd_thermalize(cfg, opt);
    if (command == "zeno") return cmd_zeno(cfg, opt);
    if (command == "fig1") return cmd_fig1(cfg, opt);
    if (command == "validate") return cmd_validate(cfg, opt, os);
    throw ConfigError("<command>", "unknown subcommand '" + command + "'");
  } catch (const ConfigError& e) {
    write_error_json(err, "ConfigError", std::string(to_string(e.code())), e.field(), e.detail());
    return kConfigInvalid;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    write_error_json(err, code == kNumericalRange ? "NumericalRangeError" : "ValidationError",
                     std::string(to_string(e.code())), "", e.what());
    return code;
  } catch (const std::exception& e) {
    write_error_json(err, "RuntimeError", "Internal", "", e.what());
    return kFailure;
  }
}

}  // namespace heatstat::io
