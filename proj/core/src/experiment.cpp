#include "ergo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "ergo/analytic.hpp"
#include "ergo/coupling.hpp"
#include "ergo/curvature.hpp"
#include "ergo/errors.hpp"
#include "ergo/expr.hpp"
#include "ergo/metrics.hpp"
#include "ergo/model.hpp"
#include "ergo/simulate.hpp"

namespace ergo::experiment {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// -- config field access ----------------------------------------------------

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw validation_error("config field \"" + key + "\" missing");
  return j.at(key);
}

double cfg_num(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw validation_error("config field \"" + key + "\" must be a number");
  return v.get<double>();
}

double cfg_num_or(const json& j, const std::string& key, double dflt) {
  return j.contains(key) ? cfg_num(j, key) : dflt;
}

std::int64_t cfg_int(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number_integer())
    throw validation_error("config field \"" + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t cfg_int_or(const json& j, const std::string& key, std::int64_t dflt) {
  return j.contains(key) ? cfg_int(j, key) : dflt;
}

std::string cfg_str(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw validation_error("config field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

bool cfg_bool_or(const json& j, const std::string& key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean())
    throw validation_error("config field \"" + key + "\" must be a boolean");
  return j.at(key).get<bool>();
}

std::vector<double> cfg_num_array(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_array() || v.empty())
    throw validation_error("config field \"" + key + "\" must be a non-empty array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number())
      throw validation_error("config field \"" + key + "\" must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Interval window_from(const json& j) {
  Interval w;
  w.lo = cfg_num(j, "lo");
  w.hi = cfg_num(j, "hi");
  if (!(w.lo < w.hi)) throw validation_error("window needs lo < hi");
  return w;
}

ModelSpec model_from(const json& cfg) {
  return model_from_json_text(require(cfg, "model").dump());
}

SimConfig sim_from(const json& cfg, std::uint64_t seed, int threads) {
  const json& s = require(cfg, "sim");
  SimConfig c;
  c.dt = cfg_num(s, "dt");
  c.horizon = cfg_num(s, "horizon");
  c.checkpoints = cfg_num_array(s, "checkpoints");
  c.n_paths = cfg_int(s, "n_paths");
  if (s.contains("jump_scheme")) {
    const std::string v = cfg_str(s, "jump_scheme");
    if (v == "thinning")
      c.jump_scheme = JumpScheme::ExactThinning;
    else if (v == "bernoulli")
      c.jump_scheme = JumpScheme::PerStepBernoulli;
    else
      throw validation_error("config field \"jump_scheme\" must be thinning or bernoulli");
  }
  if (s.contains("integrator")) {
    const std::string v = cfg_str(s, "integrator");
    if (v == "euler")
      c.integrator = Integrator::EulerMaruyama;
    else if (v == "exact_linear")
      c.integrator = Integrator::ExactLinear;
    else
      throw validation_error("config field \"integrator\" must be euler or exact_linear");
  }
  if (s.contains("thinning_bound")) c.thinning_bound = cfg_num(s, "thinning_bound");
  c.seed = seed;
  c.threads = threads;
  return c;
}

// -- artifact sink ------------------------------------------------------------

struct Sink {
  fs::path dir;
  json artifact_hashes = json::object();

  void write_text(const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw validation_error("cannot write artifact: " + (dir / name).string());
    out << content;
    if (!out) throw validation_error("failed writing artifact: " + (dir / name).string());
    artifact_hashes[name] = hex64(fnv1a64(content.data(), content.size()));
  }
  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }
  void write_csv(const std::string& name, const std::vector<std::string>& cols,
                 const std::vector<std::vector<double>>& rows) {
    std::string s;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) s += ',';
      s += cols[i];
    }
    s += '\n';
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) s += ',';
        s += fmt_g(row[i]);
      }
      s += '\n';
    }
    write_text(name, s);
  }
};

std::vector<std::string> time_headers(const std::vector<double>& ts) {
  std::vector<std::string> h;
  h.reserve(ts.size());
  for (double t : ts) h.push_back("t=" + fmt_g(t));
  return h;
}

std::vector<std::vector<double>> matrix_rows(const std::vector<double>& row_major,
                                             std::int64_t n_rows, size_t n_cols) {
  std::vector<std::vector<double>> rows(static_cast<size_t>(n_rows));
  for (std::int64_t p = 0; p < n_rows; ++p) {
    rows[static_cast<size_t>(p)].assign(
        row_major.begin() + static_cast<std::ptrdiff_t>(p * static_cast<std::int64_t>(n_cols)),
        row_major.begin() + static_cast<std::ptrdiff_t>((p + 1) * static_cast<std::int64_t>(n_cols)));
  }
  return rows;
}

// CSV reader for the metrics subcommand: header line, then numeric rows.
std::vector<std::vector<double>> read_csv_columns(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty CSV: " + path);
  size_t n_cols = static_cast<size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<std::vector<double>> cols(n_cols);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    size_t c = 0;
    while (std::getline(row, cell, ',')) {
      if (c >= n_cols)
        throw validation_error("ragged CSV row at line " + std::to_string(line_no) + ": " + path);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw validation_error("non-numeric CSV cell at line " + std::to_string(line_no) + ": " + path);
      cols[c++].push_back(v);
    }
    if (c != n_cols)
      throw validation_error("ragged CSV row at line " + std::to_string(line_no) + ": " + path);
  }
  return cols;
}

struct Ctx {
  std::optional<std::uint64_t> seed;
  int threads = 1;

  std::uint64_t need_seed() const {
    if (!seed) throw validation_error("config field \"seed\" missing (seeds are always explicit)");
    return *seed;
  }
};

// -- experiment handlers ------------------------------------------------------

void run_curvature(const json& cfg, Sink& sink, Ctx&) {
  const ModelSpec model = model_from(cfg);
  const Interval window = window_from(require(cfg, "window"));
  const int n_grid = static_cast<int>(cfg_int_or(cfg, "n_grid", 2001));
  const bool tail = cfg_bool_or(cfg, "tail_asserted", false);
  const CurvatureReport rep = curvature_rho(model, window, n_grid, tail);

  json out = {{"experiment", "curvature"},
              {"model_id", model.id},
              {"window", {{"lo", window.lo}, {"hi", window.hi}}},
              {"n_grid", n_grid},
              {"rho", rep.rho},
              {"argmin", rep.argmin},
              {"v_constant", rep.v_constant},
              {"tail_flag", rep.tail_flag}};
  sink.write_json("curvature.json", out);

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < rep.grid.size(); ++i) rows.push_back({rep.grid[i], rep.v_values[i]});
  sink.write_csv("v_grid.csv", {"x", "v"}, rows);
}

void run_tv_bound(const json& cfg, Sink& sink, Ctx&) {
  const ModelSpec model = model_from(cfg);
  const Interval window = window_from(require(cfg, "window"));
  const int n_grid = static_cast<int>(cfg_int_or(cfg, "n_grid", 2001));
  const double kappa = cfg_num(cfg, "kappa");
  const double c_kernel = cfg_num(cfg, "c_kernel");
  const double w0 = cfg_num(cfg, "w0");
  const std::vector<double> times = cfg_num_array(cfg, "times");

  TvBoundConstants consts{};
  std::vector<std::vector<double>> rows;
  json series = json::array();
  const bool local = cfg.contains("local");
  double lx = 0.0, ly = 0.0;
  if (local) {
    lx = cfg_num(cfg.at("local"), "x");
    ly = cfg_num(cfg.at("local"), "y");
  }
  for (double t : times) {
    auto [c, bound] = tv_bound(model, window, n_grid, kappa, c_kernel, w0, t);
    consts = c;
    json entry = {{"t", t}, {"bound", bound}};
    std::vector<double> row = {t, bound};
    if (local) {
      const double lb = tv_local_bound(model, window, n_grid, lx, ly, t, c_kernel);
      entry["local_bound"] = lb;
      row.push_back(lb);
    }
    series.push_back(entry);
    rows.push_back(row);
  }

  json out = {{"experiment", "tv-bound"},
              {"model_id", model.id},
              {"constants",
               {{"theta", consts.theta},
                {"k_mu_nu", consts.k_mu_nu},
                {"kappa", consts.kappa},
                {"r_lower", consts.r_lower},
                {"g_prime_upper", consts.g_prime_upper},
                {"r_prime_upper", consts.r_prime_upper},
                {"c_kernel", consts.c_kernel},
                {"w0", consts.w0}}},
              {"bounds", series}};
  sink.write_json("tv_bound.json", out);
  std::vector<std::string> cols = {"t", "bound"};
  if (local) cols.push_back("local_bound");
  sink.write_csv("tv_bound.csv", cols, rows);
}

InitialLaw initial_from(const json& cfg) {
  const json& ini = require(cfg, "initial");
  if (ini.contains("samples")) return InitialLaw::samples(cfg_num_array(ini, "samples"));
  return InitialLaw::dirac(cfg_num(ini, "x0"));
}

void run_simulate(const json& cfg, Sink& sink, Ctx& ctx) {
  const ModelSpec model = model_from(cfg);
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const InitialLaw initial = initial_from(cfg);
  if (!initial.sample_list.empty() &&
      initial.sample_list.size() != static_cast<size_t>(sim.n_paths))
    throw validation_error("config field \"initial.samples\" must hold one value per path");
  const PathEnsemble ens = simulate_ensemble(model, initial, sim);

  sink.write_csv("values.csv", time_headers(ens.checkpoint_times),
                 matrix_rows(ens.values, ens.n_paths, ens.checkpoint_times.size()));
  json out = {{"experiment", "simulate"},
              {"model_id", model.id},
              {"n_paths", ens.n_paths},
              {"seed", ens.seed},
              {"scheme", ens.scheme},
              {"clip_count", ens.clip_count},
              {"checkpoint_times", ens.checkpoint_times}};
  sink.write_json("ensemble.json", out);
}

json profile_json(const CouplingOutcome& out, std::vector<std::vector<double>>* rows) {
  const double d0 = std::fabs(out.x0 - out.y0);
  json prof = json::array();
  for (size_t k = 0; k < out.checkpoint_times.size(); ++k) {
    const MeanSe ms = mean_and_se(out.dist_column(k));
    prof.push_back({{"t", out.checkpoint_times[k]},
                    {"omega_hat", ms.mean / d0},
                    {"se", ms.se / d0}});
    if (rows) rows->push_back({out.checkpoint_times[k], ms.mean / d0, ms.se / d0});
  }
  return prof;
}

void write_pair_csvs(const CouplingOutcome& out, Sink& sink) {
  const auto headers = time_headers(out.checkpoint_times);
  const size_t k = out.checkpoint_times.size();
  sink.write_csv("dist.csv", headers, matrix_rows(out.dist, out.n_paths, k));
  std::vector<double> eq(out.equal.begin(), out.equal.end());
  sink.write_csv("equal.csv", headers, matrix_rows(eq, out.n_paths, k));
}

void run_couple(const json& cfg, Sink& sink, Ctx& ctx) {
  const ModelSpec model = model_from(cfg);
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const CouplingOutcome out =
      couple_synchronous(model, cfg_num(cfg, "x0"), cfg_num(cfg, "y0"), sim,
                         cfg_bool_or(cfg, "allow_unvalidated", false));
  write_pair_csvs(out, sink);
  std::vector<std::vector<double>> rows;
  json prof = profile_json(out, &rows);
  sink.write_csv("profile.csv", {"t", "omega_hat", "se"}, rows);
  sink.write_json("couple.json", {{"experiment", "couple"},
                                  {"model_id", model.id},
                                  {"x0", out.x0},
                                  {"y0", out.y0},
                                  {"n_paths", out.n_paths},
                                  {"seed", out.seed},
                                  {"clip_count", out.clip_count},
                                  {"profile", prof}});
}

void run_couple_tv(const json& cfg, Sink& sink, Ctx& ctx) {
  const ModelSpec model = model_from(cfg);
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const CouplingOutcome out =
      couple_tv_sticking(model, cfg_num(cfg, "x0"), cfg_num(cfg, "y0"), sim);
  write_pair_csvs(out, sink);
  json series = json::array();
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < out.checkpoint_times.size(); ++k) {
    auto [tv, se] = empirical_tv(out, k);
    series.push_back({{"t", out.checkpoint_times[k]}, {"tv", tv}, {"se", se}});
    rows.push_back({out.checkpoint_times[k], tv, se});
  }
  sink.write_csv("tv.csv", {"t", "tv", "se"}, rows);
  sink.write_json("tv.json", {{"experiment", "couple-tv"},
                              {"model_id", model.id},
                              {"x0", out.x0},
                              {"y0", out.y0},
                              {"n_paths", out.n_paths},
                              {"seed", out.seed},
                              {"estimates", series}});
}

json fk_json(const FkEstimate& e) {
  return {{"value", e.value},
          {"std_error", e.std_error},
          {"effective_sample_size", e.effective_sample_size},
          {"n_paths", e.n_paths}};
}

void run_fk_grad(const json& cfg, Sink& sink, Ctx& ctx) {
  const ModelSpec model = model_from(cfg);
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const double x = cfg_num(cfg, "x");
  const double t = cfg_num(cfg, "t");
  const json& f = require(cfg, "f");
  auto f_prime = compile_expression(cfg_str(f, "deriv"));
  const FkEstimate est = fk_gradient(model, f_prime, x, t, sim);

  json out = {{"experiment", "fk-grad"},
              {"model_id", model.id},
              {"x", x},
              {"t", t},
              {"estimate", fk_json(est)}};
  if (cfg.contains("compare_fd")) {
    auto f_val = compile_expression(cfg_str(f, "value"));
    const double delta = cfg_num(cfg.at("compare_fd"), "delta");
    const FkEstimate fd = semigroup_gradient_fd(model, f_val, x, delta, t, sim);
    out["fd"] = fk_json(fd);
    out["fd"]["delta"] = delta;
    const double se = std::sqrt(est.std_error * est.std_error + fd.std_error * fd.std_error);
    out["z"] = se > 0.0 ? (est.value - fd.value) / se : 0.0;
  }
  sink.write_json("fk.json", out);
}

void run_decay_study(const json& cfg, Sink& sink, Ctx& ctx) {
  const ModelSpec model = model_from(cfg);
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const CouplingOutcome out =
      couple_synchronous(model, cfg_num(cfg, "x0"), cfg_num(cfg, "y0"), sim,
                         cfg_bool_or(cfg, "allow_unvalidated", false));

  const Interval rho_window = window_from(require(cfg, "rho_window"));
  const int rho_grid = static_cast<int>(cfg_int_or(cfg, "rho_n_grid", 2001));
  const double rho = curvature_rho(model, rho_window, rho_grid).rho;

  std::vector<std::vector<double>> rows;
  json prof = profile_json(out, &rows);
  sink.write_csv("profile.csv", {"t", "omega_hat", "se"}, rows);

  const int skip = static_cast<int>(cfg_int_or(cfg, "skip_leading", 0));
  const DecayFit fit = fit_decay_rate(contraction_profile(out), skip);

  // omega_hat(t) <= exp(-rho t) * (1 + 3 SE) per checkpoint, SE being the
  // relative standard error of omega_hat (so the allowance is dimensionless),
  // with a 1e-9 floor so deterministic profiles (SE = 0) tolerate roundoff.
  bool satisfied = true;
  double max_z = 0.0;
  for (const auto& row : rows) {
    const double target = std::exp(-rho * row[0]);
    const double rel = row[1] > 0.0 ? row[2] / row[1] : 0.0;
    const double z = (row[1] - target) / std::max(target * rel, 1e-9);
    max_z = std::max(max_z, z);
    if (z > 3.0) satisfied = false;
  }

  sink.write_json("decay.json", {{"experiment", "decay-study"},
                                 {"model_id", model.id},
                                 {"rho", rho},
                                 {"fitted_rate", fit.rate},
                                 {"intercept", fit.intercept},
                                 {"r_squared", fit.r_squared},
                                 {"skip_leading", skip},
                                 {"bound_satisfied", satisfied},
                                 {"max_z", max_z},
                                 {"n_paths", out.n_paths},
                                 {"seed", out.seed}});
}

void run_moments_study(const json& cfg, Sink& sink, Ctx& ctx) {
  const double r_const = cfg_num(cfg, "r_const");
  const Dist1D h = dist1d_from_json_text(require(cfg, "h").dump());
  const SimConfig sim = sim_from(cfg, ctx.need_seed(), ctx.threads);
  const int n_max = static_cast<int>(cfg_int_or(cfg, "n_max", 4));

  const PathEnsemble ens = simulate_levy_integral(r_const, h, sim);
  const std::vector<double> terminal = ens.column(ens.checkpoint_times.size() - 1);
  const std::vector<MomentEstimate> emp = sample_moments(terminal, n_max);
  const std::vector<double> oracle =
      levy_integral_moments(r_const, [&](int n) { return h.moment(n); }, n_max);

  json series = json::array();
  std::vector<std::vector<double>> rows;
  for (const auto& m : emp) {
    const double target = oracle[static_cast<size_t>(m.n)];
    const double z = m.std_error > 0.0 ? (m.value - target) / m.std_error : 0.0;
    series.push_back({{"n", m.n},
                      {"empirical", m.value},
                      {"se", m.std_error},
                      {"oracle", target},
                      {"z", z}});
    rows.push_back({static_cast<double>(m.n), m.value, m.std_error, target, z});
  }
  sink.write_csv("moments.csv", {"n", "empirical", "se", "oracle", "z"}, rows);
  sink.write_json("moments.json", {{"experiment", "moments-study"},
                                   {"r_const", r_const},
                                   {"t", ens.checkpoint_times.back()},
                                   {"n_paths", ens.n_paths},
                                   {"seed", ens.seed},
                                   {"moments", series}});
}

QPotential q_from(const json& j) {
  QPotential q;
  if (j.contains("kind")) {
    const std::string kind = cfg_str(j, "kind");
    if (kind == "ou") {
      const double mu = cfg_num(j, "mu");
      q.q = [mu](double x) { return 0.5 * mu * x * x; };
      q.dq = [mu](double x) { return mu * x; };
      q.d2q = [mu](double) { return mu; };
      return q;
    }
    if (kind == "double_well") {
      q.q = [](double x) { return 0.25 * x * x * x * x - 0.5 * x * x; };
      q.dq = [](double x) { return x * x * x - x; };
      q.d2q = [](double x) { return 3.0 * x * x - 1.0; };
      return q;
    }
    throw validation_error("config field \"q.kind\" must be ou or double_well");
  }
  q.q = j.contains("q") ? compile_expression(cfg_str(j, "q"))
                        : std::function<double(double)>([](double) { return 0.0; });
  q.dq = compile_expression(cfg_str(j, "q_prime"));
  q.d2q = compile_expression(cfg_str(j, "q_second"));
  return q;
}

json eigen_json(const EigenResult& r) {
  return {{"lambda", r.lambda}, {"residual", r.residual},
          {"n_grid", r.grid.size()},
          {"window", {{"lo", r.grid.front()}, {"hi", r.grid.back()}}}};
}

void run_eigen(const json& cfg, Sink& sink, Ctx&, bool study) {
  const QPotential q = q_from(require(cfg, "q"));
  const Interval window = window_from(require(cfg, "window"));
  const int n_grid = static_cast<int>(cfg_int(cfg, "n_grid"));
  const EigenResult res = schrodinger_ground_state(q.dq, q.d2q, window, n_grid);

  json out = {{"experiment", study ? "eigen-study" : "eigen"}, {"result", eigen_json(res)}};
  if (study) {
    const Interval wide = window_from(require(cfg, "wide_window"));
    const int wide_grid = static_cast<int>(cfg_int(cfg, "wide_n_grid"));
    const EigenResult res_wide = schrodinger_ground_state(q.dq, q.d2q, wide, wide_grid);
    const double tol = cfg_num_or(cfg, "tol", 1e-3);
    out["wide_result"] = eigen_json(res_wide);
    out["delta"] = std::fabs(res.lambda - res_wide.lambda);
    out["converged"] = std::fabs(res.lambda - res_wide.lambda) < tol;
  }
  sink.write_json("eigen.json", out);

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < res.grid.size(); ++i)
    rows.push_back({res.grid[i], res.eigenvector[i]});
  sink.write_csv("eigenvector.csv", {"x", "phi"}, rows);
}

void run_embedded_study(const json& cfg, Sink& sink, Ctx& ctx) {
  const double a = cfg_num(cfg, "a");
  const double alpha = cfg_num(cfg, "alpha");
  if (!(a > 0.0) || !(alpha > -1.0))
    throw validation_error("embedded-study needs a > 0 and alpha > -1");
  const Dist1D h = dist1d_from_json_text(require(cfg, "h").dump());
  const double x0 = cfg_num(cfg, "x0");
  const double y0 = cfg_num(cfg, "y0");
  const int n_steps = static_cast<int>(cfg_int(cfg, "n_steps"));
  const std::int64_t n_paths = cfg_int(cfg, "n_paths");
  const double p = cfg_num_or(cfg, "p", 1.0);
  const std::uint64_t seed = ctx.need_seed();

  auto R = [a, alpha](double x) { return a * std::pow(x, alpha + 1.0) / (alpha + 1.0); };
  auto R_inv = [a, alpha](double y) {
    return std::pow((alpha + 1.0) * y / a, 1.0 / (alpha + 1.0));
  };
  const ChainEnsemble cx =
      simulate_embedded_chain(R, R_inv, h, x0, n_steps, n_paths, seed, ctx.threads);
  const ChainEnsemble cy =
      simulate_embedded_chain(R, R_inv, h, y0, n_steps, n_paths, seed, ctx.threads);

  const double factor = embedded_contraction_factor([&](double pp) { return h.moment(pp); }, p);
  std::vector<std::vector<double>> rows;
  double w_prev = wasserstein_p_1d(cx.column(0), cy.column(0), p);
  double max_ratio = 0.0, log_sum = 0.0;
  int ratio_count = 0;
  for (int k = 1; k <= n_steps; ++k) {
    const double w = wasserstein_p_1d(cx.column(k), cy.column(k), p);
    if (w_prev > 0.0 && w > 0.0) {
      const double ratio = w / w_prev;
      rows.push_back({static_cast<double>(k), w, ratio});
      max_ratio = std::max(max_ratio, ratio);
      log_sum += std::log(ratio);
      ++ratio_count;
    } else {
      rows.push_back({static_cast<double>(k), w, 0.0});
    }
    w_prev = w;
  }
  sink.write_csv("contraction.csv", {"step", "w_p", "ratio"}, rows);

  json out = {{"experiment", "embedded-study"},
              {"a", a},
              {"alpha", alpha},
              {"p", p},
              {"n_steps", n_steps},
              {"n_paths", n_paths},
              {"seed", seed},
              {"contraction",
               {{"oracle_factor", factor},
                {"max_step_ratio", max_ratio},
                {"geometric_mean_ratio",
                 ratio_count > 0 ? std::exp(log_sum / ratio_count) : 0.0}}}};

  if (cfg.contains("chi2")) {
    if (h.kind != Dist1D::Kind::Dirac)
      throw validation_error("embedded-study chi2 check needs a Dirac jump law");
    const json& c2 = cfg.at("chi2");
    const int bins = static_cast<int>(cfg_int_or(c2, "bins", 20));
    const int n_terms = static_cast<int>(cfg_int_or(c2, "n_terms", 64));
    if (bins < 2) throw validation_error("config field \"chi2.bins\" must be >= 2");
    const double hval = h.a;  // Dirac point

    // Equiprobable bin edges by bisecting the distribution function.
    auto cdf = [&](double x) { return tcp_embedded_invariant_cdf(a, alpha, hval, x, n_terms); };
    double hi = 1.0;
    while (cdf(hi) < 1.0 - 1e-13 && hi < 1e308) hi *= 2.0;
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) {
      const double target = static_cast<double>(b) / bins;
      double lo_e = 0.0, hi_e = hi;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo_e + hi_e);
        (cdf(mid) < target ? lo_e : hi_e) = mid;
      }
      edges.push_back(0.5 * (lo_e + hi_e));
    }

    const std::vector<double> sample = cx.column(n_steps);
    std::vector<std::int64_t> counts(static_cast<size_t>(bins), 0);
    for (double v : sample) {
      const size_t b = static_cast<size_t>(
          std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
      ++counts[b];
    }
    const double expected = static_cast<double>(sample.size()) / bins;
    double stat = 0.0;
    for (std::int64_t c : counts) {
      const double d = static_cast<double>(c) - expected;
      stat += d * d / expected;
    }
    boost::math::chi_squared_distribution<double> chi2(bins - 1);
    const double critical = boost::math::quantile(chi2, 0.99);
    out["chi2"] = {{"bins", bins},
                   {"dof", bins - 1},
                   {"statistic", stat},
                   {"critical_1pct", critical},
                   {"pass", stat < critical}};
  }
  sink.write_json("embedded.json", out);
}

void run_moments_oracle(const json& cfg, Sink& sink, Ctx&) {
  const double r_const = cfg_num(cfg, "r_const");
  const Dist1D h = dist1d_from_json_text(require(cfg, "h").dump());
  const int n_max = static_cast<int>(cfg_int(cfg, "n_max"));
  const std::vector<double> m =
      levy_integral_moments(r_const, [&](int n) { return h.moment(n); }, n_max);
  json series = json::array();
  for (size_t n = 0; n < m.size(); ++n)
    series.push_back({{"n", n}, {"value", m[n]}});
  sink.write_json("oracle.json",
                  {{"experiment", "moments-oracle"}, {"r_const", r_const}, {"moments", series}});
}

void run_embedded_density(const json& cfg, Sink& sink, Ctx&) {
  const double a = cfg_num(cfg, "a");
  const double alpha = cfg_num(cfg, "alpha");
  const double h = cfg_num(cfg, "h");
  const int n_terms = static_cast<int>(cfg_int_or(cfg, "n_terms", 40));
  DensityVariant variant = DensityVariant::Normalized;
  if (cfg.contains("variant")) {
    const std::string v = cfg_str(cfg, "variant");
    if (v == "verbatim")
      variant = DensityVariant::Verbatim;
    else if (v != "normalized")
      throw validation_error("config field \"variant\" must be normalized or verbatim");
  }
  const json& xs = require(cfg, "xs");
  const double lo = cfg_num(xs, "lo"), hi = cfg_num(xs, "hi");
  const int n = static_cast<int>(cfg_int(xs, "n"));
  if (!(lo < hi) || n < 2) throw validation_error("config field \"xs\" needs lo < hi and n >= 2");

  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    double tail = 0.0;
    const double f = tcp_embedded_invariant_density(a, alpha, h, x, n_terms, variant, &tail);
    const double cdf = variant == DensityVariant::Normalized
                           ? tcp_embedded_invariant_cdf(a, alpha, h, x, std::max(n_terms, 64))
                           : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({x, f, tail, cdf});
  }
  sink.write_csv("density.csv", {"x", "density", "tail_bound", "cdf"}, rows);
  sink.write_json("density.json",
                  {{"experiment", "embedded-density"},
                   {"a", a},
                   {"alpha", alpha},
                   {"h", h},
                   {"n_terms", n_terms},
                   {"variant", variant == DensityVariant::Normalized ? "normalized" : "verbatim"}});
}

void run_metrics(const json& cfg, Sink& sink, Ctx&) {
  const std::string op = cfg_str(cfg, "op");
  json out = {{"experiment", "metrics"}, {"op", op}};
  if (op == "wasserstein") {
    const auto a = read_csv_columns(cfg_str(cfg, "a_csv"));
    const auto b = read_csv_columns(cfg_str(cfg, "b_csv"));
    const size_t col = static_cast<size_t>(cfg_int(cfg, "column"));
    const double p = cfg_num(cfg, "p");
    if (col >= a.size() || col >= b.size())
      throw validation_error("config field \"column\" exceeds the CSV width");
    out["value"] = wasserstein_p_1d(a[col], b[col], p);
    out["p"] = p;
  } else if (op == "fit_decay") {
    const auto cols = read_csv_columns(cfg_str(cfg, "profile_csv"));
    if (cols.size() < 2) throw validation_error("profile CSV needs columns t,value");
    std::vector<std::pair<double, double>> prof;
    for (size_t i = 0; i < cols[0].size(); ++i) prof.emplace_back(cols[0][i], cols[1][i]);
    const DecayFit fit =
        fit_decay_rate(prof, static_cast<int>(cfg_int_or(cfg, "skip_leading", 0)));
    out["rate"] = fit.rate;
    out["intercept"] = fit.intercept;
    out["r_squared"] = fit.r_squared;
  } else if (op == "moments") {
    const auto cols = read_csv_columns(cfg_str(cfg, "csv"));
    const size_t col = static_cast<size_t>(cfg_int(cfg, "column"));
    if (col >= cols.size())
      throw validation_error("config field \"column\" exceeds the CSV width");
    const int n_max = static_cast<int>(cfg_int_or(cfg, "n_max", 4));
    json series = json::array();
    for (const auto& m : sample_moments(cols[col], n_max))
      series.push_back({{"n", m.n}, {"value", m.value}, {"se", m.std_error}});
    out["moments"] = series;
  } else {
    throw validation_error("config field \"op\" must be wasserstein, fit_decay or moments");
  }
  sink.write_json("metrics.json", out);
}

void run_report_merge(const json& cfg, Sink& sink, Ctx&) {
  std::vector<std::string> inputs;
  if (cfg.contains("inputs")) {
    if (!cfg.at("inputs").is_array())
      throw validation_error("config field \"inputs\" must be an array");
    for (const auto& e : cfg.at("inputs")) {
      if (!e.is_string()) throw validation_error("config field \"inputs\" must hold paths");
      inputs.push_back(e.get<std::string>());
    }
  }
  report_merge(inputs, (sink.dir / "merged.csv").string());
  const std::string bytes = read_file((sink.dir / "merged.csv").string());
  sink.artifact_hashes["merged.csv"] = hex64(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void report_merge(const std::vector<std::string>& inputs, const std::string& out_csv) {
  std::string body = "model,rho,fitted_rate,bound_satisfied,max_z\n";
  std::vector<std::string> seen;
  std::string kind;
  for (const auto& path : inputs) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw validation_error("report input " + path + ": " + e.what());
    }
    const std::string this_kind = cfg_str(j, "experiment");
    if (kind.empty())
      kind = this_kind;
    else if (this_kind != kind)
      throw validation_error("report inputs mix experiment kinds (" + kind + " vs " +
                             this_kind + ")");
    if (this_kind != "decay-study")
      throw validation_error("report_merge takes decay-study results, got " + this_kind);

    std::string id = cfg_str(j, "model_id");
    int dup = 1;
    std::string unique = id;
    while (std::find(seen.begin(), seen.end(), unique) != seen.end()) {
      unique = id + "#" + std::to_string(++dup);
    }
    if (unique != id)
      std::cerr << "warning: duplicate model id \"" << id << "\" renamed to \"" << unique
                << "\"\n";
    seen.push_back(unique);

    body += unique + ',' + fmt_g(cfg_num(j, "rho")) + ',' + fmt_g(cfg_num(j, "fitted_rate")) +
            ',' + (j.at("bound_satisfied").get<bool>() ? "true" : "false") + ',' +
            fmt_g(cfg_num(j, "max_z")) + '\n';
  }
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw validation_error("cannot write " + out_csv);
  out << body;
}

int run(const std::string& config_path, const RunOptions& opts) {
  try {
    const std::string text = read_file(config_path);
    json cfg;
    try {
      cfg = json::parse(text);
    } catch (const json::exception& e) {
      throw validation_error(std::string("config parse failure: ") + e.what());
    }
    if (!cfg.is_object()) throw validation_error("config top level must be an object");
    const std::string kind = cfg_str(cfg, "experiment");
    if (opts.expected_kind && kind != *opts.expected_kind)
      throw validation_error("config experiment \"" + kind + "\" does not match subcommand \"" +
                             *opts.expected_kind + "\"");

    Ctx ctx;
    ctx.threads = opts.threads ? *opts.threads
                               : static_cast<int>(cfg_int_or(cfg, "threads", 1));
    if (ctx.threads < 1) throw validation_error("config field \"threads\" must be >= 1");

    if (const char* env = std::getenv("ERGO_SEED_OVERRIDE"); env && *env) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0')
        throw validation_error("ERGO_SEED_OVERRIDE must be an integer");
      ctx.seed = static_cast<std::uint64_t>(v);
    } else if (opts.seed_override) {
      ctx.seed = *opts.seed_override;
    } else if (cfg.contains("seed")) {
      ctx.seed = static_cast<std::uint64_t>(cfg_int(cfg, "seed"));
    }

    Sink sink;
    sink.dir = opts.out_dir ? fs::path(*opts.out_dir)
                            : fs::path(cfg.value("out", std::string(".")));
    std::error_code ec;
    fs::create_directories(sink.dir, ec);
    if (ec) throw validation_error("cannot create output directory: " + sink.dir.string());

    if (kind == "curvature")
      run_curvature(cfg, sink, ctx);
    else if (kind == "tv-bound")
      run_tv_bound(cfg, sink, ctx);
    else if (kind == "simulate")
      run_simulate(cfg, sink, ctx);
    else if (kind == "couple")
      run_couple(cfg, sink, ctx);
    else if (kind == "couple-tv")
      run_couple_tv(cfg, sink, ctx);
    else if (kind == "fk-grad")
      run_fk_grad(cfg, sink, ctx);
    else if (kind == "decay-study")
      run_decay_study(cfg, sink, ctx);
    else if (kind == "moments-study")
      run_moments_study(cfg, sink, ctx);
    else if (kind == "eigen")
      run_eigen(cfg, sink, ctx, false);
    else if (kind == "eigen-study")
      run_eigen(cfg, sink, ctx, true);
    else if (kind == "embedded-study")
      run_embedded_study(cfg, sink, ctx);
    else if (kind == "moments-oracle")
      run_moments_oracle(cfg, sink, ctx);
    else if (kind == "embedded-density")
      run_embedded_density(cfg, sink, ctx);
    else if (kind == "metrics")
      run_metrics(cfg, sink, ctx);
    else if (kind == "report-merge")
      run_report_merge(cfg, sink, ctx);
    else
      throw validation_error("unknown experiment kind \"" + kind + "\"");

    json manifest = {{"experiment", kind},
                     {"config_hash", hex64(fnv1a64(text.data(), text.size()))},
                     {"seed", ctx.seed ? json(*ctx.seed) : json(nullptr)},
                     {"versions", {{"ergo", kVersion}, {"artifact_format", 1}}},
                     {"artifacts", sink.artifact_hashes}};
    std::ofstream mf(sink.dir / "manifest.json", std::ios::binary);
    if (!mf) throw validation_error("cannot write manifest.json");
    mf << manifest.dump(2) << "\n";
    return 0;
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ergo::experiment
