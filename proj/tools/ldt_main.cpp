// Command-line front end: parses a key=value config (plus flag overrides),
// dispatches to the library, and writes a JSON summary plus CSV artifacts.
// Exit status: 0 all built-in assertions pass, 1 assertion or runtime
// failure (summary still written when possible), 2 config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldt/ldt.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ldt;

namespace {

struct Assertion {
  std::string name;
  bool pass;
  double value;
  double tolerance;
};

struct RunContext {
  std::string command;
  std::map<std::string, std::string> cfg;
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;
  fs::path out_dir;
  json summary;
  std::vector<Assertion> assertions;

  bool has(const std::string& key) const { return cfg.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback = "") const {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) const {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : io::parse_double(key, it->second);
  }

  double require_positive(const std::string& key, double fallback) const {
    const double v = num(key, fallback);
    if (!(v > 0.0))
      throw ConfigError("key '" + key + "': must be positive, got " + io::fmt(v));
    return v;
  }

  long integer(const std::string& key, long fallback) const {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : io::parse_long(key, it->second);
  }

  void check(const std::string& name, bool pass, double value, double tolerance) {
    assertions.push_back({name, pass, value, tolerance});
  }

  io::CsvWriter csv(const std::string& file, const std::vector<std::string>& cols) const {
    return io::CsvWriter((out_dir / file).string(), cols, seed, hash);
  }
};

std::vector<double> parse_number_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) out.push_back(io::parse_double(key, token));
  if (out.empty()) throw ConfigError("key '" + key + "': expected a comma-separated list");
  return out;
}

Grid parse_grid(const std::string& key, const std::string& text) {
  // lo:hi:n per axis, comma separated.
  Vec lo, hi;
  std::vector<int> n;
  std::string axis;
  std::istringstream in(text);
  while (std::getline(in, axis, ',')) {
    std::istringstream ax(axis);
    std::string a, b, c;
    if (!std::getline(ax, a, ':') || !std::getline(ax, b, ':') || !std::getline(ax, c, ':'))
      throw ConfigError("key '" + key + "': expected lo:hi:n per axis, got '" + axis + "'");
    lo.push_back(io::parse_double(key, a));
    hi.push_back(io::parse_double(key, b));
    const long count = io::parse_long(key, c);
    if (count < 3) throw ConfigError("key '" + key + "': need at least 3 nodes per axis");
    n.push_back(static_cast<int>(count));
  }
  try {
    return Grid::uniform(lo, hi, n);
  } catch (const Error& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

Grid default_grid(int dim, double half_width = 3.0, int nodes = 41) {
  return Grid::uniform(Vec(static_cast<std::size_t>(dim), -half_width),
                       Vec(static_cast<std::size_t>(dim), half_width),
                       std::vector<int>(static_cast<std::size_t>(dim), nodes));
}

ModelSpec build_model(const RunContext& ctx) { return model_from_config(ctx.cfg); }

std::string grid_to_string(const Grid& g) {
  std::string s;
  for (int a = 0; a < g.dim(); ++a) {
    if (a) s += ",";
    s += io::fmt(g.lo[static_cast<std::size_t>(a)]) + ":" +
         io::fmt(g.hi[static_cast<std::size_t>(a)]) + ":" +
         std::to_string(g.shape[static_cast<std::size_t>(a)]);
  }
  return s;
}

void echo_model(RunContext& ctx, const ModelSpec& m) {
  json params = json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  ctx.summary["model"] = {{"name", m.name}, {"dim", m.dim}, {"params", params}};
}

// ---- command implementations ------------------------------------------------

void cmd_validate(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  const Grid grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim);
  ctx.summary["results"]["grid"] = grid_to_string(grid);
  const auto report = validate_model(model, grid);
  ctx.summary["results"]["spd_margin"] = report.spd_margin;
  ctx.summary["results"]["max_asymmetry"] = report.max_asymmetry;
  if (report.decomposition_residual)
    ctx.summary["results"]["decomposition_residual"] = *report.decomposition_residual;
  if (report.hje_residual) ctx.summary["results"]["hje_residual"] = *report.hje_residual;
  ctx.check("model_valid", report.pass, report.spd_margin, 0.0);
  if (report.hje_residual) ctx.check("stationary_hje", *report.hje_residual <= 1e-10, *report.hje_residual, 1e-10);
}

void cmd_simulate(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  EnsembleConfig cfg;
  cfg.epsilon = ctx.require_positive("epsilon", 0.1);
  cfg.step = ctx.require_positive("simulate.step", 1e-3);
  cfg.horizon = ctx.require_positive("simulate.horizon", 10.0);
  cfg.n_paths = static_cast<int>(ctx.integer("simulate.n_paths", 100));
  cfg.seed = ctx.seed;
  cfg.record_stride = static_cast<int>(ctx.integer("simulate.record_stride", 10));
  if (cfg.n_paths < 1) throw ConfigError("key 'simulate.n_paths': must be at least 1");
  Vec x0(static_cast<std::size_t>(model.dim), 0.0);
  if (ctx.has("simulate.x0")) {
    x0 = parse_number_list("simulate.x0", ctx.str("simulate.x0"));
    if (static_cast<int>(x0.size()) != model.dim)
      throw ConfigError("key 'simulate.x0': expected " + std::to_string(model.dim) + " coordinates");
  }
  const double burn_in = ctx.num("simulate.burn_in", 0.0);

  const auto traj = simulate_ensemble(model, x0, cfg);
  {
    std::vector<std::string> cols{"t", "path_id"};
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    auto w = ctx.csv("trajectories.csv", cols);
    for (int p = 0; p < traj.n_paths; ++p)
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<double> row{traj.times[k], static_cast<double>(p)};
        for (int c = 0; c < model.dim; ++c) row.push_back(traj.state(p, static_cast<int>(k), c));
        w.row(row);
      }
  }
  const Grid grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim);
  ctx.summary["results"]["grid"] = grid_to_string(grid);
  const auto hist = histogram_density(traj, grid, burn_in);
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("p");
    auto w = ctx.csv("density.csv", cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row = grid.node(i);
      row.push_back(hist.density.values[i]);
      w.row(row);
    }
  }
  const auto phi = empirical_ldrf(hist.density);
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("phi");
    cols.push_back("supported");
    auto w = ctx.csv("ldrf.csv", cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row = grid.node(i);
      row.push_back(phi.values[i]);
      row.push_back(phi.valid(i) ? 1.0 : 0.0);
      w.row(row);
    }
  }
  const double mass = hist.density.mass();
  ctx.summary["results"]["n_paths"] = cfg.n_paths;
  ctx.summary["results"]["recorded_instants"] = traj.times.size();
  ctx.summary["results"]["histogram_mass"] = mass;
  ctx.check("density_normalized", std::fabs(mass - 1.0) <= 1e-6, std::fabs(mass - 1.0), 1e-6);
}

void cmd_fpe(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  fpe::FPEConfig cfg;
  cfg.epsilon = ctx.require_positive("epsilon", 0.1);
  cfg.grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim, 3.5, 281);
  cfg.time_step = ctx.num("fpe.time_step", 0.0);
  cfg.conv_tol = ctx.require_positive("fpe.conv_tol", 1e-10);
  ctx.summary["results"]["grid"] = grid_to_string(cfg.grid);
  const double t_final = ctx.num("fpe.t_final", 0.0);

  fpe::EvolveResult result;
  if (t_final > 0.0) {
    Vec x0(static_cast<std::size_t>(model.dim), 0.0);
    if (ctx.has("fpe.x0")) x0 = parse_number_list("fpe.x0", ctx.str("fpe.x0"));
    const auto p0 = fpe::near_delta(cfg.grid, x0, cfg.epsilon);
    result = fpe::evolve(model, cfg, p0, t_final);
  } else {
    result = fpe::stationary_density(model, cfg);
  }
  const auto flux = fpe::probability_flux(model, cfg.epsilon, result.density);

  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("p");
    auto w = ctx.csv("density.csv", cols);
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      std::vector<double> row = cfg.grid.node(i);
      row.push_back(result.density.values[i]);
      w.row(row);
    }
  }
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    for (int c = 1; c <= model.dim; ++c) cols.push_back("J" + std::to_string(c));
    for (int c = 1; c <= model.dim; ++c) cols.push_back("hill" + std::to_string(c));
    auto w = ctx.csv("flux.csv", cols);
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      std::vector<double> row = cfg.grid.node(i);
      for (int c = 0; c < model.dim; ++c)
        row.push_back(flux.flux[i * static_cast<std::size_t>(model.dim) + static_cast<std::size_t>(c)]);
      for (int c = 0; c < model.dim; ++c)
        row.push_back(flux.hill[i * static_cast<std::size_t>(model.dim) + static_cast<std::size_t>(c)]);
      w.row(row);
    }
  }
  ctx.summary["results"]["steps"] = result.stats.steps;
  ctx.summary["results"]["dt"] = result.stats.dt;
  ctx.summary["results"]["mass_drift"] = result.stats.mass_drift;
  ctx.summary["results"]["final_residual"] = result.stats.final_residual;
  ctx.summary["results"]["hill_identity_residual"] = flux.identity_residual;
  ctx.summary["results"]["scheme_flux_max"] = flux.scheme_flux_max;
  ctx.check("mass_conserved", result.stats.mass_drift <= 1e-8 * std::max(1.0, t_final),
            result.stats.mass_drift, 1e-8 * std::max(1.0, t_final));
  ctx.check("hill_identity", flux.identity_residual <= 1e-12, flux.identity_residual, 1e-12);
}

void cmd_quasipotential(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  if (!ctx.has("quasipotential.target")) throw ConfigError("key 'quasipotential.target': required");
  const Vec target = parse_number_list("quasipotential.target", ctx.str("quasipotential.target"));
  if (static_cast<int>(target.size()) != model.dim)
    throw ConfigError("key 'quasipotential.target': expected " + std::to_string(model.dim) +
                      " coordinates");
  Vec attractor(static_cast<std::size_t>(model.dim), 0.0);
  if (ctx.has("quasipotential.attractor"))
    attractor = parse_number_list("quasipotential.attractor", ctx.str("quasipotential.attractor"));
  const double tolerance = ctx.require_positive("tolerance", 0.01);

  const auto q = quasipotential(model, attractor, target);
  {
    std::vector<std::string> cols{"s"};
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("lagrangian");
    auto w = ctx.csv("path.csv", cols);
    const double tau = q.path.tau();
    for (std::size_t k = 0; k < q.path.nodes.size(); ++k) {
      std::vector<double> row{q.path.times[k]};
      for (int c = 0; c < model.dim; ++c)
        row.push_back(q.path.nodes[k][static_cast<std::size_t>(c)]);
      if (k + 1 < q.path.nodes.size()) {
        const Vec v = (1.0 / tau) * (q.path.nodes[k + 1] - q.path.nodes[k]);
        row.push_back(lagrangian(model, q.path.nodes[k], v).value);
      } else {
        row.push_back(0.0);
      }
      w.row(row);
    }
  }
  ctx.summary["results"]["value"] = q.value;
  ctx.summary["results"]["horizon"] = q.horizon;
  json sched = json::array();
  for (const auto& [T, v] : q.schedule) sched.push_back({{"T", T}, {"action", v}});
  ctx.summary["results"]["schedule"] = sched;
  ctx.check("schedule_converged", q.converged, q.value, 0.0);
  if (model.has_phi_ss()) {
    const double exact = model.phi_ss(target);
    const double rel = std::fabs(q.value - exact) / std::max(1e-12, exact);
    ctx.summary["results"]["analytic_value"] = exact;
    ctx.check("matches_analytic_rate", rel <= tolerance, rel, tolerance);
  }

  // Optional sweep over grid targets, written as a field.
  if (ctx.has("quasipotential.sweep")) {
    const Grid sweep = parse_grid("quasipotential.sweep", ctx.str("quasipotential.sweep"));
    if (sweep.dim() != model.dim)
      throw ConfigError("key 'quasipotential.sweep': grid dimension mismatch");
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("quasipotential");
    auto w = ctx.csv("quasipotential_field.csv", cols);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const Vec x = sweep.node(i);
      double value = 0.0;
      if (norm_inf(x - attractor) > 1e-9) value = quasipotential(model, attractor, x).value;
      std::vector<double> row = x;
      row.push_back(value);
      w.row(row);
    }
  }
}

void cmd_decompose(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  if (!model.has_phi_ss())
    throw ConfigError("decompose: model has no analytic stationary rate function");
  const Grid grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim);
  const double tolerance = ctx.require_positive("tolerance", 1e-8);
  ctx.summary["results"]["grid"] = grid_to_string(grid);
  const auto phi = PhiSS::analytic(model);
  const auto dec = drift_decomposition(model, phi, grid);
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    for (int c = 1; c <= model.dim; ++c) cols.push_back("gamma" + std::to_string(c));
    auto w = ctx.csv("gamma.csv", cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row = grid.node(i);
      for (int c = 0; c < model.dim; ++c)
        row.push_back(dec.gamma[i * static_cast<std::size_t>(model.dim) + static_cast<std::size_t>(c)]);
      w.row(row);
    }
  }
  ctx.summary["results"]["max_orthogonality_residual"] = dec.max_orthogonality_residual;
  ctx.check("orthogonality", dec.max_orthogonality_residual <= tolerance,
            dec.max_orthogonality_residual, tolerance);
}

void cmd_epr(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  if (!model.has_phi_ss()) throw ConfigError("epr: model has no analytic stationary rate function");
  const Grid grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim);
  ctx.summary["results"]["grid"] = grid_to_string(grid);
  const auto phi = PhiSS::analytic(model);
  double worst = 0.0;
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    cols.push_back("total");
    cols.push_back("dissipation");
    cols.push_back("housekeeping");
    auto w = ctx.csv("epr.csv", cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec x = grid.node(i);
      const auto e = epr_breakdown(model, phi, x);
      worst = std::max(worst, std::fabs(e.residual()));
      std::vector<double> row = x;
      row.push_back(e.total);
      row.push_back(e.free_energy_dissipation);
      row.push_back(e.housekeeping);
      w.row(row);
    }
  }
  ctx.summary["results"]["max_pythagorean_residual"] = worst;
  ctx.check("pythagorean_identity", worst <= 1e-10, worst, 1e-10);
}

void cmd_entropy(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  const double epsilon = ctx.require_positive("epsilon", 0.1);
  const double delta_t = ctx.require_positive("delta_t", 0.01);
  fpe::FPEConfig cfg;
  cfg.epsilon = epsilon;
  cfg.grid = ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim, 3.5, 281);
  ctx.summary["results"]["grid"] = grid_to_string(cfg.grid);
  const auto st = fpe::stationary_density(model, cfg);
  const auto report = meso_eit_entropy(model, epsilon, st.density, delta_t);
  ctx.summary["results"]["s_cit"] = report.s_cit;
  ctx.summary["results"]["s_meso_eit"] = report.s_meso_eit;
  ctx.summary["results"]["difference"] = report.difference;
  ctx.summary["results"]["ds_cit_dt_flux"] = report.ds_cit_dt_flux;
  ctx.summary["results"]["ds_cit_dt_production"] = report.ds_cit_dt_production;
  ctx.summary["results"]["uncertainty_product"] = uncertainty_product(epsilon, delta_t);
  ctx.check("production_nonnegative", report.ds_cit_dt_production >= 0.0,
            report.ds_cit_dt_production, 0.0);
}

void cmd_eit(RunContext& ctx) {
  const ModelSpec model = build_model(ctx);
  echo_model(ctx, model);
  if (!model.has_phi_ss()) throw ConfigError("eit: model has no analytic stationary rate function");
  const double epsilon = ctx.require_positive("epsilon", 0.1);
  const double delta_t = ctx.require_positive("delta_t", 0.1);
  const auto phi = PhiSS::analytic(model);

  const Grid x_grid =
      ctx.has("grid") ? parse_grid("grid", ctx.str("grid")) : default_grid(model.dim, 2.0, 21);
  const Grid y_grid = eit::default_momentum_grid(model, epsilon, delta_t);
  ctx.summary["results"]["grid"] = grid_to_string(x_grid);
  ctx.summary["results"]["momentum_grid"] = grid_to_string(y_grid);
  const auto field = eit::make_field(model, phi, x_grid, y_grid, delta_t);
  const auto contraction = eit::contract(field);
  {
    std::vector<std::string> cols;
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    for (int c = 1; c <= model.dim; ++c) cols.push_back("y" + std::to_string(c));
    cols.push_back("phi");
    auto w = ctx.csv("field.csv", cols);
    for (std::size_t xi = 0; xi < x_grid.size(); ++xi)
      for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
        std::vector<double> row = x_grid.node(xi);
        const Vec y = y_grid.node(yi);
        row.insert(row.end(), y.begin(), y.end());
        row.push_back(field.at(xi, yi));
        w.row(row);
      }
  }

  eit::EITDynamicsConfig dyn;
  dyn.delta_t = delta_t;
  dyn.step = ctx.require_positive("eit.step", 1e-3);
  if (ctx.has("eit.alpha")) {
    auto compiled = expr::compile(ctx.str("eit.alpha"), model.dim, model.params);
    dyn.alpha = [compiled](const Vec& x, const Vec& y) { return compiled(x, y); };
  }
  Vec x0(static_cast<std::size_t>(model.dim), 1.0);
  Vec y0(static_cast<std::size_t>(model.dim), 0.5);
  if (ctx.has("eit.x0")) x0 = parse_number_list("eit.x0", ctx.str("eit.x0"));
  if (ctx.has("eit.y0")) y0 = parse_number_list("eit.y0", ctx.str("eit.y0"));
  const double horizon = ctx.require_positive("eit.horizon", 10.0);
  const auto ledger = eit::relaxation(model, phi, dyn, {x0, y0}, horizon);
  {
    std::vector<std::string> cols{"t"};
    for (int c = 1; c <= model.dim; ++c) cols.push_back("x" + std::to_string(c));
    for (int c = 1; c <= model.dim; ++c) cols.push_back("y" + std::to_string(c));
    cols.push_back("phi");
    cols.push_back("flux_term");
    cols.push_back("production_state");
    cols.push_back("production_momentum");
    auto w = ctx.csv("relaxation.csv", cols);
    for (std::size_t k = 0; k < ledger.times.size(); ++k) {
      std::vector<double> row{ledger.times[k]};
      for (int c = 0; c < model.dim; ++c) row.push_back(ledger.states[k].x[static_cast<std::size_t>(c)]);
      for (int c = 0; c < model.dim; ++c) row.push_back(ledger.states[k].y[static_cast<std::size_t>(c)]);
      row.push_back(ledger.phi[k]);
      row.push_back(ledger.flux_term[k]);
      row.push_back(ledger.production_state[k]);
      row.push_back(ledger.production_momentum[k]);
      w.row(row);
    }
  }
  const auto ness = eit::ness_diagnostics(model, phi, x_grid);
  json minima = json::array();
  for (std::size_t i = 0; i < ness.minima.size(); ++i)
    minima.push_back({{"x", ness.minima[i]}, {"steady_flux", ness.steady_flux[i]}});
  ctx.summary["results"]["ness_minima"] = minima;
  ctx.summary["results"]["contraction_max_argmin"] = contraction.max_argmin_norm;
  ctx.summary["results"]["cumulative_phi_increase"] = ledger.cumulative_increase;
  ctx.check("contraction_argmin_zero", contraction.max_argmin_norm == 0.0,
            contraction.max_argmin_norm, 0.0);
  ctx.check("relaxation_lyapunov", ledger.cumulative_increase <= 1e-6, ledger.cumulative_increase,
            1e-6);
}

void cmd_ou_demo(RunContext& ctx) {
  ou::OUParams params;
  params.b = ctx.require_positive("model.params.b", 1.0);
  params.D = ctx.require_positive("model.params.D", 1.0);
  const double t = ctx.require_positive("ou.t", 1.0);
  const double x_prime = ctx.num("ou.x_prime", 1.0);

  // WKB sweep: −ε ln p^ss against the stationary rate function.
  {
    auto w = ctx.csv("wkb.csv", {"x", "eps", "minus_eps_ln_p", "phi_ss"});
    for (double eps : {0.2, 0.1, 0.05, 0.02}) {
      for (int i = 0; i <= 200; ++i) {
        const double x = -2.0 + 4.0 * i / 200.0;
        const double p = ou::stationary_density(params, eps, x);
        w.row({x, eps, -eps * std::log(p), params.b * x * x / (2.0 * params.D)});
      }
    }
  }
  // Double limit in both orders as a function of t.
  double eps_first = 0.0, sigma_first = 0.0;
  {
    auto w = ctx.csv("double_limit.csv",
                     {"t", "eps_first", "sigma_first", "total_variance", "markov_variance"});
    for (int i = 1; i <= 200; ++i) {
      const double tt = 2.0 * i / 200.0;
      ou::DoubleLimitSpec spec{0.1, 0.05, x_prime, 0.0, tt, ou::LimitOrder::EpsilonFirst};
      const double ef = ou::double_limit(params, spec);
      spec.order = ou::LimitOrder::SigmaFirst;
      const double sf = ou::double_limit(params, spec);
      w.row({tt, ef, sf, ou::total_variance(params, spec), ou::markov_variance(params, spec.epsilon, tt)});
      if (std::fabs(tt - t) < 1e-9) {
        eps_first = ef;
        sigma_first = sf;
      }
    }
  }
  // Conservative vs dissipative phase dynamics.
  const auto ham = ou::reference_dynamics(params, ou::ReferenceKind::Hamiltonian, {{1.0}, {0.2}},
                                          std::nullopt, 2.0, 1e-2);
  const auto eit_ref =
      ou::reference_dynamics(params, ou::ReferenceKind::Eit, {{1.0}, {0.2}}, 0.1, 2.0, 1e-2);
  {
    auto w = ctx.csv("dynamics.csv", {"t", "x_ham", "y_ham", "H", "x_eit", "y_eit"});
    for (std::size_t k = 0; k < ham.times.size(); ++k)
      w.row({ham.times[k], ham.states[k].x[0], ham.states[k].y[0], ham.energy[k],
             eit_ref.states[k].x[0], eit_ref.states[k].y[0]});
  }
  // Kernel semigroup closure by trapezoid quadrature.
  double ck_err = 0.0;
  {
    const double eps = 0.1, t1 = 0.4, t2 = 0.6, xp = 0.5;
    for (double x : {-0.5, 0.0, 0.8}) {
      double lhs = 0.0;
      const int nq = 4001;
      const double zlo = -5.0, zhi = 5.0, hq = (zhi - zlo) / (nq - 1);
      for (int i = 0; i < nq; ++i) {
        const double z = zlo + i * hq;
        const double wq = (i == 0 || i == nq - 1) ? 0.5 : 1.0;
        lhs += wq * ou::transition(params, eps, x, t2, z) * ou::transition(params, eps, z, t1, xp);
      }
      lhs *= hq;
      ck_err = std::max(ck_err, std::fabs(lhs - ou::transition(params, eps, x, t1 + t2, xp)));
    }
  }
  const double expected_sigma_first =
      ou::transition_parts(params, 1.0, 0.0, t, x_prime).rate;
  ctx.summary["results"]["eps_first_limit"] = eps_first;
  ctx.summary["results"]["sigma_first_limit"] = sigma_first;
  ctx.summary["results"]["ck_closure_error"] = ck_err;
  ctx.summary["results"]["hamiltonian_drift"] = ham.energy_drift;
  ctx.check("eps_first_is_zero", eps_first == 0.0, eps_first, 0.0);
  ctx.check("sigma_first_matches_kernel_exponent",
            std::fabs(sigma_first - expected_sigma_first) <= 1e-12,
            std::fabs(sigma_first - expected_sigma_first), 1e-12);
  ctx.check("limits_disagree", sigma_first > 1e-6, sigma_first, 1e-6);
  ctx.check("ck_closure", ck_err <= 1e-8, ck_err, 1e-8);
  ctx.check("hamiltonian_conserved", ham.energy_drift <= 1e-12, ham.energy_drift, 1e-12);
}

// ---- config schema ----------------------------------------------------------

const std::set<std::string> kGlobalKeys = {"command", "model.name", "model.dim", "epsilon",
                                           "delta_t", "seed",       "out",       "grid",
                                           "tolerance"};

const std::map<std::string, std::set<std::string>> kCommandKeys = {
    {"validate", {}},
    {"simulate",
     {"simulate.step", "simulate.horizon", "simulate.n_paths", "simulate.record_stride",
      "simulate.x0", "simulate.burn_in"}},
    {"fpe", {"fpe.t_final", "fpe.time_step", "fpe.conv_tol", "fpe.x0"}},
    {"quasipotential", {"quasipotential.target", "quasipotential.attractor", "quasipotential.sweep"}},
    {"decompose", {}},
    {"epr", {}},
    {"entropy", {}},
    {"eit", {"eit.step", "eit.alpha", "eit.x0", "eit.y0", "eit.horizon"}},
    {"ou-demo", {"ou.t", "ou.x_prime"}},
};

void check_keys(const std::string& command, const std::map<std::string, std::string>& cfg) {
  const auto it = kCommandKeys.find(command);
  if (it == kCommandKeys.end()) throw ConfigError("key 'command': unknown command '" + command + "'");
  for (const auto& [key, value] : cfg) {
    if (kGlobalKeys.count(key) || it->second.count(key)) continue;
    if (key.rfind("model.params.", 0) == 0 || key.rfind("model.drift_expr.", 0) == 0 ||
        key.rfind("model.diffusion_expr.", 0) == 0)
      continue;
    throw ConfigError("key '" + key + "': unknown key for command '" + command + "'");
  }
}

int run(RunContext& ctx) {
  ctx.summary["tool"] = {{"name", "ldt"}, {"version", kVersion}};
  ctx.summary["command"] = ctx.command;
  ctx.summary["seed"] = ctx.seed;
  ctx.summary["config_hash"] = io::hash_hex(ctx.hash);
  json inputs = json::object();
  for (const auto& [k, v] : ctx.cfg) inputs[k] = v;
  ctx.summary["inputs"] = inputs;

  std::string runtime_error_msg;
  try {
    if (ctx.command == "validate") cmd_validate(ctx);
    else if (ctx.command == "simulate") cmd_simulate(ctx);
    else if (ctx.command == "fpe") cmd_fpe(ctx);
    else if (ctx.command == "quasipotential") cmd_quasipotential(ctx);
    else if (ctx.command == "decompose") cmd_decompose(ctx);
    else if (ctx.command == "epr") cmd_epr(ctx);
    else if (ctx.command == "entropy") cmd_entropy(ctx);
    else if (ctx.command == "eit") cmd_eit(ctx);
    else if (ctx.command == "ou-demo") cmd_ou_demo(ctx);
    else throw ConfigError("key 'command': unknown command '" + ctx.command + "'");
  } catch (const ConfigError&) {
    throw;  // config problems keep exit code 2
  } catch (const Error& e) {
    runtime_error_msg = e.what();
  }

  json asserts = json::array();
  bool all_pass = runtime_error_msg.empty();
  for (const auto& a : ctx.assertions) {
    asserts.push_back(
        {{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"tolerance", a.tolerance}});
    all_pass = all_pass && a.pass;
  }
  ctx.summary["assertions"] = asserts;
  if (!runtime_error_msg.empty()) ctx.summary["error"] = runtime_error_msg;
  ctx.summary["pass"] = all_pass;

  std::ofstream out(ctx.out_dir / "summary.json");
  if (!out) throw IOError("cannot write summary to '" + (ctx.out_dir / "summary.json").string() + "'");
  out << ctx.summary.dump(2) << "\n";
  out.close();

  if (!runtime_error_msg.empty()) std::cerr << "error: " << runtime_error_msg << "\n";
  for (const auto& a : ctx.assertions)
    std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << " value=" << io::fmt(a.value)
              << " tolerance=" << io::fmt(a.tolerance) << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"large-deviations thermodynamics toolkit"};
  app.require_subcommand(1);

  std::string config_path, model_name, grid_text, out_dir, target, attractor, x0, y0, alpha;
  std::vector<std::string> params;
  double epsilon = -1.0, delta_t = -1.0, tolerance = -1.0, t_final = -1.0, horizon = -1.0;
  long seed = -1, n_paths = -1;

  std::vector<CLI::App*> subs;
  for (const char* name : {"validate", "simulate", "fpe", "quasipotential", "decompose", "epr",
                           "entropy", "eit", "ou-demo"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--model", model_name, "builtin model name or 'custom'");
    sub->add_option("--param", params, "model parameter override k=v")->take_all();
    sub->add_option("--epsilon", epsilon, "noise level");
    sub->add_option("--delta-t", delta_t, "time resolution");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--grid", grid_text, "grid as lo:hi:n[,lo:hi:n...]");
    sub->add_option("--tolerance", tolerance, "assertion tolerance");
    sub->add_option("--target", target, "target state (quasipotential)");
    sub->add_option("--attractor", attractor, "attractor state (quasipotential)");
    sub->add_option("--t-final", t_final, "evolution time (fpe)");
    sub->add_option("--horizon", horizon, "simulation horizon");
    sub->add_option("--n-paths", n_paths, "ensemble size");
    sub->add_option("--x0", x0, "initial state");
    sub->add_option("--y0", y0, "initial momentum (eit)");
    sub->add_option("--alpha", alpha, "damping expression (eit)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    RunContext ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) ctx.cfg = io::load_config(config_path);
    if (ctx.cfg.count("command") && ctx.cfg["command"] != ctx.command)
      throw ConfigError("key 'command': config says '" + ctx.cfg["command"] +
                        "' but the subcommand is '" + ctx.command + "'");
    ctx.cfg["command"] = ctx.command;

    // Flag overrides.
    if (!model_name.empty()) ctx.cfg["model.name"] = model_name;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--param expects k=v, got '" + kv + "'");
      ctx.cfg["model.params." + kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (epsilon >= 0.0) ctx.cfg["epsilon"] = io::fmt(epsilon);
    if (delta_t >= 0.0) ctx.cfg["delta_t"] = io::fmt(delta_t);
    if (seed >= 0) ctx.cfg["seed"] = std::to_string(seed);
    if (!out_dir.empty()) ctx.cfg["out"] = out_dir;
    if (!grid_text.empty()) ctx.cfg["grid"] = grid_text;
    if (tolerance >= 0.0) ctx.cfg["tolerance"] = io::fmt(tolerance);
    if (!target.empty()) ctx.cfg["quasipotential.target"] = target;
    if (!attractor.empty()) ctx.cfg["quasipotential.attractor"] = attractor;
    if (t_final >= 0.0) ctx.cfg["fpe.t_final"] = io::fmt(t_final);
    if (horizon >= 0.0) ctx.cfg[ctx.command == "eit" ? "eit.horizon" : "simulate.horizon"] =
        io::fmt(horizon);
    if (n_paths >= 0) ctx.cfg["simulate.n_paths"] = std::to_string(n_paths);
    if (!x0.empty()) ctx.cfg[ctx.command == "eit" ? "eit.x0" : (ctx.command == "fpe" ? "fpe.x0" : "simulate.x0")] = x0;
    if (!y0.empty()) ctx.cfg["eit.y0"] = y0;
    if (!alpha.empty()) ctx.cfg["eit.alpha"] = alpha;

    check_keys(ctx.command, ctx.cfg);

    // Range checks on shared numeric keys before dispatch.
    for (const char* key : {"epsilon", "delta_t", "tolerance"})
      if (ctx.cfg.count(key)) {
        const double v = io::parse_double(key, ctx.cfg[key]);
        if (!(v > 0.0))
          throw ConfigError("key '" + std::string(key) + "': must be positive, got " + io::fmt(v));
      }
    if (ctx.cfg.count("seed")) {
      const long s = io::parse_long("seed", ctx.cfg["seed"]);
      if (s < 0) throw ConfigError("key 'seed': must be nonnegative");
      ctx.seed = static_cast<std::uint64_t>(s);
    }
    ctx.hash = io::config_hash(ctx.cfg);

    const char* env_out = std::getenv("LDT_OUT_DIR");
    std::string out = ctx.cfg.count("out") ? ctx.cfg["out"] : (env_out ? env_out : "ldt-out");
    ctx.out_dir = out;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IOError("cannot create output directory '" + out + "'");

    return run(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IOError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
