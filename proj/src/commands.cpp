#include "hessvar/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hessvar/config.hpp"
#include "hessvar/diagnostics.hpp"
#include "hessvar/energy.hpp"
#include "hessvar/errors.hpp"
#include "hessvar/grid_io.hpp"
#include "hessvar/hamstat.hpp"
#include "hessvar/parallel.hpp"
#include "hessvar/solver.hpp"

namespace hessvar::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kSchema = 1;

Json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json index_json(const Index& idx, int dim) {
  Json a = Json::array();
  for (int k = 0; k < dim; ++k) a.push_back(idx[k]);
  return a;
}

Json point_json(const GridGeometry& g, const Index& idx) {
  Json a = Json::array();
  for (int k = 0; k < g.dim; ++k) a.push_back(num(g.coord(idx[k], k)));
  return a;
}

Json ball_json(const GridGeometry& g, const Ball& b) {
  return Json{{"center", point_json(g, b.center)}, {"center_index", index_json(b.center, g.dim)},
              {"radius", num(b.radius)}};
}

struct Context {
  Config cfg;
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::ostream* out = nullptr;
};

Json report_header(Context& ctx, const std::string& command) {
  Json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["seed"] = ctx.seed;
  return j;
}

void write_json(const fs::path& path, Json report, const Config& cfg) {
  report["config"] = cfg.resolved();
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << report.dump(2) << '\n';
}

using PotentialFn = std::function<double(const Point&)>;

PotentialFn named_function(Config& cfg, const std::string& key, const std::string& fallback,
                           double amplitude, int dim) {
  const std::string name = cfg.get_choice(
      key, fallback, {"zero", "biharmonic_cubic", "harmonic_cubic", "half_square", "exp_sin", "paraboloid"});
  if (name == "zero") return [](const Point&) { return 0.0; };
  if (name == "biharmonic_cubic") return [amplitude](const Point& x) { return amplitude * x[0] * x[0] * x[0] * x[1]; };
  if (name == "harmonic_cubic")
    return [amplitude](const Point& x) { return amplitude * (x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1]); };
  if (name == "half_square") return [amplitude](const Point& x) { return amplitude * 0.5 * x[0] * x[0]; };
  if (name == "exp_sin") return [amplitude](const Point& x) { return amplitude * std::exp(x[0]) * std::sin(x[1]); };
  return [amplitude, dim](const Point& x) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += x[a] * x[a];
    return amplitude * 0.5 * s;
  };
}

GridGeometry grid_from_config(Config& cfg) {
  const int dim = static_cast<int>(cfg.get_int("grid.dim", 2, 2, 3));
  const int nodes = static_cast<int>(cfg.get_int("grid.nodes", 65, 11, 4097));
  const double hw = cfg.get_double_in("grid.half_width", 1.0, 0.0, 1e6, false, true);
  return make_geometry(dim, nodes, hw);
}

GridFile load_field_file(const fs::path& path) {
  try {
    return load_grid_file(path);
  } catch (const PreconditionError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ScalarGrid load_scalar(const fs::path& path) {
  const GridFile f = load_field_file(path);
  if (f.components != 1) throw DataError(path.string() + ": expected a scalar grid");
  return to_scalar_grid(f);
}

/// Matrix field from a file holding either a scalar potential (its Hessian is
/// taken) or a packed matrix field.
SymMatField load_matrix_field(const fs::path& path, std::string* kind) {
  const GridFile f = load_field_file(path);
  if (f.components == 1) {
    if (kind) *kind = "hessian_of_scalar";
    return hessian_field(to_scalar_grid(f));
  }
  if (f.components == packed_size(f.geometry.dim)) {
    if (kind) *kind = "matrix_field";
    return to_field(f);
  }
  throw DataError(path.string() + ": expected a scalar potential or a symmetric matrix field");
}

void write_grid(Context& ctx, const std::string& stem, const ScalarGrid& u, std::string* name) {
  const std::string format = ctx.cfg.get_choice("output.format", "binary", {"binary", "csv"});
  *name = stem + (format == "binary" ? ".hvgf" : ".csv");
  std::ofstream os(ctx.out_dir / *name, std::ios::binary);
  if (!os) throw DataError("cannot write " + (ctx.out_dir / *name).string());
  if (format == "binary") write_binary(os, u);
  else write_csv(os, u);
}

fs::path input_file(Context& ctx, const std::vector<std::string>& inputs, const std::string& key) {
  if (!inputs.empty()) {
    if (inputs.size() > 1) throw ConfigError("expected a single field file");
    const fs::path p(inputs.front());
    if (!fs::exists(p)) throw ConfigError("field file does not exist: " + p.string());
    return p;
  }
  const auto p = ctx.cfg.get_path(key);
  if (!p) throw ConfigError("no field file given (positional argument or '" + key + "')");
  return *p;
}

EnergyModel model_from_config(Config& cfg, int dim) {
  const std::string kind = cfg.get_choice("model.kind", "quadratic", {"quadratic", "area", "table"});
  double rho = EnergyModel::kUnbounded;
  if (cfg.has("model.eta")) {
    if (cfg.has("model.rho")) cfg.fail("model.eta", "give either model.eta or model.rho, not both");
    rho = 1.0 - cfg.get_double_in("model.eta", 0.1, 0.0, 1.0, false, false);
  } else {
    rho = cfg.get_double_in("model.rho", EnergyModel::kUnbounded, 0.0, EnergyModel::kUnbounded, false, true);
  }
  EnergyModel model = EnergyModel::quadratic(dim, rho);
  if (kind == "area") {
    model = EnergyModel::area(dim, rho);
  } else if (kind == "table") {
    const auto path = cfg.get_path("model.table");
    if (!path) cfg.fail("model.table", "model.kind = table needs model.table");
    std::ifstream in(*path);
    CoefficientTable table;
    try {
      table = read_coefficient_table(in);
    } catch (const PreconditionError& e) {
      throw DataError(path->string() + ": " + e.what());
    }
    if (table.dim != dim) throw DataError(path->string() + ": table dimension does not match grid.dim");
    model = EnergyModel::from_table(std::move(table), rho);
  }
  if (cfg.get_bool("model.negate", false)) model = model.negated();
  return model;
}

Json step_json(const StepRecord& s) {
  return Json{{"iteration", s.iteration},     {"energy", num(s.energy)},
              {"grad_norm", num(s.grad_norm)}, {"step", num(s.step)},
              {"cg_iterations", s.cg_iterations}, {"cg_residual", num(s.cg_residual)}};
}

// ---------------------------------------------------------------- solve

int cmd_solve(Context& ctx) {
  Config& cfg = ctx.cfg;
  const std::string bkind = cfg.get_choice("boundary.kind", "function", {"function", "file"});
  GridGeometry geom;
  ClampedBoundaryData bc;
  ScalarGrid data_grid;
  std::optional<PotentialFn> exact;
  if (bkind == "file") {
    const auto path = cfg.get_path("boundary.file");
    if (!path) cfg.fail("boundary.file", "boundary.kind = file needs boundary.file");
    data_grid = load_scalar(*path);
    geom = data_grid.geometry();
    try {
      bc = ClampedBoundaryData::from_grid(data_grid);
    } catch (const PreconditionError& e) {
      throw DataError(path->string() + ": " + e.what());
    }
  } else {
    geom = grid_from_config(cfg);
    const double amp = cfg.get_double("boundary.amplitude", 1.0);
    exact = named_function(cfg, "boundary.function", "biharmonic_cubic", amp, geom.dim);
    bc = ClampedBoundaryData::from_function(geom, *exact);
    data_grid = ScalarGrid(geom);
    data_grid.fill(*exact);
  }
  const EnergyModel model = model_from_config(cfg, geom.dim);

  SolveOptions opt;
  opt.grad_tol = cfg.get_double_in("solver.grad_tol", 0.0, 0.0, 1e300, true, true);
  opt.max_iter = static_cast<int>(cfg.get_int("solver.max_iter", 50, 0, 100000));
  opt.cg_rel_tol = cfg.get_double_in("solver.cg_rel_tol", 1e-10, 0.0, 1.0, false, false);
  opt.cg_max_iter = static_cast<int>(cfg.get_int("solver.cg_max_iter", 0, 0, 1000000000));
  opt.admissibility_margin = cfg.get_double_in("solver.margin", 1e-6, 0.0, 1e300, true, true);
  const std::string init_kind = cfg.get_choice("solver.init", "data", {"data", "zero"});
  ScalarGrid init = init_kind == "data" ? data_grid : bc.initial_guess(0.0);
  bc.apply(init);
  for (std::size_t i = 0; i < init.size(); ++i) init.set_valid(i, true);

  const SolveResult res = minimize_clamped(model, bc, init, opt);

  std::string file;
  write_grid(ctx, "u", res.u, &file);
  Json j = report_header(ctx, "solve");
  j["model"] = Json{{"kind", model_kind_name(model.kind())}, {"name", model.name()},
                    {"admissible_radius", num(model.admissible_radius())}};
  j["grid"] = Json{{"dim", geom.dim}, {"extents", index_json(geom.extents, geom.dim)}, {"h", num(geom.spacing)}};
  const SolveReport& r = res.report;
  j["iterations"] = r.iterations;
  j["grad_norm"] = num(r.grad_norm);
  j["grad_tol"] = num(r.grad_tol);
  j["energy"] = num(r.energy);
  j["converged"] = r.converged;
  j["max_iter_reached"] = r.max_iter_reached;
  j["cg_rel_tol"] = num(r.cg_rel_tol);
  j["cg_max_iter"] = r.cg_max_iter;
  Json steps = Json::array();
  for (const StepRecord& s : r.steps) steps.push_back(step_json(s));
  j["steps"] = steps;
  if (exact) {
    double err = 0.0;
    for (std::size_t i = 0; i < res.u.size(); ++i) err = std::max(err, std::fabs(res.u[i] - (*exact)(geom.position(i))));
    j["max_deviation_from_boundary_function"] = num(err);
  }
  j["solution_file"] = file;
  write_json(ctx.out_dir / "solve_report.json", j, cfg);
  *ctx.out << "solve: " << (r.converged ? "converged" : "max_iter reached") << " after " << r.iterations
           << " iterations, grad_norm " << r.grad_norm << ", energy " << r.energy << '\n';
  return r.converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- diagnose

/// Four radii spaced geometrically from a quarter of the half-width down to 2h.
std::vector<double> default_radii(const GridGeometry& g) {
  const double r0 = 0.25 * g.interior_half_width();
  const double r1 = std::min(2.0 * g.spacing, 0.5 * r0);
  std::vector<double> r;
  for (int k = 0; k < 4; ++k) r.push_back(r0 * std::pow(r1 / r0, k / 3.0));
  return r;
}

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

Json campanato_json(const GridGeometry& g, const CampanatoResult& c) {
  Json radii = Json::array(), values = Json::array(), integrals = Json::array();
  for (std::size_t k = 0; k < c.curve.radii.size(); ++k) {
    radii.push_back(num(c.curve.radii[k]));
    values.push_back(num(c.curve.values[k]));
    integrals.push_back(num(c.curve.integrals[k]));
  }
  return Json{{"center", point_json(g, c.curve.center)}, {"p", num(c.curve.p)},
              {"slope", num(c.fit.slope)}, {"c", num(c.fit.constant)},
              {"fit_residual", num(c.fit.residual)}, {"degenerate", c.fit.degenerate},
              {"radii", radii}, {"values", values}, {"integrals", integrals}};
}

void write_campanato_csv(const fs::path& path, const std::vector<CampanatoResult>& curves) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << "p,radius,mean_oscillation,integral\n";
  for (const CampanatoResult& c : curves)
    for (std::size_t k = 0; k < c.curve.radii.size(); ++k)
      os << num(c.curve.p).dump() << ',' << num(c.curve.radii[k]).dump() << ','
         << num(c.curve.values[k]).dump() << ',' << num(c.curve.integrals[k]).dump() << '\n';
}

Index nearest_node(const GridGeometry& g, const std::vector<double>& x) {
  Index idx = g.center_index();
  for (int a = 0; a < g.dim && a < static_cast<int>(x.size()); ++a) {
    const int k = static_cast<int>(std::lround(x[a] / g.spacing)) + g.extents[a] / 2;
    idx[a] = std::clamp(k, 0, g.extents[a] - 1);
  }
  return idx;
}

int cmd_diagnose(Context& ctx, const std::vector<std::string>& inputs) {
  Config& cfg = ctx.cfg;
  const fs::path path = input_file(ctx, inputs, "diagnostics.field");
  std::string source_kind;
  const SymMatField f = load_matrix_field(path, &source_kind);
  const GridGeometry& g = f.geometry();
  const double hw = g.interior_half_width();
  const double h = g.spacing;
  const Index c = g.center_index();

  // Ball family on the inner half-domain.
  BallFamilyRule rule;
  rule.container_half_width = cfg.get_double_in("diagnostics.container", 0.5 * hw, 0.0, hw, false, true);
  rule.center_stride = static_cast<int>(
      cfg.get_int("diagnostics.ball_stride", std::max(1, (g.extents[0] - 1) / 16), 0, 1 << 20));
  rule.r_max = cfg.get_double_in("diagnostics.r_max", 0.5 * rule.container_half_width, 0.0, hw, false, true);
  rule.r_min = cfg.get_double_in("diagnostics.r_min", std::min(rule.r_max, std::max(4.0 * h, rule.r_max / 8.0)),
                                 0.0, hw, false, true);
  const BallFamily family = ball_family(g, rule);
  const BmoResult bmo = bmo_modulus(f, family);
  const double jn_p = cfg.get_double_in("diagnostics.jn_p", 2.0, 1.0, 1e6, true, true);
  const JohnNirenbergResult jn = john_nirenberg_ratio(f, family, jn_p);
  const double omega_threshold = cfg.get_double_in("diagnostics.omega_threshold", 0.1, 0.0, 1e300, false, true);

  // Campanato curve at the centre.
  const std::vector<double> cradii =
      cfg.get_doubles("diagnostics.campanato_radii", default_radii(g));
  const std::vector<double> cps = cfg.get_doubles("diagnostics.campanato_p", {2.0});
  std::vector<CampanatoResult> curves;
  for (double p : cps) curves.push_back(campanato_decay(f, c, cradii, p));

  // Reverse Hoelder at the centre and four axis offsets.
  std::vector<Index> centers{c};
  for (int a = 0; a < 2; ++a)
    for (int s : {-1, 1}) {
      Index x = c;
      x[a] += s * static_cast<int>(std::lround(0.25 * hw / h));
      centers.push_back(x);
    }
  const std::vector<double> scales = cfg.get_doubles("diagnostics.rh_scales", scaled({0.05, 0.1, 0.2}, hw));
  const ReverseHolderResult rh = reverse_holder_check(f, centers, scales);

  P0Options popt;
  popt.scan = cfg.get_doubles("diagnostics.p0_scan", {});
  popt.k_max = cfg.get_double_in("diagnostics.k_max", 10.0, 0.0, 1e300, false, true);
  const P0Estimate p0 = fit_p0(f, c, cradii, popt);

  const double tau = cfg.require_double("diagnostics.tau");
  if (!(tau >= 0.0)) cfg.fail("diagnostics.tau", "threshold must be >= 0");
  const double sigma_p0 = cfg.get_double_in("diagnostics.sigma_p0", p0.certified ? p0.p0 : 2.0, 1.0, 1e6, true, true);
  const std::vector<double> sradii = cfg.get_doubles("diagnostics.sigma_radii", {4.0 * h, 3.0 * h});
  const SingularMask mask = singular_set(f, sigma_p0, sradii, tau);
  const BoxDimension bd = box_counting_dimension(mask);
  {
    std::ofstream os(ctx.out_dir / "sigma_mask.hvgf", std::ios::binary);
    if (!os) throw DataError("cannot write sigma mask");
    write_binary_mask(os, g, mask.mask);
  }

  const double alpha = cfg.get_double_in("diagnostics.alpha", 0.5, 0.0, 1.0, false, false);
  const auto pairs = static_cast<std::size_t>(cfg.get_int("diagnostics.holder_pairs", 4000, 1, 100000000));
  const double region = cfg.get_double_in("diagnostics.holder_region", 0.75, 0.0, 1.0, false, true);
  const HolderEstimate hol = holder_seminorm(f, alpha, pairs, ctx.seed, region);

  Json j = report_header(ctx, "diagnose");
  j["field"] = Json{{"file", path.filename().string()}, {"kind", source_kind}, {"dim", g.dim},
                    {"extents", index_json(g.extents, g.dim)}, {"h", num(h)}};
  j["bmo"] = Json{{"omega", num(bmo.omega)}, {"ball", ball_json(g, bmo.ball)}, {"balls", bmo.balls},
                  {"family", Json{{"center_stride", rule.center_stride}, {"r_min", num(rule.r_min)},
                                  {"r_max", num(rule.r_max)}, {"container_half_width", num(rule.container_half_width)}}}};
  j["regime"] = bmo.omega < omega_threshold ? "small-BMO regime" : "not small-BMO";
  j["jn"] = Json{{"p", num(jn.p)}, {"cbar", num(jn.cbar)}, {"ball", ball_json(g, jn.ball)},
                 {"degenerate", jn.degenerate}, {"verdict", jn.verdict}};
  Json camp = Json::array();
  for (const auto& cr : curves) camp.push_back(campanato_json(g, cr));
  j["campanato"] = camp;
  Json constants = Json::array();
  for (const auto& e : rh.entries)
    constants.push_back(Json{{"center", point_json(g, e.center)}, {"scale", num(e.scale)},
                             {"constant", num(e.constant)}, {"degenerate", e.degenerate}});
  Json pconst = Json::array(), pscan = Json::array();
  for (std::size_t k = 0; k < p0.scan.size(); ++k) {
    pscan.push_back(num(p0.scan[k]));
    pconst.push_back(num(p0.constants[k]));
  }
  j["gehring"] = Json{{"pbar", num(rh.pbar)}, {"constants", constants}, {"max_constant", num(rh.max_constant)},
                      {"p0", p0.certified ? num(p0.p0) : Json(nullptr)}, {"p0_certified", p0.certified},
                      {"p0_verdict", p0.verdict}, {"k_max", num(p0.k_max)}, {"p0_scan", pscan},
                      {"p0_constants", pconst}};
  Json sizes = Json::array(), counts = Json::array();
  for (std::size_t k = 0; k < bd.box_sizes.size(); ++k) {
    sizes.push_back(num(bd.box_sizes[k]));
    counts.push_back(num(bd.counts[k]));
  }
  j["sigma"] = Json{{"p0", num(mask.p0)}, {"tau", num(mask.tau)}, {"radii", Json{num(mask.radii[0]), num(mask.radii[1])}},
                    {"mask_file", "sigma_mask.hvgf"}, {"count", mask.count},
                    {"box_dim", bd.empty ? Json(nullptr) : num(bd.dimension)}, {"empty", bd.empty},
                    {"box_dim_note", "upper box-counting dimension at this resolution"},
                    {"box_sizes", sizes}, {"box_counts", counts}};
  j["holder"] = Json{{"alpha", num(hol.alpha)}, {"seminorm", num(hol.seminorm)}, {"pairs", hol.pairs},
                     {"seed", hol.seed}, {"region_fraction", num(region)},
                     {"x", point_json(g, hol.x)}, {"y", point_json(g, hol.y)}};
  write_campanato_csv(ctx.out_dir / "campanato.csv", curves);
  write_json(ctx.out_dir / "diagnostics_report.json", j, cfg);
  *ctx.out << "diagnose: omega " << bmo.omega << " (" << j["regime"].get<std::string>() << "), singular nodes "
           << mask.count << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- hamstat

int cmd_hamstat(Context& ctx) {
  Config& cfg = ctx.cfg;
  const double eta = cfg.get_double_in("hamstat.eta", 0.1, 0.0, 1.0, false, false);
  const int samples = static_cast<int>(cfg.get_int("hamstat.samples", 10000, 1, 100000000));
  const double inner = cfg.get_double_in("hamstat.inner_fraction", 0.5, 0.0, 1.0, false, true);
  ScalarGrid u;
  std::string source;
  if (const auto path = cfg.get_path("hamstat.file")) {
    u = load_scalar(*path);
    source = path->filename().string();
  } else {
    const GridGeometry g = grid_from_config(cfg);
    const double amp = cfg.get_double("hamstat.amplitude", 0.1);
    const PotentialFn fn = named_function(cfg, "hamstat.potential", "harmonic_cubic", amp, g.dim);
    u = ScalarGrid(g);
    u.fill(fn);
    source = cfg.resolved()["hamstat"]["potential"].get<std::string>();
  }
  const GridGeometry& g = u.geometry();
  const SymMatField hess = hessian_field(u);
  const PhaseField phase = lagrangian_phase(hess);
  double phase_sup = 0.0, hess_sup = 0.0;
  for (std::size_t i = 0; i < hess.size(); ++i) {
    if (!hess.valid(i)) continue;
    phase_sup = std::max(phase_sup, std::fabs(phase.theta[i]));
    hess_sup = std::max(hess_sup, operator_norm(hess.at(i)));
  }
  std::string phase_file;
  write_grid(ctx, "phase", phase.theta, &phase_file);

  // hstat residual against smooth bumps in the inner region.
  const double hw = g.interior_half_width();
  std::vector<Point> centers{Point{0.0, 0.0, 0.0}};
  for (int a = 0; a < g.dim; ++a)
    for (double s : {-1.0, 1.0}) {
      Point p{0.0, 0.0, 0.0};
      p[a] = s * 0.25 * hw;
      centers.push_back(p);
    }
  const TestFunctionSet bumps = TestFunctionSet::smooth_bumps(g, centers, 0.25 * hw);
  const std::vector<double> res = hamstat_residual(u, bumps);
  double res_max = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) res_max = std::max(res_max, std::fabs(res[k]) / bumps.hessian_l1_norm(k));
  const ResidualSummary lb = phase_harmonicity_residual(u, inner);

  const ConvexityCertificate cert = convexity_certificate(eta, g.dim, samples, ctx.seed);

  Json j = report_header(ctx, "hamstat");
  j["potential"] = Json{{"source", source}, {"dim", g.dim}, {"extents", index_json(g.extents, g.dim)}, {"h", num(g.spacing)}};
  j["hessian_sup_op_norm"] = num(hess_sup);
  j["within_convexity_margin"] = hess_sup <= 1.0 - eta;
  j["phase"] = Json{{"sup", num(phase_sup)}, {"file", phase_file}};
  j["residuals"] = Json{
      {"hstat", Json{{"max_normalized", num(res_max)}, {"tests", res.size()}, {"bump_scale", num(0.25 * hw)},
                     {"h", num(g.spacing)}}},
      {"phase_harmonicity", Json{{"sup", num(lb.sup)}, {"l2", num(lb.l2)}, {"nodes", lb.nodes},
                                 {"inner_fraction", num(inner)}}}};
  j["certificate"] = Json{{"eta", num(cert.eta)}, {"n", cert.n}, {"samples", cert.samples}, {"seed", cert.seed},
                          {"min_eig", num(cert.min_eig)}, {"min_eig_normalized", num(cert.min_eig_normalized)},
                          {"C_eta", num(cert.c_eta)}, {"diagonal_min", num(cert.diagonal_min)},
                          {"diagonal_check", cert.diagonal_check ? "pass" : "fail"},
                          {"uniformly_convex", cert.min_eig > 0.0}};
  write_json(ctx.out_dir / "hamstat_report.json", j, cfg);
  *ctx.out << "hamstat: phase sup " << phase_sup << ", hstat residual " << res_max << ", C_eta " << cert.c_eta
           << ", diagonal check " << (cert.diagonal_check ? "pass" : "fail") << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- campanato

int cmd_campanato(Context& ctx, const std::vector<std::string>& inputs) {
  Config& cfg = ctx.cfg;
  const fs::path path = input_file(ctx, inputs, "campanato.field");
  std::string source_kind;
  const SymMatField f = load_matrix_field(path, &source_kind);
  const GridGeometry& g = f.geometry();
  const Index c = nearest_node(g, cfg.get_doubles("campanato.center", std::vector<double>(g.dim, 0.0)));
  const std::vector<double> radii = cfg.get_doubles("campanato.radii", default_radii(g));
  const std::vector<double> ps = cfg.get_doubles("campanato.p", {2.0});
  for (double p : ps)
    if (!(p >= 1.0)) cfg.fail("campanato.p", "exponents must be >= 1");
  const double A = cfg.get_double_in("campanato.A", 1.0, 0.0, 1e300, false, true);
  const double B = cfg.get_double_in("campanato.B", 0.0, 0.0, 1e300, true, true);
  const double beta = cfg.get_double_in("campanato.beta", 0.0, 0.0, 1e300, true, true);
  const bool has_kappa = cfg.has("campanato.kappa");
  const double kappa_cfg = has_kappa ? cfg.get_double("campanato.kappa", 0.0) : 0.0;
  const double gamma = cfg.get_double("campanato.gamma", g.dim);

  std::vector<CampanatoResult> curves;
  Json arr = Json::array();
  for (double p : ps) {
    const CampanatoResult cr = campanato_decay(f, c, radii, p);
    curves.push_back(cr);
    Json e = campanato_json(g, cr);
    IterationLemmaInput in;
    in.radii = cr.curve.radii;
    in.phi = cr.curve.integrals;
    in.A = A;
    in.kappa = has_kappa ? kappa_cfg : g.dim + p;
    in.gamma = gamma;
    in.B = B;
    in.beta = beta;
    try {
      const IterationLemmaResult r = iteration_lemma_check(in);
      e["iteration_lemma"] = Json{{"kappa", num(in.kappa)}, {"gamma", num(in.gamma)}, {"A", num(A)},
                                  {"B", num(B)}, {"beta", num(beta)}, {"theta", num(r.theta)},
                                  {"epsilon", num(r.epsilon)}, {"epsilon0", num(r.epsilon0)},
                                  {"hypothesis_ok", r.hypothesis_ok}, {"c", num(r.c)}, {"pairs", r.pairs},
                                  {"verdict", r.verdict}};
    } catch (const PreconditionError& ex) {
      e["iteration_lemma"] = Json{{"verdict", std::string("not applicable: ") + ex.what()}};
    }
    arr.push_back(e);
  }
  Json j = report_header(ctx, "campanato");
  j["field"] = Json{{"file", path.filename().string()}, {"kind", source_kind}, {"h", num(g.spacing)}};
  j["campanato"] = arr;
  write_campanato_csv(ctx.out_dir / "campanato.csv", curves);
  write_json(ctx.out_dir / "campanato_report.json", j, cfg);
  for (const auto& cr : curves)
    *ctx.out << "campanato: p = " << cr.curve.p << ", slope " << cr.fit.slope << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- report-merge

int cmd_merge(Context& ctx, const std::vector<std::string>& inputs) {
  std::vector<std::string> files = inputs;
  if (files.empty()) files = ctx.cfg.get_strings("merge.inputs", {});
  if (files.empty()) throw ConfigError("report-merge needs input reports (positional or merge.inputs)");
  Json j = report_header(ctx, "report-merge");
  Json list = Json::array();
  for (const std::string& name : files) {
    fs::path p(name);
    if (p.is_relative() && inputs.empty() && !ctx.cfg.base_dir().empty()) p = ctx.cfg.base_dir() / p;
    std::ifstream in(p);
    if (!in) throw DataError("cannot read report " + p.string());
    Json r;
    try {
      r = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw DataError(p.string() + ": not valid JSON: " + e.what());
    }
    if (!r.is_object() || !r.contains("schema") || r["schema"] != kSchema)
      throw DataError(p.string() + ": not a schema 1 report");
    list.push_back(Json{{"file", p.filename().string()}, {"command", r.value("command", "")}, {"report", r}});
  }
  j["reports"] = list;
  write_json(ctx.out_dir / "merged_report.json", j, ctx.cfg);
  *ctx.out << "report-merge: merged " << files.size() << " reports\n";
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "diagnose", "hamstat", "campanato", "report-merge"};
  return names;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    Context ctx;
    ctx.out = &out;
    ctx.cfg = options.config ? Config::load(*options.config) : Config::parse("", "<defaults>");
    if (options.seed) ctx.cfg.set_override("run.seed", std::to_string(*options.seed));
    ctx.seed = static_cast<std::uint64_t>(ctx.cfg.get_int("run.seed", 0, 0, std::numeric_limits<std::int64_t>::max()));
    if (options.threads) {
      if (*options.threads < 1) throw ConfigError("--threads must be positive");
      set_thread_count(*options.threads);
    }
    ctx.out_dir = options.out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());

    if (name == "solve") return cmd_solve(ctx);
    if (name == "diagnose") return cmd_diagnose(ctx, options.inputs);
    if (name == "hamstat") return cmd_hamstat(ctx);
    if (name == "campanato") return cmd_campanato(ctx, options.inputs);
    if (name == "report-merge") return cmd_merge(ctx, options.inputs);
    throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const AdmissibilityError& e) {
    err << "admissibility error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const PreconditionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConvergenceError& e) {
    err << "not converged: " << e.what() << '\n';
    return kExitNotConverged;
  }
}

}  // namespace hessvar::cli
