#include "diffk/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "diffk/io.hpp"
#include "diffk/verify.hpp"
#include "diffk/workspace.hpp"

namespace diffk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string workspace;
  std::string out;
  std::uint64_t seed = 0;
  int grid = 2048;
  double tol = 1e-13;
  bool json = false;

  FlowSettings settings() const {
    FlowSettings s;
    s.grid = grid;
    s.tol = tol;
    return s;
  }
};

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  const Globals& globals() const { return g_; }

  const Workspace& workspace() {
    if (!ws_) ws_ = g_.workspace.empty() ? Workspace::builtin() : Workspace::load(g_.workspace);
    return *ws_;
  }

  // Single-output verbs: to --out when given, else to stdout.
  void emit(const std::string& text) {
    if (g_.out.empty()) {
      out_ << text;
    } else {
      write_file_atomic(g_.out, text);
      err_ << "wrote " << g_.out << "\n";
    }
  }
  void emit(const json& j) { emit(json_text(j)); }

  fs::path out_dir() {
    if (g_.out.empty()) throw UsageError("this verb writes several files; --out DIR is required");
    fs::create_directories(g_.out);
    return g_.out;
  }

  std::ostream& err() { return err_; }

 private:
  Globals g_;
  std::ostream& out_;
  std::ostream& err_;
  std::optional<Workspace> ws_;
};

std::vector<std::string> axis_names(const char* prefix, int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

void append(std::vector<double>& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
}

Vector point_arg(const std::string& text, int dim, const char* flag) {
  const Vector v = parse_point(text);
  if (v.size() != dim)
    throw DimensionError(std::string(flag) + " has " + std::to_string(v.size()) + " coordinates, expected " +
                         std::to_string(dim));
  return v;
}

// Evenly spaced points over [lo, hi] in 1D; in higher dimensions, a tensor
// grid over the bounding cube of K, keeping the points inside K.
std::vector<Vector> grid_points(const ConvexBody& body, int per_axis) {
  if (per_axis < 2) throw DomainError("--points must be at least 2");
  const int n = body.dimension();
  Vector lo, hi;
  if (const HPolytope* poly = body.as_polytope(); poly && n == 1) {
    lo = Vector::Constant(1, -std::numeric_limits<double>::infinity());
    hi = Vector::Constant(1, std::numeric_limits<double>::infinity());
    for (Eigen::Index r = 0; r < poly->normals.rows(); ++r) {
      const double bound = poly->offsets(r) / poly->normals(r, 0);
      if (poly->normals(r, 0) > 0) hi(0) = std::min(hi(0), bound);
      else lo(0) = std::max(lo(0), bound);
    }
  } else {
    const double r = body.bounding_radius();
    lo = body.interior_point().array() - r;
    hi = body.interior_point().array() + r;
  }
  std::vector<Vector> pts;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vector x(n);
    for (int i = 0; i < n; ++i)
      x(i) = idx[static_cast<std::size_t>(i)] == per_axis - 1
                 ? hi(i)
                 : lo(i) + (hi(i) - lo(i)) * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
    if (body.contains(x)) pts.push_back(x);
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return pts;
}

std::string numbered(const char* stem, int j) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d.csv", stem, j);
  return buf;
}

struct JetArg {
  bool rational = false;
  json value;
};

JetArg load_jet(Context& ctx, const std::string& ref) {
  const Workspace& ws = ctx.workspace();
  const auto ids = ws.jet_ids();
  JetArg arg;
  if (std::find(ids.begin(), ids.end(), ref) != ids.end()) {
    arg.value = ws.jet(ref);
  } else if (fs::is_regular_file(ref)) {
    std::ifstream in(ref);
    try {
      arg.value = json::parse(in);
    } catch (const json::exception& e) {
      throw DomainError(ref + ": " + e.what());
    }
  } else {
    throw DomainError("'" + ref + "' is neither a workspace jet nor a readable file");
  }
  arg.rational = jet_json_is_rational(arg.value);
  return arg;
}

json jet_report(const JetD& p) { return {{"jet", jet_to_json(p)}, {"text", to_string(p)}, {"exact", false}}; }
json jet_report(const JetQ& p) { return {{"jet", jet_to_json(p)}, {"text", to_string(p)}, {"exact", true}}; }

// ---------------------------------------------------------------------------
// verbs

struct ChartArgs {
  std::string element;
  int density = 41;
  std::string x0;
};

void check_chart(Context& ctx, const ChartArgs& a) {
  const Diffeo phi = ctx.workspace().element(a.element, ctx.globals().settings());
  const Vector x0 = a.x0.empty() ? phi.body().interior_point() : point_arg(a.x0, phi.body().dimension(), "--x0");
  const ChartReport r = chart_membership(phi, a.density, x0, 200, ctx.globals().seed);
  ctx.emit(json{{"element", a.element},
                {"pass", r.passed()},
                {"boundary_ok", r.boundary_ok},
                {"jacobian_ok", r.jacobian_ok},
                {"interior_point_ok", r.interior_point_ok},
                {"injectivity", injectivity_name(r.injectivity)},
                {"jacobian_margin", r.jacobian_margin},
                {"lipschitz_estimate", r.lipschitz_estimate},
                {"min_image_ratio", r.min_image_ratio},
                {"grid_points", r.grid_points},
                {"detail", r.detail}});
}

struct ComposeArgs {
  std::string outer, inner;
  std::vector<std::string> xs;
  int samples = 16;
};

void compose_verb(Context& ctx, const ComposeArgs& a) {
  const Workspace& ws = ctx.workspace();
  const Diffeo outer = ws.element(a.outer, ctx.globals().settings());
  const Diffeo inner = ws.element(a.inner, ctx.globals().settings());
  if (!(outer.body() == inner.body())) throw DomainError("compose: elements live on different bodies");
  const Diffeo c = compose(outer, inner);
  const int n = c.body().dimension();
  std::vector<Vector> pts;
  for (const auto& x : a.xs) pts.push_back(point_arg(x, n, "--x"));
  if (pts.empty()) pts = c.body().sample_interior(a.samples, ctx.globals().seed);

  if (ctx.globals().json) {
    json rows = json::array();
    for (const Vector& x : pts) rows.push_back({{"x", vector_json(x)}, {"y", vector_json(c.apply(x))}});
    ctx.emit(json{{"outer", a.outer}, {"inner", a.inner}, {"lip_gamma", c.lip_gamma()}, {"points", rows}});
    return;
  }
  auto header = axis_names("x", n);
  for (auto& s : axis_names("y", n)) header.push_back(s);
  std::vector<std::vector<double>> rows;
  for (const Vector& x : pts) {
    std::vector<double> row;
    append(row, x);
    append(row, c.apply(x));
    rows.push_back(std::move(row));
  }
  ctx.emit(csv_text(header, rows));
}

struct InvertArgs {
  std::string element, y;
};

void invert_at_verb(Context& ctx, const InvertArgs& a) {
  const Diffeo phi = ctx.workspace().element(a.element, ctx.globals().settings());
  const Vector y = point_arg(a.y, phi.body().dimension(), "--y");
  InverseOptions opts;
  opts.tol = ctx.globals().tol;
  const PointInverse r = invert_at(phi, y, opts);
  ctx.emit(json{{"element", a.element},
                {"y", vector_json(y)},
                {"x", vector_json(r.point)},
                {"iterations", r.iterations},
                {"residual", (phi.apply(r.point) - y).norm()}});
}

struct JetOfArgs {
  std::string element, x0;
  int k = 2;
  double h = 0.002;
};

void jet_of(Context& ctx, const JetOfArgs& a) {
  const Diffeo phi = ctx.workspace().element(a.element, ctx.globals().settings());
  const Vector x0 = point_arg(a.x0, phi.body().dimension(), "--x0");
  const TaylorJet t = taylor_extract(phi, x0, a.k, a.h);
  json j = jet_report(t.jet);
  j["element"] = a.element;
  j["x0"] = vector_json(x0);
  j["k"] = a.k;
  j["step"] = t.step;
  j["constant"] = vector_json(t.constant);
  j["accuracy"] = t.accuracy;
  j["cone_half_angle_deg"] = t.cone_half_angle_deg;
  j["low_confidence"] = t.low_confidence;
  ctx.emit(j);
}

void jet_compose_verb(Context& ctx, const std::string& p_ref, const std::string& q_ref) {
  const JetArg p = load_jet(ctx, p_ref), q = load_jet(ctx, q_ref);
  if (p.rational && q.rational)
    ctx.emit(jet_report(jet_compose(rational_jet_from_json(p.value), rational_jet_from_json(q.value))));
  else
    ctx.emit(jet_report(jet_compose(double_jet_from_json(p.value), double_jet_from_json(q.value))));
}

void jet_invert_verb(Context& ctx, const std::string& ref) {
  const JetArg p = load_jet(ctx, ref);
  if (p.rational) ctx.emit(jet_report(jet_invert(rational_jet_from_json(p.value))));
  else ctx.emit(jet_report(jet_invert(double_jet_from_json(p.value))));
}

struct EvolveArgs {
  std::string field;
  int m = 64;
  int points = 11;
};

void evolve_verb(Context& ctx, const EvolveArgs& a) {
  const BoundaryVanishingField& f = ctx.workspace().field(a.field);
  const LieAlgebraCurve curve = LieAlgebraCurve::over(f, f.time().begin, f.time().end);
  const fs::path dir = ctx.out_dir();
  const EvolutionResult r = evolve(curve, a.m, ctx.globals().settings(), 16, ctx.globals().seed);
  const auto pts = grid_points(f.body(), a.points);
  const int n = f.dimension();
  auto header = axis_names("x", n);
  for (auto& s : axis_names("y", n)) header.push_back(s);
  json files = json::array();
  for (std::size_t j = 0; j < r.snapshots.size(); ++j) {
    std::vector<std::vector<double>> rows;
    for (const Vector& x : pts) {
      std::vector<double> row;
      append(row, x);
      append(row, r.snapshots[j].apply(x));
      rows.push_back(std::move(row));
    }
    const std::string name = numbered("snapshot", static_cast<int>(j));
    write_file_atomic(dir / name, csv_text(header, rows));
    files.push_back(name);
  }
  write_file_atomic(dir / "diagnostics.json",
                    json_text({{"field", a.field},
                               {"snapshots", a.m},
                               {"grid", ctx.globals().grid},
                               {"theta", curve.theta()},
                               {"times", r.times},
                               {"logderiv_residual", r.logderiv_residual},
                               {"residual_samples", r.residual_samples},
                               {"files", files}}));
  ctx.err() << "wrote " << files.size() + 1 << " files to " << dir.string() << "\n";
}

struct FlowArgs {
  std::string field, x0, p;
  double t = 1.0;
  std::optional<double> t0;
  int points = 11;
  int slices = 10;
  double h = 1e-3;
};

struct FlowSetup {
  ParametricFlowSpec spec;
  Vector p;
  double t0;
};

FlowSetup flow_setup(Context& ctx, const FlowArgs& a) {
  ParametricFlowSpec spec = ctx.workspace().flow_spec(a.field, ctx.globals().settings());
  Vector p = a.p.empty() ? ctx.workspace().field(a.field).params()
                         : point_arg(a.p, ctx.workspace().field(a.field).param_count(), "--p");
  const double t0 = a.t0.value_or(spec.time().contains(0.0) ? 0.0 : spec.time().begin);
  return {std::move(spec), std::move(p), t0};
}

void flow_verb(Context& ctx, const FlowArgs& a) {
  const FlowSetup s = flow_setup(ctx, a);
  const Vector x0 = point_arg(a.x0, s.spec.body().dimension(), "--x0");
  const FlowTrajectory tr = flow_trajectory(s.spec, s.p, s.t0, a.t, x0);
  if (ctx.globals().json) {
    ctx.emit(json{{"field", a.field},
                  {"p", vector_json(s.p)},
                  {"t0", s.t0},
                  {"t", a.t},
                  {"x0", vector_json(x0)},
                  {"panels", tr.panels},
                  {"times", tr.times},
                  {"states", matrix_json(tr.states.transpose())}});
    return;
  }
  std::vector<std::string> header{"t"};
  for (auto& c : axis_names("y", s.spec.body().dimension())) header.push_back(c);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<double> row{tr.times[i]};
    append(row, tr.states.col(static_cast<Eigen::Index>(i)));
    rows.push_back(std::move(row));
  }
  ctx.emit(csv_text(header, rows));
}

void flow_grid_verb(Context& ctx, const FlowArgs& a) {
  const FlowSetup s = flow_setup(ctx, a);
  if (a.slices < 1) throw DomainError("--slices must be positive");
  const fs::path dir = ctx.out_dir();
  const auto pts = grid_points(s.spec.body(), a.points);
  const int n = s.spec.body().dimension();
  auto header = axis_names("x", n);
  for (auto& c : axis_names("y", n)) header.push_back(c);
  header.insert(header.begin(), "t");
  for (int j = 0; j <= a.slices; ++j) {
    const double t = j == a.slices ? a.t : s.t0 + (a.t - s.t0) * j / a.slices;
    std::vector<std::vector<double>> rows;
    for (const Vector& x : pts) {
      std::vector<double> row{t};
      append(row, x);
      append(row, flow_map(s.spec, s.p, s.t0, t, x));
      rows.push_back(std::move(row));
    }
    write_file_atomic(dir / numbered("slice", j), csv_text(header, rows));
  }
  ctx.err() << "wrote " << a.slices + 1 << " files to " << dir.string() << "\n";
}

void sensitivity_verb(Context& ctx, const FlowArgs& a) {
  const FlowSetup s = flow_setup(ctx, a);
  const Vector x0 = point_arg(a.x0, s.spec.body().dimension(), "--x0");
  const FlowSensitivity r = flow_sensitivity(s.spec, s.p, s.t0, a.t, x0, a.h);
  auto ratio = [](double q) { return std::isfinite(q) ? json(q) : json(nullptr); };
  ctx.emit(json{{"field", a.field},
                {"p", vector_json(s.p)},
                {"t0", s.t0},
                {"t", a.t},
                {"x0", vector_json(x0)},
                {"value", vector_json(flow_map(s.spec, s.p, s.t0, a.t, x0))},
                {"d_p", matrix_json(r.d_p)},
                {"d_x0", matrix_json(r.d_x0)},
                {"d_t0", vector_json(r.d_t0)},
                {"d_t", vector_json(r.d_t)},
                {"step", r.step},
                {"ratios", {{"p", ratio(r.ratio_p)}, {"x0", ratio(r.ratio_x0)}, {"t0", ratio(r.ratio_t0)},
                            {"t", ratio(r.ratio_t)}}}});
}

int verify_verb(Context& ctx, const std::string& suite) {
  const auto& names = verify_suites();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw UsageError("unknown suite '" + suite + "'");
  const VerifyReport r = verify(suite, ctx.globals().seed);
  ctx.emit(r.to_json());
  for (const auto& c : r.checks)
    if (!c.pass) ctx.err() << "FAIL " << c.suite << "." << c.name << ": " << c.detail << "\n";
  ctx.err() << r.checks.size() - static_cast<std::size_t>(r.failures()) << "/" << r.checks.size()
            << " checks passed\n";
  return r.pass() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary-fixing diffeomorphisms of convex bodies: flows, charts and jets", "diffk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DIFFK_VERSION);

  Globals g;
  app.add_option("--workspace", g.workspace, "workspace JSON (default: built-in)");
  app.add_option("--out", g.out, "output file, or directory for evolve and flow-grid");
  app.add_option("--seed", g.seed, "seed for all sampling");
  app.add_option("--grid", g.grid, "Picard grid size N")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "iteration tolerance")->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "JSON instead of CSV");

  auto verb = [&](const char* name, const char* help) { 
    auto* sub = app.add_subcommand(name, help)->fallthrough();
    sub->set_help_flag("--help", "print this help");  // -h would clash with --h
    return sub;
  };

  ChartArgs chart;
  auto* c_chart = verb("check-chart", "test an element for membership in the global chart");
  c_chart->add_option("--element", chart.element)->required();
  c_chart->add_option("--density", chart.density, "grid points per axis");
  c_chart->add_option("--x0", chart.x0, "interior point (default: body's interior point)");

  ComposeArgs comp;
  auto* c_comp = verb("compose", "evaluate outer o inner");
  c_comp->add_option("--outer", comp.outer)->required();
  c_comp->add_option("--inner", comp.inner)->required();
  c_comp->add_option("--x", comp.xs, "evaluation point, repeatable");
  c_comp->add_option("--samples", comp.samples, "random interior points when no --x is given");

  InvertArgs inv;
  auto* c_inv = verb("invert-at", "solve phi(x) = y");
  c_inv->add_option("--element", inv.element)->required();
  c_inv->add_option("--y", inv.y)->required();

  JetOfArgs jof;
  auto* c_jof = verb("jet-of", "Taylor jet of an element at a point");
  c_jof->add_option("--element", jof.element)->required();
  c_jof->add_option("--x0", jof.x0)->required();
  c_jof->add_option("--k", jof.k)->check(CLI::Range(1, 4));
  c_jof->add_option("--h", jof.h)->check(CLI::PositiveNumber);

  std::string jp, jq, jinv;
  auto* c_jc = verb("jet-compose", "truncated composition p o q");
  c_jc->add_option("--p", jp, "workspace jet id or JSON file")->required();
  c_jc->add_option("--q", jq, "workspace jet id or JSON file")->required();
  auto* c_ji = verb("jet-invert", "inverse of a unit jet");
  c_ji->add_option("--jet", jinv, "workspace jet id or JSON file")->required();

  EvolveArgs ev;
  auto* c_ev = verb("evolve", "snapshots of the evolution of a field's curve");
  c_ev->add_option("--field", ev.field)->required();
  c_ev->add_option("-M,--M", ev.m, "snapshot count")->check(CLI::PositiveNumber);
  c_ev->add_option("--points", ev.points, "points per axis");

  FlowArgs fl;
  auto flow_opts = [&](CLI::App* sub) {
    sub->add_option("--field", fl.field)->required();
    sub->add_option("--t", fl.t, "final time");
    sub->add_option("--t0", fl.t0, "initial time (default 0, or the start of the field's interval)");
    sub->add_option("--p", fl.p, "parameters (default: the field's own)");
  };
  auto* c_flow = verb("flow", "trajectory of y' = f(p, t, y)");
  flow_opts(c_flow);
  c_flow->add_option("--x0", fl.x0)->required();
  auto* c_grid = verb("flow-grid", "flow of a point grid at evenly spaced times");
  flow_opts(c_grid);
  c_grid->add_option("--points", fl.points, "points per axis");
  c_grid->add_option("--slices", fl.slices, "time slices after t0");
  auto* c_sens = verb("sensitivity", "derivatives of the flow map");
  flow_opts(c_sens);
  c_sens->add_option("--x0", fl.x0)->required();
  c_sens->add_option("--h", fl.h, "base difference step")->check(CLI::PositiveNumber);

  std::string suite = "all";
  auto* c_ver = verb("verify", "run invariant suites");
  c_ver->add_option("suite", suite, "geometry, fields, contraction, diffeo, jets, evolution or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << DIFFK_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Context ctx(g, out, err);
  try {
    if (c_chart->parsed()) check_chart(ctx, chart);
    else if (c_comp->parsed()) compose_verb(ctx, comp);
    else if (c_inv->parsed()) invert_at_verb(ctx, inv);
    else if (c_jof->parsed()) jet_of(ctx, jof);
    else if (c_jc->parsed()) jet_compose_verb(ctx, jp, jq);
    else if (c_ji->parsed()) jet_invert_verb(ctx, jinv);
    else if (c_ev->parsed()) evolve_verb(ctx, ev);
    else if (c_flow->parsed()) flow_verb(ctx, fl);
    else if (c_grid->parsed()) flow_grid_verb(ctx, fl);
    else if (c_sens->parsed()) sensitivity_verb(ctx, fl);
    else if (c_ver->parsed()) return verify_verb(ctx, suite);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const WorkspaceError& e) {
    err << "error: workspace " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace diffk
