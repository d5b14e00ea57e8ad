#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "oqnet/cli.hpp"
#include "oqnet/isolation.hpp"

namespace oqnet::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Context {
  RunConfig config;
  fs::path out_dir;
  bool timestamp = true;
  std::ostream& out;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// 17 significant digits: enough for an exact round trip.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string shortest(double v) { return Json(v).dump(); }

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << content;
  if (!os) throw IoError(path.string() + ": write failed");
}

Json header(const Context& ctx, const char* command) {
  Json j;
  if (ctx.timestamp) j["generated_at"] = utc_now();
  j["schema"] = 1;
  j["command"] = command;
  return j;
}

// Two-space indentation with arrays of scalars kept on one line, so matrix
// rows read as rows.
void pretty(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner_pad(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t i = 0;
    for (const auto& item : j.items()) {
      out += inner_pad + Json(item.key()).dump() + ": ";
      pretty(item.value(), indent + 2, out);
      out += ++i < j.size() ? ",\n" : "\n";
    }
    out += pad + "}";
  } else if (j.is_array()) {
    bool flat = true;
    for (const auto& e : j) flat &= e.is_primitive();
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ", " : "") + j[i].dump();
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out += inner_pad;
      pretty(j[i], indent + 2, out);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "]";
  } else {
    out += j.dump();
  }
}

void write_json(const Context& ctx, const std::string& name, const Json& j) {
  std::string text;
  pretty(j, 0, text);
  write_file(ctx.out_dir / name, text + "\n");
  ctx.out << "wrote " << (ctx.out_dir / name).string() << "\n";
}

Json number_or_null(double v, bool valid) { return valid ? Json(v) : Json(nullptr); }

MemoryTask checked_task(const RunConfig& config, const AugmentedModel& model) {
  MemoryTask task = make_task(config, model);
  auto violations = validate_task(task, model.Theta);
  if (!violations.empty()) throw ValidationError("task is invalid", std::move(violations));
  return task;
}

HittingOptions hitting(const RunConfig& config) {
  return {config.solver.t_max, config.solver.gramian};
}

int cmd_validate(Context& ctx) {
  const ValidationReport report = validate_spec(ctx.config.network);
  std::vector<std::string> task_issues;
  if (report.ok()) {
    const AugmentedModel model = assemble(ctx.config.network);
    try {
      task_issues = validate_task(make_task(ctx.config, model), model.Theta);
    } catch (const PreconditionError& e) {
      task_issues.push_back(e.what());
    }
  }
  for (const auto& v : report.violations) ctx.out << "violation: " << v << "\n";
  for (const auto& v : task_issues) ctx.out << "violation: " << v << "\n";
  for (const auto& n : report.notes) ctx.out << "note: " << n << "\n";
  const bool ok = report.ok() && task_issues.empty();
  ctx.out << (ok ? "valid" : "invalid") << "\n";
  return ok ? kOk : kValidation;
}

int cmd_assemble(Context& ctx) {
  const AugmentedModel model = assemble(ctx.config.network);
  Json j = header(ctx, "assemble");
  j["n"] = model.n;
  j["m"] = model.m;
  Json layout = Json::array();
  for (const auto& id : model.node_ids) {
    const NodeLayout& l = model.node(id);
    layout.push_back({{"id", id},
                      {"offset", l.vars.offset},
                      {"size", l.vars.size},
                      {"field_offset", l.fields.offset},
                      {"field_size", l.fields.size}});
  }
  j["layout"] = std::move(layout);
  j["Theta"] = matrix_to_json(model.Theta);
  j["J"] = matrix_to_json(model.Jmat);
  j["M"] = matrix_to_json(model.M);
  j["R"] = matrix_to_json(model.R);
  j["A"] = matrix_to_json(model.A);
  j["B"] = matrix_to_json(model.B);
  j["pr_residual"] = pr_residual(model);
  Json notes = Json::array();
  for (const auto& n : validate_spec(ctx.config.network).notes) notes.push_back(n);
  j["notes"] = std::move(notes);
  write_json(ctx, "model.json", j);
  ctx.out << "pr_residual " << shortest(pr_residual(model)) << "\n";
  return kOk;
}

int cmd_simulate(Context& ctx) {
  const AugmentedModel model = assemble(ctx.config.network);
  const MemoryTask task = checked_task(ctx.config, model);
  const DeviationCurve curve = deviation_curve(model, task, ctx.config.solver.grid_points,
                                               ctx.config.solver.t_end, ctx.config.solver.gramian);
  const double dstar = delta_star(task);
  std::ostringstream os;
  if (ctx.timestamp) os << "# generated_at " << utc_now() << "\n";
  os << "t,delta";
  for (double eps : task.epsilons) os << ",threshold_" << shortest(eps);
  os << "\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    os << fmt(curve.grid[i]) << "," << fmt(curve.values[i]);
    for (double eps : task.epsilons) os << "," << fmt(eps * dstar);
    os << "\n";
  }
  write_file(ctx.out_dir / "curve.csv", os.str());
  ctx.out << "wrote " << (ctx.out_dir / "curve.csv").string() << " (" << curve.grid.size()
          << " points)\n";
  return kOk;
}

int cmd_decoherence(Context& ctx) {
  const AugmentedModel model = assemble(ctx.config.network);
  const MemoryTask task = checked_task(ctx.config, model);
  const bool isolated = is_isolated(model, task.F);
  Json j = header(ctx, "decoherence");
  j["delta_star"] = delta_star(task);
  const auto d = delta_derivatives0(model, task);
  j["delta_dot0"] = d.first;
  j["delta_ddot0"] = d.second;
  j["regime"] = isolated ? "sqrt" : "linear";

  TauTaylor taylor;
  Mat g;
  std::string note;
  if (isolated) {
    g = 2.0 * task.F * model.Theta * model.R;
  } else {
    taylor = tau_taylor(model, task);
    j["tau_prime0"] = taylor.first;
    j["tau_double_prime0"] = taylor.second;
  }

  Json rows = Json::array();
  for (double eps : task.epsilons) {
    const DecoherenceTime t = decoherence_time(model, task, eps, hitting(ctx.config));
    Json row;
    row["epsilon"] = eps;
    row["reached"] = t.reached;
    row["tau"] = number_or_null(t.tau, t.reached);
    row["tangency"] = t.tangency;
    row["horizon"] = number_or_null(t.horizon, std::isfinite(t.horizon));
    if (isolated) {
      try {
        row["tau_hat"] = tau_sqrt(task.F, g, task.P, eps);
      } catch (const DegenerateAsymptoticsError& e) {
        row["tau_hat"] = nullptr;
        note = e.what();
      }
    } else {
      row["tau_hat"] = taylor(eps);
    }
    ctx.out << "eps " << shortest(eps) << " tau " << (t.reached ? shortest(t.tau) : "unreached") << "\n";
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  if (!note.empty()) j["note"] = note;
  write_json(ctx, "decoherence.json", j);
  return kOk;
}

int cmd_optimize(Context& ctx) {
  const AugmentedModel model = assemble(ctx.config.network);
  const MemoryTask task = checked_task(ctx.config, model);
  const SolverOptions& s = ctx.config.solver;
  const OptimizerReport rep =
      s.optimizer == OptimizerMethod::global
          ? solve_global(ctx.config.network, model, task, s.mode)
          : solve_fixed_point(ctx.config.network, model, task, s.mode, {s.max_sweeps, s.fixed_point_tol});

  Json j = header(ctx, "optimize");
  j["mode"] = to_string(rep.mode);
  j["method"] = to_string(rep.method);
  j["objective_before"] = rep.objective_before;
  j["objective_after"] = rep.objective_after;
  j["global_system_rcond"] = rep.global_system_rcond;
  j["non_unique"] = rep.non_unique;
  if (rep.method == OptimizerMethod::fixed_point) j["sweeps"] = rep.sweeps;
  Json edges = Json::array();
  for (std::size_t i = 0; i < rep.solution.size(); ++i) {
    edges.push_back({{"j", rep.solution[i].j},
                     {"k", rep.solution[i].k},
                     {"R0", matrix_to_json(rep.solution[i].block)},
                     {"residual_norm", rep.per_edge_residual_norms[i]}});
  }
  j["edges"] = std::move(edges);
  write_json(ctx, "optimize.json", j);

  Json doc = ctx.config.document;
  doc["network"] = network_to_json(with_edges(ctx.config.network, rep.solution));
  write_json(ctx, "optimized.json", doc);
  ctx.out << "objective " << shortest(rep.objective_before) << " -> " << shortest(rep.objective_after)
          << "\n";
  return kOk;
}

int cmd_isolate(Context& ctx) {
  const AugmentedModel model = assemble(ctx.config.network);
  RunConfig config = ctx.config;
  if (!config.f.given) {
    config.f.kind = FSelection::Kind::isolating;
    config.f.isolating_rows = 0;
  }
  const MemoryTask task = checked_task(config, model);
  const IsolationResult r = decompose(model, task.F);

  Json j = header(ctx, "isolate");
  j["d"] = r.d;
  j["s"] = r.F.rows();
  j["F"] = matrix_to_json(r.F);
  j["T"] = matrix_to_json(r.T);
  j["S"] = matrix_to_json(r.S);
  j["a11"] = matrix_to_json(r.a11);
  j["a12"] = matrix_to_json(r.a12);
  j["a21"] = matrix_to_json(r.a21);
  j["a22"] = matrix_to_json(r.a22);
  j["b"] = matrix_to_json(r.b);
  j["G"] = matrix_to_json(r.G);
  j["delta_ddot0"] = isolated_delta_second(model, task);

  Json rows = Json::array();
  std::string note;
  for (double eps : task.epsilons) {
    const DecoherenceTime t = decoherence_time(model, task, eps, hitting(config));
    Json row;
    row["epsilon"] = eps;
    row["reached"] = t.reached;
    row["tau"] = number_or_null(t.tau, t.reached);
    try {
      row["tau_sqrt"] = tau_sqrt(r.F, r.G, task.P, eps);
    } catch (const DegenerateAsymptoticsError& e) {
      row["tau_sqrt"] = nullptr;
      note = e.what();
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  if (!note.empty()) j["note"] = note;
  write_json(ctx, "isolate.json", j);
  ctx.out << "isolation dimension " << r.d << ", using " << r.F.rows() << " rows\n";
  return kOk;
}

}  // namespace

std::vector<double> parse_epsilon_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) throw ConfigError("--epsilon: cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--epsilon: empty list");
  return out;
}

int run(const std::string& command, const std::filesystem::path& config_path,
        const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    RunConfig config = load_config(config_path);
    if (options.epsilons) config.epsilons = *options.epsilons;
    if (options.method) config.solver.gramian = *options.method;
    if (options.optimizer) config.solver.optimizer = *options.optimizer;
    if (options.mode) config.solver.mode = *options.mode;
    fs::path dir = options.out_dir ? *options.out_dir
                                   : (config.output_dir.empty() ? fs::path(".") : fs::path(config.output_dir));
    Context ctx{std::move(config), dir, options.timestamp, out};
    if (command == "validate") return cmd_validate(ctx);
    if (command == "assemble") return cmd_assemble(ctx);
    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "decoherence") return cmd_decoherence(ctx);
    if (command == "optimize") return cmd_optimize(ctx);
    if (command == "isolate") return cmd_isolate(ctx);
    err << "error: unknown command '" << command << "'\n";
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    for (const auto& v : e.violations()) err << "  " << v << "\n";
    return kValidation;
  } catch (const PreconditionError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    return kValidation;
  } catch (const NonConvergenceError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    if (!e.history().empty()) err << "  last update " << fmt(e.history().back()) << "\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace oqnet::cli
