#include <fstream>
#include <map>
#include <sstream>

#include "oqnet/cli.hpp"
#include "oqnet/isolation.hpp"

namespace oqnet::cli {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void allow_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys) known |= item.key() == k;
    if (!known) fail(path + "." + item.key(), "unknown field");
  }
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) fail(path + "." + key, "missing required field");
  return obj.at(key);
}

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double get_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::size_t get_count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return static_cast<std::size_t>(j.get<long long>());
}

// Row-major nested arrays. `rows` < 0 accepts any row count >= 1.
Mat get_matrix(const Json& j, const std::string& path, long rows, std::size_t cols) {
  if (!j.is_array()) fail(path, "expected a matrix as nested arrays");
  if (rows >= 0 && j.size() != static_cast<std::size_t>(rows)) {
    fail(path, "expected " + std::to_string(rows) + " rows, found " + std::to_string(j.size()));
  }
  if (rows < 0 && j.empty()) fail(path, "expected at least one row");
  Mat out(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Json& row = j[r];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.size() != cols) {
      fail(rp, "expected a row of " + std::to_string(cols) + " numbers");
    }
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = get_number(row[c], rp + "[" + std::to_string(c) + "]");
  }
  return out;
}

NetworkSpec parse_network(const Json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"nodes", "energy_edges", "field_links"});
  NetworkSpec spec;
  std::map<std::string, const NodeSpec*> by_id;

  const Json& nodes = require(j, "nodes", path);
  if (!nodes.is_array() || nodes.empty()) fail(path + ".nodes", "expected a non-empty array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string np = path + ".nodes[" + std::to_string(i) + "]";
    const Json& node = require_object(nodes[i], np);
    allow_keys(node, np, {"id", "n", "m", "R", "M"});
    NodeSpec out;
    out.id = get_string(require(node, "id", np), np + ".id");
    out.n = get_count(require(node, "n", np), np + ".n");
    if (node.contains("m")) {
      out.m = get_count(node.at("m"), np + ".m");
    } else {
      out.m = node.contains("M") && node.at("M").is_array() ? node.at("M").size() : 0;
    }
    out.R = node.contains("R") ? get_matrix(node.at("R"), np + ".R", static_cast<long>(out.n), out.n)
                               : Mat(out.n, out.n);
    if (node.contains("M")) {
      out.M = get_matrix(node.at("M"), np + ".M", static_cast<long>(out.m), out.n);
    } else if (out.m > 0) {
      fail(np + ".M", "missing required field (node '" + out.id + "' has m > 0)");
    } else {
      out.M = Mat(0, out.n);
    }
    spec.nodes.push_back(std::move(out));
  }
  for (const auto& node : spec.nodes) {
    if (!by_id.emplace(node.id, &node).second) fail(path + ".nodes", "duplicate node id '" + node.id + "'");
  }
  auto lookup = [&](const Json& v, const std::string& p) -> const NodeSpec& {
    const std::string id = get_string(v, p);
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(p, "unknown node id '" + id + "'");
    return *it->second;
  };

  if (j.contains("energy_edges")) {
    const Json& edges = j.at("energy_edges");
    if (!edges.is_array()) fail(path + ".energy_edges", "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string ep = path + ".energy_edges[" + std::to_string(i) + "]";
      const Json& e = require_object(edges[i], ep);
      allow_keys(e, ep, {"j", "k", "R0"});
      const NodeSpec& a = lookup(require(e, "j", ep), ep + ".j");
      const NodeSpec& b = lookup(require(e, "k", ep), ep + ".k");
      spec.energy_edges.push_back(
          {a.id, b.id, get_matrix(require(e, "R0", ep), ep + ".R0", static_cast<long>(a.n), b.n)});
    }
  }

  if (j.contains("field_links")) {
    const Json& links = j.at("field_links");
    if (!links.is_array()) fail(path + ".field_links", "expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
      const std::string lp = path + ".field_links[" + std::to_string(i) + "]";
      const Json& l = require_object(links[i], lp);
      allow_keys(l, lp, {"from", "to", "r", "D", "N"});
      const NodeSpec& from = lookup(require(l, "from", lp), lp + ".from");
      const NodeSpec& to = lookup(require(l, "to", lp), lp + ".to");
      const Json& d = require(l, "D", lp);
      const std::size_t r = l.contains("r") ? get_count(l.at("r"), lp + ".r")
                                            : (d.is_array() ? d.size() : 0);
      FieldLink out;
      out.from = from.id;
      out.to = to.id;
      out.r = r;
      out.D = get_matrix(d, lp + ".D", static_cast<long>(r), from.m);
      out.N = get_matrix(require(l, "N", lp), lp + ".N", static_cast<long>(r), to.n);
      spec.field_links.push_back(std::move(out));
    }
  }
  return spec;
}

FSelection parse_f(const Json& j, const std::string& path, const NetworkSpec& spec) {
  FSelection f;
  f.given = true;
  if (j.is_string()) {
    if (j.get<std::string>() != "all") fail(path, "expected \"all\", a matrix or a selection object");
    f.kind = FSelection::Kind::all;
    return f;
  }
  if (j.is_array()) {
    std::size_t n = 0;
    for (const auto& node : spec.nodes) n += node.n;
    f.kind = FSelection::Kind::matrix;
    f.matrix = get_matrix(j, path, -1, n);
    return f;
  }
  require_object(j, path);
  if (j.contains("isolating")) {
    allow_keys(j, path, {"isolating"});
    f.kind = FSelection::Kind::isolating;
    f.isolating_rows = get_count(j.at("isolating"), path + ".isolating");
    return f;
  }
  allow_keys(j, path, {"select"});
  const Json& sel = require(j, "select", path);
  if (!sel.is_array() || sel.empty()) fail(path + ".select", "expected a non-empty array");
  f.kind = FSelection::Kind::select;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const std::string sp = path + ".select[" + std::to_string(i) + "]";
    const Json& item = require_object(sel[i], sp);
    allow_keys(item, sp, {"node", "vars"});
    const std::string id = get_string(require(item, "node", sp), sp + ".node");
    const NodeSpec* node = nullptr;
    for (const auto& nd : spec.nodes)
      if (nd.id == id) node = &nd;
    if (node == nullptr) fail(sp + ".node", "unknown node id '" + id + "'");
    std::vector<std::size_t> vars;
    if (item.contains("vars")) {
      const Json& v = item.at("vars");
      if (!v.is_array()) fail(sp + ".vars", "expected an array of indices");
      for (std::size_t q = 0; q < v.size(); ++q) {
        const std::string vp = sp + ".vars[" + std::to_string(q) + "]";
        const std::size_t idx = get_count(v[q], vp);
        if (idx >= node->n) fail(vp, "index out of range for node '" + id + "'");
        vars.push_back(idx);
      }
    } else {
      for (std::size_t q = 0; q < node->n; ++q) vars.push_back(q);
    }
    f.select.emplace_back(id, std::move(vars));
  }
  return f;
}

void parse_task(const Json& j, const std::string& path, RunConfig& config) {
  require_object(j, path);
  allow_keys(j, path, {"F", "P", "epsilons"});
  std::size_t n = 0;
  for (const auto& node : config.network.nodes) n += node.n;
  if (j.contains("F")) config.f = parse_f(j.at("F"), path + ".F", config.network);
  if (j.contains("P")) {
    const Json& p = j.at("P");
    if (p.is_string()) {
      if (p.get<std::string>() != "vacuum") fail(path + ".P", "expected \"vacuum\" or a matrix");
    } else {
      config.p = get_matrix(p, path + ".P", static_cast<long>(n), n);
    }
  }
  if (j.contains("epsilons")) {
    const Json& e = j.at("epsilons");
    if (!e.is_array() || e.empty()) fail(path + ".epsilons", "expected a non-empty array");
    config.epsilons.clear();
    for (std::size_t i = 0; i < e.size(); ++i) {
      config.epsilons.push_back(get_number(e[i], path + ".epsilons[" + std::to_string(i) + "]"));
    }
  }
}

void parse_solver(const Json& j, const std::string& path, SolverOptions& s) {
  require_object(j, path);
  allow_keys(j, path, {"gramian", "t_max", "grid_points", "t_end", "optimizer", "mode",
                       "fixed_point_tol", "max_sweeps"});
  auto choice = [&](const char* key, std::initializer_list<const char*> options) -> std::string {
    const std::string v = get_string(j.at(key), path + "." + key);
    for (const char* o : options)
      if (v == o) return v;
    fail(path + "." + key, "unsupported value '" + v + "'");
  };
  if (j.contains("gramian")) {
    s.gramian = choice("gramian", {"vanloan", "ode"}) == "ode" ? GramianMethod::ode : GramianMethod::vanloan;
  }
  if (j.contains("optimizer")) {
    s.optimizer = choice("optimizer", {"global", "fixed_point"}) == "global" ? OptimizerMethod::global
                                                                              : OptimizerMethod::fixed_point;
  }
  if (j.contains("mode")) {
    s.mode = choice("mode", {"standard", "isolated"}) == "standard" ? OptimizerMode::standard
                                                                     : OptimizerMode::isolated;
  }
  if (j.contains("t_max")) s.t_max = get_number(j.at("t_max"), path + ".t_max");
  if (j.contains("t_end")) s.t_end = get_number(j.at("t_end"), path + ".t_end");
  if (j.contains("grid_points")) {
    s.grid_points = get_count(j.at("grid_points"), path + ".grid_points");
    if (s.grid_points < 2) fail(path + ".grid_points", "need at least 2 points");
  }
  if (j.contains("fixed_point_tol")) {
    s.fixed_point_tol = get_number(j.at("fixed_point_tol"), path + ".fixed_point_tol");
  }
  if (j.contains("max_sweeps")) s.max_sweeps = get_count(j.at("max_sweeps"), path + ".max_sweeps");
}

}  // namespace

nlohmann::ordered_json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": JSON parse error: " << e.what();
    throw ParseError(os.str());
  }
  if (!doc.is_object()) fail(origin, "top level must be an object");
  allow_keys(doc, origin, {"schema", "network", "task", "solver", "output"});
  const Json& schema = require(doc, "schema", origin);
  if (!schema.is_number_integer() || schema.get<long long>() != 1) {
    fail(origin + ".schema", "unsupported schema version (expected 1)");
  }

  RunConfig config;
  config.network = parse_network(require(doc, "network", origin), origin + ".network");
  if (doc.contains("task")) parse_task(doc.at("task"), origin + ".task", config);
  if (doc.contains("solver")) parse_solver(doc.at("solver"), origin + ".solver", config.solver);
  if (doc.contains("output")) {
    const std::string op = origin + ".output";
    const Json& out = require_object(doc.at("output"), op);
    allow_keys(out, op, {"dir"});
    if (out.contains("dir")) config.output_dir = get_string(out.at("dir"), op + ".dir");
  }
  config.document = std::move(doc);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

Mat resolve_f(const RunConfig& config, const AugmentedModel& model) {
  const FSelection& f = config.f;
  switch (f.kind) {
    case FSelection::Kind::all:
      return Mat::identity(model.n);
    case FSelection::Kind::matrix:
      if (f.matrix.cols() != model.n) throw ConfigError("task.F: expected " + std::to_string(model.n) + " columns");
      return f.matrix;
    case FSelection::Kind::isolating:
      return isolating_f(model, f.isolating_rows == 0 ? std::max<std::size_t>(isolation_dim(model), 1)
                                                      : f.isolating_rows);
    case FSelection::Kind::select: {
      std::size_t rows = 0;
      for (const auto& s : f.select) rows += s.second.size();
      Mat out(rows, model.n);
      std::size_t r = 0;
      for (const auto& [id, vars] : f.select) {
        const BlockRange b = model.node(id).vars;
        for (std::size_t v : vars) out(r++, b.offset + v) = 1.0;
      }
      return out;
    }
  }
  return Mat::identity(model.n);
}

MemoryTask make_task(const RunConfig& config, const AugmentedModel& model) {
  MemoryTask task;
  task.F = resolve_f(config, model);
  task.P = config.p ? *config.p : vacuum_covariance(model.n);
  task.epsilons = config.epsilons;
  return task;
}

nlohmann::ordered_json network_to_json(const NetworkSpec& raw) {
  const NetworkSpec spec = normalize_edges(raw);
  Json out;
  Json nodes = Json::array();
  for (const auto& node : spec.nodes) {
    Json j;
    j["id"] = node.id;
    j["n"] = node.n;
    j["m"] = node.m;
    j["R"] = matrix_to_json(node.R);
    j["M"] = matrix_to_json(node.M);
    nodes.push_back(std::move(j));
  }
  Json edges = Json::array();
  for (const auto& e : spec.energy_edges) {
    Json j;
    j["j"] = e.j;
    j["k"] = e.k;
    j["R0"] = matrix_to_json(e.R0);
    edges.push_back(std::move(j));
  }
  Json links = Json::array();
  for (const auto& l : spec.field_links) {
    Json j;
    j["from"] = l.from;
    j["to"] = l.to;
    j["r"] = l.r;
    j["D"] = matrix_to_json(l.D);
    j["N"] = matrix_to_json(l.N);
    links.push_back(std::move(j));
  }
  out["nodes"] = std::move(nodes);
  out["energy_edges"] = std::move(edges);
  out["field_links"] = std::move(links);
  return out;
}

}  // namespace oqnet::cli
