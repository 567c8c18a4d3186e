/**
 * @file harness.cpp
 * @brief Strict config parsing, run drivers, and versioned text output.
 */
#include "qsf/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace qsf {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// SAX pass rejecting duplicate object keys (the DOM parser keeps the first
// occurrence silently, which would make typos in configs unnoticeable).
struct DuplicateKeyChecker {
  std::vector<std::set<std::string>> scopes;
  std::string duplicate;
  std::string parse_message;

  bool null() { return true; }
  bool boolean(bool) { return true; }
  bool number_integer(json::number_integer_t) { return true; }
  bool number_unsigned(json::number_unsigned_t) { return true; }
  bool number_float(json::number_float_t, const std::string&) { return true; }
  bool string(std::string&) { return true; }
  bool binary(json::binary_t&) { return true; }
  bool start_object(std::size_t) {
    scopes.emplace_back();
    return true;
  }
  bool key(std::string& k) {
    if (!scopes.back().insert(k).second) {
      duplicate = k;
      return false;
    }
    return true;
  }
  bool end_object() {
    scopes.pop_back();
    return true;
  }
  bool start_array(std::size_t) { return true; }
  bool end_array() { return true; }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) {
    parse_message = ex.what();
    return false;
  }
};

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ConfigError(origin + ": " + what);
}

void check_keys(const json& obj, const std::string& origin, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known |= (it.key() == k);
    if (!known) fail(origin, "unknown key '" + path + it.key() + "'");
  }
}

double as_double(const json& j, const std::string& origin, const std::string& path) {
  if (!j.is_number()) fail(origin, "'" + path + "' must be a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& origin, const std::string& path) {
  if (!j.is_number_integer()) fail(origin, "'" + path + "' must be an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const json& j, const std::string& origin, const std::string& path) {
  if (!j.is_number_unsigned() && !j.is_number_integer())
    fail(origin, "'" + path + "' must be a non-negative integer");
  if (j.is_number_integer() && j.get<std::int64_t>() < 0)
    fail(origin, "'" + path + "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& origin, const std::string& path) {
  if (!j.is_boolean()) fail(origin, "'" + path + "' must be a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& origin, const std::string& path) {
  if (!j.is_string()) fail(origin, "'" + path + "' must be a string");
  return j.get<std::string>();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (model != "linear" && model != "nonlinear" && model != "both")
    throw ConfigError("model: must be one of linear, nonlinear, both");
  params.validate();
  program.validate();
  TimePartition{partition_level}.validate();
  for (size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw ConfigError("ladder: entries must be positive");
    if (k > 0 && !(ladder[k] < ladder[k - 1]))
      throw ConfigError("ladder: entries must be strictly decreasing");
  }
  if (!(solve.elastic_tol > 0.0)) throw ConfigError("solve.elastic_tol: must be positive");
  if (solve.max_newton_iters < 1) throw ConfigError("solve.max_newton_iters: must be >= 1");
  if (solve.multistart < 1) throw ConfigError("solve.multistart: must be >= 1");
  if (solve.greedy_passes < 0) throw ConfigError("solve.greedy_passes: must be >= 0");
  if (solve.break_threshold_rel < 0.0)
    throw ConfigError("solve.break_threshold_rel: must be >= 0");
  if (solve.chain_max < 0) throw ConfigError("solve.chain_max: must be >= 0");
  if (solve.brute_force_multistart < 1)
    throw ConfigError("solve.brute_force_multistart: must be >= 1");
  if (solve.workers < 1) throw ConfigError("solve.workers: must be >= 1");
  for (int id : initial_broken)
    if (id < 0) throw ConfigError("initial_broken: interface ids must be >= 0");
  if (outputs.dir.empty()) throw ConfigError("outputs.dir: must be non-empty");
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text, const std::string& origin) {
  DuplicateKeyChecker checker;
  if (!json::sax_parse(text, &checker)) {
    if (!checker.duplicate.empty()) fail(origin, "duplicate key '" + checker.duplicate + "'");
    fail(origin, "parse error: " + checker.parse_message);
  }
  const json root = json::parse(text);
  if (!root.is_object()) fail(origin, "top level must be an object");
  check_keys(root, origin, "",
             {"grid", "model", "params", "density", "ladder", "partition_level", "program",
              "solve", "initial_broken", "outputs"});

  RunConfig cfg = default_config();
  if (root.contains("grid")) {
    const json& g = root["grid"];
    if (!g.is_object()) fail(origin, "'grid' must be an object");
    check_keys(g, origin, "grid.", {"extent_x", "extent_y", "margin", "cells_x", "cells_y"});
    if (g.contains("extent_x")) cfg.grid.extent_x = as_double(g["extent_x"], origin, "grid.extent_x");
    if (g.contains("extent_y")) cfg.grid.extent_y = as_double(g["extent_y"], origin, "grid.extent_y");
    if (g.contains("margin")) cfg.grid.margin = as_double(g["margin"], origin, "grid.margin");
    if (g.contains("cells_x")) cfg.grid.cells_x = as_int(g["cells_x"], origin, "grid.cells_x");
    if (g.contains("cells_y")) cfg.grid.cells_y = as_int(g["cells_y"], origin, "grid.cells_y");
  }
  if (root.contains("model")) cfg.model = as_string(root["model"], origin, "model");
  if (root.contains("params")) {
    const json& p = root["params"];
    if (!p.is_object()) fail(origin, "'params' must be an object");
    check_keys(p, origin, "params.", {"epsilon", "beta", "gamma", "kappa", "r"});
    if (p.contains("epsilon")) cfg.params.epsilon = as_double(p["epsilon"], origin, "params.epsilon");
    if (p.contains("beta")) cfg.params.beta = as_double(p["beta"], origin, "params.beta");
    if (p.contains("gamma")) cfg.params.gamma = as_double(p["gamma"], origin, "params.gamma");
    if (p.contains("kappa")) cfg.params.kappa = as_double(p["kappa"], origin, "params.kappa");
    if (p.contains("r")) cfg.params.r = as_double(p["r"], origin, "params.r");
  }
  if (root.contains("density"))
    cfg.density = density_kind_from_string(as_string(root["density"], origin, "density"));
  if (root.contains("ladder")) {
    const json& l = root["ladder"];
    if (!l.is_array()) fail(origin, "'ladder' must be an array of numbers");
    cfg.ladder.clear();
    for (size_t k = 0; k < l.size(); ++k)
      cfg.ladder.push_back(as_double(l[k], origin, "ladder[" + std::to_string(k) + "]"));
  }
  if (root.contains("partition_level"))
    cfg.partition_level = as_int(root["partition_level"], origin, "partition_level");
  if (root.contains("program")) {
    const json& p = root["program"];
    if (!p.is_object()) fail(origin, "'program' must be an object");
    check_keys(p, origin, "program.", {"base", "amplitude", "knots"});
    if (p.contains("base"))
      cfg.program.base = boundary_base_from_string(as_string(p["base"], origin, "program.base"));
    if (p.contains("amplitude"))
      cfg.program.amplitude = as_double(p["amplitude"], origin, "program.amplitude");
    if (p.contains("knots")) {
      const json& ks = p["knots"];
      if (!ks.is_array()) fail(origin, "'program.knots' must be an array of [time, scale] pairs");
      cfg.program.knots.clear();
      for (size_t k = 0; k < ks.size(); ++k) {
        const std::string path = "program.knots[" + std::to_string(k) + "]";
        if (!ks[k].is_array() || ks[k].size() != 2)
          fail(origin, "'" + path + "' must be a [time, scale] pair");
        cfg.program.knots.emplace_back(as_double(ks[k][0], origin, path + "[0]"),
                                       as_double(ks[k][1], origin, path + "[1]"));
      }
    }
  }
  if (root.contains("solve")) {
    const json& s = root["solve"];
    if (!s.is_object()) fail(origin, "'solve' must be an object");
    check_keys(s, origin, "solve.",
               {"elastic_tol", "max_newton_iters", "multistart", "greedy_passes",
                "break_threshold_rel", "rng_seed", "chain_max", "block_rings",
                "brute_force_multistart", "workers"});
    if (s.contains("elastic_tol"))
      cfg.solve.elastic_tol = as_double(s["elastic_tol"], origin, "solve.elastic_tol");
    if (s.contains("max_newton_iters"))
      cfg.solve.max_newton_iters = as_int(s["max_newton_iters"], origin, "solve.max_newton_iters");
    if (s.contains("multistart"))
      cfg.solve.multistart = as_int(s["multistart"], origin, "solve.multistart");
    if (s.contains("greedy_passes"))
      cfg.solve.greedy_passes = as_int(s["greedy_passes"], origin, "solve.greedy_passes");
    if (s.contains("break_threshold_rel"))
      cfg.solve.break_threshold_rel =
          as_double(s["break_threshold_rel"], origin, "solve.break_threshold_rel");
    if (s.contains("rng_seed")) cfg.solve.rng_seed = as_u64(s["rng_seed"], origin, "solve.rng_seed");
    if (s.contains("chain_max")) cfg.solve.chain_max = as_int(s["chain_max"], origin, "solve.chain_max");
    if (s.contains("block_rings"))
      cfg.solve.block_rings = as_bool(s["block_rings"], origin, "solve.block_rings");
    if (s.contains("brute_force_multistart"))
      cfg.solve.brute_force_multistart =
          as_int(s["brute_force_multistart"], origin, "solve.brute_force_multistart");
    if (s.contains("workers")) cfg.solve.workers = as_int(s["workers"], origin, "solve.workers");
  }
  if (root.contains("initial_broken")) {
    const json& ib = root["initial_broken"];
    if (!ib.is_array()) fail(origin, "'initial_broken' must be an array of interface ids");
    cfg.initial_broken.clear();
    for (size_t k = 0; k < ib.size(); ++k)
      cfg.initial_broken.push_back(
          as_int(ib[k], origin, "initial_broken[" + std::to_string(k) + "]"));
  }
  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    if (!o.is_object()) fail(origin, "'outputs' must be an object");
    check_keys(o, origin, "outputs.", {"dir", "trajectory", "report", "summary"});
    if (o.contains("dir")) cfg.outputs.dir = as_string(o["dir"], origin, "outputs.dir");
    if (o.contains("trajectory"))
      cfg.outputs.trajectory = as_bool(o["trajectory"], origin, "outputs.trajectory");
    if (o.contains("report")) cfg.outputs.report = as_bool(o["report"], origin, "outputs.report");
    if (o.contains("summary")) cfg.outputs.summary = as_bool(o["summary"], origin, "outputs.summary");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string dump_config(const RunConfig& config) {
  ordered_json j;
  j["grid"] = {{"extent_x", config.grid.extent_x},
               {"extent_y", config.grid.extent_y},
               {"margin", config.grid.margin},
               {"cells_x", config.grid.cells_x},
               {"cells_y", config.grid.cells_y}};
  j["model"] = config.model;
  j["params"] = {{"epsilon", config.params.epsilon},
                 {"beta", config.params.beta},
                 {"gamma", config.params.gamma},
                 {"kappa", config.params.kappa},
                 {"r", config.params.r}};
  j["density"] = to_string(config.density);
  j["ladder"] = config.ladder;
  j["partition_level"] = config.partition_level;
  ordered_json knots = ordered_json::array();
  for (const auto& [t, s] : config.program.knots) knots.push_back({t, s});
  j["program"] = {{"base", to_string(config.program.base)},
                  {"amplitude", config.program.amplitude},
                  {"knots", knots}};
  j["solve"] = {{"elastic_tol", config.solve.elastic_tol},
                {"max_newton_iters", config.solve.max_newton_iters},
                {"multistart", config.solve.multistart},
                {"greedy_passes", config.solve.greedy_passes},
                {"break_threshold_rel", config.solve.break_threshold_rel},
                {"rng_seed", config.solve.rng_seed},
                {"chain_max", config.solve.chain_max},
                {"block_rings", config.solve.block_rings},
                {"brute_force_multistart", config.solve.brute_force_multistart},
                {"workers", config.solve.workers}};
  j["initial_broken"] = config.initial_broken;
  j["outputs"] = {{"dir", config.outputs.dir},
                  {"trajectory", config.outputs.trajectory},
                  {"report", config.outputs.report},
                  {"summary", config.outputs.summary}};
  return j.dump(2) + "\n";
}

Problem make_problem(const RunConfig& config, const Mesh& mesh, ModelKind model) {
  Problem p;
  p.mesh = &mesh;
  p.model = model;
  p.density.kind = config.density;
  p.tensor = linearized_tensor(p.density);
  p.params = config.params;
  p.program = config.program;
  p.options = config.solve;
  return p;
}

std::string trajectory_to_text(const Mesh& mesh, const Trajectory& traj) {
  ordered_json j;
  j["schema"] = "qsfrac.trajectory.v1";
  j["model"] = to_string(traj.model);
  j["params"] = {{"epsilon", traj.params.epsilon},
                 {"beta", traj.params.beta},
                 {"gamma", traj.params.gamma},
                 {"kappa", traj.params.kappa},
                 {"r", traj.params.r}};
  j["partition_level"] = traj.partition.level;
  j["max_linear_residual_rel"] = traj.max_linear_residual_rel;
  ordered_json steps = ordered_json::array();
  for (size_t n = 0; n < traj.steps.size(); ++n) {
    const StepRecord& rec = traj.steps[n];
    ordered_json s;
    s["time"] = rec.time;
    s["energy"] = {{"elastic", rec.energy.elastic},
                   {"hessian", rec.energy.hessian},
                   {"surface", rec.energy.surface},
                   {"total", rec.energy.total}};
    s["total_energy"] = traj.total_energy(mesh, static_cast<int>(n));
    s["cumulative_length"] = crack_measure(mesh, rec.cumulative);
    s["increment"] = rec.increment.ids();
    s["cumulative"] = rec.cumulative.ids();
    s["n_components"] = rec.partition.n_components;
    s["bad_area"] = bad_set_area(mesh, bad_set(mesh, rec.partition));
    s["max_linear_residual_rel"] = rec.max_linear_residual_rel;
    // Field values flattened per cell-corner slot (cell-major; corner order
    // SW, SE, NW, NE; two components per slot).
    ordered_json field = ordered_json::array();
    for (int slot = 0; slot < 4 * mesh.n_cells(); ++slot) {
      const Vec2 v = rec.field.values[rec.field.dofs->class_of_slot[slot]];
      field.push_back(v(0));
      field.push_back(v(1));
    }
    s["field"] = std::move(field);
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open output file");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::string report_to_text(const std::vector<ConvergenceRow>& rows) {
  std::string text = "# qsfrac.report.v1\n";
  text +=
      "eps,time,total_gap,elastic_gap,hessian_value,disp_l2_error,bad_set_energy,"
      "balance_sigma,interior_work,measure_above_1e1,measure_above_1e2\n";
  for (const ConvergenceRow& r : rows) {
    text += format_double(r.eps) + "," + format_double(r.time) + "," +
            format_double(r.total_gap) + "," + format_double(r.elastic_gap) + "," +
            format_double(r.hessian_value) + "," + format_double(r.disp_l2_error) + "," +
            format_double(r.bad_set_energy) + "," + format_double(r.balance_sigma) + "," +
            format_double(r.interior_work) + "," + format_double(r.measure_above_1e1) + "," +
            format_double(r.measure_above_1e2) + "\n";
  }
  return text;
}

namespace {

std::string summary_text(const Mesh& mesh, const std::vector<const Trajectory*>& trajs) {
  ordered_json j;
  j["schema"] = "qsfrac.summary.v1";
  ordered_json runs = ordered_json::array();
  for (const Trajectory* traj : trajs) {
    const StepRecord& last = traj->steps.back();
    ordered_json r;
    r["model"] = to_string(traj->model);
    r["epsilon"] = traj->params.epsilon;
    r["final_total_energy"] = traj->total_energy(mesh, static_cast<int>(traj->steps.size()) - 1);
    r["final_cumulative_length"] = crack_measure(mesh, last.cumulative);
    r["final_cumulative"] = last.cumulative.ids();
    r["max_linear_residual_rel"] = traj->max_linear_residual_rel;
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

}  // namespace

std::vector<std::string> run_simulate(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const Mesh mesh = build_mesh(config.grid);
  const CrackState initial = CrackState::from_ids(mesh, config.initial_broken);
  const TimePartition partition{config.partition_level};
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> files;
  std::vector<Trajectory> trajs;
  auto run_one = [&](ModelKind kind) {
    const Problem problem = make_problem(config, mesh, kind);
    trajs.push_back(run_evolution(problem, partition, initial));
    if (config.outputs.trajectory) {
      const std::string path = out_dir + "/trajectory_" + to_string(kind) + ".json";
      write_text_file(path, trajectory_to_text(mesh, trajs.back()));
      files.push_back(path);
    }
  };
  if (config.model == "linear" || config.model == "both") run_one(ModelKind::Linear);
  if (config.model == "nonlinear" || config.model == "both") run_one(ModelKind::Nonlinear);

  if (config.outputs.summary) {
    std::vector<const Trajectory*> ptrs;
    for (const Trajectory& t : trajs) ptrs.push_back(&t);
    const std::string path = out_dir + "/summary.json";
    write_text_file(path, summary_text(mesh, ptrs));
    files.push_back(path);
  }
  return files;
}

std::vector<std::string> run_ladder(const RunConfig& config, const std::string& out_dir,
                                    int workers) {
  config.validate();
  if (config.ladder.empty())
    throw ConfigError("ladder: must be non-empty for the ladder subcommand");
  const Mesh mesh = build_mesh(config.grid);
  const CrackState initial = CrackState::from_ids(mesh, config.initial_broken);
  const TimePartition partition{config.partition_level};
  std::filesystem::create_directories(out_dir);

  const Problem linear_problem = make_problem(config, mesh, ModelKind::Linear);
  const Trajectory linear_traj = run_evolution(linear_problem, partition, initial);

  // Ladder entries are independent; run them on a small worker pool and keep
  // results indexed so output is identical regardless of worker count.
  std::vector<Trajectory> rungs(config.ladder.size());
  std::vector<std::exception_ptr> errors(config.ladder.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t k = next.fetch_add(1);
      if (k >= config.ladder.size()) return;
      try {
        RunConfig rung_config = config;
        rung_config.params.epsilon = config.ladder[k];
        const Problem problem = make_problem(rung_config, mesh, ModelKind::Nonlinear);
        rungs[k] = run_evolution(problem, partition, initial);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(config.ladder.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::string> files;
  if (config.outputs.trajectory) {
    std::string path = out_dir + "/trajectory_linear.json";
    write_text_file(path, trajectory_to_text(mesh, linear_traj));
    files.push_back(path);
    for (size_t k = 0; k < rungs.size(); ++k) {
      path = out_dir + "/trajectory_eps_" + std::to_string(k) + ".json";
      write_text_file(path, trajectory_to_text(mesh, rungs[k]));
      files.push_back(path);
    }
  }
  if (config.outputs.report) {
    const Density density{config.density};
    const std::vector<ConvergenceRow> rows =
        convergence_report(mesh, density, linear_problem.tensor, config.program, rungs,
                           linear_traj, partition.times());
    const std::string path = out_dir + "/report.csv";
    write_text_file(path, report_to_text(rows));
    files.push_back(path);
  }
  if (config.outputs.summary) {
    std::vector<const Trajectory*> ptrs{&linear_traj};
    for (const Trajectory& t : rungs) ptrs.push_back(&t);
    const std::string path = out_dir + "/summary.json";
    write_text_file(path, summary_text(mesh, ptrs));
    files.push_back(path);
  }
  return files;
}

std::vector<std::string> run_oracle(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const Mesh mesh = build_mesh(config.grid);
  const CrackState initial = CrackState::from_ids(mesh, config.initial_broken);
  const TimePartition partition{config.partition_level};
  std::filesystem::create_directories(out_dir);

  std::string text = "# qsfrac.oracle.v1\n";
  double max_rel_gap = 0.0;
  auto audit = [&](ModelKind kind) {
    const Problem problem = make_problem(config, mesh, kind);
    const Trajectory greedy = run_evolution(problem, partition, initial, false);
    const Trajectory brute = run_evolution(problem, partition, initial, true);
    text += "model " + to_string(kind) + "\n";
    text += "time,greedy_total,brute_total,rel_gap\n";
    for (size_t n = 0; n < greedy.steps.size(); ++n) {
      const double eg = greedy.total_energy(mesh, static_cast<int>(n));
      const double eb = brute.total_energy(mesh, static_cast<int>(n));
      const double gap = (eg - eb) / std::max(1.0, std::abs(eb));
      max_rel_gap = std::max(max_rel_gap, std::abs(gap));
      text += format_double(greedy.steps[n].time) + "," + format_double(eg) + "," +
              format_double(eb) + "," + format_double(gap) + "\n";
    }
  };
  if (config.model == "linear" || config.model == "both") audit(ModelKind::Linear);
  if (config.model == "nonlinear" || config.model == "both") audit(ModelKind::Nonlinear);
  text += "max_rel_gap " + format_double(max_rel_gap) + "\n";

  const std::string path = out_dir + "/oracle.txt";
  write_text_file(path, text);
  return {path};
}

}  // namespace qsf
