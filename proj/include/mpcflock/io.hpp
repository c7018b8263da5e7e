#ifndef MPCFLOCK_IO_HPP_
#define MPCFLOCK_IO_HPP_

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sim.hpp"

namespace mpcflock {

using json = nlohmann::json;

inline constexpr const char *kTraceFormat = "mpcflock-trace";
inline constexpr int kTraceVersion = 1;
inline constexpr const char *kVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  IoError(const std::string &what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// ---------------------------------------------------------------------------
// scenario files

namespace detail {

inline const json &require(const json &obj, const std::string &key, const std::string &path) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + key, "missing required key");
  return obj.at(key);
}

inline void allow_only(const json &obj, std::initializer_list<const char *> keys, const std::string &path) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected an object");
  for (const auto &[k, _] : obj.items())
    if (std::find_if(keys.begin(), keys.end(), [&](const char *a) { return k == a; }) == keys.end())
      throw ConfigError(path + k, "unknown key");
}

inline double number(const json &v, const std::string &key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

inline int integer(const json &v, const std::string &key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<int>();
}

inline Vec2 vec2(const json &v, const std::string &key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline json vec2_json(const Vec2 &x) { return json::array({x.x(), x.y()}); }

template <class T, class F>
void optional_field(const json &obj, const std::string &key, const std::string &path, T &out, F convert) {
  if (obj.contains(key)) out = convert(obj.at(key), path + key);
}

inline LeaderPath parse_path(const json &j, const std::string &path) {
  allow_only(j, {"waypoints", "speed"}, path);
  LeaderPath lp;
  const auto &w = require(j, "waypoints", path);
  if (!w.is_array()) throw ConfigError(path + "waypoints", "expected an array");
  for (std::size_t i = 0; i < w.size(); ++i) lp.waypoints.push_back(vec2(w[i], path + "waypoints[" + std::to_string(i) + "]"));
  lp.speed = number(require(j, "speed", path), path + "speed");
  return lp;
}

inline json path_json(const LeaderPath &p) {
  json w = json::array();
  for (const auto &x : p.waypoints) w.push_back(vec2_json(x));
  return {{"waypoints", w}, {"speed", p.speed}};
}

inline Obstacle parse_obstacle(const json &j, const std::string &path, double default_margin) {
  const auto &type = require(j, "type", path);
  Obstacle o;
  o.margin = default_margin;
  if (type == "circle") {
    allow_only(j, {"type", "center", "radius", "margin"}, path);
    o.shape = Circle{vec2(require(j, "center", path), path + "center"), number(require(j, "radius", path), path + "radius")};
  } else if (type == "rectangle") {
    allow_only(j, {"type", "min", "max", "margin"}, path);
    o.shape = Box{vec2(require(j, "min", path), path + "min"), vec2(require(j, "max", path), path + "max")};
  } else {
    throw ConfigError(path + "type", "expected 'circle' or 'rectangle'");
  }
  optional_field(j, "margin", path, o.margin, number);
  o.validate(path.substr(0, path.size() - 1));
  return o;
}

inline json obstacle_json(const Obstacle &o) {
  if (const auto *c = std::get_if<Circle>(&o.shape))
    return {{"type", "circle"}, {"center", vec2_json(c->center)}, {"radius", c->radius}, {"margin", o.margin}};
  const auto &b = std::get<Box>(o.shape);
  return {{"type", "rectangle"}, {"min", vec2_json(b.lo)}, {"max", vec2_json(b.hi)}, {"margin", o.margin}};
}

}  // namespace detail

/// Margin applied to obstacles that do not declare one [m].
inline constexpr double kDefaultObstacleMargin = 0.1;

/// Builds a validated scenario from its JSON form; omitted parameters keep
/// their defaults.
inline ScenarioConfig scenario_from_json(const json &root) {
  using namespace detail;
  allow_only(root, {"name", "agents", "leader_path", "environment", "comms", "mpc", "rules", "solver", "run"}, "");
  ScenarioConfig cfg;
  if (root.contains("name")) {
    if (!root["name"].is_string()) throw ConfigError("name", "expected a string");
    cfg.name = root["name"].get<std::string>();
  }

  const bool has_path = root.contains("leader_path");
  if (has_path) cfg.leader_path = parse_path(root["leader_path"], "leader_path.");

  const auto &agents = require(root, "agents", "");
  if (!agents.is_array()) throw ConfigError("agents", "expected an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "agents[" + std::to_string(i) + "].";
    const auto &a = agents[i];
    allow_only(a, {"id", "role", "position", "velocity", "horizon", "path"}, path);
    AgentSpec spec;
    spec.id = integer(require(a, "id", path), path + "id");
    const auto &role = require(a, "role", path);
    if (role == "leader") spec.role = Role::leader;
    else if (role == "follower") spec.role = Role::follower;
    else throw ConfigError(path + "role", "expected 'leader' or 'follower'");
    if (a.contains("path")) spec.path = parse_path(a["path"], path + "path.");
    if (spec.role == Role::leader && !spec.path && !has_path)
      throw ConfigError("leader_path", "missing required key (leader " + std::to_string(spec.id) + " has no path)");
    if (spec.role == Role::follower) {
      spec.initial.p = vec2(require(a, "position", path), path + "position");
    } else {
      // leaders start at the first waypoint of their path
      const auto &lp = spec.path ? *spec.path : cfg.leader_path;
      if (lp.waypoints.empty()) throw ConfigError(path + "path", "leader path has no waypoints");
      spec.initial.p = lp.waypoints.front();
      if (a.contains("position") && (vec2(a["position"], path + "position") - spec.initial.p).norm() > 1e-9)
        throw ConfigError(path + "position", "leader must start at the first waypoint of its path");
    }
    optional_field(a, "velocity", path, spec.initial.v, vec2);
    if (a.contains("horizon")) spec.horizon = integer(a["horizon"], path + "horizon");
    cfg.agents.push_back(std::move(spec));
  }

  double default_margin = kDefaultObstacleMargin;
  if (root.contains("environment")) {
    const auto &e = root["environment"];
    allow_only(e, {"obstacles", "bounds", "default_margin", "sensing_radius"}, "environment.");
    optional_field(e, "default_margin", "environment.", default_margin, number);
    if (e.contains("sensing_radius")) cfg.sensing_radius = number(e["sensing_radius"], "environment.sensing_radius");
    if (e.contains("bounds")) {
      const auto &b = e["bounds"];
      allow_only(b, {"min", "max"}, "environment.bounds.");
      cfg.environment.bounds = Box{vec2(require(b, "min", "environment.bounds."), "environment.bounds.min"),
                                   vec2(require(b, "max", "environment.bounds."), "environment.bounds.max")};
    }
    if (e.contains("obstacles")) {
      if (!e["obstacles"].is_array()) throw ConfigError("environment.obstacles", "expected an array");
      for (std::size_t i = 0; i < e["obstacles"].size(); ++i)
        cfg.environment.obstacles.push_back(
            parse_obstacle(e["obstacles"][i], "environment.obstacles[" + std::to_string(i) + "].", default_margin));
    }
  }

  const auto &comms = require(root, "comms", "");
  allow_only(comms, {"detection_radius", "delays"}, "comms.");
  cfg.detection_radius = number(require(comms, "detection_radius", "comms."), "comms.detection_radius");
  if (comms.contains("delays")) {
    for (std::size_t i = 0; i < comms["delays"].size(); ++i) {
      const std::string path = "comms.delays[" + std::to_string(i) + "].";
      const auto &d = comms["delays"][i];
      allow_only(d, {"from", "to", "steps"}, path);
      LinkDelay link{integer(require(d, "from", path), path + "from"), integer(require(d, "to", path), path + "to"),
                     integer(require(d, "steps", path), path + "steps")};
      if (link.steps < 0) throw ConfigError(path + "steps", "must be >= 0");
      cfg.delays.push_back(link);
    }
  }

  if (root.contains("mpc")) {
    const auto &m = root["mpc"];
    const std::string p = "mpc.";
    allow_only(m, {"horizon", "separation_horizon", "separation_radius", "separation_penalty", "discount",
                   "input_weight", "input_box", "velocity_box", "dt"}, p);
    optional_field(m, "horizon", p, cfg.mpc.horizon, integer);
    optional_field(m, "separation_horizon", p, cfg.mpc.separation_horizon, integer);
    optional_field(m, "separation_radius", p, cfg.mpc.separation_radius, number);
    optional_field(m, "separation_penalty", p, cfg.mpc.separation_penalty, number);
    optional_field(m, "discount", p, cfg.mpc.discount, number);
    if (m.contains("input_weight")) {
      const auto &w = m["input_weight"];
      cfg.mpc.input_weight = w.is_number() ? Vec2::Constant(w.get<double>()) : vec2(w, p + "input_weight");
    }
    optional_field(m, "input_box", p, cfg.mpc.input_box, number);
    optional_field(m, "velocity_box", p, cfg.mpc.velocity_box, number);
    optional_field(m, "dt", p, cfg.mpc.dt, number);
  }

  if (root.contains("rules")) {
    const auto &r = root["rules"];
    const std::string p = "rules.";
    allow_only(r, {"hierarchy_cap", "behind_weight", "q_static", "q_gain", "q_min", "q_max"}, p);
    optional_field(r, "hierarchy_cap", p, cfg.rules.hierarchy_cap, integer);
    optional_field(r, "behind_weight", p, cfg.rules.behind_weight, number);
    optional_field(r, "q_static", p, cfg.rules.q_static, number);
    optional_field(r, "q_gain", p, cfg.rules.q_gain, number);
    optional_field(r, "q_min", p, cfg.rules.q_min, number);
    optional_field(r, "q_max", p, cfg.rules.q_max, number);
  }

  if (root.contains("solver")) {
    const auto &s = root["solver"];
    const std::string p = "solver.";
    allow_only(s, {"inner_tolerance", "outer_tolerance", "initial_penalty", "penalty_growth", "max_inner_iterations",
                   "max_outer_iterations"}, p);
    optional_field(s, "inner_tolerance", p, cfg.solver.inner_tolerance, number);
    optional_field(s, "outer_tolerance", p, cfg.solver.outer_tolerance, number);
    optional_field(s, "initial_penalty", p, cfg.solver.initial_penalty, number);
    optional_field(s, "penalty_growth", p, cfg.solver.penalty_growth, number);
    optional_field(s, "max_inner_iterations", p, cfg.solver.max_inner_iterations, integer);
    optional_field(s, "max_outer_iterations", p, cfg.solver.max_outer_iterations, integer);
  }

  if (root.contains("run")) {
    const auto &r = root["run"];
    const std::string p = "run.";
    allow_only(r, {"steps", "seed", "jitter", "ablation", "arrival_radius"}, p);
    optional_field(r, "steps", p, cfg.steps, integer);
    if (r.contains("seed")) {
      if (!r["seed"].is_number_unsigned()) throw ConfigError("run.seed", "expected a non-negative integer");
      cfg.seed = r["seed"].get<std::uint64_t>();
    }
    optional_field(r, "jitter", p, cfg.jitter, number);
    if (r.contains("ablation")) {
      if (!r["ablation"].is_string()) throw ConfigError("run.ablation", "expected a string");
      cfg.ablation = ablation_from_string(r["ablation"].get<std::string>());
    }
    if (r.contains("arrival_radius")) cfg.arrival_radius = number(r["arrival_radius"], "run.arrival_radius");
  }

  cfg.validate();
  return cfg;
}

/// Canonical JSON form: every parameter spelled out, keys sorted.
inline json scenario_to_json(const ScenarioConfig &cfg) {
  using detail::vec2_json;
  json agents = json::array();
  for (const auto &a : cfg.agents) {
    json j = {{"id", a.id}, {"role", a.role == Role::leader ? "leader" : "follower"}, {"position", vec2_json(a.initial.p)},
              {"velocity", vec2_json(a.initial.v)}};
    if (a.horizon) j["horizon"] = *a.horizon;
    if (a.path) j["path"] = detail::path_json(*a.path);
    agents.push_back(std::move(j));
  }
  json obstacles = json::array();
  for (const auto &o : cfg.environment.obstacles) obstacles.push_back(detail::obstacle_json(o));
  json env = {{"obstacles", obstacles}};
  if (cfg.environment.bounds) env["bounds"] = {{"min", vec2_json(cfg.environment.bounds->lo)}, {"max", vec2_json(cfg.environment.bounds->hi)}};
  if (cfg.sensing_radius) env["sensing_radius"] = *cfg.sensing_radius;
  json delays = json::array();
  for (const auto &d : cfg.delays) delays.push_back({{"from", d.from}, {"to", d.to}, {"steps", d.steps}});

  json root = {
      {"name", cfg.name},
      {"agents", agents},
      {"environment", env},
      {"comms", {{"detection_radius", cfg.detection_radius}, {"delays", delays}}},
      {"mpc",
       {{"horizon", cfg.mpc.horizon},
        {"separation_horizon", cfg.mpc.separation_horizon},
        {"separation_radius", cfg.mpc.separation_radius},
        {"separation_penalty", cfg.mpc.separation_penalty},
        {"discount", cfg.mpc.discount},
        {"input_weight", vec2_json(cfg.mpc.input_weight)},
        {"input_box", cfg.mpc.input_box},
        {"velocity_box", cfg.mpc.velocity_box},
        {"dt", cfg.mpc.dt}}},
      {"rules",
       {{"hierarchy_cap", cfg.rules.hierarchy_cap},
        {"behind_weight", cfg.rules.behind_weight},
        {"q_static", cfg.rules.q_static},
        {"q_gain", cfg.rules.q_gain},
        {"q_min", cfg.rules.q_min},
        {"q_max", cfg.rules.q_max}}},
      {"solver",
       {{"inner_tolerance", cfg.solver.inner_tolerance},
        {"outer_tolerance", cfg.solver.outer_tolerance},
        {"initial_penalty", cfg.solver.initial_penalty},
        {"penalty_growth", cfg.solver.penalty_growth},
        {"max_inner_iterations", cfg.solver.max_inner_iterations},
        {"max_outer_iterations", cfg.solver.max_outer_iterations}}},
      {"run", {{"steps", cfg.steps}, {"seed", cfg.seed}, {"jitter", cfg.jitter}, {"ablation", to_string(cfg.ablation)}}}};
  if (!cfg.leader_path.waypoints.empty()) root["leader_path"] = detail::path_json(cfg.leader_path);
  if (cfg.arrival_radius) root["run"]["arrival_radius"] = *cfg.arrival_radius;
  return root;
}

inline ScenarioConfig parse_scenario_text(const std::string &text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError("", std::string("malformed scenario: ") + e.what());
  }
  return scenario_from_json(root);
}

inline ScenarioConfig parse_scenario(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

/// FNV-1a 64 over the canonical scenario text, as 16 hex digits.
inline std::string config_digest(const ScenarioConfig &cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scenario_to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// traces

struct TraceHeader {
  std::string scenario;
  std::string config_digest;
  std::string version = kVersion;
};

inline json record_json(int step, const AgentRecord &a) {
  using detail::vec2_json;
  json j = {{"step", step},
            {"agent", a.id},
            {"role", a.role == Role::leader ? "leader" : "follower"},
            {"input", vec2_json(a.input)},
            {"p", vec2_json(a.state.p)},
            {"v", vec2_json(a.state.v)},
            {"level", a.level},
            {"q", a.q},
            {"neighbors", a.neighbors},
            {"solve", nullptr}};
  if (a.solve)
    j["solve"] = {{"status", to_string(a.solve->status)}, {"cost", a.solve->cost}, {"residual", a.solve->residual},
                  {"inner", a.solve->inner_iterations}, {"outer", a.solve->outer_iterations}};
  return j;
}

inline void write_trace(std::ostream &out, const Trace &trace, const TraceHeader &header) {
  const json head = {{"format", kTraceFormat}, {"trace_version", kTraceVersion}, {"version", header.version},
                     {"scenario", header.scenario}, {"config_digest", header.config_digest}};
  out << head.dump() << '\n';
  for (const auto &rec : trace)
    for (const auto &a : rec.agents) out << record_json(rec.step, a).dump() << '\n';
}

inline void write_trace(const std::string &path, const Trace &trace, const TraceHeader &header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trace(out, trace, header);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Trace read_trace(std::istream &in, TraceHeader *header = nullptr) {
  using detail::vec2;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw IoError("empty trace file", 1);
  ++lineno;
  try {
    const auto head = json::parse(line);
    if (head.value("format", "") != kTraceFormat) throw IoError("not a trace file", lineno);
    if (header) *header = {head.at("scenario").get<std::string>(), head.at("config_digest").get<std::string>(),
                           head.at("version").get<std::string>()};
  } catch (const json::exception &e) {
    throw IoError(std::string("bad header: ") + e.what(), lineno);
  }

  Trace trace;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      AgentRecord a;
      const int step = j.at("step").get<int>();
      a.id = j.at("agent").get<AgentId>();
      a.role = j.at("role").get<std::string>() == "leader" ? Role::leader : Role::follower;
      a.input = vec2(j.at("input"), "input");
      a.state.p = vec2(j.at("p"), "p");
      a.state.v = vec2(j.at("v"), "v");
      a.level = j.at("level").get<int>();
      a.q = j.at("q").get<double>();
      a.neighbors = j.at("neighbors").get<std::vector<AgentId>>();
      if (const auto &s = j.at("solve"); !s.is_null())
        a.solve = SolveSummary{solve_status_from_string(s.at("status").get<std::string>()), s.at("cost").get<double>(),
                               s.at("residual").get<double>(), s.at("inner").get<int>(), s.at("outer").get<int>()};
      if (trace.empty() || trace.back().step != step) {
        if (!trace.empty() && step < trace.back().step) throw IoError("records out of step order", lineno);
        trace.push_back({step, {}});
      }
      if (!trace.back().agents.empty() && trace.back().agents.back().id >= a.id)
        throw IoError("records out of agent order", lineno);
      trace.back().agents.push_back(std::move(a));
    } catch (const IoError &) {
      throw;
    } catch (const std::exception &e) {
      throw IoError(e.what(), lineno);
    }
  }
  return trace;
}

inline Trace read_trace(const std::string &path, TraceHeader *header = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  return read_trace(in, header);
}

// ---------------------------------------------------------------------------
// metrics

inline json metrics_to_json(const Metrics &m) {
  auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json per_step = json::array();
  for (const auto &s : m.per_step) {
    json gd = json::object();
    for (const auto &[id, d] : s.graph_distance) gd[std::to_string(id)] = d;
    per_step.push_back({{"step", s.step},
                        {"max_follower_distance", s.max_follower_distance},
                        {"connected", s.connected},
                        {"graph_distance", gd},
                        {"min_pairwise_distance", finite_or_null(s.min_pairwise_distance)},
                        {"inside_obstacles", s.inside_obstacles},
                        {"all_converged", s.all_converged}});
  }
  json final_dist = json::object();
  for (const auto &[id, d] : m.final_distance_to_leader) final_dist[std::to_string(id)] = d;
  return {{"arrived", m.arrived},
          {"final_distance_to_leader", final_dist},
          {"disconnected", m.disconnected},
          {"min_pairwise_distance", finite_or_null(m.min_pairwise_distance)},
          {"min_pairwise_distance_converged", finite_or_null(m.min_pairwise_distance_converged)},
          {"inside_obstacles", m.inside_obstacles},
          {"converged_steps", m.converged_steps},
          {"solves", m.solves},
          {"converged_solves", m.converged_solves},
          {"per_step", per_step}};
}

// ---------------------------------------------------------------------------
// SVG snapshots

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

inline const char *agent_color(std::size_t i) {
  static const char *palette[] = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#1f9e89"};
  return palette[i % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

/// Overlays the configurations at the given trace steps; earlier snapshots are
/// drawn fainter, and detection ranges are shown for the last one.
inline void render_snapshots(std::ostream &out, const Trace &trace, const ScenarioConfig &cfg, std::vector<int> times) {
  using detail::fmt;
  if (times.empty()) throw std::invalid_argument("render_snapshots: no times given");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<const StepRecord *> snaps;
  for (int t : times) {
    auto it = std::find_if(trace.begin(), trace.end(), [t](const StepRecord &r) { return r.step == t; });
    if (it == trace.end()) throw std::out_of_range("render_snapshots: step " + std::to_string(t) + " not in trace");
    snaps.push_back(&*it);
  }

  // view box: arena bounds, else everything drawn plus a border
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  auto grow = [&](const Vec2 &a, double pad) {
    lo = lo.cwiseMin(a - Vec2::Constant(pad));
    hi = hi.cwiseMax(a + Vec2::Constant(pad));
  };
  if (cfg.environment.bounds) {
    grow(cfg.environment.bounds->lo, 0.0);
    grow(cfg.environment.bounds->hi, 0.0);
  } else {
    for (const auto *s : snaps)
      for (const auto &a : s->agents) grow(a.state.p, cfg.detection_radius);
    for (const auto &o : cfg.environment.obstacles) {
      if (const auto *c = std::get_if<Circle>(&o.shape)) grow(c->center, c->radius + o.margin);
      else {
        grow(std::get<Box>(o.shape).lo, o.margin);
        grow(std::get<Box>(o.shape).hi, o.margin);
      }
    }
  }
  const Vec2 size = hi - lo;
  const double width_px = 1000.0;
  const double height_px = width_px * size.y() / size.x();
  const double stroke = 0.004 * std::max(size.x(), size.y());
  auto X = [&](double x) { return fmt(x - lo.x()); };
  auto Y = [&](double y) { return fmt(hi.y() - y); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_px) << "\" height=\"" << fmt(height_px)
      << "\" viewBox=\"0 0 " << fmt(size.x()) << ' ' << fmt(size.y()) << "\">\n";
  out << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << fmt(size.x()) << "\" height=\"" << fmt(size.y())
      << "\" fill=\"white\"/>\n";

  for (const auto &o : cfg.environment.obstacles) {
    if (const auto *c = std::get_if<Circle>(&o.shape)) {
      out << "<circle class=\"obstacle\" cx=\"" << X(c->center.x()) << "\" cy=\"" << Y(c->center.y()) << "\" r=\""
          << fmt(c->radius) << "\" fill=\"black\"/>\n";
      if (o.margin > 0)
        out << "<circle class=\"margin\" cx=\"" << X(c->center.x()) << "\" cy=\"" << Y(c->center.y()) << "\" r=\""
            << fmt(c->radius + o.margin) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"" << fmt(stroke / 2)
            << "\" stroke-dasharray=\"" << fmt(stroke) << ' ' << fmt(stroke) << "\"/>\n";
    } else {
      const auto &b = std::get<Box>(o.shape);
      out << "<rect class=\"obstacle\" x=\"" << X(b.lo.x()) << "\" y=\"" << Y(b.hi.y()) << "\" width=\""
          << fmt(b.hi.x() - b.lo.x()) << "\" height=\"" << fmt(b.hi.y() - b.lo.y()) << "\" fill=\"black\"/>\n";
      if (o.margin > 0)
        out << "<rect class=\"margin\" x=\"" << X(b.lo.x() - o.margin) << "\" y=\"" << Y(b.hi.y() + o.margin)
            << "\" width=\"" << fmt(b.hi.x() - b.lo.x() + 2 * o.margin) << "\" height=\""
            << fmt(b.hi.y() - b.lo.y() + 2 * o.margin) << "\" fill=\"none\" stroke=\"black\" stroke-width=\""
            << fmt(stroke / 2) << "\" stroke-dasharray=\"" << fmt(stroke) << ' ' << fmt(stroke) << "\"/>\n";
    }
  }

  const double r_sep = cfg.mpc.separation_radius;
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    const auto &rec = *snaps[s];
    const bool last = s + 1 == snaps.size();
    const double opacity = last ? 1.0 : 0.25 + 0.5 * static_cast<double>(s) / static_cast<double>(snaps.size() - 1);
    out << "<g class=\"snapshot\" data-step=\"" << rec.step << "\" opacity=\"" << fmt(opacity) << "\">\n";
    std::map<AgentId, Vec2> pos;
    for (const auto &a : rec.agents) pos[a.id] = a.state.p;
    for (const auto &a : rec.agents)
      for (AgentId j : a.neighbors)
        if (a.id < j && pos.count(j))
          out << "<line class=\"edge\" x1=\"" << X(a.state.p.x()) << "\" y1=\"" << Y(a.state.p.y()) << "\" x2=\""
              << X(pos[j].x()) << "\" y2=\"" << Y(pos[j].y()) << "\" stroke=\"gray\" stroke-width=\"" << fmt(stroke / 2)
              << "\" stroke-dasharray=\"" << fmt(2 * stroke) << ' ' << fmt(stroke) << "\"/>\n";
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const auto &a = rec.agents[i];
      const std::string cx = X(a.state.p.x()), cy = Y(a.state.p.y());
      if (last)
        out << "<circle class=\"range\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << fmt(cfg.detection_radius)
            << "\" fill=\"" << (a.role == Role::leader ? "#1f77b4" : detail::agent_color(i))
            << "\" fill-opacity=\"0.08\" stroke=\"none\"/>\n";
      if (a.role == Role::leader) {
        // five-pointed star
        out << "<polygon class=\"leader\" points=\"";
        for (int k = 0; k < 10; ++k) {
          const double ang = std::numbers::pi / 2 + k * std::numbers::pi / 5;
          const double rad = (k % 2 == 0 ? 1.6 : 0.65) * r_sep;
          out << (k ? " " : "") << X(a.state.p.x() + rad * std::cos(ang)) << ',' << Y(a.state.p.y() + rad * std::sin(ang));
        }
        out << "\" fill=\"#1f77b4\"/>\n";
      } else {
        out << "<circle class=\"agent\" data-id=\"" << a.id << "\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\""
            << fmt(r_sep) << "\" fill=\"" << detail::agent_color(i) << "\" stroke=\"black\" stroke-width=\""
            << fmt(stroke / 4) << "\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

inline void render_snapshots(const std::string &path, const Trace &trace, const ScenarioConfig &cfg,
                             std::vector<int> times) {
  std::ostringstream os;
  render_snapshots(os, trace, cfg, std::move(times));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << os.str();
}

}  // namespace mpcflock

#endif  // MPCFLOCK_IO_HPP_
