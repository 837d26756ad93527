#include "cmdp_gas/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "cmdp_gas/errors.hpp"

namespace cmdp::io {

namespace {

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& what) {
  if (!doc.is_object()) throw ConfigError(what + ": expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(what + ": unknown key '" + it.key() + "'");
}

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

json cell_json(env::Cell c) { return json::array({c.col, c.row}); }

env::Cell cell_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("cell must be [col, row]");
  return env::Cell{j[0].get<int>(), j[1].get<int>()};
}

template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json problem_to_json(const Cmdpd& m) {
  json doc;
  doc["n_states"] = m.n_states();
  doc["n_actions"] = m.n_actions();
  doc["gamma"] = m.discount();
  doc["constraint_bound"] = m.constraint_bound();
  doc["initial_dist"] = std::vector<double>(m.initial_dist().data(), m.initial_dist().data() + m.n_states());
  auto dense = [&](const Cmdpd::Matrix& x) {
    json rows = json::array();
    for (Index i = 0; i < x.rows(); ++i) {
      json row = json::array();
      for (Index a = 0; a < x.cols(); ++a) row.push_back(x(i, a));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  doc["rewards"] = dense(m.rewards());
  doc["costs"] = dense(m.costs());
  json tr = json::array();
  const auto& p = m.transitions();
  for (Index r = 0; r < p.outerSize(); ++r)
    for (Cmdpd::TransitionMatrix::InnerIterator it(p, r); it; ++it)
      tr.push_back(json{{"state", r / m.n_actions()},
                        {"action", r % m.n_actions()},
                        {"next_state", it.col()},
                        {"prob", it.value()}});
  doc["transitions"] = std::move(tr);
  if (m.has_action_mask()) {
    json mask = json::array();
    for (Index i = 0; i < m.n_states(); ++i) {
      json row = json::array();
      for (Index a = 0; a < m.n_actions(); ++a) row.push_back(bool(m.action_mask()(i, a)));
      mask.push_back(std::move(row));
    }
    doc["action_mask"] = std::move(mask);
  }
  return doc;
}

Cmdpd problem_from_json(const json& doc) {
  return guarded("problem", [&] {
    reject_unknown(doc,
                   {"n_states", "n_actions", "gamma", "constraint_bound", "initial_dist", "rewards", "costs",
                    "transitions", "action_mask"},
                   "problem");
    const Index ns = doc.at("n_states").get<Index>(), na = doc.at("n_actions").get<Index>();
    if (ns <= 0 || na <= 0) throw ConfigError("problem: n_states and n_actions must be positive");

    auto dense = [&](const char* key) {
      const json& rows = doc.at(key);
      if (!rows.is_array() || Index(rows.size()) != ns)
        throw ConfigError(std::string("problem: '") + key + "' must have n_states rows");
      Cmdpd::Matrix x(ns, na);
      for (Index i = 0; i < ns; ++i) {
        const json& row = rows[std::size_t(i)];
        if (!row.is_array() || Index(row.size()) != na)
          throw ConfigError(std::string("problem: '") + key + "' must have n_actions columns");
        for (Index a = 0; a < na; ++a) x(i, a) = row[std::size_t(a)].get<double>();
      }
      return x;
    };
    Cmdpd::Matrix rewards = dense("rewards"), costs = dense("costs");

    const auto beta_v = doc.at("initial_dist").get<std::vector<double>>();
    if (Index(beta_v.size()) != ns) throw ConfigError("problem: initial_dist must have n_states entries");
    Cmdpd::Vector beta = Eigen::Map<const Cmdpd::Vector>(beta_v.data(), ns);

    TransitionBuilder<double> builder(ns, na);
    const json& tr = doc.at("transitions");
    if (!tr.is_array()) throw ConfigError("problem: transitions must be an array");
    builder.reserve(tr.size());
    for (const json& t : tr) {
      reject_unknown(t, {"state", "action", "next_state", "prob"}, "problem transition");
      const Index i = t.at("state").get<Index>(), a = t.at("action").get<Index>(),
                  j = t.at("next_state").get<Index>();
      if (i < 0 || i >= ns || a < 0 || a >= na || j < 0 || j >= ns)
        throw ConfigError("problem: transition index out of range");
      builder.add(i, a, j, t.at("prob").get<double>());
    }

    Cmdpd::ActionMask mask;
    if (doc.contains("action_mask")) {
      const json& rows = doc.at("action_mask");
      if (!rows.is_array() || Index(rows.size()) != ns) throw ConfigError("problem: action_mask must have n_states rows");
      mask.resize(ns, na);
      for (Index i = 0; i < ns; ++i) {
        const json& row = rows[std::size_t(i)];
        if (!row.is_array() || Index(row.size()) != na)
          throw ConfigError("problem: action_mask must have n_actions columns");
        for (Index a = 0; a < na; ++a) mask(i, a) = row[std::size_t(a)].get<bool>();
      }
    }

    Cmdpd m(builder.build(), std::move(rewards), std::move(costs), std::move(beta), doc.at("gamma").get<double>(),
            doc.at("constraint_bound").get<double>(), std::move(mask));
    if (!m.valid()) throw ConfigError("problem violates model invariants: " + m.report().summary());
    return m;
  });
}

void save_problem(const std::filesystem::path& path, const Cmdpd& m) {
  write_atomic(path, problem_to_json(m).dump() + "\n");
}

Cmdpd load_problem(const std::filesystem::path& path) { return problem_from_json(read_json(path)); }

json to_json(const env::GridConfig& c) {
  json doc;
  doc["width"] = c.width;
  doc["height"] = c.height;
  doc["start"] = cell_json(c.start);
  doc["goal"] = cell_json(c.goal);
  if (c.generate) {
    doc["obstacles"] = json{{"count", c.generate->count}, {"seed", c.generate->seed}, {"spread", c.generate->spread},
                            {"safe_radius", c.generate->safe_radius}};
  } else {
    json cells = json::array();
    for (const auto& o : c.obstacles) cells.push_back(cell_json(o));
    doc["obstacles"] = std::move(cells);
  }
  doc["slip"] = c.slip;
  doc["gamma"] = c.discount;
  doc["step_reward"] = c.step_reward;
  if (c.goal_reward) doc["goal_reward"] = *c.goal_reward;
  if (c.obstacle_cost) doc["obstacle_cost"] = *c.obstacle_cost;
  doc["constraint_bound"] = c.constraint_bound;
  return doc;
}

env::GridConfig grid_config_from_json(const json& doc) {
  return guarded("gridworld config", [&] {
    reject_unknown(doc,
                   {"width", "height", "start", "goal", "obstacles", "slip", "gamma", "step_reward", "goal_reward",
                    "obstacle_cost", "constraint_bound"},
                   "gridworld config");
    env::GridConfig c;
    read_opt(doc, "width", c.width);
    read_opt(doc, "height", c.height);
    if (doc.contains("start")) c.start = cell_from(doc.at("start"));
    if (doc.contains("goal")) c.goal = cell_from(doc.at("goal"));
    if (doc.contains("obstacles")) {
      const json& o = doc.at("obstacles");
      if (o.is_array()) {
        c.generate.reset();
        c.obstacles.clear();
        for (const json& cell : o) c.obstacles.push_back(cell_from(cell));
      } else {
        reject_unknown(o, {"count", "seed", "spread", "safe_radius"}, "gridworld obstacles");
        env::ObstacleGeneration g;
        read_opt(o, "count", g.count);
        read_opt(o, "seed", g.seed);
        read_opt(o, "spread", g.spread);
        read_opt(o, "safe_radius", g.safe_radius);
        c.generate = g;
      }
    }
    read_opt(doc, "slip", c.slip);
    read_opt(doc, "gamma", c.discount);
    read_opt(doc, "step_reward", c.step_reward);
    if (doc.contains("goal_reward")) c.goal_reward = doc.at("goal_reward").get<double>();
    if (doc.contains("obstacle_cost")) c.obstacle_cost = doc.at("obstacle_cost").get<double>();
    read_opt(doc, "constraint_bound", c.constraint_bound);
    c.check();
    return c;
  });
}

#define CMDP_UAV_FIELDS(X)                                                                                      \
  X(n_altitude) X(n_battery) X(path_loss_exponent) X(harvest_efficiency) X(battery_capacity_wh)                 \
  X(battery_increase_wh) X(slot_s) X(panel_area_m2) X(carrier_hz) X(solar_intensity) X(off_lobe_gain)           \
  X(weight_n) X(noise_dbm) X(air_density) X(rotor_area_m2) X(static_power_w) X(snr_threshold) X(cell_radius_m)  \
  X(cloud_absorption) X(k1) X(k2) X(cloud_top_m) X(cloud_bottom_m) X(dz_min_m) X(dz_max_m) X(z_min_m) X(z_max_m) \
  X(g1) X(g2) X(mu_los_db) X(mu_nlos_db) X(zeta) X(eta) X(climb_rates) X(tx_powers_dbm) X(beamwidths_deg)

json to_json(const env::UavConfig& c) {
  json doc;
#define X(name) doc[#name] = c.name;
  CMDP_UAV_FIELDS(X)
#undef X
  doc["gamma"] = c.discount;
  if (c.start.kind == env::UavStart::Kind::Uniform)
    doc["start"] = json{{"kind", "uniform"}};
  else
    doc["start"] = json{{"kind", "point"},
                        {"battery_level", c.start.battery_level},
                        {"altitude_index", c.start.altitude_index}};
  return doc;
}

env::UavConfig uav_config_from_json(const json& doc) {
  return guarded("uav config", [&] {
    std::set<std::string> known{"gamma", "start"};
#define X(name) known.insert(#name);
    CMDP_UAV_FIELDS(X)
#undef X
    reject_unknown(doc, known, "uav config");
    env::UavConfig c;
#define X(name) read_opt(doc, #name, c.name);
    CMDP_UAV_FIELDS(X)
#undef X
    read_opt(doc, "gamma", c.discount);
    if (doc.contains("start")) {
      const json& s = doc.at("start");
      reject_unknown(s, {"kind", "battery_level", "altitude_index"}, "uav start");
      const std::string kind = s.at("kind").get<std::string>();
      if (kind == "uniform")
        c.start.kind = env::UavStart::Kind::Uniform;
      else if (kind == "point")
        c.start.kind = env::UavStart::Kind::Point;
      else
        throw ConfigError("uav start: kind must be 'uniform' or 'point'");
      read_opt(s, "battery_level", c.start.battery_level);
      read_opt(s, "altitude_index", c.start.altitude_index);
    }
    c.check();
    return c;
  });
}

#undef CMDP_UAV_FIELDS

std::string trace_csv(const SolveTrace& trace, bool with_wall_time) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.outer_iter) + "," + format_double(r.mu) + "," + format_double(r.objective) + "," +
           format_double(r.gradient) + "," + std::to_string(r.inner_iterations) + "," +
           std::to_string(r.cumulative_inner_iterations) + "," + format_double(with_wall_time ? r.wall_time_ms : 0.0) +
           "\n";
  }
  return out;
}

std::string scan_csv(const ScanResult<double>& scan) {
  std::string out = "mu,objective,gradient\n";
  for (const auto& p : scan.points)
    out += format_double(p.mu) + "," + format_double(p.objective) + "," + format_double(p.gradient) + "\n";
  return out;
}

json result_to_json(const SolveResult<double>& r, bool with_wall_time) {
  json doc;
  doc["algorithm"] = r.algorithm;
  doc["mu_star"] = r.mu_star;
  doc["objective"] = r.objective;
  doc["objective_at_mu_star"] = r.objective_at_mu_star;
  doc["gradient_at_mu_star"] = r.gradient_at_mu_star;
  doc["outer_iterations"] = r.outer_iterations();
  doc["cumulative_inner_iterations"] = r.cumulative_inner_iterations();
  doc["values_from_final_evaluation"] = r.trace.values_from_final_evaluation;
  doc["wall_time_ms"] = with_wall_time ? r.wall_time_ms : 0.0;
  doc["policy"] = r.policy;
  return doc;
}

json rollout_to_json(const RolloutStats& st) {
  json doc;
  doc["n_episodes"] = st.n_episodes;
  doc["horizon"] = st.horizon;
  doc["seed"] = st.seed;
  doc["success_rate"] = st.success_rate();
  json rates = json::object();
  for (const auto& s : st.success_counts) rates[s.name] = st.rate(s.name);
  doc["success_rates"] = std::move(rates);
  doc["mean_disc_reward"] = st.mean_disc_reward;
  doc["stderr_disc_reward"] = st.stderr_disc_reward;
  doc["mean_disc_cost"] = st.mean_disc_cost;
  doc["stderr_disc_cost"] = st.stderr_disc_cost;
  return doc;
}

}  // namespace cmdp::io
