#include "mfppo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mfppo/error.hpp"
#include "scenarios_ini.hpp"

namespace mfppo {

namespace {

constexpr int kDx[kNumMoves] = {0, 0, 0, -1, 1};
constexpr int kDy[kNumMoves] = {0, -1, 1, 0, 0};

GridCell apply_move(const GridWorldSpec& spec, GridCell c, int move) {
  const GridCell n{c.x + kDx[move], c.y + kDy[move]};
  if (n.x < 0 || n.y < 0 || n.x >= spec.side || n.y >= spec.side) return c;
  return n;
}

// Move toward target, x first.
int step_toward(GridCell from, GridCell to) {
  if (to.x > from.x) return kRight;
  if (to.x < from.x) return kLeft;
  if (to.y > from.y) return kDown;
  if (to.y < from.y) return kUp;
  return kStay;
}

// Successor cells of one agent under slip: the intended move with
// probability 1 - slip, plus slip spread uniformly over all moves.
void slip_outcomes(const GridWorldSpec& spec, GridCell c, int move,
                   std::vector<std::pair<int, double>>& out) {
  out.clear();
  for (int m = 0; m < kNumMoves; ++m) {
    const double p = (m == move ? 1.0 - spec.slip : 0.0) + spec.slip / kNumMoves;
    if (p == 0.0) continue;
    const int id = spec.cell_id(apply_move(spec, c, m));
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == id; });
    if (it == out.end())
      out.emplace_back(id, p);
    else
      it->second += p;
  }
}

std::vector<LocalActionMap> constant_maps(int num_states) {
  std::vector<LocalActionMap> maps;
  for (int m = 0; m < kNumMoves; ++m)
    maps.push_back(LocalActionMap{std::vector<int>(static_cast<std::size_t>(num_states), m)});
  return maps;
}

std::vector<double> uniform_marginal(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

}  // namespace

double cell_distance(GridCell a, GridCell b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

double navigation_reward(std::span<const GridCell> agents, std::span<const GridCell> landmarks,
                         double scale) {
  require(!agents.empty() && !landmarks.empty(), ErrorCode::kInvalidArgument,
          "navigation reward needs agents and landmarks");
  double total = 0.0;
  for (const GridCell& l : landmarks) {
    double best = std::numeric_limits<double>::infinity();
    for (const GridCell& a : agents) best = std::min(best, cell_distance(a, l));
    total += best;
  }
  return -total / scale;
}

double push_reward(std::span<const GridCell> agents, GridCell ball, GridCell landmark,
                   double scale) {
  require(!agents.empty(), ErrorCode::kInvalidArgument, "push reward needs agents");
  double nearest = std::numeric_limits<double>::infinity();
  for (const GridCell& a : agents) nearest = std::min(nearest, cell_distance(a, ball));
  return -(nearest + cell_distance(ball, landmark)) / scale;
}

void GridWorldSpec::validate() const {
  require(side >= 2, ErrorCode::kInvalidArgument, "grid side must be >= 2");
  require(num_agents >= 1, ErrorCode::kInvalidArgument, "need at least one agent");
  require(!landmarks.empty(), ErrorCode::kInvalidArgument, "need at least one landmark");
  for (const GridCell& l : landmarks)
    require(l.x >= 0 && l.y >= 0 && l.x < side && l.y < side, ErrorCode::kOutOfRange,
            "landmark outside the grid");
  require(slip >= 0.0 && slip < 1.0, ErrorCode::kInvalidArgument, "slip must lie in [0, 1)");
}

double GridWorldSpec::diagonal() const { return (side - 1) * std::sqrt(2.0); }

MeanFieldEnv make_navigation_env(const GridWorldSpec& spec) {
  spec.validate();
  const int cells = spec.num_cells();
  const double scale =
      spec.diagonal() * std::max<double>(spec.num_agents, static_cast<double>(spec.landmarks.size()));

  EnvDefinition def;
  def.name = spec.name;
  def.num_states = cells;
  def.num_agent_actions = kNumMoves;
  def.num_agents = spec.num_agents;
  def.gamma = spec.gamma;
  def.reward_bound = 1.0;
  def.action_set = constant_maps(cells);
  LocalActionMap greedy{std::vector<int>(static_cast<std::size_t>(cells), kStay)};
  for (int id = 0; id < cells; ++id) {
    const GridCell c = spec.cell(id);
    std::size_t best = 0;
    for (std::size_t l = 1; l < spec.landmarks.size(); ++l)
      if (cell_distance(c, spec.landmarks[l]) < cell_distance(c, spec.landmarks[best])) best = l;
    greedy.assignment[static_cast<std::size_t>(id)] = step_toward(c, spec.landmarks[best]);
  }
  def.action_set.push_back(std::move(greedy));

  def.kernel = [spec](StateId s, const StateHistogram&, int move, std::vector<KernelOutcome>& out) {
    std::vector<std::pair<int, double>> cells_out;
    slip_outcomes(spec, spec.cell(s), move, cells_out);
    for (const auto& [id, p] : cells_out) out.push_back({id, p});
  };
  def.reward = [spec, scale](const StateHistogram& h, const LocalActionMap&) {
    std::vector<GridCell> agents;
    for (int id = 0; id < static_cast<int>(h.num_states()); ++id)
      if (h.count(id) > 0) agents.push_back(spec.cell(id));
    return navigation_reward(agents, spec.landmarks, scale);
  };
  def.reset_marginal = uniform_marginal(cells);
  return MeanFieldEnv(std::move(def));
}

GridCell push_ball_next(const GridWorldSpec& spec, std::span<const GridCell> agents, GridCell ball) {
  for (const GridCell& a : agents)
    if (a == ball) return ball;
  // Lowest direction id among adjacent pushers.
  for (int d = kUp; d <= kRight; ++d) {
    const GridCell pusher{ball.x - kDx[d], ball.y - kDy[d]};
    if (std::find(agents.begin(), agents.end(), pusher) != agents.end())
      return apply_move(spec, ball, d);
  }
  return ball;
}

MeanFieldEnv make_push_env(const GridWorldSpec& spec) {
  spec.validate();
  const int cells = spec.num_cells();
  const int states = cells * cells;
  const GridCell goal = spec.landmarks.front();
  const double scale = spec.diagonal() * std::max(spec.num_agents, 2);

  EnvDefinition def;
  def.name = spec.name;
  def.num_states = states;
  def.num_agent_actions = kNumMoves;
  def.num_agents = spec.num_agents;
  def.gamma = spec.gamma;
  def.reward_bound = 1.0;
  def.action_set = constant_maps(states);
  LocalActionMap greedy{std::vector<int>(static_cast<std::size_t>(states), kStay)};
  for (int s = 0; s < states; ++s) {
    const GridCell agent = spec.cell(s / cells);
    const GridCell ball = spec.cell(s % cells);
    int move = kStay;
    if (!(ball == goal)) {
      int dir = step_toward(ball, goal);
      GridCell behind{ball.x - kDx[dir], ball.y - kDy[dir]};
      const bool off = behind.x < 0 || behind.y < 0 || behind.x >= spec.side || behind.y >= spec.side;
      if (off && dir != kUp && dir != kDown && ball.y != goal.y) {
        dir = goal.y > ball.y ? kDown : kUp;
        behind = {ball.x - kDx[dir], ball.y - kDy[dir]};
      }
      const bool reachable =
          behind.x >= 0 && behind.y >= 0 && behind.x < spec.side && behind.y < spec.side;
      if (reachable) move = agent == behind ? dir : step_toward(agent, behind);
    }
    greedy.assignment[static_cast<std::size_t>(s)] = move;
  }
  def.action_set.push_back(std::move(greedy));

  auto agents_and_ball = [spec, cells](const StateHistogram& h, std::vector<GridCell>& agents) {
    agents.clear();
    int ball = -1;
    for (int s = 0; s < static_cast<int>(h.num_states()); ++s) {
      if (h.count(s) == 0) continue;
      if (ball < 0) ball = s % cells;
      agents.push_back(spec.cell(s / cells));
    }
    return spec.cell(ball);
  };
  def.kernel = [spec, cells, agents_and_ball](StateId s, const StateHistogram& h, int move,
                                              std::vector<KernelOutcome>& out) {
    std::vector<GridCell> agents;
    const GridCell ball = agents_and_ball(h, agents);
    const int ball_next = spec.cell_id(push_ball_next(spec, agents, ball));
    std::vector<std::pair<int, double>> cells_out;
    slip_outcomes(spec, spec.cell(s / cells), move, cells_out);
    for (const auto& [id, p] : cells_out) out.push_back({id * cells + ball_next, p});
  };
  def.reward = [goal, scale, agents_and_ball](const StateHistogram& h, const LocalActionMap&) {
    std::vector<GridCell> agents;
    const GridCell ball = agents_and_ball(h, agents);
    return push_reward(agents, ball, goal, scale);
  };
  def.reset = [spec, cells, goal](Rng& rng) {
    int ball = spec.cell_id(goal);
    while (ball == spec.cell_id(goal)) ball = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cells)));
    JointConfig c;
    c.states.resize(static_cast<std::size_t>(spec.num_agents));
    for (auto& s : c.states)
      s = static_cast<StateId>(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cells))) * cells + ball);
    return c;
  };
  return MeanFieldEnv(std::move(def));
}

MeanFieldEnv make_tabular_env(const TabularSpec& spec) {
  const int ns = spec.num_states;
  const int na = spec.num_agent_actions;
  require(ns >= 1 && na >= 1, ErrorCode::kInvalidArgument, "tabular env needs states and actions");
  require(spec.kernel.size() == static_cast<std::size_t>(ns * na * ns), ErrorCode::kInvalidArgument,
          "kernel table must have states * agent_actions * states entries");
  require(spec.reward.size() == static_cast<std::size_t>(ns * na), ErrorCode::kInvalidArgument,
          "reward table must have states * agent_actions entries");
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      double total = 0.0;
      for (int t = 0; t < ns; ++t) {
        const double p = spec.kernel[static_cast<std::size_t>((s * na + a) * ns + t)];
        require(p >= 0.0, ErrorCode::kInvalidArgument, "negative kernel entry");
        total += p;
      }
      require(std::abs(total - 1.0) <= 1e-10, ErrorCode::kInvalidArgument,
              "kernel row does not sum to 1");
    }
  }
  for (double r : spec.reward)
    require(std::abs(r) <= spec.reward_bound, ErrorCode::kInvalidArgument,
            "reward table exceeds declared bound r_bar");
  require(spec.congestion >= 0.0 && spec.congestion <= 1.0, ErrorCode::kInvalidArgument,
          "congestion must lie in [0, 1]");
  require(spec.crowd >= 0.0, ErrorCode::kInvalidArgument, "crowd penalty must be >= 0");

  EnvDefinition def;
  def.name = spec.name;
  def.num_states = ns;
  def.num_agent_actions = na;
  def.num_agents = spec.num_agents;
  def.gamma = spec.gamma;
  def.reward_bound = spec.reward_bound;
  def.action_set = spec.action_set;
  def.kernel = [spec](StateId s, const StateHistogram& h, int a, std::vector<KernelOutcome>& out) {
    const int ns = spec.num_states;
    const double hold = spec.congestion * h.mass(s);
    for (int t = 0; t < ns; ++t) {
      double p = (1.0 - hold) *
                 spec.kernel[static_cast<std::size_t>((s * spec.num_agent_actions + a) * ns + t)];
      if (t == s) p += hold;
      if (p > 0.0) out.push_back({t, p});
    }
  };
  def.reward = [spec](const StateHistogram& h, const LocalActionMap& abar) {
    double r = 0.0;
    double sq = 0.0;
    for (int x = 0; x < spec.num_states; ++x) {
      const double m = h.mass(x);
      r += m * spec.reward[static_cast<std::size_t>(x * spec.num_agent_actions + abar(x))];
      sq += m * m;
    }
    return r - spec.crowd * sq;
  };
  def.reset_marginal = spec.reset_marginal.empty() ? uniform_marginal(ns) : spec.reset_marginal;
  return MeanFieldEnv(std::move(def));
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok.size() && !tok.empty(), ErrorCode::kInvalidArgument,
            what + ": not an integer: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<GridCell> parse_cells(const std::string& text, const std::string& what) {
  std::vector<GridCell> cells;
  for (const std::string& part : split(text, ',')) {
    const std::vector<int> xy = parse_ints(part, what);
    require(xy.size() == 2, ErrorCode::kInvalidArgument, what + ": expected 'x y' pairs");
    cells.push_back({xy[0], xy[1]});
  }
  return cells;
}

GridWorldSpec grid_spec(const ConfigSection& sec) {
  GridWorldSpec spec;
  spec.name = sec.name();
  spec.side = static_cast<int>(sec.integer("side"));
  spec.landmarks = parse_cells(sec.str("landmarks"), "[" + sec.name() + "] landmarks");
  spec.slip = sec.real("slip", 0.0);
  spec.num_agents = static_cast<int>(sec.integer("agents"));
  spec.gamma = sec.real("gamma", 0.9);
  return spec;
}

}  // namespace

MeanFieldEnv env_from_section(const ConfigSection& sec) {
  const std::string type = sec.str("type");
  if (type == "navigation" || type == "push") {
    const GridWorldSpec spec = grid_spec(sec);
    sec.finish();
    return type == "navigation" ? make_navigation_env(spec) : make_push_env(spec);
  }
  require(type == "tabular", ErrorCode::kInvalidArgument,
          "[" + sec.name() + "] unknown environment type '" + type + "'");
  TabularSpec spec;
  spec.name = sec.name();
  spec.num_states = static_cast<int>(sec.integer("states"));
  spec.num_agent_actions = static_cast<int>(sec.integer("agent_actions"));
  spec.num_agents = static_cast<int>(sec.integer("agents"));
  spec.gamma = sec.real("gamma", 0.9);
  spec.reward_bound = sec.real("reward_bound", 1.0);
  for (const std::string& part : split(sec.str("action_set"), ','))
    spec.action_set.push_back(LocalActionMap{parse_ints(part, "[" + sec.name() + "] action_set")});
  spec.kernel = sec.reals("kernel");
  spec.reward = sec.reals("reward");
  spec.congestion = sec.real("congestion", 0.0);
  spec.crowd = sec.real("crowd", 0.0);
  if (sec.has("reset")) spec.reset_marginal = sec.reals("reset");
  sec.finish();
  return make_tabular_env(spec);
}

const std::string& scenario_library_text() {
  static const std::string text(kScenarioLibrary);
  return text;
}

std::vector<std::string> builtin_env_names() {
  return ConfigFile::parse(scenario_library_text(), "scenarios.ini").sections();
}

MeanFieldEnv builtin_env(const std::string& name) {
  const ConfigFile lib = ConfigFile::parse(scenario_library_text(), "scenarios.ini");
  require(lib.has_section(name), ErrorCode::kInvalidArgument, "unknown environment '" + name + "'");
  return env_from_section(lib.section(name));
}

}  // namespace mfppo
