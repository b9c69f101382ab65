#ifndef MFPPO_ENVS_HPP
#define MFPPO_ENVS_HPP

#include <span>
#include <string>
#include <vector>

#include "mfppo/config.hpp"
#include "mfppo/mf_core.hpp"

namespace mfppo {

struct GridCell {
  int x = 0;
  int y = 0;
  bool operator==(const GridCell&) const = default;
};

// Per-agent moves of the grid worlds.
enum Move : int { kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };
inline constexpr int kNumMoves = 5;

double cell_distance(GridCell a, GridCell b);

// -(sum over landmarks of the distance to the nearest agent) / scale
double navigation_reward(std::span<const GridCell> agents, std::span<const GridCell> landmarks,
                         double scale = 1.0);
// -(nearest agent-to-ball distance + ball-to-landmark distance) / scale
double push_reward(std::span<const GridCell> agents, GridCell ball, GridCell landmark,
                   double scale = 1.0);

struct GridWorldSpec {
  std::string name = "grid";
  int side = 3;
  std::vector<GridCell> landmarks;
  double slip = 0.0;
  int num_agents = 2;
  double gamma = 0.9;

  void validate() const;
  int num_cells() const { return side * side; }
  int cell_id(GridCell c) const { return c.y * side + c.x; }
  GridCell cell(int id) const { return {id % side, id / side}; }
  double diagonal() const;
};

// Per-agent state = cell id. Action set: the 5 constant maps, then the
// greedy map toward the nearest landmark (x first, ties to the lower
// landmark index). Agents reset i.i.d. uniform over cells.
MeanFieldEnv make_navigation_env(const GridWorldSpec& spec);

// Per-agent state = agent_cell * side^2 + ball_cell, so every agent carries
// the shared ball cell. Uses landmarks[0] as the goal. Action set: the 5
// constant maps, then a greedy map that walks to the cell behind the ball
// and pushes it toward the goal.
MeanFieldEnv make_push_env(const GridWorldSpec& spec);
// Ball cell after one step, given the current agent cells.
GridCell push_ball_next(const GridWorldSpec& spec, std::span<const GridCell> agents, GridCell ball);

// Explicit tables: kernel[s][a][s'] (row-major S*A*S), local reward[s][a]
// (S*A). A fraction congestion * mass(s) of an agent's transition stays put;
// the team reward is sum_x mass(x) reward[x][abar(x)] - crowd * sum_x mass(x)^2.
struct TabularSpec {
  std::string name = "tabular";
  int num_states = 0;
  int num_agent_actions = 0;
  int num_agents = 1;
  double gamma = 0.9;
  double reward_bound = 1.0;
  std::vector<LocalActionMap> action_set;
  std::vector<double> kernel;
  std::vector<double> reward;
  double congestion = 0.0;
  double crowd = 0.0;
  std::vector<double> reset_marginal;  // empty means uniform
};

MeanFieldEnv make_tabular_env(const TabularSpec& spec);

// Builds an environment from a config section with key `type` in
// {navigation, push, tabular}. Calls finish() on the section.
MeanFieldEnv env_from_section(const ConfigSection& section);

// Named instances from the shipped scenario library.
const std::string& scenario_library_text();
std::vector<std::string> builtin_env_names();
MeanFieldEnv builtin_env(const std::string& name);

}  // namespace mfppo

#endif  // MFPPO_ENVS_HPP
