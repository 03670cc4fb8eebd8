#pragma once

#include <functional>
#include <optional>

#include "fsmc/action_likelihood.hpp"
#include "fsmc/evaluator.hpp"
#include "fsmc/rng.hpp"

namespace fsmc {

struct MountainCarState {
  double position = 0.0;  // in [-1.2, 0.6]
  double velocity = 0.0;  // in [-0.07, 0.07]
};

inline constexpr double kMcMinPosition = -1.2;
inline constexpr double kMcMaxPosition = 0.6;
inline constexpr double kMcMaxSpeed = 0.07;
inline constexpr double kMcGoalPosition = 0.5;
inline constexpr double kMcForce = 0.001;
inline constexpr double kMcGravity = 0.0025;

// one step of the deterministic dynamics; force in {-1, 0, 1}
MountainCarState mc_transition(MountainCarState state, int force);

// hand-designed optimal policy; note the codomain is {-1, +1}, the idle
// action never appears
int mc_expert_action(MountainCarState state);

// Discrete-action environment with deterministic dynamics T(x, a), actions
// indexed 1..M with the original labels kept alongside.
struct DiscreteEnv {
  int action_count = 0;
  std::vector<int> action_labels;
  std::vector<std::array<double, 2>> state_box;
  TransitionFn transition;
  std::function<std::vector<double>(Rng&)> initial_state;
  std::function<bool(std::span<const double>)> goal;
};

DiscreteEnv make_mountain_car_env();

struct DataProtocol {
  int raw_count = 250;  // length of the recorded expert trajectory
  int stride = 5;       // keep every stride-th pair
  long max_episode_steps = 2000;  // safety cap on a single episode
};

// Expert demonstrations: episodes restart from the initial-state law every
// time the goal is reached; every stride-th (state, action) pair is kept.
// The policy maps a state to an original action label.
ActionDataset generate_action_dataset(const DiscreteEnv& env,
                                      const std::function<int(std::span<const double>)>& policy,
                                      const DataProtocol& protocol, Rng& rng);

enum class RolloutMode { SAMPLED_NOISE, GREEDY };

struct RolloutStep {
  std::vector<double> state;
  int action = 0;  // 1..M
};

struct RolloutResult {
  std::vector<RolloutStep> trajectory;
  bool success = false;
  int steps = 0;  // steps taken until the goal (== trajectory length on failure)
};

// Controls the environment with a value function: at each step the action
// maximises v(T(x, a)) plus (in SAMPLED_NOISE mode) independent N(0, sigma^2)
// perturbations; exact ties go to the lowest index.
RolloutResult rollout_with_value(const DiscreteEnv& env,
                                 const std::function<double(std::span<const double>)>& value,
                                 double sigma, int max_steps, Rng& rng, RolloutMode mode,
                                 std::optional<std::vector<double>> initial = std::nullopt);

// convenience overload for a (evaluator, params) pair
RolloutResult rollout_with_value(const DiscreteEnv& env, const FunctionEvaluator& evaluator,
                                 std::span<const double> params, double sigma, int max_steps,
                                 Rng& rng, RolloutMode mode,
                                 std::optional<std::vector<double>> initial = std::nullopt);

// v - v[optimal] * 1: pins the value at the optimal action's successor to 0
std::vector<double> normalize_value_vector(std::span<const double> v, int optimal_index);

}  // namespace fsmc
