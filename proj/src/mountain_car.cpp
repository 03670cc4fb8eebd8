#include "fsmc/mountain_car.hpp"

#include <algorithm>
#include <cmath>

#include "fsmc/errors.hpp"

namespace fsmc {

MountainCarState mc_transition(MountainCarState state, int force) {
  state.velocity += kMcForce * force - kMcGravity * std::cos(3.0 * state.position);
  state.velocity = std::clamp(state.velocity, -kMcMaxSpeed, kMcMaxSpeed);
  state.position += state.velocity;
  state.position = std::clamp(state.position, kMcMinPosition, kMcMaxPosition);
  if (state.position == kMcMinPosition && state.velocity < 0.0) state.velocity = 0.0;
  return state;
}

int mc_expert_action(MountainCarState state) {
  const double x1 = state.position, x2 = state.velocity;
  const double lower = std::min(-0.09 * (x1 + 0.25) * (x1 + 0.25) + 0.03,
                                0.3 * std::pow(x1 + 0.9, 4) - 0.008);
  const double upper = -0.07 * (x1 + 0.38) * (x1 + 0.38) + 0.07;
  const bool inside = lower <= x2 && x2 <= upper;
  return -1 + 2 * (inside ? 1 : 0);
}

DiscreteEnv make_mountain_car_env() {
  DiscreteEnv env;
  env.action_count = 3;
  env.action_labels = {-1, 0, 1};
  env.state_box = {{kMcMinPosition, kMcMaxPosition}, {-kMcMaxSpeed, kMcMaxSpeed}};
  env.transition = [](std::span<const double> x, int a) -> std::vector<double> {
    const MountainCarState next = mc_transition({x[0], x[1]}, a - 2);
    return {next.position, next.velocity};
  };
  env.initial_state = [](Rng& rng) -> std::vector<double> {
    // random start in the valley, at rest
    return {rng.uniform(-0.6, -0.4), 0.0};
  };
  env.goal = [](std::span<const double> x) { return x[0] >= kMcGoalPosition; };
  return env;
}

ActionDataset generate_action_dataset(const DiscreteEnv& env,
                                      const std::function<int(std::span<const double>)>& policy,
                                      const DataProtocol& protocol, Rng& rng) {
  if (protocol.raw_count < 1 || protocol.stride < 1) {
    throw ConfigError("DataProtocol: raw_count and stride must be >= 1");
  }

  auto label_to_index = [&](int label) {
    for (int k = 0; k < env.action_count; ++k) {
      if (env.action_labels[k] == label) return k + 1;
    }
    throw ConfigError("generate_action_dataset: policy emitted an unknown action label");
  };

  std::vector<ActionRecord> raw;
  raw.reserve(protocol.raw_count);
  std::vector<double> state = env.initial_state(rng);
  long episode_steps = 0;
  while (static_cast<int>(raw.size()) < protocol.raw_count) {
    const int label = policy(state);
    const int index = label_to_index(label);
    raw.push_back({state, index});
    state = env.transition(state, index);
    ++episode_steps;
    if (env.goal(state) || episode_steps >= protocol.max_episode_steps) {
      state = env.initial_state(rng);
      episode_steps = 0;
    }
  }

  ActionDataset dataset;
  dataset.action_count = env.action_count;
  dataset.action_labels = env.action_labels;
  dataset.state_box = env.state_box;
  dataset.transition = env.transition;
  // keep pairs (x_s, a_s) for s = stride, 2 stride, ... (1-based)
  for (int s = protocol.stride - 1; s < protocol.raw_count; s += protocol.stride) {
    dataset.records.push_back(raw[s]);
  }
  dataset.validate();
  return dataset;
}

RolloutResult rollout_with_value(const DiscreteEnv& env,
                                 const std::function<double(std::span<const double>)>& value,
                                 double sigma, int max_steps, Rng& rng, RolloutMode mode,
                                 std::optional<std::vector<double>> initial) {
  RolloutResult result;
  std::vector<double> state = initial ? std::move(*initial) : env.initial_state(rng);
  for (int step = 0; step < max_steps; ++step) {
    int best = 1;
    double best_score = -1e300;
    for (int a = 1; a <= env.action_count; ++a) {
      const auto next = env.transition(state, a);
      double score = value(next);
      if (mode == RolloutMode::SAMPLED_NOISE) score += sigma * rng.normal();
      if (score > best_score) {  // strict: ties go to the lowest index
        best_score = score;
        best = a;
      }
    }
    result.trajectory.push_back({state, best});
    state = env.transition(state, best);
    ++result.steps;
    if (env.goal(state)) {
      result.success = true;
      break;
    }
  }
  return result;
}

RolloutResult rollout_with_value(const DiscreteEnv& env, const FunctionEvaluator& evaluator,
                                 std::span<const double> params, double sigma, int max_steps,
                                 Rng& rng, RolloutMode mode,
                                 std::optional<std::vector<double>> initial) {
  return rollout_with_value(
      env, [&](std::span<const double> x) { return evaluator.evaluate(params, x); }, sigma,
      max_steps, rng, mode, std::move(initial));
}

std::vector<double> normalize_value_vector(std::span<const double> v, int optimal_index) {
  if (optimal_index < 1 || optimal_index > static_cast<int>(v.size())) {
    throw InputError("normalize_value_vector: optimal index out of range");
  }
  std::vector<double> out(v.begin(), v.end());
  const double shift = out[optimal_index - 1];
  for (double& vi : out) vi -= shift;
  return out;
}

}  // namespace fsmc
