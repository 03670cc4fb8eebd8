#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsmc/action_likelihood.hpp"
#include "fsmc/prior_spec.hpp"
#include "fsmc/samplers.hpp"

namespace fsmc {

// One experiment run, fully described: a config plus a seed reproduces every
// artifact byte for byte.
struct ExperimentConfig {
  std::string experiment = "MOUNTAINCAR_POSTERIOR";
  PriorSpec prior;
  SamplerConfig sampler;

  std::uint64_t seed = 1;  // master seed for data generation and sub-streams
  int threads = 1;

  std::string dataset_path;  // empty: generate with the canonical protocol
  std::string samples_path;  // policy-eval input

  int grid_cells = 40;           // function-output grids
  int prior_sample_count = 3;    // prior-samples command
  std::vector<int> widths = {10, 50, 100};
  long sweep_iterations = 20000;
  // BNN variance convention for the sweep: "constant" keeps sigma^2 = 1/3 at
  // every width (the prior is left alone as nodes are added, so the sampled
  // functions grow with width); "literal" rescales by the layer's own width,
  // 10/(3 N^(l)); "fanin" rescales by 10/(3 N^(l-1)).
  std::string bnn_sigma_mode = "constant";
  int episodes = 100;
  int max_rollout_steps = 200;
  std::string rollout_mode = "greedy";  // or "noisy"
  std::vector<std::vector<double>> test_points;

  double action_sigma = 0.1;
  int quadrature_order = 64;
  double saturation_scale = 10.0;
  int darcy_grid = 20;
  double darcy_noise_std = 0.01;

  bool operator==(const ExperimentConfig&) const = default;
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
std::uint64_t config_hash(const ExperimentConfig& config);

// the canonical 50-observation expert dataset (250 raw pairs, stride 5)
ActionDataset canonical_mountain_car_dataset(std::uint64_t seed);

// Commands.  Each writes run_metadata.json first, then its artifacts, and
// finally refreshes the metadata with the (deterministic) result summary.
void cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void cmd_prior_samples(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void cmd_width_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void cmd_posterior(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void cmd_policy_eval(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace fsmc
