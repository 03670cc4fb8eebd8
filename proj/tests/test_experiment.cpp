#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fsmc/errors.hpp"
#include "fsmc/experiment.hpp"
#include "fsmc/io.hpp"

using namespace fsmc;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fsmc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

PriorSpec small_net_spec() {
  PriorSpec p;
  p.family = "TCNN";
  p.alpha = 1.5;
  p.widths = {4, 4};
  p.input_dim = 2;
  p.sigma2_w = {2, 2, 2};
  p.sigma2_b = {2, 2, 2};
  p.augmentation = "box_rescale";
  p.box = {{-1.2, 0.6}, {-0.07, 0.07}};
  return p;
}

}  // namespace

TEST_CASE("prior spec round-trips through json") {
  PriorSpec tcnn = small_net_spec();
  CHECK(prior_spec_from_json(prior_spec_to_json(tcnn)) == tcnn);

  PriorSpec fourier;
  fourier.family = "KL_FOURIER_2D";
  fourier.alpha = 2.0;
  fourier.kmax = {7, 5};
  CHECK(prior_spec_from_json(prior_spec_to_json(fourier)) == fourier);

  PriorSpec cosine;
  cosine.family = "KL_COSINE_2D";
  cosine.imax = {25, 25};
  CHECK(prior_spec_from_json(prior_spec_to_json(cosine)) == cosine);

  PriorSpec anova;
  anova.family = "KL_ANOVA";
  anova.alpha = 2.0;
  anova.anova_d = 17;
  anova.anova_k1d = 5;
  anova.anova_k2d = {5, 5};
  CHECK(prior_spec_from_json(prior_spec_to_json(anova)) == anova);

  // layouts built from the specs match the direct builders
  CHECK(build_layout(fourier).param_count() == build_kl_fourier_2d(7, 5, 2.0).param_count());
  CHECK(build_layout(anova).param_count() ==
        build_kl_anova(17, 5, 5, 5, 2.0).param_count());

  CHECK_THROWS_AS(prior_spec_from_json("{\"family\":\"NOPE\"}"), ConfigError);
  CHECK_THROWS_AS(prior_spec_from_json("not json"), ConfigError);
}

TEST_CASE("experiment config round-trips and hashes stably") {
  ExperimentConfig config;
  config.experiment = "MOUNTAINCAR_POSTERIOR";
  config.prior = small_net_spec();
  config.sampler.kind = SamplerKind::PCNL;
  config.sampler.delta = 0.3;
  config.sampler.iterations = 123;
  config.sampler.thin = 7;
  config.sampler.seed = 99;
  config.seed = 31;
  config.test_points = {{-0.5, 0.0}};

  const auto text = experiment_config_to_json(config);
  const auto back = experiment_config_from_json(text);
  CHECK(back == config);
  CHECK(config_hash(back) == config_hash(config));

  ExperimentConfig other = config;
  other.seed = 32;
  CHECK(config_hash(other) != config_hash(config));
}

TEST_CASE("dataset files round-trip") {
  const auto dir = temp_dir("datasets");

  const auto dataset = canonical_mountain_car_dataset(7001);
  REQUIRE(dataset.records.size() == 50);
  save_action_dataset(dataset, "mountain_car", dir / "mc.jsonl");
  const auto loaded = load_action_dataset(dir / "mc.jsonl");
  CHECK(loaded.action_count == dataset.action_count);
  CHECK(loaded.action_labels == dataset.action_labels);
  REQUIRE(loaded.records.size() == dataset.records.size());
  for (std::size_t t = 0; t < loaded.records.size(); ++t) {
    CHECK(loaded.records[t].state == dataset.records[t].state);
    CHECK(loaded.records[t].action == dataset.records[t].action);
  }

  RegressionDataset reg;
  reg.noise_std = 0.01;
  reg.records.push_back({{0.25, 0.75}, 1.5});
  reg.records.push_back({{0.5, 0.5}, -0.125});
  save_regression_dataset(reg, dir / "reg.jsonl");
  const auto reg2 = load_regression_dataset(dir / "reg.jsonl");
  CHECK(reg2.noise_std == reg.noise_std);
  REQUIRE(reg2.records.size() == 2);
  CHECK(reg2.records[1].x == reg.records[1].x);
  CHECK(reg2.records[1].y == reg.records[1].y);

  CHECK_THROWS_AS(load_action_dataset(dir / "reg.jsonl"), InputError);
  CHECK_THROWS_AS(load_action_dataset(dir / "missing.jsonl"), InputError);
}

TEST_CASE("samples csv round-trips") {
  const auto dir = temp_dir("samples");
  const std::vector<std::vector<double>> samples{{0.5, -1.25, 3.75}, {1e-17, 2.0, -0.3}};
  write_samples_csv(samples, {100, 200}, dir / "samples.csv");
  const auto loaded = load_samples_csv(dir / "samples.csv");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == samples[0]);
  CHECK(loaded[1] == samples[1]);
}

TEST_CASE("prior-samples command writes deterministic grids") {
  ExperimentConfig config;
  config.experiment = "PRIOR_SAMPLES";
  config.prior = small_net_spec();
  config.prior.augmentation = "none";
  config.prior.box.clear();
  config.prior_sample_count = 2;
  config.grid_cells = 2;
  config.seed = 11;

  const auto dir1 = temp_dir("prior1");
  const auto dir2 = temp_dir("prior2");
  cmd_prior_samples(config, dir1);
  cmd_prior_samples(config, dir2);

  for (const char* name : {"sample_0.csv", "sample_1.csv", "run_metadata.json"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
  // 3x3 grid plus header
  const auto csv = slurp(dir1 / "sample_0.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
  CHECK(slurp(dir1 / "sample_0.csv") != slurp(dir1 / "sample_1.csv"));

  // a 2x2-point grid gives a 4-row csv
  config.grid_cells = 1;
  config.prior_sample_count = 1;
  const auto dir3 = temp_dir("prior3");
  cmd_prior_samples(config, dir3);
  const auto small = slurp(dir3 / "sample_0.csv");
  CHECK(std::count(small.begin(), small.end(), '\n') == 5);
}

TEST_CASE("posterior command emits coherent artifacts") {
  const auto dir = temp_dir("posterior");
  ExperimentConfig config;
  config.experiment = "MOUNTAINCAR_POSTERIOR";
  config.prior = small_net_spec();
  config.sampler.kind = SamplerKind::PCN;
  config.sampler.beta = 0.1;
  config.sampler.iterations = 300;
  config.sampler.thin = 50;
  config.sampler.seed = 2;
  config.seed = 2;
  config.grid_cells = 4;
  cmd_posterior(config, dir);

  // chain csv has one line per iteration plus header
  const auto chain = slurp(dir / "chain.csv");
  CHECK(std::count(chain.begin(), chain.end(), '\n') == 301);

  const auto samples = load_samples_csv(dir / "samples.csv");
  CHECK(samples.size() == 6);
  CHECK(samples[0].size() == build_layout(config.prior).param_count());

  // mean grid equals the pointwise mean of the stored samples
  const auto layout = build_layout(config.prior);
  const auto eval = make_evaluator(layout, build_input_map(config.prior));
  const auto grid_csv = slurp(dir / "mean_grid.csv");
  std::istringstream lines(grid_csv);
  std::string line;
  std::getline(lines, line);  // header
  int checked = 0;
  while (std::getline(lines, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const double x1 = std::stod(line.substr(0, c1));
    const double x2 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double value = std::stod(line.substr(c2 + 1));
    double mean = 0.0;
    for (const auto& s : samples) mean += eval->evaluate(s, std::vector<double>{x1, x2});
    mean /= static_cast<double>(samples.size());
    CHECK(std::abs(value - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
    ++checked;
  }
  CHECK(checked == 25);

  // 5 default test points x 6 samples rows plus header
  const auto tp = slurp(dir / "test_points.csv");
  CHECK(std::count(tp.begin(), tp.end(), '\n') == 1 + 5 * 6);

  // rerun reproduces artifacts byte for byte
  const auto dir2 = temp_dir("posterior2");
  cmd_posterior(config, dir2);
  for (const char* name : {"chain.csv", "samples.csv", "mean_grid.csv", "test_points.csv",
                           "run_metadata.json"}) {
    CHECK(slurp(dir / name) == slurp(dir2 / name));
  }
}

TEST_CASE("regression posterior runs and honors the linear mean shortcut") {
  const auto dir = temp_dir("regression");
  ExperimentConfig config;
  config.experiment = "REGRESSION_RECOVERY";
  config.prior.family = "KL_COSINE_2D";
  config.prior.imax = {4, 4};
  config.prior.augmentation = "none";
  config.sampler.kind = SamplerKind::PCN;
  config.sampler.beta = 0.3;
  config.sampler.iterations = 400;
  config.sampler.thin = 100;
  config.sampler.seed = 9;
  config.seed = 9;
  config.grid_cells = 3;
  cmd_posterior(config, dir);

  const auto samples = load_samples_csv(dir / "samples.csv");
  REQUIRE(samples.size() == 4);

  // mean grid equals the pointwise mean of sample evaluations within 1e-12
  // even though the linear path evaluates the averaged coefficients once
  const auto layout = build_layout(config.prior);
  const auto eval = make_evaluator(layout);
  std::istringstream lines(slurp(dir / "mean_grid.csv"));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const std::vector<double> x{std::stod(line.substr(0, c1)),
                                std::stod(line.substr(c1 + 1, c2 - c1 - 1))};
    const double value = std::stod(line.substr(c2 + 1));
    double mean = 0.0;
    for (const auto& s : samples) mean += eval->evaluate(s, x);
    mean /= static_cast<double>(samples.size());
    CHECK(std::abs(value - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
  }
}

TEST_CASE("darcy posterior rejects gradient samplers") {
  ExperimentConfig config;
  config.experiment = "DARCY_POSTERIOR";
  config.prior.family = "KL_COSINE_2D";
  config.prior.imax = {5, 5};
  config.sampler.kind = SamplerKind::PCNL;
  config.sampler.iterations = 10;
  CHECK_THROWS_AS(cmd_posterior(config, temp_dir("darcy_rej")), ConfigError);
}

TEST_CASE("policy-eval requires matching samples") {
  const auto dir = temp_dir("peval");
  ExperimentConfig config;
  config.experiment = "POLICY_EVAL";
  config.prior = small_net_spec();
  config.episodes = 3;
  config.samples_path = (dir / "samples.csv").string();

  // sample dimension mismatch is rejected
  write_samples_csv({{1.0, 2.0}}, {1}, dir / "samples.csv");
  CHECK_THROWS_AS(cmd_policy_eval(config, dir), InputError);

  // a well-formed file runs and reports one row per episode and policy
  const auto layout = build_layout(config.prior);
  Rng rng(3, "peval");
  write_samples_csv({prior_sample(layout, rng), prior_sample(layout, rng)}, {1, 2},
                    dir / "samples.csv");
  cmd_policy_eval(config, dir);
  const auto csv = slurp(dir / "policy_eval.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 3);

  config.samples_path = (dir / "missing.csv").string();
  CHECK_THROWS_AS(cmd_policy_eval(config, dir), InputError);
}

TEST_CASE("width sweep is deterministic across thread counts") {
  ExperimentConfig config;
  config.experiment = "WIDTH_SWEEP";
  config.widths = {4, 6};
  config.sweep_iterations = 300;
  config.seed = 12;
  config.dataset_path = "";

  const auto dir1 = temp_dir("sweep_t1");
  const auto dir2 = temp_dir("sweep_t2");
  config.threads = 1;
  cmd_width_sweep(config, dir1);
  config.threads = 2;
  cmd_width_sweep(config, dir2);
  CHECK(slurp(dir1 / "width_sweep.csv") == slurp(dir2 / "width_sweep.csv"));
}

TEST_CASE("policy-eval dumps trajectories") {
  const auto dir = temp_dir("traj");
  ExperimentConfig config;
  config.experiment = "POLICY_EVAL";
  config.prior = small_net_spec();
  config.episodes = 2;
  config.max_rollout_steps = 50;
  config.samples_path = (dir / "samples.csv").string();

  const auto layout = build_layout(config.prior);
  Rng rng(5, "traj");
  write_samples_csv({prior_sample(layout, rng)}, {1}, dir / "samples.csv");
  cmd_policy_eval(config, dir);

  const auto traj = slurp(dir / "trajectories.csv");
  CHECK(traj.rfind("episode,policy,t,x1,x2,a\n", 0) == 0);
  // both rollout policies appear, with in-range action labels
  CHECK(traj.find("posterior_mean") != std::string::npos);
  CHECK(traj.find("prior_draw") != std::string::npos);
}

TEST_CASE("gen-data writes the canonical datasets") {
  const auto dir = temp_dir("gendata");
  ExperimentConfig config;
  config.experiment = "DARCY_POSTERIOR";
  config.seed = 4400;
  cmd_gen_data(config, dir);
  const auto obs = load_regression_dataset(dir / "darcy_obs33.jsonl");
  CHECK(obs.records.size() == 33);
  for (const auto& rec : obs.records) {
    CHECK(rec.x[0] >= 0.1);
    CHECK(rec.x[0] <= 0.9);
    CHECK(rec.x[1] >= 0.1);
    CHECK(rec.x[1] <= 0.9);
  }

  config.experiment = "REGRESSION_RECOVERY";
  cmd_gen_data(config, dir);
  CHECK(load_regression_dataset(dir / "regression_grid400.jsonl").records.size() == 400);

  config.experiment = "PRIOR_SAMPLES";
  CHECK_THROWS_AS(cmd_gen_data(config, dir), ConfigError);
}
