#include "fsmc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <json.hpp>
#include <sstream>

#include "fsmc/darcy.hpp"
#include "fsmc/errors.hpp"
#include "fsmc/io.hpp"
#include "fsmc/mountain_car.hpp"
#include "fsmc/regression_likelihood.hpp"

#ifndef FSMC_GIT_DESCRIBE
#define FSMC_GIT_DESCRIBE "unknown"
#endif

namespace fsmc {

using nlohmann::json;

namespace {

json sampler_to_json(const SamplerConfig& s) {
  json j;
  j["kind"] = sampler_name(s.kind);
  j["beta"] = s.beta;
  j["delta"] = s.delta;
  j["nodeswap_prob"] = s.nodeswap_prob;
  j["nodeswap_law"] = s.nodeswap_law == NodeIndexLaw::POWER ? "power" : "geometric";
  j["iterations"] = s.iterations;
  j["thin"] = s.thin;
  j["seed"] = s.seed;
  j["audit_every"] = s.audit_every;
  j["max_eval_errors"] = s.max_eval_errors;
  return j;
}

SamplerConfig sampler_from_json(const json& j) {
  SamplerConfig s;
  s.kind = sampler_from_name(j.value("kind", "PCN"));
  s.beta = j.value("beta", s.beta);
  s.delta = j.value("delta", s.delta);
  s.nodeswap_prob = j.value("nodeswap_prob", s.nodeswap_prob);
  const std::string law = j.value("nodeswap_law", "power");
  if (law == "power") {
    s.nodeswap_law = NodeIndexLaw::POWER;
  } else if (law == "geometric") {
    s.nodeswap_law = NodeIndexLaw::GEOMETRIC;
  } else {
    throw ConfigError("unknown nodeswap_law: " + law);
  }
  s.iterations = j.value("iterations", s.iterations);
  s.thin = j.value("thin", s.thin);
  s.seed = j.value("seed", s.seed);
  s.audit_every = j.value("audit_every", s.audit_every);
  s.max_eval_errors = j.value("max_eval_errors", s.max_eval_errors);
  return s;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& name) {
  return Rng(master, name).next_u64();
}

// grid values in the row-major order write_grid_csv expects
template <class F>
std::vector<double> grid_values(const std::vector<std::array<double, 2>>& box, int cells,
                                F&& fn) {
  const int npts = cells + 1;
  std::vector<double> values(static_cast<std::size_t>(npts) * npts);
  for (int j = 0; j < npts; ++j) {
    for (int i = 0; i < npts; ++i) {
      const std::vector<double> x{box[0][0] + (box[0][1] - box[0][0]) * i / cells,
                                  box[1][0] + (box[1][1] - box[1][0]) * j / cells};
      values[static_cast<std::size_t>(j) * npts + i] = fn(x);
    }
  }
  return values;
}

void write_metadata(const std::filesystem::path& out_dir, const std::string& command,
                    const ExperimentConfig& config, const json& summary) {
  json j;
  j["command"] = command;
  j["config"] = json::parse(experiment_config_to_json(config));
  j["config_hash"] = config_hash(config);
  j["build"] = FSMC_GIT_DESCRIBE;
  j["summary"] = summary;
  write_text_file(out_dir / "run_metadata.json", j.dump(2) + "\n");
}

json summary_of(const AcceptanceSummary& s) {
  json j;
  j["pcn"] = {{"proposed", s.pcn.proposed}, {"accepted", s.pcn.accepted}, {"rate", s.pcn.rate()}};
  j["pcnl"] = {{"proposed", s.pcnl.proposed}, {"accepted", s.pcnl.accepted}, {"rate", s.pcnl.rate()}};
  j["nodeswap"] = {{"proposed", s.nodeswap.proposed},
                   {"accepted", s.nodeswap.accepted},
                   {"rate", s.nodeswap.rate()}};
  j["mean_loglik"] = s.mean_loglik;
  j["lag1_autocorr"] = s.lag1_autocorr;
  j["eval_errors"] = s.eval_errors;
  return j;
}

ActionDataset resolve_mountain_car_dataset(const ExperimentConfig& config) {
  if (!config.dataset_path.empty()) return load_action_dataset(config.dataset_path);
  return canonical_mountain_car_dataset(config.seed);
}

std::vector<std::vector<double>> default_test_points() {
  return {{-1.0, 0.0}, {-0.6, -0.02}, {-0.35, 0.02}, {-0.1, 0.04}, {0.2, 0.06}};
}

// default groundwater prior of the source experiments: one hidden layer of
// 100 nodes on the (x1, x2, sin x1, sin x2) inputs
PriorSpec darcy_nn_prior() {
  PriorSpec p;
  p.family = "TCNN";
  p.alpha = 1.001;
  p.widths = {100};
  p.input_dim = 4;
  p.sigma2_w = {100.0, 1.0 / 30.0};
  p.sigma2_b = {100.0, 0.1};
  p.augmentation = "sin2d";
  return p;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["prior"] = json::parse(prior_spec_to_json(c.prior));
  j["sampler"] = sampler_to_json(c.sampler);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["dataset_path"] = c.dataset_path;
  j["samples_path"] = c.samples_path;
  j["grid_cells"] = c.grid_cells;
  j["prior_sample_count"] = c.prior_sample_count;
  j["widths"] = c.widths;
  j["sweep_iterations"] = c.sweep_iterations;
  j["bnn_sigma_mode"] = c.bnn_sigma_mode;
  j["episodes"] = c.episodes;
  j["max_rollout_steps"] = c.max_rollout_steps;
  j["rollout_mode"] = c.rollout_mode;
  j["test_points"] = c.test_points;
  j["action_sigma"] = c.action_sigma;
  j["quadrature_order"] = c.quadrature_order;
  j["saturation_scale"] = c.saturation_scale;
  j["darcy_grid"] = c.darcy_grid;
  j["darcy_noise_std"] = c.darcy_noise_std;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("prior")) c.prior = prior_spec_from_json(j.at("prior").dump());
    if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    c.samples_path = j.value("samples_path", c.samples_path);
    c.grid_cells = j.value("grid_cells", c.grid_cells);
    c.prior_sample_count = j.value("prior_sample_count", c.prior_sample_count);
    if (j.contains("widths")) c.widths = j.at("widths").get<std::vector<int>>();
    c.sweep_iterations = j.value("sweep_iterations", c.sweep_iterations);
    c.bnn_sigma_mode = j.value("bnn_sigma_mode", c.bnn_sigma_mode);
    c.episodes = j.value("episodes", c.episodes);
    c.max_rollout_steps = j.value("max_rollout_steps", c.max_rollout_steps);
    c.rollout_mode = j.value("rollout_mode", c.rollout_mode);
    if (j.contains("test_points")) {
      c.test_points = j.at("test_points").get<std::vector<std::vector<double>>>();
    }
    c.action_sigma = j.value("action_sigma", c.action_sigma);
    c.quadrature_order = j.value("quadrature_order", c.quadrature_order);
    c.saturation_scale = j.value("saturation_scale", c.saturation_scale);
    c.darcy_grid = j.value("darcy_grid", c.darcy_grid);
    c.darcy_noise_std = j.value("darcy_noise_std", c.darcy_noise_std);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: missing or malformed field: ") + e.what());
  }
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return Rng::hash_name(experiment_config_to_json(config));
}

ActionDataset canonical_mountain_car_dataset(std::uint64_t seed) {
  const auto env = make_mountain_car_env();
  Rng rng(seed, "data-gen");
  auto dataset = generate_action_dataset(
      env, [](std::span<const double> x) { return mc_expert_action({x[0], x[1]}); },
      DataProtocol{}, rng);
  dataset.sigma = 0.1;
  return dataset;
}

// --- gen-data ---------------------------------------------------------------

namespace {

std::vector<DarcyObservation> canonical_darcy_observations(std::uint64_t seed, double noise_std) {
  const auto layout = build_kl_cosine_2d(25, 25);
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout).release());
  const auto truth = make_true_permeability(layout);

  const Grid2D fine(40);
  std::vector<double> u;
  eval->evaluate_batch(truth, fine.nodes(), u);
  const auto head = darcy_solve(u, fine, 1e-11);

  Rng loc_rng(seed, "darcy-obs");
  Rng noise_rng(seed, "darcy-noise");
  std::vector<DarcyObservation> obs;
  for (int k = 0; k < 33; ++k) {
    const double x1 = loc_rng.uniform(0.1, 0.9);
    const double x2 = loc_rng.uniform(0.1, 0.9);
    obs.push_back({x1, x2, interpolate_head(head, x1, x2) + noise_std * noise_rng.normal()});
  }
  return obs;
}

RegressionDataset canonical_regression_dataset(std::uint64_t seed, double noise_std) {
  const auto layout = build_kl_cosine_2d(25, 25);
  const auto eval = make_evaluator(layout);
  const auto truth = make_true_permeability(layout);

  RegressionDataset ds;
  ds.noise_std = noise_std;
  Rng noise_rng(seed, "regression-noise");
  for (int j = 0; j < 20; ++j) {
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> x{i / 19.0, j / 19.0};
      ds.records.push_back({x, eval->evaluate(truth, x) + noise_std * noise_rng.normal()});
    }
  }
  return ds;
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_metadata(out_dir, "gen-data", config, nullptr);
  json summary;

  if (config.experiment == "MOUNTAINCAR_POSTERIOR" || config.experiment == "WIDTH_SWEEP" ||
      config.experiment == "POLICY_EVAL") {
    const auto dataset = canonical_mountain_car_dataset(config.seed);
    save_action_dataset(dataset, "mountain_car", out_dir / "mountaincar_T50.jsonl");
    summary["records"] = dataset.records.size();
    summary["file"] = "mountaincar_T50.jsonl";
  } else if (config.experiment == "DARCY_POSTERIOR") {
    const auto obs = canonical_darcy_observations(config.seed, config.darcy_noise_std);
    RegressionDataset as_regression;
    as_regression.noise_std = config.darcy_noise_std;
    for (const auto& o : obs) as_regression.records.push_back({{o.x1, o.x2}, o.head});
    save_regression_dataset(as_regression, out_dir / "darcy_obs33.jsonl");

    // reference fields for plotting
    const auto layout = build_kl_cosine_2d(25, 25);
    const auto eval = make_evaluator(layout);
    const auto truth = make_true_permeability(layout);
    const std::vector<std::array<double, 2>> unit_box{{0.0, 1.0}, {0.0, 1.0}};
    const auto u_grid = grid_values(unit_box, 40, [&](const std::vector<double>& x) {
      return eval->evaluate(truth, x);
    });
    write_grid_csv(unit_box, 40, u_grid, out_dir / "true_log_permeability.csv");
    const Grid2D fine(40);
    std::vector<double> u_nodes;
    eval->evaluate_batch(truth, fine.nodes(), u_nodes);
    const auto head = darcy_solve(u_nodes, fine, 1e-11);
    write_grid_csv(unit_box, 40, head.values, out_dir / "true_head.csv");
    summary["records"] = obs.size();
    summary["file"] = "darcy_obs33.jsonl";
  } else if (config.experiment == "REGRESSION_RECOVERY") {
    const auto ds = canonical_regression_dataset(config.seed, config.darcy_noise_std);
    save_regression_dataset(ds, out_dir / "regression_grid400.jsonl");
    summary["records"] = ds.records.size();
    summary["file"] = "regression_grid400.jsonl";
  } else {
    throw ConfigError("gen-data: no dataset associated with experiment " + config.experiment);
  }
  write_metadata(out_dir, "gen-data", config, summary);
}

// --- prior-samples ------------------------------------------------------------

void cmd_prior_samples(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_metadata(out_dir, "prior-samples", config, nullptr);

  const auto layout = build_layout(config.prior);
  const auto map = build_input_map(config.prior);
  const auto eval = make_evaluator(layout, map);
  if (eval->domain_dim() != 2) {
    throw ConfigError("prior-samples: grid output needs a 2-d function domain");
  }
  const std::vector<std::array<double, 2>> box =
      map.kind() == InputMap::Kind::BOX_RESCALE
          ? std::vector<std::array<double, 2>>(map.box())
          : std::vector<std::array<double, 2>>{{0.0, 1.0}, {0.0, 1.0}};

  Rng rng(config.seed, "prior-samples");
  for (int s = 0; s < config.prior_sample_count; ++s) {
    Rng draw_rng = rng.split(static_cast<std::uint64_t>(s));
    const auto coords = prior_sample(layout, draw_rng);
    const auto values = grid_values(box, config.grid_cells, [&](const std::vector<double>& x) {
      return eval->evaluate(coords, x);
    });
    write_grid_csv(box, config.grid_cells, values, out_dir / ("sample_" + std::to_string(s) + ".csv"));
  }

  json summary;
  summary["samples"] = config.prior_sample_count;
  summary["grid_cells"] = config.grid_cells;
  write_metadata(out_dir, "prior-samples", config, summary);
}

// --- width-sweep ---------------------------------------------------------------

namespace {

struct SweepCell {
  int width = 0;
  bool trace_class = true;
  double acceptance = 0.0;
  double acceptance_se = 0.0;  // batch-means error bar
  std::size_t params = 0;
};

SweepCell run_sweep_cell(const ExperimentConfig& config, const ActionDataset& dataset, int width,
                         bool trace_class) {
  const int d = 2;
  PriorLayout layout = [&] {
    if (trace_class) {
      return build_tcnn({width, width, width}, d, 1.5, {2, 2, 2, 2}, {2, 2, 2, 2});
    }
    std::vector<double> sigma2(4);
    if (config.bnn_sigma_mode == "constant") {
      // 10/(3 N) at the reference width 10: the prior is not adjusted as
      // nodes are added
      sigma2 = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    } else if (config.bnn_sigma_mode == "literal") {
      // sigma^2 = 10 / (3 N^(l)), the layer's own width
      sigma2 = {10.0 / (3.0 * width), 10.0 / (3.0 * width), 10.0 / (3.0 * width), 10.0 / 3.0};
    } else if (config.bnn_sigma_mode == "fanin") {
      // fan-in scaling 10 / (3 N^(l-1))
      sigma2 = {10.0 / (3.0 * d), 10.0 / (3.0 * width), 10.0 / (3.0 * width),
                10.0 / (3.0 * width)};
    } else {
      throw ConfigError("unknown bnn_sigma_mode: " + config.bnn_sigma_mode);
    }
    return build_tcnn({width, width, width}, d, 0.0, sigma2, sigma2);
  }();

  const InputMap map = InputMap::box_rescale(
      {{kMcMinPosition, kMcMaxPosition}, {-kMcMaxSpeed, kMcMaxSpeed}});
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout, map).release());

  ActionLikelihoodConfig lik_cfg;
  lik_cfg.sigma = config.action_sigma;
  lik_cfg.quadrature_order = config.quadrature_order;
  ActionLogLikelihood loglik(dataset, eval, lik_cfg);

  SamplerConfig chain_cfg;
  chain_cfg.kind = SamplerKind::PCN;
  chain_cfg.beta = trace_class ? 0.1 : 1.0 / 7.0;
  chain_cfg.iterations = config.sweep_iterations;
  chain_cfg.seed = derive_seed(config.seed, std::string("sweep-") +
                                                (trace_class ? "tcnn-" : "bnn-") +
                                                std::to_string(width));
  const auto result = run_chain(chain_cfg, layout, loglik);
  const auto summary = acceptance_summary(result.records);

  // batch-means error bar on the acceptance rate (records are correlated)
  const int batches = 50;
  const std::size_t len = result.records.size() / batches;
  double grand = 0.0, s2 = 0.0;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t k = 0; k < len; ++k) {
      means[b] += result.records[b * len + k].accepted ? 1.0 : 0.0;
    }
    means[b] /= static_cast<double>(len);
    grand += means[b];
  }
  grand /= batches;
  for (double m : means) s2 += (m - grand) * (m - grand);
  const double se = std::sqrt(s2 / (batches - 1) / batches);

  return {width, trace_class, summary.pcn.rate(), se, layout.param_count()};
}

}  // namespace

void cmd_width_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_metadata(out_dir, "width-sweep", config, nullptr);

  const auto dataset = resolve_mountain_car_dataset(config);

  std::vector<SweepCell> cells;
  std::vector<std::pair<int, bool>> jobs;
  for (int w : config.widths) {
    jobs.emplace_back(w, true);
    jobs.emplace_back(w, false);
  }
  cells.resize(jobs.size());

  const int threads = std::max(1, config.threads);
  for (std::size_t start = 0; start < jobs.size(); start += threads) {
    std::vector<std::future<SweepCell>> running;
    const std::size_t stop = std::min(jobs.size(), start + threads);
    for (std::size_t k = start; k < stop; ++k) {
      running.push_back(std::async(std::launch::async, [&, k] {
        return run_sweep_cell(config, dataset, jobs[k].first, jobs[k].second);
      }));
    }
    for (std::size_t k = start; k < stop; ++k) cells[k] = running[k - start].get();
  }

  std::ostringstream csv;
  csv << "width,params,acc_tcnn_pct,acc_tcnn_se_pct,acc_bnn_pct,acc_bnn_se_pct\n";
  json summary = json::array();
  for (std::size_t k = 0; k < cells.size(); k += 2) {
    const auto& tc = cells[k];
    const auto& bnn = cells[k + 1];
    csv << tc.width << ',' << tc.params << ',' << format_double(100.0 * tc.acceptance) << ','
        << format_double(100.0 * tc.acceptance_se) << ','
        << format_double(100.0 * bnn.acceptance) << ','
        << format_double(100.0 * bnn.acceptance_se) << "\n";
    summary.push_back({{"width", tc.width},
                       {"params", tc.params},
                       {"acc_tcnn_pct", 100.0 * tc.acceptance},
                       {"acc_tcnn_se_pct", 100.0 * tc.acceptance_se},
                       {"acc_bnn_pct", 100.0 * bnn.acceptance},
                       {"acc_bnn_se_pct", 100.0 * bnn.acceptance_se}});
  }
  write_text_file(out_dir / "width_sweep.csv", csv.str());
  write_metadata(out_dir, "width-sweep", config, summary);
}

// --- posterior -------------------------------------------------------------------

namespace {

void emit_chain_outputs(const ChainResult& result, const std::filesystem::path& out_dir) {
  write_chain_csv(result.records, out_dir / "chain.csv");
  write_samples_csv(result.samples, result.sample_iterations, out_dir / "samples.csv");
}

// pointwise mean of the stored sample evaluations; for coefficient-linear
// evaluators this collapses to one evaluation at the mean coefficients
std::vector<double> posterior_mean_grid(const FunctionEvaluator& eval,
                                        const std::vector<std::vector<double>>& samples,
                                        const std::vector<std::array<double, 2>>& box,
                                        int cells) {
  const int npts = cells + 1;
  std::vector<double> mean(static_cast<std::size_t>(npts) * npts, 0.0);
  std::vector<std::vector<double>> points;
  points.reserve(mean.size());
  for (int j = 0; j < npts; ++j) {
    for (int i = 0; i < npts; ++i) {
      points.push_back({box[0][0] + (box[0][1] - box[0][0]) * i / cells,
                        box[1][0] + (box[1][1] - box[1][0]) * j / cells});
    }
  }
  if (eval.linear_in_params()) {
    std::vector<double> mean_coords(eval.param_count(), 0.0);
    for (const auto& sample : samples) {
      for (std::size_t i = 0; i < mean_coords.size(); ++i) mean_coords[i] += sample[i];
    }
    for (double& c : mean_coords) c /= static_cast<double>(samples.size());
    eval.evaluate_batch(mean_coords, points, mean);
    return mean;
  }
  std::vector<double> values;
  for (const auto& sample : samples) {
    eval.evaluate_batch(sample, points, values);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += values[k];
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  return mean;
}

void posterior_mountain_car(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir) {
  const auto layout = build_layout(config.prior);
  const auto map = build_input_map(config.prior);
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout, map).release());

  const auto dataset = resolve_mountain_car_dataset(config);

  ActionLikelihoodConfig lik_cfg;
  lik_cfg.sigma = config.action_sigma;
  lik_cfg.quadrature_order = config.quadrature_order;
  // bounded value evaluations are required for the gradient-informed kernel
  lik_cfg.saturation = Saturation{config.saturation_scale,
                                  config.sampler.kind == SamplerKind::PCNL};
  ActionLogLikelihood loglik(dataset, eval, lik_cfg);

  const auto result = run_chain(config.sampler, layout, loglik);
  emit_chain_outputs(result, out_dir);

  if (!result.samples.empty()) {
    const auto mean =
        posterior_mean_grid(*eval, result.samples, dataset.state_box, config.grid_cells);
    write_grid_csv(dataset.state_box, config.grid_cells, mean, out_dir / "mean_grid.csv");

    // normalized value vectors at the test points, one row per stored sample
    const auto env = make_mountain_car_env();
    auto points = config.test_points.empty() ? default_test_points() : config.test_points;
    std::ostringstream csv;
    csv << "point,sample,v1,v2,v3\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      std::vector<std::vector<double>> successors;
      for (int a = 1; a <= env.action_count; ++a) {
        successors.push_back(env.transition(points[p], a));
      }
      const int expert_label = mc_expert_action({points[p][0], points[p][1]});
      int opt = 1;
      for (int a = 0; a < env.action_count; ++a) {
        if (env.action_labels[a] == expert_label) opt = a + 1;
      }
      std::vector<double> v;
      for (std::size_t s = 0; s < result.samples.size(); ++s) {
        eval->evaluate_batch(result.samples[s], successors, v);
        const auto centered = normalize_value_vector(v, opt);
        csv << p << ',' << s;
        for (double c : centered) csv << ',' << format_double(c);
        csv << "\n";
      }
    }
    write_text_file(out_dir / "test_points.csv", csv.str());
  }

  write_metadata(out_dir, "posterior", config, summary_of(acceptance_summary(result.records)));
}

void posterior_darcy(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  if (config.sampler.kind != SamplerKind::PCN) {
    throw ConfigError(
        "the Darcy forward model provides no likelihood gradient; "
        "run this posterior with the PCN sampler");
  }
  const PriorSpec prior = config.prior == PriorSpec{} ? darcy_nn_prior() : config.prior;
  const auto layout = build_layout(prior);
  const auto map = build_input_map(prior);
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout, map).release());

  std::vector<DarcyObservation> obs;
  if (config.dataset_path.empty()) {
    obs = canonical_darcy_observations(config.seed, config.darcy_noise_std);
  } else {
    const auto ds = load_regression_dataset(config.dataset_path);
    for (const auto& rec : ds.records) obs.push_back({rec.x[0], rec.x[1], rec.y});
  }

  DarcyLogLikelihood loglik(obs, eval, Grid2D(config.darcy_grid), config.darcy_noise_std, 1e-10);
  const auto result = run_chain(config.sampler, layout, loglik);
  emit_chain_outputs(result, out_dir);

  json summary = summary_of(acceptance_summary(result.records));
  if (!result.samples.empty()) {
    const std::vector<std::array<double, 2>> unit_box{{0.0, 1.0}, {0.0, 1.0}};
    const auto mean_u =
        posterior_mean_grid(*eval, result.samples, unit_box, config.grid_cells);
    write_grid_csv(unit_box, config.grid_cells, mean_u, out_dir / "mean_log_permeability.csv");
    std::vector<double> mean_perm(mean_u.size());
    for (std::size_t k = 0; k < mean_u.size(); ++k) mean_perm[k] = std::exp(mean_u[k]);
    write_grid_csv(unit_box, config.grid_cells, mean_perm, out_dir / "mean_permeability.csv");

    // posterior predictive at the observation points
    Rng noise_rng(config.seed, "predictive");
    std::vector<std::vector<double>> draws(obs.size());
    for (const auto& sample : result.samples) {
      const auto heads = loglik.predict(sample);
      for (std::size_t k = 0; k < obs.size(); ++k) {
        draws[k].push_back(heads[k] + config.darcy_noise_std * noise_rng.normal());
      }
    }
    std::ostringstream csv;
    csv << "x1,x2,observed,pred_mean,q025,q500,q975\n";
    int covered = 0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      auto& d = draws[k];
      std::sort(d.begin(), d.end());
      const double mean = [&] {
        double acc = 0.0;
        for (double v : d) acc += v;
        return acc / static_cast<double>(d.size());
      }();
      auto quantile = [&](double q) {
        const double pos = q * (static_cast<double>(d.size()) - 1.0);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        return lo + 1 < d.size() ? d[lo] * (1.0 - frac) + d[lo + 1] * frac : d[lo];
      };
      const double q025 = quantile(0.025), q500 = quantile(0.5), q975 = quantile(0.975);
      if (obs[k].head >= q025 && obs[k].head <= q975) ++covered;
      csv << format_double(obs[k].x1) << ',' << format_double(obs[k].x2) << ','
          << format_double(obs[k].head) << ',' << format_double(mean) << ','
          << format_double(q025) << ',' << format_double(q500) << ',' << format_double(q975)
          << "\n";
    }
    write_text_file(out_dir / "posterior_predictive.csv", csv.str());
    summary["predictive_covered"] = covered;
    summary["observations"] = obs.size();
  }
  write_metadata(out_dir, "posterior", config, summary);
}

void posterior_regression(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const PriorSpec prior = config.prior == PriorSpec{} ? darcy_nn_prior() : config.prior;
  const auto layout = build_layout(prior);
  const auto map = build_input_map(prior);
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout, map).release());

  RegressionDataset ds = config.dataset_path.empty()
                             ? canonical_regression_dataset(config.seed, config.darcy_noise_std)
                             : load_regression_dataset(config.dataset_path);
  RegressionLogLikelihood loglik(ds, eval);
  const auto result = run_chain(config.sampler, layout, loglik);
  emit_chain_outputs(result, out_dir);

  if (!result.samples.empty()) {
    const std::vector<std::array<double, 2>> unit_box{{0.0, 1.0}, {0.0, 1.0}};
    const auto mean = posterior_mean_grid(*eval, result.samples, unit_box, config.grid_cells);
    write_grid_csv(unit_box, config.grid_cells, mean, out_dir / "mean_grid.csv");
  }
  write_metadata(out_dir, "posterior", config, summary_of(acceptance_summary(result.records)));
}

}  // namespace

void cmd_posterior(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_metadata(out_dir, "posterior", config, nullptr);
  if (config.experiment == "MOUNTAINCAR_POSTERIOR") {
    posterior_mountain_car(config, out_dir);
  } else if (config.experiment == "DARCY_POSTERIOR") {
    posterior_darcy(config, out_dir);
  } else if (config.experiment == "REGRESSION_RECOVERY") {
    posterior_regression(config, out_dir);
  } else {
    throw ConfigError("posterior: unsupported experiment " + config.experiment);
  }
}

// --- policy-eval ---------------------------------------------------------------

void cmd_policy_eval(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_metadata(out_dir, "policy-eval", config, nullptr);

  if (config.samples_path.empty()) {
    throw InputError("policy-eval: samples_path must point at a posterior samples.csv");
  }
  const auto samples = load_samples_csv(config.samples_path);

  const auto layout = build_layout(config.prior);
  const auto map = build_input_map(config.prior);
  std::shared_ptr<const FunctionEvaluator> eval(make_evaluator(layout, map).release());
  if (samples[0].size() != layout.param_count()) {
    throw InputError("policy-eval: sample dimension does not match the prior spec");
  }

  // posterior-mean value function; linear evaluators collapse to the mean
  // coefficient vector
  std::vector<double> mean_coords;
  if (eval->linear_in_params()) {
    mean_coords.assign(layout.param_count(), 0.0);
    for (const auto& s : samples) {
      for (std::size_t i = 0; i < mean_coords.size(); ++i) mean_coords[i] += s[i];
    }
    for (double& c : mean_coords) c /= static_cast<double>(samples.size());
  }
  auto mean_value = [&](std::span<const double> x) {
    if (!mean_coords.empty()) return eval->evaluate(mean_coords, x);
    double acc = 0.0;
    for (const auto& s : samples) acc += eval->evaluate(s, x);
    return acc / static_cast<double>(samples.size());
  };

  const auto env = make_mountain_car_env();
  const RolloutMode mode =
      config.rollout_mode == "noisy" ? RolloutMode::SAMPLED_NOISE : RolloutMode::GREEDY;
  const double rollout_sigma = mode == RolloutMode::SAMPLED_NOISE ? config.action_sigma : 0.0;

  std::ostringstream csv;
  csv << "episode,policy,steps,success\n";
  std::ostringstream traj;
  traj << "episode,policy,t,x1,x2,a\n";
  auto dump_trajectory = [&](int episode, const char* policy, const RolloutResult& r) {
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) {
      const auto& step = r.trajectory[t];
      traj << episode << ',' << policy << ',' << t << ',' << format_double(step.state[0]) << ','
           << format_double(step.state[1]) << ',' << env.action_labels[step.action - 1] << "\n";
    }
  };
  int failures_posterior = 0, failures_expert = 0, failures_prior = 0;
  int post_only_fail = 0, prior_only_fail = 0;

  Rng episode_rng(config.seed, "episodes");
  Rng draw_rng(config.seed, "baseline-draws");
  for (int e = 0; e < config.episodes; ++e) {
    Rng start_rng = episode_rng.split(static_cast<std::uint64_t>(e));
    const auto start = env.initial_state(start_rng);

    Rng post_rng = Rng(config.seed, "rollout-posterior").split(static_cast<std::uint64_t>(e));
    const auto post = rollout_with_value(env, mean_value, rollout_sigma,
                                         config.max_rollout_steps, post_rng, mode, start);

    // expert reference
    int expert_steps = 0;
    bool expert_success = false;
    {
      MountainCarState s{start[0], start[1]};
      for (int t = 0; t < config.max_rollout_steps; ++t) {
        s = mc_transition(s, mc_expert_action(s));
        ++expert_steps;
        if (s.position >= kMcGoalPosition) {
          expert_success = true;
          break;
        }
      }
    }

    // fresh prior draw per episode
    Rng prior_rng = draw_rng.split(static_cast<std::uint64_t>(e));
    const auto fresh = prior_sample(layout, prior_rng);
    Rng prior_roll_rng = Rng(config.seed, "rollout-prior").split(static_cast<std::uint64_t>(e));
    const auto base = rollout_with_value(env, *eval, fresh, rollout_sigma,
                                         config.max_rollout_steps, prior_roll_rng, mode, start);

    failures_posterior += post.success ? 0 : 1;
    failures_expert += expert_success ? 0 : 1;
    failures_prior += base.success ? 0 : 1;
    if (!post.success && base.success) ++post_only_fail;
    if (post.success && !base.success) ++prior_only_fail;

    csv << e << ",posterior_mean," << post.steps << ',' << (post.success ? 1 : 0) << "\n";
    csv << e << ",expert," << expert_steps << ',' << (expert_success ? 1 : 0) << "\n";
    csv << e << ",prior_draw," << base.steps << ',' << (base.success ? 1 : 0) << "\n";
    dump_trajectory(e, "posterior_mean", post);
    dump_trajectory(e, "prior_draw", base);
  }
  write_text_file(out_dir / "policy_eval.csv", csv.str());
  write_text_file(out_dir / "trajectories.csv", traj.str());

  json summary;
  summary["episodes"] = config.episodes;
  summary["failures_posterior_mean"] = failures_posterior;
  summary["failures_expert"] = failures_expert;
  summary["failures_prior_draw"] = failures_prior;
  summary["posterior_fails_prior_succeeds"] = post_only_fail;
  summary["posterior_succeeds_prior_fails"] = prior_only_fail;
  write_metadata(out_dir, "policy-eval", config, summary);
}

}  // namespace fsmc
