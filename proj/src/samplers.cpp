#include "fsmc/samplers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

const char* move_name(MoveKind m) {
  switch (m) {
    case MoveKind::PCN: return "pcn";
    case MoveKind::PCNL: return "pcnl";
    case MoveKind::NODESWAP: return "nodeswap";
  }
  return "?";
}

const char* sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::PCN: return "PCN";
    case SamplerKind::PCNL: return "PCNL";
    case SamplerKind::PCN_WITH_NODESWAP: return "PCN_WITH_NODESWAP";
  }
  return "?";
}

SamplerKind sampler_from_name(std::string_view name) {
  if (name == "PCN") return SamplerKind::PCN;
  if (name == "PCNL") return SamplerKind::PCNL;
  if (name == "PCN_WITH_NODESWAP") return SamplerKind::PCN_WITH_NODESWAP;
  throw ConfigError("unknown sampler kind: " + std::string(name));
}

void validate(const SamplerConfig& config, const PriorLayout& layout) {
  if (!(config.beta > 0.0 && config.beta <= 1.0)) {
    throw ConfigError("SamplerConfig: beta must be in (0, 1]");
  }
  if (config.kind == SamplerKind::PCNL && !(config.delta > 0.0 && config.delta < 2.0)) {
    throw ConfigError("SamplerConfig: delta must be in (0, 2)");
  }
  if (!(config.nodeswap_prob >= 0.0 && config.nodeswap_prob < 1.0)) {
    throw ConfigError("SamplerConfig: nodeswap probability must be in [0, 1)");
  }
  if (config.iterations < 0 || config.thin < 0) {
    throw ConfigError("SamplerConfig: iterations and thin must be non-negative");
  }
  if (config.kind == SamplerKind::PCN_WITH_NODESWAP) {
    if (!layout.is_network()) {
      throw ConfigError("NodeSwap requires a network prior (finite-width layers)");
    }
    for (int w : layout.tcnn().widths) {
      if (w < 2) throw ConfigError("NodeSwap requires hidden widths >= 2");
    }
    if (config.nodeswap_law == NodeIndexLaw::GEOMETRIC && !(layout.tcnn().alpha > 1.0)) {
      throw ConfigError("geometric node law requires alpha > 1");
    }
  }
}

namespace {

// evaluation failures and non-finite values reject the proposal instead of
// aborting the chain
bool safe_value(const LogLikelihood& loglik, std::span<const double> params, double& out) {
  try {
    out = loglik.value(params);
  } catch (const EvalError&) {
    return false;
  }
  return std::isfinite(out);
}

bool safe_value_and_gradient(const LogLikelihood& loglik, std::span<const double> params,
                             double& out, std::vector<double>& grad) {
  try {
    auto [v, g] = loglik.value_and_gradient(params);
    out = v;
    grad = std::move(g);
  } catch (const EvalError&) {
    return false;
  }
  if (!std::isfinite(out)) return false;
  for (double gi : grad) {
    if (!std::isfinite(gi)) return false;
  }
  return true;
}

}  // namespace

ChainRecord pcn_step(ChainState& state, std::span<const double> prior_stddevs,
                     const LogLikelihood& loglik, double beta, Rng& rng) {
  const std::size_t P = state.params.size();
  const double keep = std::sqrt(1.0 - beta * beta);

  std::vector<double> proposal(P);
  for (std::size_t i = 0; i < P; ++i) {
    proposal[i] = keep * state.params[i] + beta * prior_stddevs[i] * rng.normal();
  }
  const double log_u = std::log(rng.uniform01());

  ChainRecord rec{state.iteration + 1, state.loglik, false, MoveKind::PCN, false};
  double prop_loglik = 0.0;
  if (!safe_value(loglik, proposal, prop_loglik)) {
    rec.eval_error = true;
  } else if (log_u < prop_loglik - state.loglik) {
    state.params = std::move(proposal);
    state.loglik = prop_loglik;
    state.has_grad = false;
    rec.accepted = true;
    rec.loglik = prop_loglik;
  }
  state.iteration = rec.iteration;
  return rec;
}

ChainRecord pcnl_step(ChainState& state, std::span<const double> prior_stddevs,
                      const LogLikelihood& loglik, double delta, Rng& rng) {
  const std::size_t P = state.params.size();
  if (!state.has_grad) {
    auto [v, g] = loglik.value_and_gradient(state.params);
    state.loglik = v;
    state.grad = std::move(g);
    state.has_grad = true;
  }

  // v = [(2-d) u + 2d C Dl(u) + sqrt(8d) w] / (2+d), w ~ N(0, C)
  const double denom = 2.0 + delta;
  const double keep = (2.0 - delta) / denom;
  const double drift = 2.0 * delta / denom;
  const double noise = std::sqrt(8.0 * delta) / denom;

  std::vector<double> proposal(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double lam2 = prior_stddevs[i] * prior_stddevs[i];
    proposal[i] = keep * state.params[i] + drift * lam2 * state.grad[i] +
                  noise * prior_stddevs[i] * rng.normal();
  }
  const double log_u = std::log(rng.uniform01());

  ChainRecord rec{state.iteration + 1, state.loglik, false, MoveKind::PCNL, false};
  double prop_loglik = 0.0;
  std::vector<double> prop_grad;
  if (!safe_value_and_gradient(loglik, proposal, prop_loglik, prop_grad)) {
    rec.eval_error = true;
    state.iteration = rec.iteration;
    return rec;
  }

  // rho(a, b) = -l(a) - 1/2 <b-a, Dl(a)> - d/4 <a+b, Dl(a)> + d/4 |sqrtC Dl(a)|^2
  auto rho = [&](const std::vector<double>& a, const std::vector<double>& b, double loglik_a,
                 const std::vector<double>& grad_a) {
    double inner_diff = 0.0, inner_sum = 0.0, cnorm = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      inner_diff += (b[i] - a[i]) * grad_a[i];
      inner_sum += (a[i] + b[i]) * grad_a[i];
      const double lam_g = prior_stddevs[i] * grad_a[i];
      cnorm += lam_g * lam_g;
    }
    return -loglik_a - 0.5 * inner_diff - 0.25 * delta * inner_sum + 0.25 * delta * cnorm;
  };

  const double log_ratio = rho(state.params, proposal, state.loglik, state.grad) -
                           rho(proposal, state.params, prop_loglik, prop_grad);
  if (log_u < log_ratio) {
    state.params = std::move(proposal);
    state.loglik = prop_loglik;
    state.grad = std::move(prop_grad);  // gradient at v was already computed for rho(v, u)
    rec.accepted = true;
    rec.loglik = prop_loglik;
  }
  state.iteration = rec.iteration;
  return rec;
}

ChainRecord nodeswap_step(ChainState& state, const PriorLayout& layout, NodeIndexLaw law,
                          Rng& rng) {
  const int n_hidden = static_cast<int>(layout.tcnn().widths.size());
  const double alpha = layout.tcnn().alpha;

  const int l = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n_hidden)));
  const int width = layout.layer_width(l);

  int node = 0;
  if (law == NodeIndexLaw::POWER) {
    // truncated distribution proportional to i^-alpha on {1, ..., N-1}
    double total = 0.0;
    for (int i = 1; i < width; ++i) total += std::pow(static_cast<double>(i), -alpha);
    double target = rng.uniform01() * total;
    node = width - 1;
    double acc = 0.0;
    for (int i = 1; i < width; ++i) {
      acc += std::pow(static_cast<double>(i), -alpha);
      if (target < acc) {
        node = i;
        break;
      }
    }
  } else {
    // i ~ Geom(1/alpha), resampled until a valid index comes up
    const double p = 1.0 / alpha;
    do {
      node = 1 + static_cast<int>(std::floor(std::log1p(-rng.uniform01()) / std::log1p(-p)));
    } while (node >= width);
  }
  const double log_u = std::log(rng.uniform01());

  // prior log-ratio over the swapped coordinate pairs
  auto& theta = state.params;
  double log_ratio = 0.0;
  auto add_pair = [&](std::size_t p_idx, std::size_t q_idx) {
    const double lp2 = layout.variance(p_idx);
    const double lq2 = layout.variance(q_idx);
    const double tp = theta[p_idx], tq = theta[q_idx];
    log_ratio += (tp * tp - tq * tq) * (0.5 / lp2 - 0.5 / lq2);
  };
  add_pair(layout.bias_index(l, node), layout.bias_index(l, node + 1));
  for (int j = 1; j <= layout.layer_width(l - 1); ++j) {
    add_pair(layout.weight_index(l, node, j), layout.weight_index(l, node + 1, j));
  }
  for (int k = 1; k <= layout.layer_width(l + 1); ++k) {
    add_pair(layout.weight_index(l + 1, k, node), layout.weight_index(l + 1, k, node + 1));
  }

  ChainRecord rec{state.iteration, state.loglik, false, MoveKind::NODESWAP, false};
  if (log_u < log_ratio) {
    std::swap(theta[layout.bias_index(l, node)], theta[layout.bias_index(l, node + 1)]);
    for (int j = 1; j <= layout.layer_width(l - 1); ++j) {
      std::swap(theta[layout.weight_index(l, node, j)],
                theta[layout.weight_index(l, node + 1, j)]);
    }
    for (int k = 1; k <= layout.layer_width(l + 1); ++k) {
      std::swap(theta[layout.weight_index(l + 1, k, node)],
                theta[layout.weight_index(l + 1, k, node + 1)]);
    }
    state.has_grad = false;  // the cached gradient does not follow a relabel
    rec.accepted = true;
  }
  return rec;
}

ChainResult run_chain(const SamplerConfig& config, const PriorLayout& layout,
                      const LogLikelihood& loglik, std::optional<std::vector<double>> initial) {
  validate(config, layout);

  Rng chain_rng(config.seed, "chain");
  ChainState state;
  if (initial) {
    if (initial->size() != layout.param_count()) {
      throw ConfigError("run_chain: initial state dimension mismatch");
    }
    state.params = std::move(*initial);
  } else {
    Rng init_rng(config.seed, "init");
    state.params = prior_sample(layout, init_rng);
  }
  state.loglik = loglik.value(state.params);
  if (!std::isfinite(state.loglik)) {
    throw EvalError("run_chain: non-finite log-likelihood at the initial state");
  }

  const auto& stddevs = layout.stddevs();
  ChainResult result;
  result.records.reserve(static_cast<std::size_t>(config.iterations));

  int consecutive_errors = 0;
  auto note_errors = [&](const ChainRecord& rec) {
    if (rec.eval_error) {
      ++result.eval_errors;
      if (++consecutive_errors > config.max_eval_errors) {
        throw EvalError("run_chain: " + std::to_string(consecutive_errors) +
                        " consecutive proposal evaluation failures at iteration " +
                        std::to_string(rec.iteration));
      }
    } else {
      consecutive_errors = 0;
    }
  };

  for (long it = 1; it <= config.iterations; ++it) {
    switch (config.kind) {
      case SamplerKind::PCN: {
        auto rec = pcn_step(state, stddevs, loglik, config.beta, chain_rng);
        note_errors(rec);
        result.records.push_back(rec);
        break;
      }
      case SamplerKind::PCNL: {
        auto rec = pcnl_step(state, stddevs, loglik, config.delta, chain_rng);
        note_errors(rec);
        result.records.push_back(rec);
        break;
      }
      case SamplerKind::PCN_WITH_NODESWAP: {
        auto rec = pcn_step(state, stddevs, loglik, config.beta, chain_rng);
        note_errors(rec);
        result.records.push_back(rec);
        if (chain_rng.uniform01() < config.nodeswap_prob) {
          auto swap_rec = nodeswap_step(state, layout, config.nodeswap_law, chain_rng);
          if (swap_rec.accepted) {
            // relabeling preserves the likelihood; refresh the cache so the
            // stored value tracks the exact evaluation at the new labels
            state.loglik = loglik.value(state.params);
            swap_rec.loglik = state.loglik;
          }
          result.records.push_back(swap_rec);
        }
        break;
      }
    }

    if (config.thin > 0 && it % config.thin == 0) {
      result.samples.push_back(state.params);
      result.sample_iterations.push_back(it);
    }
    if (config.audit_every > 0 && it % config.audit_every == 0) {
      const double fresh = loglik.value(state.params);
      if (!(std::abs(fresh - state.loglik) <= 1e-12 * std::max(1.0, std::abs(fresh)))) {
        throw std::logic_error("run_chain: cached log-likelihood drifted from a fresh evaluation");
      }
    }
  }

  result.final_state = std::move(state);
  return result;
}

AcceptanceSummary acceptance_summary(std::span<const ChainRecord> records) {
  if (records.empty()) throw InputError("acceptance_summary: empty record stream");
  AcceptanceSummary s;
  double mean = 0.0;
  for (const auto& rec : records) {
    MoveStats& stats = rec.move == MoveKind::PCN ? s.pcn
                       : rec.move == MoveKind::PCNL ? s.pcnl
                                                    : s.nodeswap;
    ++stats.proposed;
    if (rec.accepted) ++stats.accepted;
    if (rec.eval_error) ++s.eval_errors;
    mean += rec.loglik;
  }
  mean /= static_cast<double>(records.size());
  s.mean_loglik = mean;

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double c = records[i].loglik - mean;
    den += c * c;
    if (i + 1 < records.size()) num += c * (records[i + 1].loglik - mean);
  }
  s.lag1_autocorr = den > 0.0 ? num / den : 0.0;
  return s;
}

}  // namespace fsmc
