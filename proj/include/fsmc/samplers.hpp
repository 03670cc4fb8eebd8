#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fsmc/loglik.hpp"
#include "fsmc/prior_layout.hpp"
#include "fsmc/rng.hpp"

namespace fsmc {

enum class MoveKind { PCN, PCNL, NODESWAP };
enum class SamplerKind { PCN, PCNL, PCN_WITH_NODESWAP };

const char* move_name(MoveKind m);
const char* sampler_name(SamplerKind k);
SamplerKind sampler_from_name(std::string_view name);

// node-pick distribution for NodeSwap: the truncated power law i^-alpha is
// canonical; the geometric variant is kept behind this switch
enum class NodeIndexLaw { POWER, GEOMETRIC };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::PCN;
  double beta = 0.1;            // pCN step size, in (0, 1]
  double delta = 0.1;           // pCNL step size, in (0, 2)
  double nodeswap_prob = 0.0;   // per-iteration swap probability, in [0, 1)
  NodeIndexLaw nodeswap_law = NodeIndexLaw::POWER;
  long iterations = 0;
  int thin = 0;                 // keep a parameter snapshot every `thin` iterations; 0 = none
  std::uint64_t seed = 0;
  long audit_every = 5000;      // recheck the cached log-likelihood; 0 = never
  int max_eval_errors = 100;    // consecutive failed proposals before aborting

  bool operator==(const SamplerConfig&) const = default;
};

void validate(const SamplerConfig& config, const PriorLayout& layout);

struct ChainRecord {
  long iteration = 0;
  double loglik = 0.0;
  bool accepted = false;
  MoveKind move = MoveKind::PCN;
  bool eval_error = false;  // proposal evaluation failed; counted as reject
};

struct ChainState {
  std::vector<double> params;
  double loglik = 0.0;
  std::vector<double> grad;  // l2 gradient at params (pCNL cache)
  bool has_grad = false;
  long iteration = 0;
};

// One Metropolis move each.  The state is advanced in place; the proposal
// always consumes the same number of random draws whether accepted or not.
ChainRecord pcn_step(ChainState& state, std::span<const double> prior_stddevs,
                     const LogLikelihood& loglik, double beta, Rng& rng);
ChainRecord pcnl_step(ChainState& state, std::span<const double> prior_stddevs,
                      const LogLikelihood& loglik, double delta, Rng& rng);
ChainRecord nodeswap_step(ChainState& state, const PriorLayout& layout, NodeIndexLaw law,
                          Rng& rng);

struct ChainResult {
  std::vector<ChainRecord> records;
  std::vector<std::vector<double>> samples;   // thinned parameter snapshots
  std::vector<long> sample_iterations;
  ChainState final_state;
  long eval_errors = 0;
};

ChainResult run_chain(const SamplerConfig& config, const PriorLayout& layout,
                      const LogLikelihood& loglik,
                      std::optional<std::vector<double>> initial = std::nullopt);

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct AcceptanceSummary {
  MoveStats pcn, pcnl, nodeswap;
  double mean_loglik = 0.0;
  double lag1_autocorr = 0.0;
  long eval_errors = 0;

  const MoveStats& stats(MoveKind m) const {
    return m == MoveKind::PCN ? pcn : (m == MoveKind::PCNL ? pcnl : nodeswap);
  }
};

// Per-move acceptance rates plus simple trace statistics of the
// log-likelihood; throws InputError on an empty record stream.
AcceptanceSummary acceptance_summary(std::span<const ChainRecord> records);

}  // namespace fsmc
