#pragma once
// Node, node-pair and edge inclusion probabilities for RDS samples.
//
// Node and pair probabilities come from a successive-sampling (SS)
// approximation: the population degree composition is re-estimated by inverse
// probability weighting, and size-n probability-proportional-to-degree
// draws without replacement are simulated from it. Edge probabilities come
// from replaying the RDS design on configuration-model populations with the
// estimated degree composition.

#include "rdsclust/netcore.hpp"
#include "rdsclust/rds.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

namespace rdsclust {

// How SS_kh is formed from the simulation tallies.
enum class PairMode {
  // Distinct sampled (k, h) pairs per simulation, averaged:
  // (sum_m u_k (u_h - [k==h]) + 1) / (sims * N_k (N_h - [k==h]) + 1).
  Joint,
  // Product of pooled totals: (U_k U_h + 1) / (sims^2 N_k N_h + 1).
  Product,
};

struct ProbsConfig {
  std::int64_t N_assumed = 0;
  int num_sims = 1000;
  int num_iters = 3;
  int edge_sims = 500;
  std::uint64_t rng_seed = 0;
  PairMode pair_mode = PairMode::Joint;
  // Recruitment design replayed by the edge simulations. n_target and
  // num_seeds fall back to the sample's size and seed count when 0.
  RdsConfig design{0, 0, 3, {0.1, 0.2, 0.3, 0.4}, true, 0};
  // Known population degree composition. When set, the composition is not
  // re-estimated and a single simulation pass is run.
  std::optional<std::map<int, std::int64_t>> known_degree_counts;

  void validate(int n) const;
};

// Pooled results of num_sims successive-sampling draws.
struct SsTallies {
  std::vector<int> degrees;          // class degree values, ascending
  std::vector<std::int64_t> counts;  // population units per class
  int num_sims = 0;
  int sample_size = 0;
  std::vector<double> units;  // U_k, total sampled units over all draws
  Eigen::MatrixXd joint;      // sum over draws of u_k (u_h - [k==h])
};

// Simulates num_sims size-n draws without replacement, each unit selected with
// probability proportional to its degree among those remaining.
SsTallies simulate_successive_sampling(const std::vector<int>& degrees,
                                       const std::vector<std::int64_t>& counts,
                                       int n, int num_sims,
                                       std::mt19937_64& rng);

struct NodeProbs {
  std::map<int, double> S;
  std::map<int, std::int64_t> degree_counts;  // final population composition
  SsTallies tallies;                          // final simulation pass
};

NodeProbs estimate_node_probs(const RdsSample& sample, const ProbsConfig& cfg);

// Reuses the simulations held in node_probs.
std::map<DegreePair, double> estimate_pair_probs(const RdsSample& sample,
                                                 const NodeProbs& node_probs,
                                                 const ProbsConfig& cfg);

struct EdgeProbs {
  std::map<DegreePair, double> R;
  // Degree pairs never joined by a population edge in any simulation.
  std::vector<DegreePair> no_population_edges;
  // Degree pairs whose estimate was lowered to SS_kh.
  std::vector<DegreePair> clamped;
};

struct EdgeTallies {
  std::map<DegreePair, std::int64_t> observed;    // recruitment edges
  std::map<DegreePair, std::int64_t> population;  // all edges
};

// Runs the RDS design `sims` times on a fixed graph and tallies edges by the
// class keys of their endpoints.
EdgeTallies tally_rds_edges(const Graph& graph,
                            const std::vector<int>& node_key,
                            const RdsConfig& design, int sims,
                            std::mt19937_64& rng);

// Smoothed ratio (observed + 1) / (population + 1) per key pair.
std::map<DegreePair, double> edge_ratio(const EdgeTallies& tallies);

// Edge probabilities for a known population, keyed by population degree.
std::map<DegreePair, double> edge_probs_on_population(const Graph& graph,
                                                      const RdsConfig& design,
                                                      int sims,
                                                      std::uint64_t seed);

// Erased configuration model: stubs matched uniformly, self loops and
// repeated edges dropped.
Graph configuration_model(const std::vector<int>& degree_sequence,
                          std::mt19937_64& rng);

EdgeProbs estimate_edge_probs(const RdsSample& sample,
                              const NodeProbs& node_probs,
                              const std::map<DegreePair, double>& pair_probs,
                              const ProbsConfig& cfg);

struct ProbsEstimate {
  InclusionProbs probs;
  NodeProbs node;
  EdgeProbs edge;
};

ProbsEstimate estimate_inclusion_probs(const RdsSample& sample,
                                       const ProbsConfig& cfg);

}  // namespace rdsclust
