#pragma once
// Respondent-driven sampling simulator.
//
// Seeds are drawn among unsampled nodes with degree >= 1, uniformly by
// default or with probability proportional to degree. Sampled
// nodes are processed first-in first-out; each draws a recruit count from
// recruit_dist and recruits that many uniformly chosen unsampled neighbours
// (fewer if fewer remain or the target size is reached). When the frontier
// empties early and reseeding is on, a fresh seed is drawn.

#include "rdsclust/netcore.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rdsclust {

enum class SeedRule {
  Uniform,
  DegreeProportional,
};

std::string to_string(SeedRule r);
SeedRule parse_seed_rule(const std::string& name);

struct RdsConfig {
  int n_target = 0;
  int num_seeds = 1;
  int max_coupons = 3;
  std::vector<double> recruit_dist{0.1, 0.2, 0.3, 0.4};  // P(0..max_coupons)
  bool reseed = true;
  std::uint64_t rng_seed = 0;
  SeedRule seed_rule = SeedRule::Uniform;

  void validate() const;
};

// Graph-level outcome of one RDS run; the i-th entry of each vector refers to
// the i-th sampled node in recruitment order.
struct RdsTrace {
  std::vector<int> order;      // population ids
  std::vector<int> recruiter;  // sample index of the recruiter, or kSeed
  std::vector<int> wave;
  int reseeds = 0;
  bool partial = false;
};

// Core sampler; consumes randomness from rng.
RdsTrace trace_rds(const Graph& graph, const RdsConfig& cfg,
                   std::mt19937_64& rng);

// Full sample with features, population degrees and recruitment adjacency.
// Deterministic given cfg.rng_seed.
RdsSample rds_sample(const Population& pop, const RdsConfig& cfg);

}  // namespace rdsclust
