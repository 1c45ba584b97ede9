#pragma once
// Attributed stochastic-block-model populations for the simulation study.

#include "rdsclust/netcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rdsclust {

struct SynthConfig {
  int N = 0;
  std::vector<int> block_sizes;  // nodes are assigned to blocks in order
  Eigen::MatrixXd phi;           // K x K, symmetric, entries in [0, 1]
  std::vector<double> mu;        // K
  std::vector<double> sigma;     // K, defaults to all ones when empty
  Eigen::MatrixXd theta;         // M x K, column-stochastic
  std::uint64_t rng_seed = 0;

  int K() const noexcept { return static_cast<int>(block_sizes.size()); }
  void validate() const;
  // Block proportions, i.e. the implied mixing weights.
  Eigen::VectorXd lambda() const;
};

// The four two-block simulation scenarios (N = 600, blocks 200/400).
enum class StudyCase { I, II, III, IV };

StudyCase parse_study_case(const std::string& name);
std::string to_string(StudyCase c);
SynthConfig study_case_config(StudyCase c, std::uint64_t seed);

// Deterministic given cfg.rng_seed.
Population generate_population(const SynthConfig& cfg);

}  // namespace rdsclust
