#pragma once
// Simulation study: generate a population, draw an RDS sample, estimate
// inclusion probabilities, fit each configured model and score it against
// the truth. Replications run on a worker pool.

#include "rdsclust/mixfit.hpp"
#include "rdsclust/netcore.hpp"
#include "rdsclust/probs.hpp"
#include "rdsclust/rds.hpp"
#include "rdsclust/synth.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rdsclust {

struct StudyModel {
  bool weighted = false;
  std::optional<double> alpha;  // nullopt: per-sample alpha from a sweep

  // "noW-alpha=1", "W-alpha-star", ...
  std::string name() const;
};

// Accepts "w:1", "uw:0.5", "w:star" (and "weighted:"/"unweighted:").
StudyModel parse_study_model(const std::string& text);

// noW-alpha=0, noW-alpha=1, noW-alpha-star, W-alpha=0, W-alpha=1, W-alpha-star
std::vector<StudyModel> default_study_models();

// Harness fit defaults: attribute-only starts. Best-of-restarts at alpha > 0
// in weighted mode tends to pick a bipartition of the recruitment forest.
inline FitConfig default_study_fit() {
  FitConfig f;
  f.init = InitMethod::AttributeFit;
  return f;
}

struct StudyConfig {
  std::optional<StudyCase> study_case = StudyCase::I;
  SynthConfig custom;  // used when study_case is empty
  int n = 300;
  int num_seeds = 0;   // 0: 5 seeds when n >= 300, else 3
  SeedRule seed_rule = SeedRule::DegreeProportional;
  int replications = 100;
  std::vector<StudyModel> models = default_study_models();
  std::filesystem::path output_dir;
  std::uint64_t rng_seed = 0;
  int threads = 0;     // 0: hardware concurrency
  FitConfig fit = default_study_fit();  // K, alpha, weighted set per model
  ProbsConfig probs;   // N_assumed 0: the population size
  std::vector<double> alpha_grid;  // empty: default grid
  int bins = 4;

  void validate() const;
  SynthConfig synth(std::uint64_t seed) const;
};

// Everything a replication draws before fitting.
struct StudySample {
  Population population;
  RdsSample sample;
  ProbsEstimate probs;
  ExpandedProbs expanded;
  std::vector<int> truth;  // true labels of sampled nodes
  SynthConfig synth;
};

struct ModelOutcome {
  bool ok = false;
  std::string error;
  ModelParams params;  // clusters reordered to match the truth
  double alpha = 0.0;  // alpha used (the selected one for star models)
  int misclustered = 0;
  double misclustering_rate = 0.0;
  std::optional<double> modularity;  // weighted
  double nmi = 0.0;                  // weighted, averaged over features
  bool converged = false;
};

struct Replication {
  int index = 0;
  bool ok = false;
  std::string error;
  std::vector<ModelOutcome> models;
};

struct SummaryRow {
  std::string model;
  std::string quantity;
  std::optional<double> truth;
  int count = 0;
  double mean = 0.0;
  std::optional<double> sd;   // empty with fewer than two values
  std::optional<double> mse;  // empty without a truth
};

struct StudyResult {
  std::vector<std::string> model_names;
  std::vector<Replication> replications;
  std::vector<SummaryRow> summary;
  int failed_replications = 0;
};

std::uint64_t replication_seed(const StudyConfig& cfg, int index);

StudySample prepare_replication(const StudyConfig& cfg, int index);

ModelOutcome evaluate_model(const StudyConfig& cfg, const StudySample& s,
                            const StudyModel& model, int index);

// Reorders clusters so that fitted cluster match[k] becomes cluster k.
ModelParams reorder_clusters(const ModelParams& params,
                             const std::vector<int>& match);

std::vector<SummaryRow> summarize(const StudyConfig& cfg,
                                  const std::vector<Replication>& reps);

// Runs all replications; failures are logged to `log` when given.
StudyResult run_study(const StudyConfig& cfg, std::ostream* log = nullptr);

// study_summary.csv and replications.csv in dir.
void write_study(const StudyResult& result, const std::filesystem::path& dir);

}  // namespace rdsclust
