#include "rdsclust/synth.hpp"

#include <cmath>
#include <random>

namespace rdsclust {

void SynthConfig::validate() const {
  const int k = K();
  if (k < 1) throw ConfigError("synth: need at least one block");
  long total = 0;
  for (int b : block_sizes) {
    if (b < 1) throw ConfigError("synth: block sizes must be positive");
    total += b;
  }
  if (total != N)
    throw ConfigError("synth: block sizes sum to " + std::to_string(total) +
                      ", expected N = " + std::to_string(N));
  if (phi.rows() != k || phi.cols() != k)
    throw ConfigError("synth: phi must be K x K");
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (phi(a, b) != phi(b, a)) throw ConfigError("synth: phi not symmetric");
      if (!(phi(a, b) >= 0.0 && phi(a, b) <= 1.0))
        throw ConfigError("synth: phi entries must lie in [0,1]");
    }
  if (static_cast<int>(mu.size()) != k)
    throw ConfigError("synth: mu must have K entries");
  if (!sigma.empty()) {
    if (static_cast<int>(sigma.size()) != k)
      throw ConfigError("synth: sigma must have K entries");
    for (double s : sigma)
      if (!(s > 0.0)) throw ConfigError("synth: sigma must be positive");
  }
  if (theta.cols() != k || theta.rows() < 2)
    throw ConfigError("synth: theta must be M x K with M >= 2");
  for (int c = 0; c < k; ++c) {
    if ((theta.col(c).array() < 0.0).any() ||
        std::abs(theta.col(c).sum() - 1.0) > 1e-12)
      throw ConfigError("synth: theta columns must be probability vectors");
  }
}

Eigen::VectorXd SynthConfig::lambda() const {
  Eigen::VectorXd out(K());
  for (int c = 0; c < K(); ++c)
    out(c) = static_cast<double>(block_sizes[c]) / static_cast<double>(N);
  return out;
}

StudyCase parse_study_case(const std::string& name) {
  if (name == "I" || name == "1") return StudyCase::I;
  if (name == "II" || name == "2") return StudyCase::II;
  if (name == "III" || name == "3") return StudyCase::III;
  if (name == "IV" || name == "4") return StudyCase::IV;
  throw ConfigError("unknown study case '" + name + "' (expected I..IV)");
}

std::string to_string(StudyCase c) {
  switch (c) {
    case StudyCase::I: return "I";
    case StudyCase::II: return "II";
    case StudyCase::III: return "III";
    case StudyCase::IV: return "IV";
  }
  return "?";
}

SynthConfig study_case_config(StudyCase c, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.N = 600;
  cfg.block_sizes = {200, 400};
  cfg.sigma = {1.0, 1.0};
  cfg.rng_seed = seed;

  const bool network_separates = c == StudyCase::I || c == StudyCase::III;
  const bool features_separate = c == StudyCase::I || c == StudyCase::II;

  cfg.phi.resize(2, 2);
  if (network_separates)
    cfg.phi << 0.1, 0.02, 0.02, 0.2;
  else
    cfg.phi << 0.05, 0.05, 0.05, 0.05;

  cfg.theta.resize(2, 2);
  if (features_separate) {
    cfg.mu = {-2.0, 2.0};
    cfg.theta << 0.8, 0.4, 0.2, 0.6;
  } else {
    cfg.mu = {0.0, 0.0};
    cfg.theta << 0.5, 0.5, 0.5, 0.5;
  }
  return cfg;
}

Population generate_population(const SynthConfig& cfg) {
  cfg.validate();
  const int n = cfg.N;
  const int k = cfg.K();
  std::mt19937_64 rng(cfg.rng_seed);

  std::vector<int> labels;
  labels.reserve(n);
  for (int c = 0; c < k; ++c) labels.insert(labels.end(), cfg.block_sizes[c], c);

  std::vector<double> x1(n);
  std::vector<int> x2(n);
  for (int i = 0; i < n; ++i) {
    const int z = labels[i];
    const double sd = cfg.sigma.empty() ? 1.0 : cfg.sigma[z];
    x1[i] = std::normal_distribution<double>(cfg.mu[z], sd)(rng);
    const auto col = cfg.theta.col(z);
    std::discrete_distribution<int> cat(col.data(), col.data() + col.size());
    x2[i] = cat(rng);
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unif(rng) < cfg.phi(labels[i], labels[j])) edges.emplace_back(i, j);

  return Population(Graph::from_edges(n, edges), std::move(x1), std::move(x2),
                    static_cast<int>(cfg.theta.rows()), std::move(labels));
}

}  // namespace rdsclust
