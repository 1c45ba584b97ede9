#pragma once
// Small fixtures shared by the unit tests.

#include "oracle.hpp"
#include "rdsclust/mixfit.hpp"
#include "rdsclust/netcore.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace rdsclust;

// Random recruitment forest of n nodes, the first num_seeds being seeds, at
// most 3 recruits each. Population degree is the sampled degree (at least 1)
// plus a uniform extra in 0..max_degree.
inline RdsSample random_sample(int n, std::mt19937_64& rng, int M = 3,
                               int num_seeds = 1, int max_degree = 6) {
  std::vector<RdsSample::Node> nodes(n);
  std::vector<int> kids(n, 0);
  std::normal_distribution<double> x1(0.0, 2.0);
  std::uniform_int_distribution<int> x2(0, M - 1);
  for (int i = 0; i < n; ++i) {
    nodes[i].id = i;
    nodes[i].x1 = x1(rng);
    nodes[i].x2 = x2(rng);
    if (i < num_seeds) continue;
    // pick a recruiter with a free coupon
    std::vector<int> open;
    for (int j = 0; j < i; ++j)
      if (kids[j] < 3) open.push_back(j);
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const int r = open[pick(rng)];
    nodes[i].recruiter = r;
    nodes[i].wave = nodes[r].wave + 1;
    ++kids[r];
  }
  std::uniform_int_distribution<int> extra(0, max_degree);
  for (int i = 0; i < n; ++i) {
    const int sampled = kids[i] + (nodes[i].recruiter == kSeed ? 0 : 1);
    nodes[i].degree = std::max(1, sampled) + extra(rng);
  }
  return RdsSample(std::move(nodes), M, 3);
}

inline ModelParams random_params(int K, int M, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  ModelParams p;
  p.lambda.resize(K);
  p.mu.resize(K);
  p.sigma.resize(K);
  for (int k = 0; k < K; ++k) {
    p.lambda(k) = u(rng);
    p.mu(k) = 4.0 * u(rng) - 2.0;
    p.sigma(k) = 0.5 + u(rng);
  }
  p.lambda /= p.lambda.sum();
  p.theta.resize(M, K);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) p.theta(m, k) = u(rng);
    p.theta.col(k) /= p.theta.col(k).sum();
  }
  p.phi.resize(K, K);
  for (int k = 0; k < K; ++k)
    for (int h = k; h < K; ++h) p.phi(k, h) = p.phi(h, k) = 0.05 + 0.4 * u(rng);
  return p;
}

inline Responsibilities random_tau(int n, int K, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd t(n, K);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k) t(i, k) = u(rng);
  return Responsibilities::normalized(t);
}

// Random inclusion weights with R <= SS; S, SS in (0.2, 1].
inline ExpandedProbs random_probs(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  ExpandedProbs p;
  p.S.resize(n);
  p.SS.setZero(n, n);
  p.R.setZero(n, n);
  for (int i = 0; i < n; ++i) p.S(i) = u(rng);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      p.SS(i, j) = p.SS(j, i) = u(rng) * 0.8;
      p.R(i, j) = p.R(j, i) = p.SS(i, j) * frac(rng);
    }
  return p;
}

inline oracle::MixtureInput to_oracle(const RdsSample& s, const ExpandedProbs* probs,
                                      const ModelParams& p,
                                      const Responsibilities& tau, double alpha) {
  oracle::MixtureInput in;
  const int n = s.size(), K = p.K();
  for (int i = 0; i < n; ++i) {
    in.x1.push_back(s.node(i).x1);
    in.x2.push_back(s.node(i).x2);
  }
  in.adj.assign(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) in.adj[i][j] = s.adjacency()(i, j) ? 1 : 0;
  if (probs) {
    in.S.assign(probs->S.data(), probs->S.data() + n);
    in.SS.assign(n, std::vector<double>(n, 0.0));
    in.R.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        in.SS[i][j] = probs->SS(i, j);
        in.R[i][j] = probs->R(i, j);
      }
  }
  for (int k = 0; k < K; ++k) {
    in.lambda.push_back(p.lambda(k));
    in.mu.push_back(p.mu(k));
    in.sigma.push_back(p.sigma(k));
  }
  in.theta.assign(p.M(), std::vector<double>(K));
  for (int m = 0; m < p.M(); ++m)
    for (int k = 0; k < K; ++k) in.theta[m][k] = p.theta(m, k);
  in.phi.assign(K, std::vector<double>(K));
  for (int k = 0; k < K; ++k)
    for (int h = 0; h < K; ++h) in.phi[k][h] = p.phi(k, h);
  in.tau.assign(n, std::vector<double>(K));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k) in.tau[i][k] = tau(i, k);
  in.alpha = alpha;
  return in;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rdsclust_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing
