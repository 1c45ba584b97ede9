#include "rdsclust/probs.hpp"

#include "rdsclust/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rdsclust {

namespace {

constexpr std::uint64_t kNodeStream = 1;
constexpr std::uint64_t kEdgeStream = 2;

// Rounds real class sizes to integers summing to `total`, each at least its
// minimum. Largest remainders receive the leftover units.
std::vector<std::int64_t> integerize(const std::vector<double>& target,
                                     const std::vector<std::int64_t>& minimum,
                                     std::int64_t total) {
  const std::size_t d = target.size();
  std::vector<std::int64_t> out(d);
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = std::max(minimum[k], static_cast<std::int64_t>(std::floor(target[k])));
    sum += out[k];
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  if (sum < total) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return target[a] - static_cast<double>(out[a]) >
             target[b] - static_cast<double>(out[b]);
    });
    for (std::size_t t = 0; sum < total; t = (t + 1) % d) {
      ++out[order[t]];
      ++sum;
    }
  }
  while (sum > total) {
    // Remove from the class furthest above its target that has slack.
    std::size_t best = d;
    double best_excess = -1e300;
    for (std::size_t k = 0; k < d; ++k) {
      if (out[k] <= minimum[k]) continue;
      const double excess = static_cast<double>(out[k]) - target[k];
      if (excess > best_excess) {
        best_excess = excess;
        best = k;
      }
    }
    if (best == d) break;  // minima already exceed total; caller validated
    --out[best];
    --sum;
  }
  return out;
}

// Population composition from inverse-probability-weighted sample counts.
std::vector<std::int64_t> weighted_counts(const std::vector<std::int64_t>& n_k,
                                          const std::vector<double>& s_k,
                                          std::int64_t total) {
  std::vector<double> w(n_k.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = static_cast<double>(n_k[k]) / s_k[k];
    sum += w[k];
  }
  for (double& v : w) v *= static_cast<double>(total) / sum;
  return integerize(w, n_k, total);
}

struct SampleDegrees {
  std::vector<int> degrees;        // ascending distinct values
  std::vector<std::int64_t> n_k;   // sample counts
};

SampleDegrees sample_degrees(const RdsSample& sample) {
  std::map<int, std::int64_t> counts;
  for (const auto& v : sample.nodes()) ++counts[v.degree];
  SampleDegrees out;
  for (auto [k, c] : counts) {
    out.degrees.push_back(k);
    out.n_k.push_back(c);
  }
  return out;
}

}  // namespace

void ProbsConfig::validate(int n) const {
  if (N_assumed < n)
    throw ConfigError("probs: N_assumed (" + std::to_string(N_assumed) +
                      ") is smaller than the sample size (" +
                      std::to_string(n) + ")");
  if (num_sims < 1) throw ConfigError("probs: num_sims must be >= 1");
  if (num_iters < 1) throw ConfigError("probs: num_iters must be >= 1");
  if (edge_sims < 1) throw ConfigError("probs: edge_sims must be >= 1");
  if (known_degree_counts) {
    std::int64_t total = 0;
    for (auto [k, c] : *known_degree_counts) {
      if (k < 1 || c < 1)
        throw ConfigError("probs: known degree counts must be positive");
      total += c;
    }
    if (total < n)
      throw ConfigError("probs: known population smaller than the sample");
  }
}

SsTallies simulate_successive_sampling(const std::vector<int>& degrees,
                                       const std::vector<std::int64_t>& counts,
                                       int n, int num_sims,
                                       std::mt19937_64& rng) {
  const std::size_t d = degrees.size();
  if (counts.size() != d) throw ConfigError("ss: degree/count size mismatch");
  const std::int64_t population =
      std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  if (n > population)
    throw ConfigError("ss: sample size exceeds population size");

  SsTallies t;
  t.degrees = degrees;
  t.counts = counts;
  t.num_sims = num_sims;
  t.sample_size = n;
  t.units.assign(d, 0.0);
  t.joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                  static_cast<Eigen::Index>(d));

  std::vector<std::int64_t> remaining(d);
  std::vector<std::int64_t> drawn(d);
  for (int m = 0; m < num_sims; ++m) {
    std::int64_t mass = 0;
    for (std::size_t k = 0; k < d; ++k) {
      remaining[k] = counts[k];
      drawn[k] = 0;
      mass += counts[k] * degrees[k];
    }
    for (int draw = 0; draw < n; ++draw) {
      // Class k is chosen with probability degree_k * remaining_k / mass.
      std::uniform_int_distribution<std::int64_t> pick(0, mass - 1);
      std::int64_t u = pick(rng);
      std::size_t k = 0;
      for (; k + 1 < d; ++k) {
        const std::int64_t w = remaining[k] * degrees[k];
        if (u < w) break;
        u -= w;
      }
      --remaining[k];
      ++drawn[k];
      mass -= degrees[k];
    }
    for (std::size_t a = 0; a < d; ++a) {
      if (drawn[a] == 0) continue;
      t.units[a] += static_cast<double>(drawn[a]);
      for (std::size_t b = 0; b < d; ++b) {
        const std::int64_t other = drawn[b] - (a == b ? 1 : 0);
        t.joint(a, b) += static_cast<double>(drawn[a] * other);
      }
    }
  }
  return t;
}

NodeProbs estimate_node_probs(const RdsSample& sample, const ProbsConfig& cfg) {
  const int n = sample.size();
  cfg.validate(n);
  std::mt19937_64 rng(derive_seed(cfg.rng_seed, kNodeStream));
  const SampleDegrees sd = sample_degrees(sample);

  auto finish = [&](SsTallies tallies) {
    NodeProbs out;
    for (std::size_t k = 0; k < tallies.degrees.size(); ++k) {
      const double denom =
          static_cast<double>(tallies.num_sims) *
              static_cast<double>(tallies.counts[k]) + 1.0;
      out.S[tallies.degrees[k]] = (tallies.units[k] + 1.0) / denom;
      out.degree_counts[tallies.degrees[k]] = tallies.counts[k];
    }
    out.tallies = std::move(tallies);
    return out;
  };

  if (cfg.known_degree_counts) {
    std::vector<int> degrees;
    std::vector<std::int64_t> counts;
    for (auto [k, c] : *cfg.known_degree_counts) {
      degrees.push_back(k);
      counts.push_back(c);
    }
    for (int k : sd.degrees)
      if (!cfg.known_degree_counts->contains(k))
        throw LookupError(k, "probs: sampled degree " + std::to_string(k) +
                                 " absent from the known degree counts");
    return finish(simulate_successive_sampling(degrees, counts, n,
                                               cfg.num_sims, rng));
  }

  // Initial guess S_k proportional to k; only the ratios matter for the
  // composition estimate.
  std::vector<double> s_k(sd.degrees.size());
  for (std::size_t k = 0; k < s_k.size(); ++k)
    s_k[k] = static_cast<double>(sd.degrees[k]);

  SsTallies tallies;
  for (int iter = 0; iter < cfg.num_iters; ++iter) {
    const auto counts = weighted_counts(sd.n_k, s_k, cfg.N_assumed);
    tallies = simulate_successive_sampling(sd.degrees, counts, n, cfg.num_sims,
                                           rng);
    for (std::size_t k = 0; k < s_k.size(); ++k)
      s_k[k] = (tallies.units[k] + 1.0) /
               (static_cast<double>(cfg.num_sims) *
                    static_cast<double>(counts[k]) + 1.0);
  }
  return finish(std::move(tallies));
}

std::map<DegreePair, double> estimate_pair_probs(const RdsSample& sample,
                                                 const NodeProbs& node_probs,
                                                 const ProbsConfig& cfg) {
  (void)sample;
  const SsTallies& t = node_probs.tallies;
  const double sims = static_cast<double>(t.num_sims);
  std::map<DegreePair, double> out;
  for (std::size_t a = 0; a < t.degrees.size(); ++a) {
    for (std::size_t b = a; b < t.degrees.size(); ++b) {
      const double na = static_cast<double>(t.counts[a]);
      const double nb = static_cast<double>(t.counts[b]);
      double value = 0.0;
      if (cfg.pair_mode == PairMode::Joint) {
        const double pairs = na * (a == b ? nb - 1.0 : nb);
        value = (t.joint(a, b) + 1.0) / (sims * pairs + 1.0);
      } else {
        value = (t.units[a] * t.units[b] + 1.0) / (sims * sims * na * nb + 1.0);
      }
      out[{t.degrees[a], t.degrees[b]}] = std::min(value, 1.0);
    }
  }
  return out;
}

Graph configuration_model(const std::vector<int>& degree_sequence,
                          std::mt19937_64& rng) {
  const int n = static_cast<int>(degree_sequence.size());
  std::vector<int> stubs;
  for (int v = 0; v < n; ++v) stubs.insert(stubs.end(), degree_sequence[v], v);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(stubs.size() / 2);
  for (std::size_t s = 0; s + 1 < stubs.size(); s += 2)
    if (stubs[s] != stubs[s + 1]) edges.emplace_back(stubs[s], stubs[s + 1]);
  return Graph::from_edges(n, edges);
}

EdgeTallies tally_rds_edges(const Graph& graph,
                            const std::vector<int>& node_key,
                            const RdsConfig& design, int sims,
                            std::mt19937_64& rng) {
  // Dense tallies over the distinct keys, converted to maps at the end.
  std::vector<int> keys(node_key);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const auto d = static_cast<std::size_t>(keys.size());
  std::vector<int> key_index(node_key.size());
  for (std::size_t v = 0; v < node_key.size(); ++v)
    key_index[v] = static_cast<int>(
        std::lower_bound(keys.begin(), keys.end(), node_key[v]) - keys.begin());

  std::vector<std::int64_t> observed(d * d, 0);
  std::vector<std::int64_t> population(d * d, 0);
  auto bump = [&](std::vector<std::int64_t>& table, int u, int v) {
    auto a = static_cast<std::size_t>(key_index[u]);
    auto b = static_cast<std::size_t>(key_index[v]);
    if (a > b) std::swap(a, b);
    ++table[a * d + b];
  };

  std::vector<std::pair<int, int>> edges = graph.edges();
  for (int m = 0; m < sims; ++m) {
    for (auto [u, v] : edges) bump(population, u, v);
    const RdsTrace trace = trace_rds(graph, design, rng);
    for (std::size_t i = 0; i < trace.order.size(); ++i)
      if (trace.recruiter[i] != kSeed)
        bump(observed, trace.order[i], trace.order[trace.recruiter[i]]);
  }

  EdgeTallies out;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      out.observed[{keys[a], keys[b]}] = observed[a * d + b];
      out.population[{keys[a], keys[b]}] = population[a * d + b];
    }
  return out;
}

std::map<DegreePair, double> edge_ratio(const EdgeTallies& tallies) {
  std::map<DegreePair, double> out;
  for (auto [key, pop] : tallies.population) {
    auto it = tallies.observed.find(key);
    const std::int64_t obs = it == tallies.observed.end() ? 0 : it->second;
    out[key] = (static_cast<double>(obs) + 1.0) / (static_cast<double>(pop) + 1.0);
  }
  return out;
}

std::map<DegreePair, double> edge_probs_on_population(const Graph& graph,
                                                      const RdsConfig& design,
                                                      int sims,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> key(graph.size());
  for (int v = 0; v < graph.size(); ++v) key[v] = graph.degree(v);
  return edge_ratio(tally_rds_edges(graph, key, design, sims, rng));
}

EdgeProbs estimate_edge_probs(const RdsSample& sample,
                              const NodeProbs& node_probs,
                              const std::map<DegreePair, double>& pair_probs,
                              const ProbsConfig& cfg) {
  cfg.validate(sample.size());
  RdsConfig design = cfg.design;
  if (design.n_target <= 0) design.n_target = sample.size();
  if (design.num_seeds <= 0) design.num_seeds = sample.num_seeds();

  // Nodes of the synthetic populations carry their nominal degree class as
  // key; erased stubs do not move a node to another class.
  std::vector<int> degree_sequence;
  for (auto [k, c] : node_probs.degree_counts)
    degree_sequence.insert(degree_sequence.end(), static_cast<std::size_t>(c), k);
  if (static_cast<std::int64_t>(degree_sequence.size()) < design.n_target)
    throw ConfigError("probs: synthetic population smaller than n_target");

  std::mt19937_64 rng(derive_seed(cfg.rng_seed, kEdgeStream));
  EdgeTallies pooled;
  for (int m = 0; m < cfg.edge_sims; ++m) {
    const Graph g = configuration_model(degree_sequence, rng);
    const EdgeTallies t = tally_rds_edges(g, degree_sequence, design, 1, rng);
    for (auto [key, c] : t.observed) pooled.observed[key] += c;
    for (auto [key, c] : t.population) pooled.population[key] += c;
  }

  EdgeProbs out;
  for (const auto& [key, ss] : pair_probs) {
    auto pit = pooled.population.find(key);
    auto oit = pooled.observed.find(key);
    const std::int64_t pop = pit == pooled.population.end() ? 0 : pit->second;
    const std::int64_t obs = oit == pooled.observed.end() ? 0 : oit->second;
    double r = (static_cast<double>(obs) + 1.0) / (static_cast<double>(pop) + 1.0);
    if (pop == 0) out.no_population_edges.push_back(key);
    if (r > ss) {
      r = ss;
      out.clamped.push_back(key);
    }
    out.R[key] = r;
  }
  return out;
}

ProbsEstimate estimate_inclusion_probs(const RdsSample& sample,
                                       const ProbsConfig& cfg) {
  NodeProbs node = estimate_node_probs(sample, cfg);
  auto pair = estimate_pair_probs(sample, node, cfg);
  EdgeProbs edge = estimate_edge_probs(sample, node, pair, cfg);
  InclusionProbs probs(node.S, pair, edge.R);
  return ProbsEstimate{std::move(probs), std::move(node), std::move(edge)};
}

}  // namespace rdsclust
