#include "rdsclust/rds.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace rdsclust {

std::string to_string(SeedRule r) {
  return r == SeedRule::Uniform ? "uniform" : "degree";
}

SeedRule parse_seed_rule(const std::string& name) {
  if (name == "uniform") return SeedRule::Uniform;
  if (name == "degree") return SeedRule::DegreeProportional;
  throw ConfigError("unknown seed rule '" + name + "'");
}

void RdsConfig::validate() const {
  if (num_seeds < 1) throw ConfigError("rds: num_seeds must be positive");
  if (n_target < 1) throw ConfigError("rds: n_target must be positive");
  if (num_seeds > n_target)
    throw ConfigError("rds: num_seeds exceeds n_target");
  if (max_coupons < 1) throw ConfigError("rds: max_coupons must be positive");
  if (recruit_dist.empty() ||
      static_cast<int>(recruit_dist.size()) > max_coupons + 1)
    throw ConfigError("rds: recruit_dist support must lie in 0..max_coupons");
  double total = 0.0;
  for (double p : recruit_dist) {
    if (!(p >= 0.0)) throw ConfigError("rds: recruit_dist has negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("rds: recruit_dist must sum to 1");
}

RdsTrace trace_rds(const Graph& graph, const RdsConfig& cfg,
                   std::mt19937_64& rng) {
  cfg.validate();
  const int n_pop = graph.size();
  if (cfg.num_seeds > n_pop)
    throw ConfigError("rds: num_seeds exceeds population size");
  if (cfg.n_target > n_pop)
    throw ConfigError("rds: n_target exceeds population size");

  std::vector<int> eligible;  // unsampled, degree >= 1
  for (int v = 0; v < n_pop; ++v)
    if (graph.degree(v) >= 1) eligible.push_back(v);
  if (static_cast<int>(eligible.size()) < cfg.num_seeds)
    throw ConfigError("rds: fewer nodes with degree >= 1 than seeds");

  std::vector<char> sampled(n_pop, 0);
  std::discrete_distribution<int> recruits(cfg.recruit_dist.begin(),
                                           cfg.recruit_dist.end());
  RdsTrace out;
  std::deque<int> frontier;  // sample indices

  auto add = [&](int v, int recruiter, int wave) {
    sampled[v] = 1;
    out.order.push_back(v);
    out.recruiter.push_back(recruiter);
    out.wave.push_back(wave);
    frontier.push_back(static_cast<int>(out.order.size()) - 1);
  };
  auto draw_seed = [&]() -> int {
    std::erase_if(eligible, [&](int v) { return sampled[v] != 0; });
    if (eligible.empty()) return -1;
    if (cfg.seed_rule == SeedRule::DegreeProportional) {
      std::vector<double> w(eligible.size());
      for (std::size_t i = 0; i < eligible.size(); ++i)
        w[i] = graph.degree(eligible[i]);
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      return eligible[pick(rng)];
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    return eligible[pick(rng)];
  };

  for (int s = 0; s < cfg.num_seeds; ++s) add(draw_seed(), kSeed, 0);

  std::vector<int> candidates;
  while (static_cast<int>(out.order.size()) < cfg.n_target) {
    if (frontier.empty()) {
      const int v = cfg.reseed ? draw_seed() : -1;
      if (v < 0) {
        out.partial = true;
        break;
      }
      ++out.reseeds;
      add(v, kSeed, 0);
      continue;
    }
    const int idx = frontier.front();
    frontier.pop_front();
    const int u = out.order[idx];
    const int wanted = recruits(rng);

    candidates.clear();
    for (int w : graph.neighbors(u))
      if (!sampled[w]) candidates.push_back(w);
    const int room = cfg.n_target - static_cast<int>(out.order.size());
    const int take =
        std::min({wanted, static_cast<int>(candidates.size()), room});
    // Ordered uniform choice without replacement (partial Fisher-Yates).
    for (int t = 0; t < take; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, candidates.size() - 1);
      std::swap(candidates[t], candidates[pick(rng)]);
      add(candidates[t], idx, out.wave[idx] + 1);
    }
  }
  return out;
}

RdsSample rds_sample(const Population& pop, const RdsConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  const RdsTrace trace = trace_rds(pop.graph(), cfg, rng);
  std::vector<RdsSample::Node> nodes;
  nodes.reserve(trace.order.size());
  for (std::size_t i = 0; i < trace.order.size(); ++i) {
    const int v = trace.order[i];
    nodes.push_back({v, trace.recruiter[i], trace.wave[i],
                     pop.graph().degree(v), pop.x1()[v], pop.x2()[v]});
  }
  return RdsSample(std::move(nodes), pop.num_categories(), cfg.max_coupons,
                   trace.reseeds, trace.partial);
}

}  // namespace rdsclust
