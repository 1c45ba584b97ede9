#include <doctest.h>

#include "helpers.hpp"
#include "rdsclust/metrics.hpp"

#include <cmath>
#include <random>

using namespace rdsclust;

namespace {

AdjacencyMatrix two_cliques(int m) {
  AdjacencyMatrix a(2 * m);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) a.set_edge(c * m + i, c * m + j);
  return a;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("modularity of disjoint cliques is one half") {
  const AdjacencyMatrix a = two_cliques(5);
  std::vector<int> z(10);
  for (int i = 0; i < 10; ++i) z[i] = i / 5;
  CHECK(*modularity(a, z) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(*modularity(a, std::vector<int>(10, 0)) == doctest::Approx(0.0));
  CHECK_FALSE(modularity(AdjacencyMatrix(4), {0, 1, 0, 1}).has_value());
}

TEST_CASE("random labels on a random graph score near zero") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution edge(0.05), coin(0.5);
  AdjacencyMatrix a(400);
  for (int i = 0; i < 400; ++i)
    for (int j = i + 1; j < 400; ++j)
      if (edge(rng)) a.set_edge(i, j);
  std::vector<int> z(400);
  for (int& v : z) v = coin(rng);
  CHECK(std::abs(*modularity(a, z)) < 0.05);
}

TEST_CASE("weighted modularity") {
  std::mt19937_64 rng(2);
  const RdsSample s = testing::random_sample(25, rng, 3, 2);
  std::vector<int> z(25);
  for (int i = 0; i < 25; ++i) z[i] = (i * 7) % 3;
  ExpandedProbs w = ExpandedProbs::unit(25);
  const double plain = *modularity(s.adjacency(), z);
  CHECK(*weighted_modularity(s, w, z) == doctest::Approx(plain).epsilon(1e-12));
  // a common factor on R cancels
  w.R *= 0.5;
  CHECK(*weighted_modularity(s, w, z) == doctest::Approx(plain).epsilon(1e-12));
  // downweighting one tie moves the value
  w = ExpandedProbs::unit(25);
  const auto [i, j] = s.adjacency().edges().front();
  w.R(i, j) = w.R(j, i) = 0.1;
  CHECK(*weighted_modularity(s, w, z) != doctest::Approx(plain));
}

TEST_CASE("nmi bounds") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  CHECK(nmi(a, {2, 2, 0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(nmi(a, std::vector<int>(6, 0)) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 2);
  std::vector<int> x(20000), y(20000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
  }
  CHECK(nmi(x, y) < 0.002);
}

TEST_CASE("weighted nmi") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<int> x(60), y(60);
  for (int i = 0; i < 60; ++i) {
    x[i] = u(rng);
    y[i] = (x[i] + (i % 5 == 0)) % 2;
  }
  CHECK(std::abs(weighted_nmi(x, y, std::vector<double>(60, 1.0)) - nmi(x, y)) < 1e-12);
  CHECK(std::abs(weighted_nmi(x, y, std::vector<double>(60, 3.5)) - nmi(x, y)) < 1e-12);

  // weights act as replication counts
  const std::vector<int> fx{0, 0, 1, 1}, fy{0, 1, 1, 1};
  const std::vector<int> rx{0, 0, 0, 1, 1}, ry{0, 0, 1, 1, 1};
  CHECK(weighted_nmi(fx, fy, {2.0, 1.0, 1.0, 1.0}) == doctest::Approx(nmi(rx, ry)).epsilon(1e-12));
}

TEST_CASE("weighted quantile bins") {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(i);
  const Binning b = weighted_quantile_bins(v, std::vector<double>(100, 1.0), 4);
  CHECK(b.bins == 4);
  std::vector<int> count(4, 0);
  for (int c : b.codes) ++count[c];
  for (int c : count) CHECK(c == 25);
  for (int i = 1; i < 100; ++i) CHECK(b.codes[i] >= b.codes[i - 1]);

  const Binning tied = weighted_quantile_bins({1, 1, 1, 1, 1, 2}, std::vector<double>(6, 1.0), 4);
  CHECK(tied.bins <= 2);
  CHECK(tied.codes[0] == tied.codes[4]);
}

TEST_CASE("label matching and misclustering") {
  const std::vector<int> truth{0, 0, 0, 1, 1, 2};
  const std::vector<int> fitted{2, 2, 0, 1, 1, 0};
  const std::vector<int> match = best_label_matching(truth, fitted, 3);
  CHECK(match[0] == 2);
  CHECK(match[1] == 1);
  CHECK(match[2] == 0);
  CHECK(misclustering(truth, fitted, 3) == 1);
  CHECK(misclustering(truth, {1, 1, 1, 0, 0, 2}, 3) == 0);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // ties get average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3)
  CHECK(spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(std::sqrt(0.75)));
  CHECK(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
}

TEST_CASE("alpha sweep") {
  std::mt19937_64 rng(5);
  const RdsSample s = testing::random_sample(30, rng, 3, 2);
  const ExpandedProbs w = testing::random_probs(30, rng);
  FitConfig c;
  c.weighted = true;
  c.restarts = 2;
  c.rng_seed = 3;
  const SweepReport one = alpha_sweep(s, w, c, {0.0});
  CHECK(one.alphas.size() == 1);
  CHECK(one.errors.size() == 1);

  const SweepReport dup = alpha_sweep(s, w, c, {0.5, 0.5});
  REQUIRE(dup.modularity.size() == 2);
  CHECK(dup.modularity[0] == dup.modularity[1]);
  CHECK(dup.nmi[0] == dup.nmi[1]);

  SweepReport r;
  r.alphas = {0.0, 0.5, 1.0};
  r.modularity = {0.1, 0.4, 0.4};
  r.nmi = {0.5, 0.3, 0.3};
  CHECK(suggest_alpha(r) == 0.5);
  r.modularity = {std::nullopt, std::nullopt, std::nullopt};
  CHECK_FALSE(suggest_alpha(r).has_value());
  CHECK(default_alpha_grid().front() == 0.0);
}

}  // TEST_SUITE
