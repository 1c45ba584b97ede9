#include "rdsclust/mixfit.hpp"

#include "rdsclust/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>

namespace rdsclust {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2 pi) / 2
constexpr double kDenomFloor = 1e-12;
constexpr double kCollapseWeight = 1e-8;
constexpr double kDecreaseSlack = 1e-6;

struct PairClass {
  bool edge = false;
  double ss = 1.0;
  double r = 1.0;
};

// Everything the EM iterations need from a sample and its probabilities.
// Pairs sharing (tie, SS, R) share a class so per-pair terms are computed
// once per class.
struct Problem {
  int n = 0;
  int M = 0;
  bool weighted = false;
  std::vector<double> x1;
  std::vector<int> x2;
  std::vector<double> node_weight;  // 1 / S_i
  std::vector<double> exponent;     // S_i, the tau-update network exponent
  std::vector<int> pair_class;      // n * n, -1 on the diagonal
  std::vector<PairClass> classes;

  int cls(int i, int j) const {
    return pair_class[static_cast<std::size_t>(i) * n + j];
  }
};

Problem make_problem(const RdsSample& sample, const ExpandedProbs* probs,
                     bool weighted) {
  Problem p;
  p.n = sample.size();
  p.M = sample.num_categories();
  p.weighted = weighted;
  p.x1 = sample.x1();
  p.x2 = sample.x2();
  p.node_weight.assign(p.n, 1.0);
  p.exponent.assign(p.n, 1.0);
  p.pair_class.assign(static_cast<std::size_t>(p.n) * p.n, -1);
  const AdjacencyMatrix& adj = sample.adjacency();

  if (!weighted) {
    p.classes = {PairClass{false, 1.0, 1.0}, PairClass{true, 1.0, 1.0}};
    for (int i = 0; i < p.n; ++i)
      for (int j = 0; j < p.n; ++j)
        if (i != j) p.pair_class[static_cast<std::size_t>(i) * p.n + j] = adj(i, j) ? 1 : 0;
    return p;
  }

  if (probs == nullptr)
    throw ConfigError("weighted mode requires inclusion probabilities");
  if (probs->size() != p.n)
    throw ConfigError("inclusion probabilities do not match the sample size");
  probs->validate();
  for (int i = 0; i < p.n; ++i) {
    p.node_weight[i] = 1.0 / probs->S(i);
    p.exponent[i] = probs->S(i);
  }
  std::map<std::tuple<bool, double, double>, int> index;
  for (int i = 0; i < p.n; ++i)
    for (int j = i + 1; j < p.n; ++j) {
      const auto key = std::make_tuple(adj(i, j), probs->SS(i, j), probs->R(i, j));
      auto [it, inserted] = index.emplace(key, static_cast<int>(p.classes.size()));
      if (inserted)
        p.classes.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
      p.pair_class[static_cast<std::size_t>(i) * p.n + j] = it->second;
      p.pair_class[static_cast<std::size_t>(j) * p.n + i] = it->second;
    }
  return p;
}

// Row-major copy of tau for the pair loops.
std::vector<double> row_major(const Eigen::MatrixXd& tau) {
  const auto n = tau.rows();
  const auto k = tau.cols();
  std::vector<double> out(static_cast<std::size_t>(n * k));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) out[static_cast<std::size_t>(i * k + c)] = tau(i, c);
  return out;
}

// log[lambda_k N(x1_i; mu_k, sigma_k) theta_{x2_i, k}]
Eigen::MatrixXd attribute_terms(const Problem& p, const ModelParams& params) {
  const int K = params.K();
  if (params.M() < p.M)
    throw ConfigError("model has fewer categories than the sample");
  Eigen::MatrixXd out(p.n, K);
  for (int k = 0; k < K; ++k) {
    const double log_lambda = std::log(params.lambda(k));
    const double sigma = params.sigma(k);
    const double log_norm = -std::log(sigma) - kHalfLog2Pi;
    for (int i = 0; i < p.n; ++i) {
      const double z = (p.x1[i] - params.mu(k)) / sigma;
      out(i, k) = log_lambda + log_norm - 0.5 * z * z +
                  std::log(params.theta(p.x2[i], k));
    }
  }
  return out;
}

// Per-class log-likelihood contribution of one pair for each (k, h).
std::vector<double> pair_terms(const Problem& p, const Eigen::MatrixXd& phi) {
  const int K = static_cast<int>(phi.rows());
  std::vector<double> g(p.classes.size() * K * K);
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    const PairClass& pc = p.classes[c];
    for (int k = 0; k < K; ++k)
      for (int h = 0; h < K; ++h) {
        double f = phi(k, h);
        double v = 0.0;
        if (!p.weighted) {
          v = pc.edge ? std::log(f) : std::log1p(-f);
        } else if (pc.edge) {
          v = std::log(f) / pc.r;
        } else {
          if (pc.ss - pc.r * f < kDenomFloor) {
            f = (pc.ss - kDenomFloor) / pc.r;
            if (!(f > 0.0))
              throw NumericalError(
                  "non-tie weight denominator SS - R*phi is not positive for "
                  "SS=" + std::to_string(pc.ss) + ", R=" + std::to_string(pc.r) +
                  " at clusters (" + std::to_string(k + 1) + "," +
                  std::to_string(h + 1) + ")");
          }
          v = (1.0 - f) * std::log1p(-f) / (pc.ss - pc.r * f);
        }
        g[(c * K + k) * K + h] = v;
      }
  }
  return g;
}

double objective(const Problem& p, const ModelParams& params,
                 const Eigen::MatrixXd& tau, double alpha) {
  const int K = params.K();
  const Eigen::MatrixXd attr = attribute_terms(p, params);
  double node_part = 0.0;
  for (int i = 0; i < p.n; ++i) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      const double t = tau(i, k);
      s += t * (attr(i, k) - std::log(t));
    }
    node_part += p.node_weight[i] * s;
  }

  const std::vector<double> g = pair_terms(p, params.phi);
  const std::vector<double> t = row_major(tau);
  double net = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const double* ti = &t[static_cast<std::size_t>(i) * K];
    for (int j = i + 1; j < p.n; ++j) {
      const double* tj = &t[static_cast<std::size_t>(j) * K];
      const double* G = &g[static_cast<std::size_t>(p.cls(i, j)) * K * K];
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        double inner = 0.0;
        for (int h = 0; h < K; ++h) inner += tj[h] * G[k * K + h];
        s += ti[k] * inner;
      }
      net += s;
    }
  }
  return node_part + alpha * net;
}

Eigen::MatrixXd tau_step(const Problem& p, const ModelParams& params,
                         const Eigen::MatrixXd& tau_prev, double alpha,
                         bool sequential) {
  const int K = params.K();
  if (tau_prev.rows() != p.n || tau_prev.cols() != K)
    throw ConfigError("responsibilities do not match sample size and K");
  const Eigen::MatrixXd attr = attribute_terms(p, params);
  const std::vector<double> g = pair_terms(p, params.phi);
  std::vector<double> t = row_major(tau_prev);

  Eigen::MatrixXd out(p.n, K);
  std::vector<double> acc(K);
  for (int i = 0; i < p.n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    if (alpha != 0.0) {
      for (int j = 0; j < p.n; ++j) {
        if (j == i) continue;
        const double* tj = &t[static_cast<std::size_t>(j) * K];
        const double* G = &g[static_cast<std::size_t>(p.cls(i, j)) * K * K];
        for (int k = 0; k < K; ++k) {
          double s = 0.0;
          for (int h = 0; h < K; ++h) s += tj[h] * G[k * K + h];
          acc[k] += s;
        }
      }
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      out(i, k) = attr(i, k) + alpha * p.exponent[i] * acc[k];
      peak = std::max(peak, out(i, k));
    }
    for (int k = 0; k < K; ++k) out(i, k) = std::exp(out(i, k) - peak);
    if (sequential) {
      // Later rows see this row's new value.
      double sum = out.row(i).sum();
      double fsum = 0.0;
      for (int k = 0; k < K; ++k) fsum += std::max(out(i, k) / sum, kTauFloor);
      for (int k = 0; k < K; ++k)
        t[static_cast<std::size_t>(i) * K + k] = std::max(out(i, k) / sum, kTauFloor) / fsum;
    }
  }
  return out;
}

// Pair weights aggregated per class for the symmetric parameter phi_kh:
// sum over i<j of tau_ik tau_jh + tau_ih tau_jk (k != h) or tau_ik tau_jk.
std::vector<double> class_weights(const Problem& p, const Eigen::MatrixXd& tau) {
  const int K = static_cast<int>(tau.cols());
  const std::vector<double> t = row_major(tau);
  std::vector<double> w(p.classes.size() * K * K, 0.0);
  for (int i = 0; i < p.n; ++i) {
    const double* ti = &t[static_cast<std::size_t>(i) * K];
    for (int j = i + 1; j < p.n; ++j) {
      const double* tj = &t[static_cast<std::size_t>(j) * K];
      double* W = &w[static_cast<std::size_t>(p.cls(i, j)) * K * K];
      for (int k = 0; k < K; ++k)
        for (int h = 0; h < K; ++h) W[k * K + h] += ti[k] * tj[h];
    }
  }
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    double* W = &w[c * K * K];
    for (int k = 0; k < K; ++k)
      for (int h = k + 1; h < K; ++h) {
        W[k * K + h] += W[h * K + k];
        W[h * K + k] = W[k * K + h];
      }
  }
  return w;
}

struct WeightedTerm {
  const PairClass* cls;
  double weight;
};

// Derivative of the weighted pair log-likelihood in phi and its slope.
void weighted_derivative(const std::vector<WeightedTerm>& terms, double x,
                         double& f, double& df) {
  f = 0.0;
  df = 0.0;
  for (const auto& t : terms) {
    const PairClass& c = *t.cls;
    if (c.edge) {
      f += t.weight / (c.r * x);
      df -= t.weight / (c.r * x * x);
    } else {
      const double d = c.ss - c.r * x;
      const double num = (c.r - c.ss) * std::log1p(-x) - d;
      const double dnum = (c.ss - c.r) / (1.0 - x) + c.r;
      f += t.weight * num / (d * d);
      df += t.weight * (dnum * d + 2.0 * c.r * num) / (d * d * d);
    }
  }
}

struct RootResult {
  double phi = 0.5;
  bool boundary = false;
  bool bisection = false;
};

// Local maximum of the weighted pair likelihood closest to zero: the first
// + to - sign change of the derivative, refined by Newton steps on
// x * f(x) with bisection whenever a step leaves the bracket.
RootResult solve_weighted_phi(const std::vector<WeightedTerm>& terms,
                              double start, bool has_start,
                              const FitConfig& cfg) {
  double hi = kPhiMax;
  for (const auto& t : terms)
    if (!t.cls->edge && t.cls->r > 0.0)
      hi = std::min(hi, t.cls->ss / t.cls->r - 1e-8);
  const double lo = kPhiMin;
  RootResult res;
  if (!(hi > lo)) {
    res.phi = lo;
    res.boundary = true;
    return res;
  }

  double f = 0.0, df = 0.0;
  weighted_derivative(terms, lo, f, df);
  if (f <= 0.0) {
    res.phi = lo;
    res.boundary = f < 0.0;
    return res;
  }

  // Bracket [a, b] with f(a) > 0 > f(b).
  double a = lo, b = lo;
  bool bracketed = false;
  double probe = lo;
  if (has_start && start > lo && start < hi) {
    weighted_derivative(terms, start, f, df);
    if (f < 0.0) {
      b = start;
      bracketed = true;
    } else if (df < 0.0) {
      a = start;  // still left of the maximum; scan on from here
      probe = start;
    }
  }
  if (!bracketed) {
    // Doubling towards 1/2, then halving the distance to 1.
    double prev = probe;
    for (;;) {
      double next = prev < 0.5 ? std::min(2.0 * prev, 0.5) : 1.0 - 0.5 * (1.0 - prev);
      if (next >= hi) next = hi;
      weighted_derivative(terms, next, f, df);
      if (f < 0.0) {
        a = prev;
        b = next;
        bracketed = true;
        break;
      }
      if (next >= hi) break;
      prev = next;
    }
  }
  if (!bracketed) {
    res.phi = hi;
    res.boundary = true;
    return res;
  }

  double x = (has_start && start > a && start < b) ? start : 0.5 * (a + b);
  const int max_steps = cfg.newton_max + 200;
  for (int step = 0; step < max_steps; ++step) {
    weighted_derivative(terms, x, f, df);
    if (std::abs(f) <= cfg.newton_tol) break;
    if (f > 0.0)
      a = x;
    else
      b = x;
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b) break;
    double next = 0.5 * (a + b);
    if (step < cfg.newton_max) {
      const double g = x * f;
      const double dg = f + x * df;
      const double cand = dg != 0.0 ? x - g / dg : a;
      if (cand > a && cand < b)
        next = cand;
      else
        res.bisection = true;
    } else {
      res.bisection = true;
    }
    if (next == x) break;
    x = next;
  }
  res.phi = x;
  return res;
}

// Root of T/phi - sum_c W_c / (SS_c - R_c phi), solved as the concave,
// decreasing G(phi) = T - phi * sum_c W_c / (SS_c - R_c phi).
RootResult solve_self_consistent_phi(const std::vector<WeightedTerm>& terms,
                                     const FitConfig& cfg) {
  double ties = 0.0;
  double hi = kPhiMax;
  for (const auto& t : terms) {
    if (t.cls->edge)
      ties += t.weight / t.cls->r;
    else if (t.cls->r > 0.0)
      hi = std::min(hi, t.cls->ss / t.cls->r - 1e-8);
  }
  RootResult res;
  const double lo = kPhiMin;
  auto eval = [&](double x, double& g, double& dg) {
    g = ties;
    dg = 0.0;
    for (const auto& t : terms) {
      if (t.cls->edge) continue;
      const double d = t.cls->ss - t.cls->r * x;
      g -= t.weight * x / d;
      dg -= t.weight * t.cls->ss / (d * d);
    }
  };
  double g = 0.0, dg = 0.0;
  eval(lo, g, dg);
  if (g <= 0.0 || !(hi > lo)) {
    res.phi = lo;
    res.boundary = ties > 0.0;
    return res;
  }
  eval(hi, g, dg);
  if (g >= 0.0) {
    res.phi = hi;
    res.boundary = true;
    return res;
  }
  // Newton from the right end converges monotonically for a concave G.
  double a = lo, b = hi, x = hi;
  const int max_steps = cfg.newton_max + 200;
  for (int step = 0; step < max_steps; ++step) {
    eval(x, g, dg);
    if (std::abs(g) <= cfg.newton_tol * std::max(1.0, ties))
      break;
    if (g > 0.0)
      a = x;
    else
      b = x;
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b) break;
    double next = 0.5 * (a + b);
    const double cand = dg != 0.0 ? x - g / dg : a;
    if (step < cfg.newton_max && cand > a && cand < b)
      next = cand;
    else
      res.bisection = true;
    if (next == x) break;
    x = next;
  }
  res.phi = x;
  return res;
}

PhiUpdate phi_step(const Problem& p, const Eigen::MatrixXd& tau,
                   const Eigen::MatrixXd* phi_prev, const FitConfig& cfg) {
  const int K = static_cast<int>(tau.cols());
  const std::vector<double> w = class_weights(p, tau);
  PhiUpdate out;
  out.phi = Eigen::MatrixXd::Constant(K, K, 0.5);
  for (int k = 0; k < K; ++k)
    for (int h = k; h < K; ++h) {
      const bool has_prev = phi_prev != nullptr && phi_prev->rows() == K;
      const double prev = has_prev ? (*phi_prev)(k, h) : 0.5;
      double value = prev;
      if (!p.weighted) {
        double ties = 0.0, pairs = 0.0;
        for (std::size_t c = 0; c < p.classes.size(); ++c) {
          const double wc = w[(c * K + k) * K + h];
          pairs += wc;
          if (p.classes[c].edge) ties += wc;
        }
        if (pairs > 0.0) value = ties / pairs;
      } else {
        std::vector<WeightedTerm> terms;
        for (std::size_t c = 0; c < p.classes.size(); ++c) {
          const double wc = w[(c * K + k) * K + h];
          if (wc > 0.0) terms.push_back({&p.classes[c], wc});
        }
        if (!terms.empty()) {
          const RootResult r =
              cfg.phi_method == PhiMethod::SelfConsistent
                  ? solve_self_consistent_phi(terms, cfg)
                  : solve_weighted_phi(terms, prev, has_prev, cfg);
          value = r.phi;
          out.boundary += r.boundary ? 1 : 0;
          out.bisection += r.bisection ? 1 : 0;
        }
      }
      value = std::clamp(value, kPhiMin, kPhiMax);
      out.phi(k, h) = out.phi(h, k) = value;
    }
  return out;
}

struct MStep {
  ModelParams params;
  PhiUpdate phi;
};

MStep params_step(const Problem& p, const Eigen::MatrixXd& tau,
                  const Eigen::MatrixXd* phi_prev, const FitConfig& cfg) {
  const int K = static_cast<int>(tau.cols());
  MStep out;
  ModelParams& m = out.params;
  m.lambda.resize(K);
  m.mu.resize(K);
  m.sigma.resize(K);
  m.theta = Eigen::MatrixXd::Zero(p.M, K);

  for (int k = 0; k < K; ++k) {
    double total = 0.0, sum_x = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const double w = tau(i, k) * p.node_weight[i];
      total += w;
      sum_x += w * p.x1[i];
    }
    if (total < kCollapseWeight) throw ClusterCollapse(k);
    const double mean = sum_x / total;
    double ss = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const double w = tau(i, k) * p.node_weight[i];
      const double d = p.x1[i] - mean;
      ss += w * d * d;
      m.theta(p.x2[i], k) += w;
    }
    m.lambda(k) = total;
    m.mu(k) = mean;
    m.sigma(k) = std::max(std::sqrt(ss / total), kSigmaFloor);
    m.theta.col(k) /= total;
  }
  m.lambda /= m.lambda.sum();
  out.phi = phi_step(p, tau, phi_prev, cfg);
  m.phi = out.phi.phi;
  return out;
}

std::vector<double> kmeans_features(const RdsSample& sample) {
  const int n = sample.size();
  const int M = sample.num_categories();
  const int dim = 1 + M;
  double mean = 0.0, var = 0.0;
  for (const auto& v : sample.nodes()) mean += v.x1;
  mean /= n;
  for (const auto& v : sample.nodes()) var += (v.x1 - mean) * (v.x1 - mean);
  const double sd = std::sqrt(var / n) > 0.0 ? std::sqrt(var / n) : 1.0;
  std::vector<double> f(static_cast<std::size_t>(n) * dim, 0.0);
  for (int i = 0; i < n; ++i) {
    f[static_cast<std::size_t>(i) * dim] = (sample.node(i).x1 - mean) / sd;
    f[static_cast<std::size_t>(i) * dim + 1 + sample.node(i).x2] = 1.0;
  }
  return f;
}

// Lloyd's algorithm with k-means++ seeding on (standardised x1, one-hot x2).
std::vector<int> kmeans_labels(const RdsSample& sample, int K,
                               std::mt19937_64& rng) {
  const int n = sample.size();
  const int dim = 1 + sample.num_categories();
  const std::vector<double> f = kmeans_features(sample);
  auto dist2 = [&](int i, const double* c) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double e = f[static_cast<std::size_t>(i) * dim + d] - c[d];
      s += e * e;
    }
    return s;
  };

  std::vector<double> centers(static_cast<std::size_t>(K) * dim);
  std::uniform_int_distribution<int> first(0, n - 1);
  const int c0 = first(rng);
  std::copy_n(&f[static_cast<std::size_t>(c0) * dim], dim, centers.begin());
  std::vector<double> d2(n);
  for (int c = 1; c < K; ++c) {
    for (int i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (int e = 0; e < c; ++e)
        d2[i] = std::min(d2[i], dist2(i, &centers[static_cast<std::size_t>(e) * dim]));
    }
    int pick = 0;
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      std::discrete_distribution<int> by_distance(d2.begin(), d2.end());
      pick = by_distance(rng);
    } else {
      pick = first(rng);
    }
    std::copy_n(&f[static_cast<std::size_t>(pick) * dim], dim,
                centers.begin() + static_cast<std::ptrdiff_t>(c) * dim);
  }

  std::vector<int> labels(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist2(i, &centers[0]);
      for (int c = 1; c < K; ++c) {
        const double d = dist2(i, &centers[static_cast<std::size_t>(c) * dim]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[i] != best || iter == 0) changed = changed || labels[i] != best;
      labels[i] = best;
    }
    std::vector<double> sums(centers.size(), 0.0);
    std::vector<int> counts(K, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[labels[i]];
      for (int d = 0; d < dim; ++d)
        sums[static_cast<std::size_t>(labels[i]) * dim + d] +=
            f[static_cast<std::size_t>(i) * dim + d];
    }
    for (int c = 0; c < K; ++c)
      if (counts[c] > 0)
        for (int d = 0; d < dim; ++d)
          centers[static_cast<std::size_t>(c) * dim + d] =
              sums[static_cast<std::size_t>(c) * dim + d] / counts[c];
    if (!changed && iter > 0) break;
  }
  return labels;
}

FitResult run_once(const Problem& p, const FitConfig& cfg,
                   const Eigen::MatrixXd& init) {
  FitResult res;
  MStep m = params_step(p, init, nullptr, cfg);
  res.diagnostics.phi_boundary += m.phi.boundary;
  res.diagnostics.phi_bisection += m.phi.bisection;
  Eigen::MatrixXd tau = init;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    tau = Responsibilities::normalized(tau_step(p, m.params, tau, cfg.alpha,
                                                    cfg.tau_schedule == TauSchedule::Sequential))
              .matrix();
    const Eigen::MatrixXd phi_prev = m.params.phi;
    m = params_step(p, tau, &phi_prev, cfg);
    res.diagnostics.phi_boundary += m.phi.boundary;
    res.diagnostics.phi_bisection += m.phi.bisection;
    const double q = objective(p, m.params, tau, cfg.alpha);
    res.objective_trace.push_back(q);
    res.iterations = iter;
    if (iter > 1) {
      if (q < previous - kDecreaseSlack) ++res.diagnostics.objective_decreases;
      if (std::abs(q - previous) <= cfg.tol * std::abs(previous)) {
        res.converged = true;
        break;
      }
    }
    previous = q;
  }
  res.params = std::move(m.params);
  res.tau = Responsibilities(std::move(tau));
  res.labels = res.tau.hard_labels();
  return res;
}

}  // namespace

std::string to_string(InitMethod m) {
  switch (m) {
    case InitMethod::KmeansAttributes: return "kmeans-attributes";
    case InitMethod::AttributeFit: return "attribute-fit";
    default: return "random-responsibilities";
  }
}

InitMethod parse_init_method(const std::string& name) {
  if (name == "random-responsibilities" || name == "random")
    return InitMethod::RandomResponsibilities;
  if (name == "kmeans-attributes" || name == "kmeans")
    return InitMethod::KmeansAttributes;
  if (name == "attribute-fit") return InitMethod::AttributeFit;
  throw ConfigError("unknown init method '" + name + "'");
}

std::string to_string(TauSchedule s) {
  return s == TauSchedule::Sequential ? "sequential" : "synchronous";
}

TauSchedule parse_tau_schedule(const std::string& name) {
  if (name == "synchronous") return TauSchedule::Synchronous;
  if (name == "sequential") return TauSchedule::Sequential;
  throw ConfigError("unknown tau schedule '" + name + "'");
}

std::string to_string(PhiMethod m) {
  return m == PhiMethod::ObjectiveRoot ? "objective-root" : "self-consistent";
}

PhiMethod parse_phi_method(const std::string& name) {
  if (name == "self-consistent") return PhiMethod::SelfConsistent;
  if (name == "objective-root") return PhiMethod::ObjectiveRoot;
  throw ConfigError("unknown phi method '" + name + "'");
}

void FitConfig::validate() const {
  if (K < 1) throw ConfigError("fit: K must be >= 1");
  if (!(alpha >= 0.0)) throw ConfigError("fit: alpha must be >= 0");
  if (max_iter < 1) throw ConfigError("fit: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("fit: tol must be >= 0");
  if (restarts < 1) throw ConfigError("fit: restarts must be >= 1");
  if (newton_max < 1) throw ConfigError("fit: newton_max must be >= 1");
}

double objective_unweighted(const RdsSample& sample, const ModelParams& params,
                            const Responsibilities& tau, double alpha) {
  const Problem p = make_problem(sample, nullptr, false);
  return objective(p, params, tau.matrix(), alpha);
}

double objective_weighted(const RdsSample& sample, const ExpandedProbs& probs,
                          const ModelParams& params,
                          const Responsibilities& tau, double alpha) {
  const Problem p = make_problem(sample, &probs, true);
  return objective(p, params, tau.matrix(), alpha);
}

Responsibilities update_tau(const RdsSample& sample, const ExpandedProbs* probs,
                            const ModelParams& params,
                            const Responsibilities& tau_prev,
                            const FitConfig& cfg) {
  const Problem p = make_problem(sample, probs, cfg.weighted);
  return Responsibilities::normalized(
      tau_step(p, params, tau_prev.matrix(), cfg.alpha,
               cfg.tau_schedule == TauSchedule::Sequential));
}

ModelParams update_params(const RdsSample& sample, const ExpandedProbs* probs,
                          const Responsibilities& tau, const FitConfig& cfg,
                          const Eigen::MatrixXd* phi_prev) {
  const Problem p = make_problem(sample, probs, cfg.weighted);
  return params_step(p, tau.matrix(), phi_prev, cfg).params;
}

PhiUpdate update_phi(const RdsSample& sample, const ExpandedProbs* probs,
                     const Responsibilities& tau,
                     const Eigen::MatrixXd& phi_prev, const FitConfig& cfg) {
  const Problem p = make_problem(sample, probs, cfg.weighted);
  return phi_step(p, tau.matrix(), &phi_prev, cfg);
}

double phi_derivative(const RdsSample& sample, const ExpandedProbs& probs,
                      const Responsibilities& tau, const Eigen::MatrixXd& phi,
                      int k, int h, double alpha) {
  const Problem p = make_problem(sample, &probs, true);
  const int K = tau.K();
  const std::vector<double> w = class_weights(p, tau.matrix());
  std::vector<WeightedTerm> terms;
  for (std::size_t c = 0; c < p.classes.size(); ++c)
    terms.push_back({&p.classes[c], w[(c * K + k) * K + h]});
  double f = 0.0, df = 0.0;
  weighted_derivative(terms, phi(k, h), f, df);
  return alpha * f;
}

Responsibilities initial_responsibilities(const RdsSample& sample,
                                          const FitConfig& cfg, int restart) {
  cfg.validate();
  const int n = sample.size();
  std::mt19937_64 rng(derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(restart)));
  Eigen::MatrixXd tau(n, cfg.K);
  if (cfg.init == InitMethod::AttributeFit)
    throw ConfigError("attribute-fit initialisation is only available through fit()");
  if (cfg.init == InitMethod::RandomResponsibilities) {
    // Rows uniform on the simplex.
    std::exponential_distribution<double> expo(1.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < cfg.K; ++k) tau(i, k) = expo(rng);
  } else {
    const std::vector<int> labels = kmeans_labels(sample, cfg.K, rng);
    tau.setZero();
    for (int i = 0; i < n; ++i) tau(i, labels[i]) = 1.0;
  }
  return Responsibilities::normalized(std::move(tau));
}

FitResult fit_from(const RdsSample& sample, const ExpandedProbs* probs,
                   const FitConfig& cfg, const Responsibilities& init) {
  cfg.validate();
  if (init.K() != cfg.K || init.n() != sample.size())
    throw ConfigError("initial responsibilities do not match sample and K");
  const Problem p = make_problem(sample, probs, cfg.weighted);
  return run_once(p, cfg, init.matrix());
}

FitResult fit(const RdsSample& sample, const ExpandedProbs* probs,
              const FitConfig& cfg) {
  cfg.validate();
  const Problem p = make_problem(sample, probs, cfg.weighted);
  if (cfg.init == InitMethod::AttributeFit) {
    FitConfig base = cfg;
    base.alpha = 0.0;
    base.init = InitMethod::RandomResponsibilities;
    FitResult start = fit(sample, probs, base);
    if (cfg.alpha == 0.0) return start;
    FitResult res = run_once(p, cfg, start.tau.matrix());
    res.restart_index = start.restart_index;
    res.diagnostics.collapsed_restarts = start.diagnostics.collapsed_restarts;
    return res;
  }
  std::optional<FitResult> best;
  int collapsed = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    const Responsibilities init = initial_responsibilities(sample, cfg, r);
    try {
      FitResult res = run_once(p, cfg, init.matrix());
      res.restart_index = r;
      if (!best || res.objective_trace.back() > best->objective_trace.back())
        best = std::move(res);
    } catch (const ClusterCollapse&) {
      ++collapsed;
    }
  }
  if (!best)
    throw Error("all " + std::to_string(cfg.restarts) +
                " restarts collapsed a cluster; try a smaller K");
  best->diagnostics.collapsed_restarts = collapsed;
  return std::move(*best);
}

}  // namespace rdsclust
