#include "rdsclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace rdsclust {

namespace {

std::vector<int> compact(const std::vector<int>& labels, int& count) {
  std::map<int, int> index;
  for (int v : labels) index.emplace(v, 0);
  count = 0;
  for (auto& [v, idx] : index) idx = count++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = index[labels[i]];
  return out;
}

template <class WeightFn>
std::optional<double> modularity_impl(const std::vector<std::pair<int, int>>& edges,
                                      const std::vector<int>& labels,
                                      WeightFn weight) {
  if (edges.empty()) return std::nullopt;
  int K = 0;
  const std::vector<int> c = compact(labels, K);
  std::vector<double> e(static_cast<std::size_t>(K) * K, 0.0);
  double total = 0.0;
  for (const auto& [i, j] : edges) {
    const double w = weight(i, j);
    e[static_cast<std::size_t>(c[i]) * K + c[j]] += w;
    e[static_cast<std::size_t>(c[j]) * K + c[i]] += w;
    total += 2.0 * w;
  }
  double q = 0.0;
  for (int k = 0; k < K; ++k) {
    double a = 0.0;
    for (int l = 0; l < K; ++l) a += e[static_cast<std::size_t>(k) * K + l];
    a /= total;
    q += e[static_cast<std::size_t>(k) * K + k] / total - a * a;
  }
  return q;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace

std::optional<double> modularity(const AdjacencyMatrix& adj,
                                 const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != adj.size())
    throw ConfigError("modularity: labels do not match the graph size");
  return modularity_impl(adj.edges(), labels, [](int, int) { return 1.0; });
}

std::optional<double> weighted_modularity(const RdsSample& sample,
                                          const ExpandedProbs& probs,
                                          const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != sample.size() ||
      probs.size() != sample.size())
    throw ConfigError("weighted_modularity: sizes do not match the sample");
  return modularity_impl(sample.adjacency().edges(), labels,
                         [&](int i, int j) { return 1.0 / probs.R(i, j); });
}

double weighted_nmi(const std::vector<int>& feature,
                    const std::vector<int>& labels,
                    const std::vector<double>& weights) {
  if (feature.size() != labels.size() || weights.size() != labels.size())
    throw ConfigError("nmi: feature, labels and weights differ in length");
  int nx = 0, nc = 0;
  const std::vector<int> x = compact(feature, nx);
  const std::vector<int> c = compact(labels, nc);
  std::vector<double> px(nx, 0.0), pc(nc, 0.0),
      pxc(static_cast<std::size_t>(nx) * nc, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += weights[i];
    pc[c[i]] += weights[i];
    pxc[static_cast<std::size_t>(x[i]) * nc + c[i]] += weights[i];
    total += weights[i];
  }
  if (!(total > 0.0)) return 0.0;
  for (auto* v : {&px, &pc, &pxc})
    for (double& p : *v) p /= total;
  const double hx = entropy(px);
  const double hc = entropy(pc);
  if (hx <= 0.0 || hc <= 0.0) return 0.0;
  const double mi = hx + hc - entropy(pxc);
  return std::clamp(mi / std::sqrt(hx * hc), 0.0, 1.0);
}

double nmi(const std::vector<int>& feature, const std::vector<int>& labels) {
  return weighted_nmi(feature, labels, std::vector<double>(labels.size(), 1.0));
}

Binning weighted_quantile_bins(const std::vector<double>& values,
                               const std::vector<double>& weights, int bins) {
  if (bins < 1) throw ConfigError("bins must be >= 1");
  if (values.size() != weights.size())
    throw ConfigError("values and weights differ in length");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  std::vector<double> cuts;
  double cum = 0.0;
  int next = 1;
  for (std::size_t r = 0; r < n && next < bins; ++r) {
    cum += weights[order[r]];
    while (next < bins && cum >= total * next / bins) {
      cuts.push_back(values[order[r]]);
      ++next;
    }
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Binning out;
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i)
    raw[i] = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), values[i]) -
                              cuts.begin());
  out.codes = compact(raw, out.bins);
  return out;
}

FeatureNmi weighted_feature_nmi(const RdsSample& sample,
                                const ExpandedProbs& probs,
                                const std::vector<int>& labels, int bins) {
  if (probs.size() != sample.size())
    throw ConfigError("probabilities do not match the sample size");
  std::vector<double> w(sample.size());
  for (int i = 0; i < sample.size(); ++i) w[i] = 1.0 / probs.S(i);
  const Binning b = weighted_quantile_bins(sample.x1(), w, bins);
  FeatureNmi out;
  out.x1 = weighted_nmi(b.codes, labels, w);
  out.x2 = weighted_nmi(sample.x2(), labels, w);
  out.x1_bins = b.bins;
  out.average = 0.5 * (out.x1 + out.x2);
  return out;
}

std::vector<int> best_label_matching(const std::vector<int>& truth,
                                     const std::vector<int>& labels, int K) {
  if (truth.size() != labels.size())
    throw ConfigError("label vectors differ in length");
  if (K < 1 || K > 9) throw ConfigError("label matching needs K in [1, 9]");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(K) * K, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= K || labels[i] < 0 || labels[i] >= K)
      throw ConfigError("label out of range [0, K)");
    ++counts[static_cast<std::size_t>(truth[i]) * K + labels[i]];
  }
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  std::int64_t best_agree = -1;
  do {
    std::int64_t agree = 0;
    for (int k = 0; k < K; ++k) agree += counts[static_cast<std::size_t>(k) * K + perm[k]];
    if (agree > best_agree) {
      best_agree = agree;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

int misclustering(const std::vector<int>& truth, const std::vector<int>& labels,
                  int K) {
  const std::vector<int> match = best_label_matching(truth, labels, K);
  int wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (labels[i] != match[truth[i]]) ++wrong;
  return wrong;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("spearman: lengths differ");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t s = 0; s < order.size();) {
      std::size_t e = s;
      while (e + 1 < order.size() && v[order[e + 1]] == v[order[s]]) ++e;
      for (std::size_t t = s; t <= e; ++t) r[order[t]] = 0.5 * (s + e) + 1.0;
      s = e + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> grid{0.0, 0.025, 0.05, 0.075, 0.1,
                                        0.2, 0.4,   0.7,  1.0};
  return grid;
}

SweepReport alpha_sweep(const RdsSample& sample, const ExpandedProbs& probs,
                        const FitConfig& cfg, const std::vector<double>& grid,
                        int bins) {
  if (grid.empty()) throw ConfigError("alpha grid is empty");
  SweepReport rep;
  for (double alpha : grid) {
    rep.alphas.push_back(alpha);
    FitConfig c = cfg;
    c.alpha = alpha;
    try {
      const FitResult res = fit(sample, &probs, c);
      const FeatureNmi f = weighted_feature_nmi(sample, probs, res.labels, bins);
      rep.modularity.push_back(weighted_modularity(sample, probs, res.labels));
      rep.nmi.push_back(f.average);
      rep.nmi_x1.push_back(f.x1);
      rep.nmi_x2.push_back(f.x2);
      rep.errors.emplace_back();
    } catch (const Error& e) {
      rep.modularity.emplace_back();
      rep.nmi.emplace_back();
      rep.nmi_x1.emplace_back();
      rep.nmi_x2.emplace_back();
      rep.errors.emplace_back(e.what());
    }
  }
  rep.suggestion = suggest_alpha(rep);
  return rep;
}

std::optional<double> suggest_alpha(const SweepReport& report) {
  std::optional<double> best_alpha;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < report.alphas.size(); ++i) {
    if (!report.modularity[i] || !report.nmi[i]) continue;
    const double score = *report.modularity[i] + *report.nmi[i];
    if (score > best || (score == best && report.alphas[i] < *best_alpha)) {
      best = score;
      best_alpha = report.alphas[i];
    }
  }
  return best_alpha;
}

}  // namespace rdsclust
