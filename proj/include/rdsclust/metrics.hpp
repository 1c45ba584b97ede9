#pragma once
// Clustering quality: modularity and normalized mutual information, plain and
// estimated for the population through inclusion-probability weights.

#include "rdsclust/mixfit.hpp"
#include "rdsclust/netcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rdsclust {

// Q = sum_k e_kk - a_k^2 over edge ends. nullopt when there are no edges.
std::optional<double> modularity(const AdjacencyMatrix& adj,
                                 const std::vector<int>& labels);

// Same with each observed tie counted 1/R_ij times.
std::optional<double> weighted_modularity(const RdsSample& sample,
                                          const ExpandedProbs& probs,
                                          const std::vector<int>& labels);

// I(X, C) / sqrt(H(X) H(C)), natural logs; 0 when either entropy is 0.
double nmi(const std::vector<int>& feature, const std::vector<int>& labels);

// NMI from weighted plug-in probabilities p(x) = sum_i w_i [x_i = x] / sum w.
double weighted_nmi(const std::vector<int>& feature,
                    const std::vector<int>& labels,
                    const std::vector<double>& weights);

struct Binning {
  std::vector<int> codes;  // 0-based, consecutive
  int bins = 0;            // effective count after merging empty bins
};

// Equal-weight bins from weighted quantiles. Tied values always share a bin,
// so heavy ties yield fewer bins than requested.
Binning weighted_quantile_bins(const std::vector<double>& values,
                               const std::vector<double>& weights, int bins);

struct FeatureNmi {
  double average = 0.0;
  double x1 = 0.0;  // continuous feature after binning
  double x2 = 0.0;  // categorical feature
  int x1_bins = 0;
};

// Bins x1, computes weighted NMI per feature with weights 1/S_i, averages.
FeatureNmi weighted_feature_nmi(const RdsSample& sample,
                                const ExpandedProbs& probs,
                                const std::vector<int>& labels, int bins = 4);

// Matching of cluster labels maximising agreement with truth: match[k] is the
// fitted label paired with true label k. Exhaustive over permutations, so
// K <= 9. Lowest permutation in lexicographic order wins ties.
std::vector<int> best_label_matching(const std::vector<int>& truth,
                                     const std::vector<int>& labels, int K);

// Mislabelled nodes under the best matching of cluster labels (exhaustive
// over permutations). Labels are 0-based in [0, K).
int misclustering(const std::vector<int>& truth, const std::vector<int>& labels,
                  int K);

// Spearman rank correlation with average ranks for ties. NaN if either input
// is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

const std::vector<double>& default_alpha_grid();

struct SweepReport {
  std::vector<double> alphas;
  // Empty entries mark fits that failed or samples without ties.
  std::vector<std::optional<double>> modularity;
  std::vector<std::optional<double>> nmi;
  std::vector<std::optional<double>> nmi_x1;
  std::vector<std::optional<double>> nmi_x2;
  std::vector<std::string> errors;  // per alpha, empty on success
  // Advisory only: alpha maximising modularity + NMI, smallest alpha on ties.
  std::optional<double> suggestion;
};

// Fits once per alpha with cfg's seed and restarts, then evaluates weighted
// modularity and weighted NMI of each fit.
SweepReport alpha_sweep(const RdsSample& sample, const ExpandedProbs& probs,
                        const FitConfig& cfg, const std::vector<double>& grid,
                        int bins = 4);

std::optional<double> suggest_alpha(const SweepReport& report);

}  // namespace rdsclust
