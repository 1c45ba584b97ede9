#pragma once
// Brute-force reference implementations for the test suite.
//
// Nothing here includes or links production code: inputs are plain vectors so
// that a bug in the library cannot leak into its own reference values. Size
// guards throw rather than fall back to sampling.

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;
using IntMatrix = std::vector<std::vector<int>>;

class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// P(unit i is among the first n draws) when units are drawn without
// replacement with probability proportional to degree. At most 8 units.
std::vector<double> enumerate_ss_inclusion(const std::vector<int>& degrees, int n);

// Same, averaged over the units sharing each degree value.
std::map<int, double> ss_inclusion_by_degree(const std::vector<int>& degrees, int n);

// P(both i and j among the first n draws), 8 units at most.
Matrix enumerate_ss_pair_inclusion(const std::vector<int>& degrees, int n);

struct MixtureInput {
  std::vector<double> x1;
  std::vector<int> x2;  // 0-based categories
  IntMatrix adj;        // observed ties, symmetric
  // Inclusion weights; empty for the unweighted objective.
  std::vector<double> S;
  Matrix SS, R;

  std::vector<double> lambda, mu, sigma;
  Matrix theta;  // theta[m][k]
  Matrix phi;    // phi[k][h]
  Matrix tau;    // tau[i][k]
  double alpha = 1.0;

  bool weighted() const { return !S.empty(); }
};

// Term-by-term evaluation of the variational objective with explicit loops
// over ordered pairs i != j (halved). n <= 50.
double naive_objective(const MixtureInput& in);

// One mean-field update of tau from in.tau: for every i and k,
//   log tau_ik = log lambda_k + log N(x1_i) + log theta_{x2_i,k}
//              + alpha * e_i * sum_{j != i} sum_h tau_jh * b_ij(k,h)
// with e_i = S_i and weighted tie/non-tie factors when weighted, e_i = 1 and
// Bernoulli log-probabilities otherwise. Rows are normalised, floored at
// `floor` and normalised again.
Matrix naive_tau_update(const MixtureInput& in, double floor = 1e-10);

struct RdsDesign {
  int num_seeds = 1;
  int n_target = 0;
  std::vector<double> recruit_dist;  // P(0..max recruits)
  bool reseed = true;
};

// Exact P(edge {u, v} becomes a recruitment edge) for every population edge,
// enumerating seed draws (uniform over unsampled nodes with degree >= 1),
// recruit counts and ordered recruit choices. At most 6 nodes. Keys have
// u < v.
std::map<std::pair<int, int>, double> exact_rds_edge_probs(const IntMatrix& adj,
                                                           const RdsDesign& design);

}  // namespace oracle
