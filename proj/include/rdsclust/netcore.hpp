#pragma once
// Shared data model: full populations, RDS samples, inclusion probabilities
// and mixture-model parameters.
//
// Index conventions: node ids, cluster labels and categories are 0-based in
// memory. The file formats in io.hpp shift clusters and categories to 1-based.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdsclust {

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr double kTauFloor = 1e-10;
inline constexpr double kPhiMin = 1e-8;
inline constexpr double kPhiMax = 1.0 - 1e-8;

// Recruiter entry for seeds.
inline constexpr int kSeed = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A degree (or degree pair) missing from an inclusion-probability table.
class LookupError : public Error {
 public:
  LookupError(int degree, const std::string& what)
      : Error(what), degree_(degree) {}
  int degree() const noexcept { return degree_; }

 private:
  int degree_;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, int line, int column, const std::string& msg);
  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string file_;
  int line_;
  int column_;
};

using DegreePair = std::pair<int, int>;

// Canonical (min, max) ordering for symmetric degree-pair keys.
inline DegreePair degree_pair(int k, int h) {
  return k <= h ? DegreePair{k, h} : DegreePair{h, k};
}

// Dense symmetric 0/1 relation with zero diagonal.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(int n);

  int size() const noexcept { return n_; }
  bool operator()(int i, int j) const {
    return bits_[static_cast<std::size_t>(i) * n_ + j] != 0;
  }
  void set_edge(int i, int j, bool value = true);
  int degree(int i) const;
  std::int64_t edge_count() const;
  // Each undirected edge once, as (i, j) with i < j.
  std::vector<std::pair<int, int>> edges() const;

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Undirected simple graph as sorted adjacency lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n) : adj_(n) {}
  // Rejects self loops and out-of-range endpoints; duplicate edges collapse.
  static Graph from_edges(int n, std::span<const std::pair<int, int>> edges);

  int size() const noexcept { return static_cast<int>(adj_.size()); }
  int degree(int i) const { return static_cast<int>(adj_[i].size()); }
  std::span<const int> neighbors(int i) const { return adj_[i]; }
  bool has_edge(int i, int j) const;
  std::int64_t edge_count() const;
  std::vector<std::pair<int, int>> edges() const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::vector<int>> adj_;
};

// Full attributed network.
class Population {
 public:
  Population(Graph graph, std::vector<double> x1, std::vector<int> x2,
             int num_categories,
             std::optional<std::vector<int>> true_labels = std::nullopt);

  int size() const noexcept { return graph_.size(); }
  const Graph& graph() const noexcept { return graph_; }
  const std::vector<double>& x1() const noexcept { return x1_; }
  const std::vector<int>& x2() const noexcept { return x2_; }
  int num_categories() const noexcept { return num_categories_; }
  const std::optional<std::vector<int>>& true_labels() const noexcept {
    return true_labels_;
  }

  bool operator==(const Population&) const = default;

 private:
  Graph graph_;
  std::vector<double> x1_;
  std::vector<int> x2_;
  int num_categories_;
  std::optional<std::vector<int>> true_labels_;
};

// Tree-structured sample produced by respondent-driven sampling. The sampled
// adjacency is derived from the recruiter links, so it contains exactly the
// recruitment edges.
class RdsSample {
 public:
  struct Node {
    int id = 0;              // population index
    int recruiter = kSeed;   // index into the sample, or kSeed
    int wave = 0;
    int degree = 1;          // population degree
    double x1 = 0.0;
    int x2 = 0;
  };

  // max_coupons <= 0 disables the recruitment out-degree check.
  RdsSample(std::vector<Node> nodes, int num_categories, int max_coupons = 0,
            int reseeds = 0, bool partial = false);

  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  const Node& node(int i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  int num_categories() const noexcept { return num_categories_; }
  const AdjacencyMatrix& adjacency() const noexcept { return adj_; }
  int num_seeds() const;

  std::vector<double> x1() const;
  std::vector<int> x2() const;
  std::vector<int> degrees() const;

  // Number of times the sampler had to draw a fresh seed, and whether the
  // target size was missed. Informational only.
  int reseeds() const noexcept { return reseeds_; }
  bool partial() const noexcept { return partial_; }

 private:
  std::vector<Node> nodes_;
  int num_categories_;
  AdjacencyMatrix adj_;
  int reseeds_ = 0;
  bool partial_ = false;
};

// Inclusion probabilities keyed by population degree: S_k for nodes, SS_kh
// for node pairs and R_kh for edges. Pair and edge tables are symmetric and
// stored once per unordered degree pair.
class InclusionProbs {
 public:
  InclusionProbs() = default;
  InclusionProbs(std::map<int, double> node,
                 std::map<DegreePair, double> pair,
                 std::map<DegreePair, double> edge);

  double node(int k) const;
  double pair(int k, int h) const;
  double edge(int k, int h) const;

  const std::map<int, double>& node_table() const noexcept { return node_; }
  const std::map<DegreePair, double>& pair_table() const noexcept {
    return pair_;
  }
  const std::map<DegreePair, double>& edge_table() const noexcept {
    return edge_;
  }

  bool operator==(const InclusionProbs&) const = default;

 private:
  std::map<int, double> node_;
  std::map<DegreePair, double> pair_;
  std::map<DegreePair, double> edge_;
};

// Per-node and per-pair view of InclusionProbs for one sample. Diagonals of
// SS and R are unused and set to 1.
struct ExpandedProbs {
  Eigen::VectorXd S;
  Eigen::MatrixXd SS;
  Eigen::MatrixXd R;

  int size() const noexcept { return static_cast<int>(S.size()); }
  static ExpandedProbs unit(int n);
  // Checks shapes, ranges, symmetry and R <= SS.
  void validate() const;
};

ExpandedProbs expand_probs(const InclusionProbs& probs, const RdsSample& sample);

// Mixture parameters for K clusters and M categories.
struct ModelParams {
  Eigen::VectorXd lambda;  // K, simplex
  Eigen::VectorXd mu;      // K
  Eigen::VectorXd sigma;   // K, >= kSigmaFloor
  Eigen::MatrixXd theta;   // M x K, column-stochastic
  Eigen::MatrixXd phi;     // K x K, symmetric, inside (0, 1)

  int K() const noexcept { return static_cast<int>(lambda.size()); }
  int M() const noexcept { return static_cast<int>(theta.rows()); }
  void validate() const;
};

// Row-stochastic n x K matrix of variational cluster responsibilities.
class Responsibilities {
 public:
  Responsibilities() = default;
  // Validates rows (sum to 1 within 1e-10, entries >= kTauFloor up to
  // renormalisation rounding).
  explicit Responsibilities(Eigen::MatrixXd tau);
  // Applies the floor and renormalises each row, then validates.
  static Responsibilities normalized(Eigen::MatrixXd raw);

  const Eigen::MatrixXd& matrix() const noexcept { return tau_; }
  int n() const noexcept { return static_cast<int>(tau_.rows()); }
  int K() const noexcept { return static_cast<int>(tau_.cols()); }
  double operator()(int i, int k) const { return tau_(i, k); }
  // argmax per row, lowest index on ties.
  std::vector<int> hard_labels() const;

 private:
  Eigen::MatrixXd tau_;
};

}  // namespace rdsclust
