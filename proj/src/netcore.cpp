#include "rdsclust/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rdsclust {

namespace {

std::string parse_message(const std::string& file, int line, int column,
                          const std::string& msg) {
  std::ostringstream os;
  os << file << ":" << line << ":" << column << ": " << msg;
  return os.str();
}

bool in_unit_interval(double p) { return p > 0.0 && p <= 1.0; }

}  // namespace

ParseError::ParseError(std::string file, int line, int column,
                       const std::string& msg)
    : Error(parse_message(file, line, column, msg)),
      file_(std::move(file)),
      line_(line),
      column_(column) {}

// ---------------------------------------------------------------------------
// AdjacencyMatrix

AdjacencyMatrix::AdjacencyMatrix(int n)
    : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {
  if (n < 0) throw ConfigError("adjacency size must be nonnegative");
}

void AdjacencyMatrix::set_edge(int i, int j, bool value) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_)
    throw ConfigError("adjacency index out of range");
  if (i == j) throw ConfigError("adjacency diagonal must stay zero");
  const std::uint8_t v = value ? 1 : 0;
  bits_[static_cast<std::size_t>(i) * n_ + j] = v;
  bits_[static_cast<std::size_t>(j) * n_ + i] = v;
}

int AdjacencyMatrix::degree(int i) const {
  const auto* row = bits_.data() + static_cast<std::size_t>(i) * n_;
  return static_cast<int>(std::count(row, row + n_, std::uint8_t{1}));
}

std::int64_t AdjacencyMatrix::edge_count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1}) / 2;
}

std::vector<std::pair<int, int>> AdjacencyMatrix::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if ((*this)(i, j)) out.emplace_back(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(int n, std::span<const std::pair<int, int>> edges) {
  if (n < 0) throw ConfigError("graph size must be nonnegative");
  Graph g(n);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      std::ostringstream os;
      os << "edge (" << a << "," << b << ") out of range for " << n
         << " nodes";
      throw ConfigError(os.str());
    }
    if (a == b)
      throw ConfigError("self loop on node " + std::to_string(a));
    g.adj_[a].push_back(b);
    g.adj_[b].push_back(a);
  }
  for (auto& nb : g.adj_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

bool Graph::has_edge(int i, int j) const {
  const auto& nb = adj_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::int64_t Graph::edge_count() const {
  std::int64_t total = 0;
  for (const auto& nb : adj_) total += static_cast<std::int64_t>(nb.size());
  return total / 2;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < size(); ++i)
    for (int j : adj_[i])
      if (i < j) out.emplace_back(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Population

Population::Population(Graph graph, std::vector<double> x1,
                       std::vector<int> x2, int num_categories,
                       std::optional<std::vector<int>> true_labels)
    : graph_(std::move(graph)),
      x1_(std::move(x1)),
      x2_(std::move(x2)),
      num_categories_(num_categories),
      true_labels_(std::move(true_labels)) {
  const auto n = static_cast<std::size_t>(graph_.size());
  if (n == 0) throw ConfigError("population must have at least one node");
  if (x1_.size() != n || x2_.size() != n)
    throw ConfigError("population feature vectors must have one entry per node");
  if (num_categories_ < 2)
    throw ConfigError("categorical feature needs at least 2 categories");
  for (int c : x2_)
    if (c < 0 || c >= num_categories_)
      throw ConfigError("category index " + std::to_string(c + 1) +
                        " outside 1.." + std::to_string(num_categories_));
  for (double v : x1_)
    if (!std::isfinite(v)) throw ConfigError("continuous feature not finite");
  if (true_labels_) {
    if (true_labels_->size() != n)
      throw ConfigError("true labels must have one entry per node");
    for (int z : *true_labels_)
      if (z < 0) throw ConfigError("cluster labels must be positive");
  }
}

// ---------------------------------------------------------------------------
// RdsSample

RdsSample::RdsSample(std::vector<Node> nodes, int num_categories,
                     int max_coupons, int reseeds, bool partial)
    : nodes_(std::move(nodes)),
      num_categories_(num_categories),
      adj_(static_cast<int>(nodes_.size())),
      reseeds_(reseeds),
      partial_(partial) {
  const int n = size();
  if (n == 0) throw ConfigError("sample must contain at least one node");
  if (num_categories_ < 2)
    throw ConfigError("categorical feature needs at least 2 categories");

  std::vector<int> ids;
  ids.reserve(n);
  std::vector<int> out_degree(n, 0);
  for (int i = 0; i < n; ++i) {
    const Node& v = nodes_[i];
    ids.push_back(v.id);
    if (v.degree < 1)
      throw ConfigError("sampled node " + std::to_string(v.id) +
                        " has population degree < 1");
    if (v.x2 < 0 || v.x2 >= num_categories_)
      throw ConfigError("category index " + std::to_string(v.x2 + 1) +
                        " outside 1.." + std::to_string(num_categories_));
    if (!std::isfinite(v.x1))
      throw ConfigError("continuous feature not finite");
    if (v.recruiter == kSeed) {
      if (v.wave != 0)
        throw ConfigError("seed " + std::to_string(v.id) + " must be wave 0");
      continue;
    }
    if (v.recruiter < 0 || v.recruiter >= n || v.recruiter == i)
      throw ConfigError("invalid recruiter for node " + std::to_string(v.id));
    if (v.wave != nodes_[v.recruiter].wave + 1)
      throw ConfigError("wave of node " + std::to_string(v.id) +
                        " is not one more than its recruiter's");
    ++out_degree[v.recruiter];
    adj_.set_edge(i, v.recruiter);
  }
  // Waves strictly increase along recruiter links, so the links are acyclic
  // and form a forest rooted at the seeds.
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ConfigError("sampled node ids must be distinct");
  for (int i = 0; i < n; ++i) {
    if (max_coupons > 0 && out_degree[i] > max_coupons)
      throw ConfigError("node " + std::to_string(nodes_[i].id) +
                        " recruited more than " + std::to_string(max_coupons));
    if (nodes_[i].degree < adj_.degree(i))
      throw ConfigError("population degree of node " +
                        std::to_string(nodes_[i].id) +
                        " is below its sampled degree");
  }
}

int RdsSample::num_seeds() const {
  return static_cast<int>(std::count_if(
      nodes_.begin(), nodes_.end(),
      [](const Node& v) { return v.recruiter == kSeed; }));
}

std::vector<double> RdsSample::x1() const {
  std::vector<double> out;
  out.reserve(nodes_.size());
  for (const auto& v : nodes_) out.push_back(v.x1);
  return out;
}

std::vector<int> RdsSample::x2() const {
  std::vector<int> out;
  out.reserve(nodes_.size());
  for (const auto& v : nodes_) out.push_back(v.x2);
  return out;
}

std::vector<int> RdsSample::degrees() const {
  std::vector<int> out;
  out.reserve(nodes_.size());
  for (const auto& v : nodes_) out.push_back(v.degree);
  return out;
}

// ---------------------------------------------------------------------------
// InclusionProbs

InclusionProbs::InclusionProbs(std::map<int, double> node,
                               std::map<DegreePair, double> pair,
                               std::map<DegreePair, double> edge) {
  for (auto [k, p] : node) {
    if (!in_unit_interval(p))
      throw ConfigError("node probability for degree " + std::to_string(k) +
                        " outside (0,1]");
    node_[k] = p;
  }
  auto canonical = [](const std::map<DegreePair, double>& in,
                      const char* what) {
    std::map<DegreePair, double> out;
    for (auto [key, p] : in) {
      if (!in_unit_interval(p))
        throw ConfigError(std::string(what) + " probability for degrees (" +
                          std::to_string(key.first) + "," +
                          std::to_string(key.second) + ") outside (0,1]");
      const auto ck = degree_pair(key.first, key.second);
      auto [it, inserted] = out.emplace(ck, p);
      if (!inserted && it->second != p)
        throw ConfigError(std::string(what) +
                          " table is not symmetric for degrees (" +
                          std::to_string(ck.first) + "," +
                          std::to_string(ck.second) + ")");
    }
    return out;
  };
  pair_ = canonical(pair, "pair");
  edge_ = canonical(edge, "edge");
  for (auto [key, r] : edge_) {
    auto it = pair_.find(key);
    if (it == pair_.end())
      throw ConfigError("edge probability for degrees (" +
                        std::to_string(key.first) + "," +
                        std::to_string(key.second) +
                        ") has no matching pair probability");
    if (r > it->second)
      throw ConfigError("edge probability exceeds pair probability for "
                        "degrees (" +
                        std::to_string(key.first) + "," +
                        std::to_string(key.second) + ")");
  }
}

double InclusionProbs::node(int k) const {
  auto it = node_.find(k);
  if (it == node_.end())
    throw LookupError(k, "no node probability for degree " + std::to_string(k));
  return it->second;
}

namespace {

double lookup_pair(const std::map<DegreePair, double>& table, int k, int h,
                   const char* what) {
  auto it = table.find(degree_pair(k, h));
  if (it == table.end()) {
    // Name a degree that is absent altogether when there is one.
    bool k_seen = false;
    for (const auto& [key, p] : table)
      if (key.first == k || key.second == k) k_seen = true;
    const int missing = k_seen ? h : k;
    throw LookupError(missing, std::string("no ") + what +
                                   " probability for degrees (" +
                                   std::to_string(k) + "," +
                                   std::to_string(h) + "); degree " +
                                   std::to_string(missing));
  }
  return it->second;
}

}  // namespace

double InclusionProbs::pair(int k, int h) const {
  return lookup_pair(pair_, k, h, "pair");
}

double InclusionProbs::edge(int k, int h) const {
  return lookup_pair(edge_, k, h, "edge");
}

// ---------------------------------------------------------------------------
// ExpandedProbs

ExpandedProbs ExpandedProbs::unit(int n) {
  ExpandedProbs e;
  e.S = Eigen::VectorXd::Ones(n);
  e.SS = Eigen::MatrixXd::Ones(n, n);
  e.R = Eigen::MatrixXd::Ones(n, n);
  return e;
}

void ExpandedProbs::validate() const {
  const auto n = S.size();
  if (SS.rows() != n || SS.cols() != n || R.rows() != n || R.cols() != n)
    throw ConfigError("expanded probabilities have inconsistent shapes");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!in_unit_interval(S(i)))
      throw ConfigError("node probability outside (0,1]");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!in_unit_interval(SS(i, j)) || !in_unit_interval(R(i, j)))
        throw ConfigError("pair or edge probability outside (0,1]");
      if (SS(i, j) != SS(j, i) || R(i, j) != R(j, i))
        throw ConfigError("pair or edge probabilities not symmetric");
      if (R(i, j) > SS(i, j))
        throw ConfigError("edge probability exceeds pair probability");
    }
  }
}

ExpandedProbs expand_probs(const InclusionProbs& probs,
                           const RdsSample& sample) {
  const int n = sample.size();
  ExpandedProbs e = ExpandedProbs::unit(n);
  for (int i = 0; i < n; ++i) {
    const int di = sample.node(i).degree;
    e.S(i) = probs.node(di);
    for (int j = i + 1; j < n; ++j) {
      const int dj = sample.node(j).degree;
      e.SS(i, j) = e.SS(j, i) = probs.pair(di, dj);
      e.R(i, j) = e.R(j, i) = probs.edge(di, dj);
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// ModelParams

void ModelParams::validate() const {
  const int k = K();
  if (k < 1) throw ConfigError("model needs at least one cluster");
  if (mu.size() != k || sigma.size() != k || theta.cols() != k ||
      phi.rows() != k || phi.cols() != k)
    throw ConfigError("model parameter shapes disagree with K");
  if (theta.rows() < 2) throw ConfigError("theta needs at least 2 categories");
  if (std::abs(lambda.sum() - 1.0) > 1e-12)
    throw ConfigError("lambda does not sum to 1");
  if ((lambda.array() < 0.0).any()) throw ConfigError("lambda has negatives");
  if ((sigma.array() < kSigmaFloor).any())
    throw ConfigError("sigma below floor");
  for (int c = 0; c < k; ++c)
    if (std::abs(theta.col(c).sum() - 1.0) > 1e-10)
      throw ConfigError("theta column does not sum to 1");
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (phi(a, b) != phi(b, a)) throw ConfigError("phi not symmetric");
      if (phi(a, b) < kPhiMin || phi(a, b) > kPhiMax)
        throw ConfigError("phi outside clamp range");
    }
}

// ---------------------------------------------------------------------------
// Responsibilities

Responsibilities::Responsibilities(Eigen::MatrixXd tau) : tau_(std::move(tau)) {
  if (tau_.cols() < 1) throw ConfigError("responsibilities need K >= 1");
  for (Eigen::Index i = 0; i < tau_.rows(); ++i) {
    if (std::abs(tau_.row(i).sum() - 1.0) > 1e-10)
      throw ConfigError("responsibility row " + std::to_string(i) +
                        " does not sum to 1");
    if (tau_.row(i).minCoeff() < kTauFloor * (1.0 - 1e-6))
      throw ConfigError("responsibility below floor in row " +
                        std::to_string(i));
  }
}

Responsibilities Responsibilities::normalized(Eigen::MatrixXd raw) {
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    auto row = raw.row(i);
    row /= row.sum();
    row = row.cwiseMax(kTauFloor);
    row /= row.sum();
  }
  return Responsibilities(std::move(raw));
}

std::vector<int> Responsibilities::hard_labels() const {
  std::vector<int> labels(tau_.rows());
  for (Eigen::Index i = 0; i < tau_.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < tau_.cols(); ++k)
      if (tau_(i, k) > tau_(i, best)) best = k;
    labels[i] = best;
  }
  return labels;
}

}  // namespace rdsclust
