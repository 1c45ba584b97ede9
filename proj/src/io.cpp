#include "rdsclust/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rdsclust {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CsvReader {
 public:
  CsvReader(const fs::path& path, const std::vector<std::string>& required)
      : file_(path.string()), text_(slurp(path)) {
    if (!next_line()) throw ParseError(file_, 1, 1, "missing header");
    for (std::size_t c = 0; c < required.size(); ++c)
      if (c >= fields_.size() || fields_[c] != required[c])
        throw ParseError(file_, line_, c < starts_.size() ? starts_[c] : 1,
                         "expected column '" + required[c] + "'");
    header_ = std::vector<std::string>(fields_.begin(), fields_.end());
  }

  const std::vector<std::string>& header() const { return header_; }
  int line() const { return line_; }
  std::size_t width() const { return fields_.size(); }

  bool next() {
    if (!next_line()) return false;
    if (fields_.size() != header_.size())
      throw ParseError(file_, line_, 1,
                       "expected " + std::to_string(header_.size()) +
                           " fields, found " + std::to_string(fields_.size()));
    return true;
  }

  long long integer(std::size_t c) const {
    long long v = 0;
    const std::string_view f = fields_[c];
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size() || f.empty())
      fail(c, "expected an integer, found '" + std::string(f) + "'");
    return v;
  }

  double real(std::size_t c) const {
    double v = 0;
    const std::string_view f = fields_[c];
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size() || f.empty() ||
        !std::isfinite(v))
      fail(c, "expected a finite number, found '" + std::string(f) + "'");
    return v;
  }

  [[noreturn]] void fail(std::size_t c, const std::string& msg) const {
    throw ParseError(file_, line_, starts_[c], msg);
  }
  [[noreturn]] void fail_line(const std::string& msg) const {
    throw ParseError(file_, line_, 1, msg);
  }

 private:
  bool next_line() {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string::npos) end = text_.size();
      std::string_view line(text_.data() + pos_, end - pos_);
      pos_ = end + 1;
      ++line_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      fields_.clear();
      starts_.clear();
      std::size_t s = 0;
      for (;;) {
        const std::size_t comma = line.find(',', s);
        starts_.push_back(static_cast<int>(s) + 1);
        fields_.push_back(line.substr(s, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - s));
        if (comma == std::string_view::npos) break;
        s = comma + 1;
      }
      return true;
    }
    return false;
  }

  std::string file_;
  std::string text_;
  std::size_t pos_ = 0;
  int line_ = 0;
  std::vector<std::string_view> fields_;
  std::vector<int> starts_;
  std::vector<std::string> header_;
};

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd json_matrix(const json& j, const char* name) {
  if (!j.is_array()) throw Error(std::string(name) + " must be an array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
      throw Error(std::string(name) + " rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd json_vector(const json& j, const char* name) {
  if (!j.is_array()) throw Error(std::string(name) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

json read_json(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    int line = 1, column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(path.string(), line, column, "invalid JSON");
  }
}

void write_population(const Population& pop, const fs::path& nodes_csv,
                      const fs::path& edges_csv) {
  const auto& labels = pop.true_labels();
  {
    std::ofstream out = open_out(nodes_csv);
    out << "id,degree,x1,x2" << (labels ? ",cluster" : "") << '\n';
    for (int i = 0; i < pop.size(); ++i) {
      out << i << ',' << pop.graph().degree(i) << ',' << format_double(pop.x1()[i])
          << ',' << pop.x2()[i] + 1;
      if (labels) out << ',' << (*labels)[i] + 1;
      out << '\n';
    }
  }
  std::ofstream out = open_out(edges_csv);
  out << "src,dst\n";
  for (const auto& [a, b] : pop.graph().edges()) out << a << ',' << b << '\n';
}

Population read_population(const fs::path& nodes_csv, const fs::path& edges_csv) {
  CsvReader nodes(nodes_csv, {"id", "degree", "x1", "x2"});
  const bool has_cluster = nodes.width() >= 5 && nodes.header()[4] == "cluster";
  if (nodes.width() > (has_cluster ? 5u : 4u))
    throw ParseError(nodes_csv.string(), 1, 1, "unexpected extra columns");

  struct Row {
    long long degree;
    double x1;
    int x2;
    int cluster;
    int line;
  };
  std::map<long long, Row> rows;
  int max_cat = 2;
  while (nodes.next()) {
    const long long id = nodes.integer(0);
    if (id < 0) nodes.fail(0, "node id must be >= 0");
    Row r{nodes.integer(1), nodes.real(2), static_cast<int>(nodes.integer(3)), 0,
          nodes.line()};
    if (r.degree < 0) nodes.fail(1, "degree must be >= 0");
    if (r.x2 < 1) nodes.fail(3, "categories are 1-based");
    if (has_cluster) {
      r.cluster = static_cast<int>(nodes.integer(4));
      if (r.cluster < 1) nodes.fail(4, "clusters are 1-based");
    }
    max_cat = std::max(max_cat, r.x2);
    if (!rows.emplace(id, r).second) nodes.fail(0, "duplicate node id");
  }
  const int n = static_cast<int>(rows.size());
  if (n > 0 && rows.rbegin()->first != n - 1)
    throw ParseError(nodes_csv.string(), 1, 1, "node ids must be 0..N-1");

  CsvReader edges(edges_csv, {"src", "dst"});
  std::vector<std::pair<int, int>> list;
  while (edges.next()) {
    const long long a = edges.integer(0), b = edges.integer(1);
    if (a < 0 || a >= n) edges.fail(0, "unknown node id");
    if (b < 0 || b >= n) edges.fail(1, "unknown node id");
    if (a == b) edges.fail(1, "self loop");
    list.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  Graph g = Graph::from_edges(n, list);

  std::vector<double> x1(n);
  std::vector<int> x2(n);
  std::vector<int> clusters(n);
  for (const auto& [id, r] : rows) {
    if (g.degree(static_cast<int>(id)) != r.degree)
      throw ParseError(nodes_csv.string(), r.line, 1,
                       "degree " + std::to_string(r.degree) + " of node " +
                           std::to_string(id) + " disagrees with edges (" +
                           std::to_string(g.degree(static_cast<int>(id))) + ")");
    x1[id] = r.x1;
    x2[id] = r.x2 - 1;
    clusters[id] = r.cluster - 1;
  }
  std::optional<std::vector<int>> labels;
  if (has_cluster) labels = std::move(clusters);
  return Population(std::move(g), std::move(x1), std::move(x2), max_cat,
                    std::move(labels));
}

void write_recruit(const RdsSample& sample, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "id,recruiter_id,wave,degree,x1,x2\n";
  for (const auto& v : sample.nodes()) {
    const int rec = v.recruiter == kSeed ? -1 : sample.node(v.recruiter).id;
    out << v.id << ',' << rec << ',' << v.wave << ',' << v.degree << ','
        << format_double(v.x1) << ',' << v.x2 + 1 << '\n';
  }
}

RdsSample read_recruit(const fs::path& path, int max_coupons,
                       int num_categories) {
  CsvReader in(path, {"id", "recruiter_id", "wave", "degree", "x1", "x2"});
  if (in.width() != 6) throw ParseError(path.string(), 1, 1, "unexpected extra columns");
  std::vector<RdsSample::Node> nodes;
  std::vector<long long> recruiter_ids;
  std::vector<int> lines;
  std::map<long long, int> index;
  int max_cat = 2;
  while (in.next()) {
    RdsSample::Node v;
    const long long id = in.integer(0);
    if (id < 0) in.fail(0, "id must be >= 0");
    if (!index.emplace(id, static_cast<int>(nodes.size())).second)
      in.fail(0, "duplicate id");
    v.id = static_cast<int>(id);
    recruiter_ids.push_back(in.integer(1));
    v.wave = static_cast<int>(in.integer(2));
    v.degree = static_cast<int>(in.integer(3));
    if (v.degree < 1) in.fail(3, "degree must be >= 1");
    v.x1 = in.real(4);
    const long long cat = in.integer(5);
    if (cat < 1) in.fail(5, "categories are 1-based");
    v.x2 = static_cast<int>(cat - 1);
    max_cat = std::max(max_cat, static_cast<int>(cat));
    nodes.push_back(v);
    lines.push_back(in.line());
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (recruiter_ids[i] == -1) continue;
    const auto it = index.find(recruiter_ids[i]);
    if (it == index.end())
      throw ParseError(path.string(), lines[i], 1,
                       "recruiter " + std::to_string(recruiter_ids[i]) +
                           " is not in the sample");
    nodes[i].recruiter = it->second;
  }
  if (num_categories > 0) {
    if (num_categories < max_cat)
      throw ConfigError("sample has category " + std::to_string(max_cat) +
                        " but only " + std::to_string(num_categories) +
                        " categories were given");
    max_cat = num_categories;
  }
  return RdsSample(std::move(nodes), max_cat, max_coupons);
}

void write_probs(const InclusionProbs& probs, const json& config,
                 const fs::path& path) {
  json j;
  j["node"] = json::array();
  for (const auto& [d, s] : probs.node_table()) j["node"].push_back({d, s});
  j["pair"] = json::array();
  for (const auto& [kh, s] : probs.pair_table())
    j["pair"].push_back({kh.first, kh.second, s});
  j["edge"] = json::array();
  for (const auto& [kh, r] : probs.edge_table())
    j["edge"].push_back({kh.first, kh.second, r});
  j["config"] = config;
  std::ofstream out = open_out(path);
  out << j.dump(1) << '\n';
}

InclusionProbs read_probs(const fs::path& path, json* config) {
  const json j = read_json(path);
  try {
    std::map<int, double> node;
    for (const auto& e : j.at("node")) node[e.at(0).get<int>()] = e.at(1).get<double>();
    std::map<DegreePair, double> pair, edge;
    for (const auto& e : j.at("pair"))
      pair[degree_pair(e.at(0).get<int>(), e.at(1).get<int>())] = e.at(2).get<double>();
    for (const auto& e : j.at("edge"))
      edge[degree_pair(e.at(0).get<int>(), e.at(1).get<int>())] = e.at(2).get<double>();
    if (config) *config = j.value("config", json::object());
    return InclusionProbs(std::move(node), std::move(pair), std::move(edge));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

json to_json(const FitConfig& cfg) {
  return {{"K", cfg.K},
          {"alpha", cfg.alpha},
          {"weighted", cfg.weighted},
          {"max_iter", cfg.max_iter},
          {"tol", cfg.tol},
          {"restarts", cfg.restarts},
          {"init", to_string(cfg.init)},
          {"newton_max", cfg.newton_max},
          {"newton_tol", cfg.newton_tol},
          {"phi_method", to_string(cfg.phi_method)},
          {"tau_schedule", to_string(cfg.tau_schedule)},
          {"rng_seed", cfg.rng_seed}};
}

json to_json(const ModelParams& p) {
  json lambda = json::array(), mu = json::array(), sigma = json::array();
  for (int k = 0; k < p.K(); ++k) {
    lambda.push_back(p.lambda(k));
    mu.push_back(p.mu(k));
    sigma.push_back(p.sigma(k));
  }
  return {{"lambda", lambda},
          {"mu", mu},
          {"sigma", sigma},
          {"theta", matrix_json(p.theta)},
          {"phi", matrix_json(p.phi)}};
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.lambda = json_vector(j.at("lambda"), "lambda");
  p.mu = json_vector(j.at("mu"), "mu");
  p.sigma = json_vector(j.at("sigma"), "sigma");
  p.theta = json_matrix(j.at("theta"), "theta");
  p.phi = json_matrix(j.at("phi"), "phi");
  p.validate();
  return p;
}

void write_result(const FitResult& r, const FitConfig& cfg, const fs::path& path) {
  json labels = json::array();
  for (int l : r.labels) labels.push_back(l + 1);
  json j{{"labels", labels},
         {"tau", matrix_json(r.tau.matrix())},
         {"params", to_json(r.params)},
         {"objective_trace", r.objective_trace},
         {"converged", r.converged},
         {"restart_index", r.restart_index},
         {"iterations", r.iterations},
         {"diagnostics",
          {{"phi_boundary", r.diagnostics.phi_boundary},
           {"phi_bisection", r.diagnostics.phi_bisection},
           {"objective_decreases", r.diagnostics.objective_decreases},
           {"collapsed_restarts", r.diagnostics.collapsed_restarts}}},
         {"config", to_json(cfg)}};
  std::ofstream out = open_out(path);
  out << j.dump(1) << '\n';
}

StoredResult read_result(const fs::path& path) {
  const json j = read_json(path);
  try {
    StoredResult r;
    for (const auto& l : j.at("labels")) {
      const int v = l.get<int>();
      if (v < 1) throw Error("labels are 1-based");
      r.labels.push_back(v - 1);
    }
    r.tau = json_matrix(j.at("tau"), "tau");
    r.params = params_from_json(j.at("params"));
    r.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    r.converged = j.at("converged").get<bool>();
    r.config = j.value("config", json::object());
    return r;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_sweep(const SweepReport& report, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "alpha,modularity,nmi,nmi_feature_x1,nmi_feature_x2\n";
  for (std::size_t i = 0; i < report.alphas.size(); ++i)
    out << format_double(report.alphas[i]) << ',' << cell(report.modularity[i])
        << ',' << cell(report.nmi[i]) << ',' << cell(report.nmi_x1[i]) << ','
        << cell(report.nmi_x2[i]) << '\n';
}

}  // namespace rdsclust
