#pragma once
// File formats. Clusters and categories are 1-based on disk, node ids 0-based.
//
//   nodes.csv    id,degree,x1,x2[,cluster]
//   edges.csv    src,dst            (each edge once, src < dst)
//   recruit.csv  id,recruiter_id,wave,degree,x1,x2   (recruiter_id -1 for seeds)
//   probs.json   {"node": [[d, S]], "pair": [[k, h, SS]], "edge": [[k, h, R]],
//                 "config": {...}}
//   result.json  {"labels", "tau", "params", "objective_trace", "converged",
//                 "config", ...}
//   sweep.csv    alpha,modularity,nmi,nmi_feature_x1,nmi_feature_x2

#include "rdsclust/metrics.hpp"
#include "rdsclust/mixfit.hpp"
#include "rdsclust/netcore.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rdsclust {

namespace fs = std::filesystem;

// Shortest decimal that reads back to the same double.
std::string format_double(double v);

void write_population(const Population& pop, const fs::path& nodes_csv,
                      const fs::path& edges_csv);
// The category count is the largest category seen (at least 2).
Population read_population(const fs::path& nodes_csv, const fs::path& edges_csv);

void write_recruit(const RdsSample& sample, const fs::path& path);
// max_coupons > 0 enables the recruitment out-degree check.
RdsSample read_recruit(const fs::path& path, int max_coupons = 0,
                       int num_categories = 0);

void write_probs(const InclusionProbs& probs, const nlohmann::json& config,
                 const fs::path& path);
InclusionProbs read_probs(const fs::path& path,
                          nlohmann::json* config = nullptr);

nlohmann::json to_json(const FitConfig& cfg);
nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);

struct StoredResult {
  std::vector<int> labels;  // 0-based
  Eigen::MatrixXd tau;
  ModelParams params;
  std::vector<double> objective_trace;
  bool converged = false;
  nlohmann::json config;
};

void write_result(const FitResult& result, const FitConfig& cfg,
                  const fs::path& path);
StoredResult read_result(const fs::path& path);

void write_sweep(const SweepReport& report, const fs::path& path);

// Reads a JSON document, reporting syntax errors by line and column.
nlohmann::json read_json(const fs::path& path);

}  // namespace rdsclust
