#include "rdsclust/study.hpp"

#include "rdsclust/io.hpp"
#include "rdsclust/metrics.hpp"
#include "rdsclust/random.hpp"
#include "rdsclust/rds.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace rdsclust {

namespace {

std::string number_text(double v) { return format_double(v); }

std::string quoted(std::string s) {
  for (char& c : s)
    if (c == '"' || c == '\n') c = '\'';
  return '"' + s + '"';
}

struct Quantity {
  std::string name;
  double value;
};

std::vector<Quantity> parameter_quantities(const ModelParams& p) {
  std::vector<Quantity> out;
  const int K = p.K();
  for (int k = 0; k < K; ++k)
    out.push_back({"lambda_" + std::to_string(k + 1), p.lambda(k)});
  for (int k = 0; k < K; ++k) out.push_back({"mu_" + std::to_string(k + 1), p.mu(k)});
  for (int k = 0; k < K; ++k)
    out.push_back({"sigma_" + std::to_string(k + 1), p.sigma(k)});
  for (int m = 0; m < p.M(); ++m)
    for (int k = 0; k < K; ++k)
      out.push_back({"theta_" + std::to_string(m + 1) + "_" + std::to_string(k + 1),
                     p.theta(m, k)});
  for (int k = 0; k < K; ++k)
    for (int h = k; h < K; ++h)
      out.push_back({"phi_" + std::to_string(k + 1) + "_" + std::to_string(h + 1),
                     p.phi(k, h)});
  return out;
}

ModelParams truth_params(const SynthConfig& s) {
  ModelParams p;
  const int K = s.K();
  p.lambda = s.lambda();
  p.mu = Eigen::Map<const Eigen::VectorXd>(s.mu.data(), K);
  p.sigma = s.sigma.empty() ? Eigen::VectorXd::Ones(K)
                            : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                  s.sigma.data(), K));
  p.theta = s.theta;
  p.phi = s.phi;
  return p;
}

}  // namespace

std::string StudyModel::name() const {
  std::string s = weighted ? "W-alpha" : "noW-alpha";
  if (!alpha) return s + "-star";
  return s + "=" + number_text(*alpha);
}

StudyModel parse_study_model(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("model '" + text + "' must look like w:1 or uw:star");
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  StudyModel m;
  if (kind == "w" || kind == "weighted")
    m.weighted = true;
  else if (kind != "uw" && kind != "unweighted")
    throw ConfigError("model kind '" + kind + "' must be w or uw");
  if (value != "star") {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty() || !(a >= 0.0))
      throw ConfigError("model alpha '" + value + "' must be >= 0 or 'star'");
    m.alpha = a;
  }
  return m;
}

std::vector<StudyModel> default_study_models() {
  return {{false, 0.0}, {false, 1.0}, {false, std::nullopt},
          {true, 0.0},  {true, 1.0},  {true, std::nullopt}};
}

void StudyConfig::validate() const {
  if (replications < 1) throw ConfigError("study: replications must be >= 1");
  if (n < 1) throw ConfigError("study: n must be >= 1");
  if (models.empty()) throw ConfigError("study: no models configured");
  if (bins < 1) throw ConfigError("study: bins must be >= 1");
  if (!study_case) custom.validate();
  const SynthConfig s = synth(0);
  if (n > s.N) throw ConfigError("study: n exceeds the population size");
  if (s.K() > 9) throw ConfigError("study: label matching supports K <= 9");
  FitConfig f = fit;
  f.K = s.K();
  f.validate();
}

SynthConfig StudyConfig::synth(std::uint64_t seed) const {
  SynthConfig s = study_case ? study_case_config(*study_case, seed) : custom;
  s.rng_seed = seed;
  return s;
}

std::uint64_t replication_seed(const StudyConfig& cfg, int index) {
  return derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(index));
}

StudySample prepare_replication(const StudyConfig& cfg, int index) {
  const std::uint64_t seed = replication_seed(cfg, index);
  SynthConfig synth = cfg.synth(derive_seed(seed, 1));
  Population pop = generate_population(synth);

  RdsConfig design;
  design.n_target = cfg.n;
  design.num_seeds = cfg.num_seeds > 0 ? cfg.num_seeds : (cfg.n >= 300 ? 5 : 3);
  design.rng_seed = derive_seed(seed, 2);
  design.seed_rule = cfg.seed_rule;
  RdsSample sample = rds_sample(pop, design);

  ProbsConfig pc = cfg.probs;
  if (pc.N_assumed == 0) pc.N_assumed = pop.size();
  pc.rng_seed = derive_seed(seed, 3);
  pc.design.seed_rule = cfg.seed_rule;
  ProbsEstimate probs = estimate_inclusion_probs(sample, pc);
  ExpandedProbs expanded = expand_probs(probs.probs, sample);

  std::vector<int> truth(sample.size());
  for (int i = 0; i < sample.size(); ++i)
    truth[i] = (*pop.true_labels())[sample.node(i).id];
  return StudySample{std::move(pop),      std::move(sample), std::move(probs),
                     std::move(expanded), std::move(truth),  std::move(synth)};
}

ModelParams reorder_clusters(const ModelParams& params,
                             const std::vector<int>& match) {
  const int K = params.K();
  ModelParams out = params;
  for (int k = 0; k < K; ++k) {
    out.lambda(k) = params.lambda(match[k]);
    out.mu(k) = params.mu(match[k]);
    out.sigma(k) = params.sigma(match[k]);
    out.theta.col(k) = params.theta.col(match[k]);
    for (int h = 0; h < K; ++h) out.phi(k, h) = params.phi(match[k], match[h]);
  }
  return out;
}

ModelOutcome evaluate_model(const StudyConfig& cfg, const StudySample& s,
                            const StudyModel& model, int index) {
  ModelOutcome out;
  FitConfig fc = cfg.fit;
  fc.K = s.synth.K();
  fc.weighted = model.weighted;
  fc.rng_seed = derive_seed(replication_seed(cfg, index), 4);
  const ExpandedProbs* probs = &s.expanded;
  try {
    if (model.alpha) {
      fc.alpha = *model.alpha;
    } else {
      const SweepReport rep = alpha_sweep(
          s.sample, s.expanded, fc,
          cfg.alpha_grid.empty() ? default_alpha_grid() : cfg.alpha_grid, cfg.bins);
      if (!rep.suggestion) throw Error("alpha sweep produced no usable fit");
      fc.alpha = *rep.suggestion;
    }
    const FitResult res = fit(s.sample, probs, fc);
    const std::vector<int> match = best_label_matching(s.truth, res.labels, fc.K);
    out.params = reorder_clusters(res.params, match);
    out.alpha = fc.alpha;
    out.misclustered = misclustering(s.truth, res.labels, fc.K);
    out.misclustering_rate = static_cast<double>(out.misclustered) / s.sample.size();
    out.modularity = weighted_modularity(s.sample, s.expanded, res.labels);
    out.nmi = weighted_feature_nmi(s.sample, s.expanded, res.labels, cfg.bins).average;
    out.converged = res.converged;
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

std::vector<SummaryRow> summarize(const StudyConfig& cfg,
                                  const std::vector<Replication>& reps) {
  const ModelParams truth = truth_params(cfg.synth(0));
  std::map<std::string, double> truth_by_name;
  std::vector<std::string> names;
  for (const auto& q : parameter_quantities(truth)) {
    truth_by_name[q.name] = q.value;
    names.push_back(q.name);
  }
  names.insert(names.end(),
               {"alpha", "misclustering", "misclustering_rate", "modularity", "nmi"});
  truth_by_name["misclustering"] = 0.0;
  truth_by_name["misclustering_rate"] = 0.0;

  std::vector<SummaryRow> rows;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : reps) {
      if (!r.ok || m >= r.models.size() || !r.models[m].ok) continue;
      const ModelOutcome& o = r.models[m];
      for (const auto& q : parameter_quantities(o.params)) values[q.name].push_back(q.value);
      values["alpha"].push_back(o.alpha);
      values["misclustering"].push_back(o.misclustered);
      values["misclustering_rate"].push_back(o.misclustering_rate);
      if (o.modularity) values["modularity"].push_back(*o.modularity);
      values["nmi"].push_back(o.nmi);
    }
    for (const auto& name : names) {
      SummaryRow row;
      row.model = cfg.models[m].name();
      row.quantity = name;
      const auto t = truth_by_name.find(name);
      if (t != truth_by_name.end()) row.truth = t->second;
      const std::vector<double>& v = values[name];
      row.count = static_cast<int>(v.size());
      if (!v.empty()) {
        double sum = 0.0;
        for (double x : v) sum += x;
        row.mean = sum / v.size();
        if (v.size() >= 2) {
          double ss = 0.0;
          for (double x : v) ss += (x - row.mean) * (x - row.mean);
          row.sd = std::sqrt(ss / (v.size() - 1));
        }
        if (row.truth) {
          double se = 0.0;
          for (double x : v) se += (x - *row.truth) * (x - *row.truth);
          row.mse = se / v.size();
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

StudyResult run_study(const StudyConfig& cfg, std::ostream* log) {
  cfg.validate();
  StudyResult result;
  for (const auto& m : cfg.models) result.model_names.push_back(m.name());
  result.replications.resize(cfg.replications);
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= cfg.replications) return;
      Replication& rep = result.replications[r];
      rep.index = r;
      try {
        const StudySample s = prepare_replication(cfg, r);
        for (const auto& m : cfg.models) rep.models.push_back(evaluate_model(cfg, s, m, r));
        rep.ok = true;
      } catch (const std::exception& e) {
        rep.error = e.what();
      }
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (!rep.ok) {
          *log << "replication " << r + 1 << " failed: " << rep.error << '\n';
        } else {
          for (std::size_t m = 0; m < rep.models.size(); ++m)
            if (!rep.models[m].ok)
              *log << "replication " << r + 1 << ", model " << cfg.models[m].name()
                   << " failed: " << rep.models[m].error << '\n';
        }
      }
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, cfg.replications);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : result.replications)
    if (!r.ok) ++result.failed_replications;
  result.summary = summarize(cfg, result.replications);
  return result;
}

void write_study(const StudyResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  {
    std::ofstream out(dir / "study_summary.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "study_summary.csv").string());
    out << "model,quantity,truth,count,mean,sd,mse\n";
    for (const auto& r : result.summary)
      out << r.model << ',' << r.quantity << ',' << opt(r.truth) << ',' << r.count
          << ',' << (r.count ? format_double(r.mean) : std::string()) << ','
          << opt(r.sd) << ',' << opt(r.mse) << '\n';
  }
  std::ofstream out(dir / "replications.csv", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "replications.csv").string());
  out << "replication,model,ok,alpha,misclustered,misclustering_rate,modularity,"
         "nmi,converged,error\n";
  for (const auto& r : result.replications) {
    if (!r.ok) {
      out << r.index + 1 << ",,0,,,,,,," << quoted(r.error) << '\n';
      continue;
    }
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      const ModelOutcome& o = r.models[m];
      const std::string name =
          m < result.model_names.size() ? result.model_names[m] : std::to_string(m + 1);
      out << r.index + 1 << ',' << name << ',' << (o.ok ? 1 : 0) << ',';
      if (o.ok)
        out << format_double(o.alpha) << ',' << o.misclustered << ','
            << format_double(o.misclustering_rate) << ',' << opt(o.modularity)
            << ',' << format_double(o.nmi) << ',' << (o.converged ? 1 : 0) << ",\n";
      else
        out << ",,,,,," << quoted(o.error) << '\n';
    }
  }
}

}  // namespace rdsclust
