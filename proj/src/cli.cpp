#include "rdsclust/cli.hpp"

#include "rdsclust/io.hpp"
#include "rdsclust/metrics.hpp"
#include "rdsclust/mixfit.hpp"
#include "rdsclust/probs.hpp"
#include "rdsclust/rds.hpp"
#include "rdsclust/study.hpp"
#include "rdsclust/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <sstream>

namespace rdsclust {

namespace {

// Raised for semantic usage errors found after option parsing.
class UsageError : public ConfigError {
 public:
  UsageError(const std::string& msg, const CLI::App* cmd)
      : ConfigError(msg), cmd_(cmd) {}
  const CLI::App* cmd() const { return cmd_; }

 private:
  const CLI::App* cmd_;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

PairMode parse_pair_mode(const std::string& s) {
  if (s == "joint") return PairMode::Joint;
  if (s == "product") return PairMode::Product;
  throw ConfigError("pair mode must be joint or product");
}

struct Global {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

struct GenerateOpts {
  std::string study_case = "I";
};

struct SampleOpts {
  std::string nodes, edges;
  int n = 0;
  int seeds = 1;
  int coupons = 3;
  std::string recruit_dist = "0.1,0.2,0.3,0.4";
  bool no_reseed = false;
  std::string seed_rule = "uniform";
};

struct ProbsOpts {
  std::string sample;
  std::int64_t N = 0;
  int sims = 1000, iters = 3, edge_sims = 500;
  std::string pair_mode = "joint";
  int coupons = 3;
  std::string recruit_dist = "0.1,0.2,0.3,0.4";
  std::string seed_rule = "uniform";
};

// Enum-valued fit options, parsed after CLI11 has filled them in.
struct FitNames {
  std::string init = "random-responsibilities";
  std::string phi_method = "self-consistent";
  std::string tau_schedule = "synchronous";

  void apply(FitConfig& cfg) const {
    cfg.init = parse_init_method(init);
    cfg.phi_method = parse_phi_method(phi_method);
    cfg.tau_schedule = parse_tau_schedule(tau_schedule);
  }
};

struct FitOpts {
  std::string sample, probs;
  bool weighted = false;
  FitConfig cfg;
  FitNames names;
};

struct SweepOpts {
  std::string sample, probs;
  bool unweighted = false;
  FitConfig cfg;
  FitNames names;
  std::string grid;
  int bins = 4;
};

struct EvalOpts {
  std::string sample, result, probs, nodes, edges;
  int bins = 4;
};

struct StudyOpts {
  std::string study_case = "I";
  int n = 300;
  int reps = 100;
  std::string models = "uw:0,uw:1,uw:star,w:0,w:1,w:star";
  int threads = 0;
  int sims = 1000, iters = 3, edge_sims = 500;
  int restarts = 10, max_iter = 500;
  double tol = 1e-6;
  FitNames names{"attribute-fit"};
  std::string seed_rule = "degree";
  std::string grid;
  int bins = 4;
};

void add_fit_names(CLI::App* cmd, FitNames& names) {
  cmd->add_option("--init", names.init,
                  "random-responsibilities | kmeans-attributes | attribute-fit")
      ->capture_default_str();
  cmd->add_option("--phi-method", names.phi_method,
                  "self-consistent | objective-root (weighted phi update)")
      ->capture_default_str();
  cmd->add_option("--tau-schedule", names.tau_schedule, "synchronous | sequential")
      ->capture_default_str();
}

void add_fit_options(CLI::App* cmd, FitConfig& cfg, FitNames& names) {
  cmd->add_option("--k", cfg.K, "Number of clusters")->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha, "Network tuning parameter")->capture_default_str();
  cmd->add_option("--max-iter", cfg.max_iter)->capture_default_str();
  cmd->add_option("--tol", cfg.tol, "Relative objective change")->capture_default_str();
  cmd->add_option("--restarts", cfg.restarts)->capture_default_str();
  cmd->add_option("--newton-max", cfg.newton_max)->capture_default_str();
  cmd->add_option("--newton-tol", cfg.newton_tol)->capture_default_str();
  add_fit_names(cmd, names);
}

fs::path out_dir(const Global& g, const CLI::App* cmd) {
  if (g.out.empty()) throw UsageError("--out is required", cmd);
  return fs::path(g.out);
}

void note(const Global& g, std::ostream& err, const std::string& msg) {
  if (!g.quiet) err << msg << '\n';
}

int cmd_generate(const Global& g, const GenerateOpts& o, const CLI::App* cmd,
                 std::ostream& err) {
  const fs::path dir = out_dir(g, cmd);
  const SynthConfig cfg = study_case_config(parse_study_case(o.study_case), g.seed);
  const Population pop = generate_population(cfg);
  write_population(pop, dir / "nodes.csv", dir / "edges.csv");
  note(g, err, "wrote " + std::to_string(pop.size()) + " nodes and " +
                   std::to_string(pop.graph().edge_count()) + " edges to " +
                   dir.string());
  return 0;
}

int cmd_sample(const Global& g, const SampleOpts& o, const CLI::App* cmd,
               std::ostream& err) {
  const fs::path dir = out_dir(g, cmd);
  const Population pop = read_population(o.nodes, o.edges);
  RdsConfig cfg;
  cfg.n_target = o.n;
  cfg.num_seeds = o.seeds;
  cfg.max_coupons = o.coupons;
  cfg.recruit_dist = parse_list(o.recruit_dist, "--recruit-dist");
  cfg.reseed = !o.no_reseed;
  cfg.rng_seed = g.seed;
  cfg.seed_rule = parse_seed_rule(o.seed_rule);
  const RdsSample s = rds_sample(pop, cfg);
  write_recruit(s, dir / "recruit.csv");
  note(g, err, "sampled " + std::to_string(s.size()) + " nodes (" +
                   std::to_string(s.reseeds()) + " reseeds" +
                   (s.partial() ? ", target not reached" : "") + ")");
  return 0;
}

int cmd_probs(const Global& g, const ProbsOpts& o, const CLI::App* cmd,
              std::ostream& err) {
  const fs::path dir = out_dir(g, cmd);
  const RdsSample s = read_recruit(o.sample);
  ProbsConfig cfg;
  cfg.N_assumed = o.N;
  cfg.num_sims = o.sims;
  cfg.num_iters = o.iters;
  cfg.edge_sims = o.edge_sims;
  cfg.rng_seed = g.seed;
  cfg.pair_mode = parse_pair_mode(o.pair_mode);
  cfg.design.max_coupons = o.coupons;
  cfg.design.recruit_dist = parse_list(o.recruit_dist, "--recruit-dist");
  cfg.design.seed_rule = parse_seed_rule(o.seed_rule);
  const ProbsEstimate est = estimate_inclusion_probs(s, cfg);
  const nlohmann::json config{{"N_assumed", cfg.N_assumed},
                              {"num_sims", cfg.num_sims},
                              {"num_iters", cfg.num_iters},
                              {"edge_sims", cfg.edge_sims},
                              {"pair_mode", o.pair_mode},
                              {"max_coupons", cfg.design.max_coupons},
                              {"recruit_dist", cfg.design.recruit_dist},
                              {"seed_rule", o.seed_rule},
                              {"rng_seed", cfg.rng_seed}};
  write_probs(est.probs, config, dir / "probs.json");
  if (!est.edge.no_population_edges.empty())
    note(g, err, std::to_string(est.edge.no_population_edges.size()) +
                     " degree pairs had no simulated population edges");
  note(g, err, "wrote " + (dir / "probs.json").string());
  return 0;
}

int cmd_fit(const Global& g, FitOpts o, const CLI::App* cmd, std::ostream& err) {
  if (o.weighted && o.probs.empty())
    throw UsageError("weighted mode requires --probs", cmd);
  const fs::path dir = out_dir(g, cmd);
  const RdsSample s = read_recruit(o.sample);
  o.cfg.weighted = o.weighted;
  o.names.apply(o.cfg);
  o.cfg.rng_seed = g.seed;
  std::optional<ExpandedProbs> probs;
  if (o.weighted) probs = expand_probs(read_probs(o.probs), s);
  const FitResult res = fit(s, probs ? &*probs : nullptr, o.cfg);
  write_result(res, o.cfg, dir / "result.json");
  note(g, err, std::string(res.converged ? "converged" : "did not converge") +
                   " after " + std::to_string(res.iterations) +
                   " iterations; objective " + format_double(res.objective_trace.back()));
  return 0;
}

int cmd_sweep(const Global& g, SweepOpts o, const CLI::App* cmd,
              std::ostream& out, std::ostream& err) {
  const fs::path dir = out_dir(g, cmd);
  const RdsSample s = read_recruit(o.sample);
  const ExpandedProbs probs = expand_probs(read_probs(o.probs), s);
  o.cfg.weighted = !o.unweighted;
  o.names.apply(o.cfg);
  o.cfg.rng_seed = g.seed;
  const std::vector<double> grid =
      o.grid.empty() ? default_alpha_grid() : parse_list(o.grid, "--grid");
  const SweepReport rep = alpha_sweep(s, probs, o.cfg, grid, o.bins);
  write_sweep(rep, dir / "sweep.csv");
  for (std::size_t i = 0; i < rep.alphas.size(); ++i)
    if (!rep.errors[i].empty())
      err << "alpha " << format_double(rep.alphas[i]) << ": " << rep.errors[i] << '\n';
  if (rep.suggestion)
    out << "suggestion (advisory, max modularity + NMI): alpha="
        << format_double(*rep.suggestion) << '\n';
  note(g, err, "wrote " + (dir / "sweep.csv").string());
  return 0;
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const RdsSample s = read_recruit(o.sample);
  const StoredResult r = read_result(o.result);
  if (static_cast<int>(r.labels.size()) != s.size())
    throw ConfigError("result has " + std::to_string(r.labels.size()) +
                      " labels but the sample has " + std::to_string(s.size()) +
                      " nodes");
  auto show = [&](const std::string& key, const std::optional<double>& v) {
    out << key << ' ' << (v ? format_double(*v) : std::string("undefined")) << '\n';
  };
  show("modularity", modularity(s.adjacency(), r.labels));
  const ExpandedProbs unit = ExpandedProbs::unit(s.size());
  const FeatureNmi plain = weighted_feature_nmi(s, unit, r.labels, o.bins);
  show("nmi", plain.average);
  show("nmi_feature_x1", plain.x1);
  show("nmi_feature_x2", plain.x2);
  if (!o.probs.empty()) {
    const ExpandedProbs probs = expand_probs(read_probs(o.probs), s);
    const FeatureNmi w = weighted_feature_nmi(s, probs, r.labels, o.bins);
    show("weighted_modularity", weighted_modularity(s, probs, r.labels));
    show("weighted_nmi", w.average);
    show("weighted_nmi_feature_x1", w.x1);
    show("weighted_nmi_feature_x2", w.x2);
  }
  if (!o.nodes.empty()) {
    if (o.edges.empty()) throw ConfigError("--nodes requires --edges");
    const Population pop = read_population(o.nodes, o.edges);
    if (!pop.true_labels()) throw ConfigError("nodes file has no cluster column");
    std::vector<int> truth;
    int K = r.params.K();
    for (const auto& v : s.nodes()) {
      if (v.id >= pop.size()) throw ConfigError("sample id outside the population");
      truth.push_back((*pop.true_labels())[v.id]);
      K = std::max(K, truth.back() + 1);
    }
    out << "misclustered " << misclustering(truth, r.labels, K) << '\n';
  }
  return 0;
}

int cmd_study(const Global& g, const StudyOpts& o, const CLI::App* cmd,
              std::ostream& out, std::ostream& err) {
  const fs::path dir = out_dir(g, cmd);
  StudyConfig cfg;
  cfg.study_case = parse_study_case(o.study_case);
  cfg.n = o.n;
  cfg.replications = o.reps;
  cfg.models.clear();
  for (const auto& m : split(o.models)) cfg.models.push_back(parse_study_model(m));
  cfg.output_dir = dir;
  cfg.rng_seed = g.seed;
  cfg.threads = o.threads;
  cfg.probs.num_sims = o.sims;
  cfg.probs.num_iters = o.iters;
  cfg.probs.edge_sims = o.edge_sims;
  cfg.fit.restarts = o.restarts;
  cfg.fit.max_iter = o.max_iter;
  cfg.fit.tol = o.tol;
  o.names.apply(cfg.fit);
  cfg.seed_rule = parse_seed_rule(o.seed_rule);
  if (!o.grid.empty()) cfg.alpha_grid = parse_list(o.grid, "--grid");
  cfg.bins = o.bins;
  const StudyResult res = run_study(cfg, g.quiet ? nullptr : &err);
  write_study(res, dir);
  out << "replications " << o.reps << ", failed " << res.failed_replications << '\n';
  note(g, err, "wrote " + (dir / "study_summary.csv").string());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Clustering of respondent-driven samples with an "
               "inverse-probability-weighted mixture model",
               "rdsclust"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  GenerateOpts go;
  auto* gen = app.add_subcommand("generate", "Simulate a population (nodes.csv, edges.csv)");
  gen->add_option("--case", go.study_case, "I | II | III | IV")->capture_default_str();

  SampleOpts so;
  auto* smp = app.add_subcommand("sample", "Draw an RDS sample (recruit.csv)");
  smp->add_option("--nodes", so.nodes)->required()->check(CLI::ExistingFile);
  smp->add_option("--edges", so.edges)->required()->check(CLI::ExistingFile);
  smp->add_option("--n", so.n, "Target sample size")->required();
  smp->add_option("--seeds", so.seeds)->capture_default_str();
  smp->add_option("--coupons", so.coupons)->capture_default_str();
  smp->add_option("--recruit-dist", so.recruit_dist, "P(0..coupons recruits)")
      ->capture_default_str();
  smp->add_flag("--no-reseed", so.no_reseed);
  smp->add_option("--seed-rule", so.seed_rule, "uniform | degree")->capture_default_str();

  ProbsOpts po;
  auto* prb = app.add_subcommand("probs", "Estimate inclusion probabilities (probs.json)");
  prb->add_option("--sample", po.sample)->required()->check(CLI::ExistingFile);
  prb->add_option("--N", po.N, "Assumed population size")->required();
  prb->add_option("--sims", po.sims)->capture_default_str();
  prb->add_option("--iters", po.iters)->capture_default_str();
  prb->add_option("--edge-sims", po.edge_sims)->capture_default_str();
  prb->add_option("--pair-mode", po.pair_mode, "joint | product")->capture_default_str();
  prb->add_option("--coupons", po.coupons)->capture_default_str();
  prb->add_option("--recruit-dist", po.recruit_dist)->capture_default_str();
  prb->add_option("--seed-rule", po.seed_rule, "Seed rule of the sampling design")
      ->capture_default_str();

  FitOpts fo;
  auto* fitc = app.add_subcommand("fit", "Fit the mixture model (result.json)");
  fitc->add_option("--sample", fo.sample)->required()->check(CLI::ExistingFile);
  fitc->add_option("--probs", fo.probs)->check(CLI::ExistingFile);
  fitc->add_flag("--weighted", fo.weighted);
  add_fit_options(fitc, fo.cfg, fo.names);

  SweepOpts wo;
  auto* swp = app.add_subcommand("sweep", "Fit over an alpha grid (sweep.csv)");
  swp->add_option("--sample", wo.sample)->required()->check(CLI::ExistingFile);
  swp->add_option("--probs", wo.probs)->required()->check(CLI::ExistingFile);
  swp->add_option("--grid", wo.grid, "Comma-separated alphas");
  swp->add_flag("--unweighted", wo.unweighted);
  swp->add_option("--bins", wo.bins)->capture_default_str();
  add_fit_options(swp, wo.cfg, wo.names);

  EvalOpts eo;
  auto* evl = app.add_subcommand("eval", "Print modularity and NMI of a fitted labelling");
  evl->add_option("--sample", eo.sample)->required()->check(CLI::ExistingFile);
  evl->add_option("--result", eo.result)->required()->check(CLI::ExistingFile);
  evl->add_option("--probs", eo.probs)->check(CLI::ExistingFile);
  evl->add_option("--nodes", eo.nodes, "Population nodes.csv with clusters")
      ->check(CLI::ExistingFile);
  evl->add_option("--edges", eo.edges)->check(CLI::ExistingFile);
  evl->add_option("--bins", eo.bins)->capture_default_str();

  StudyOpts to;
  auto* std_ = app.add_subcommand("study", "Run the simulation study (study_summary.csv)");
  std_->add_option("--case", to.study_case)->capture_default_str();
  std_->add_option("--n", to.n)->capture_default_str();
  std_->add_option("--reps", to.reps)->capture_default_str();
  std_->add_option("--models", to.models, "e.g. uw:1,w:1,w:star")->capture_default_str();
  std_->add_option("--threads", to.threads, "0: all cores")->capture_default_str();
  std_->add_option("--sims", to.sims)->capture_default_str();
  std_->add_option("--iters", to.iters)->capture_default_str();
  std_->add_option("--edge-sims", to.edge_sims)->capture_default_str();
  std_->add_option("--restarts", to.restarts)->capture_default_str();
  std_->add_option("--max-iter", to.max_iter)->capture_default_str();
  std_->add_option("--tol", to.tol)->capture_default_str();
  add_fit_names(std_, to.names);
  std_->add_option("--seed-rule", to.seed_rule, "uniform | degree")->capture_default_str();
  std_->add_option("--grid", to.grid);
  std_->add_option("--bins", to.bins)->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* shown = &app;
    for (const CLI::App* c : app.get_subcommands()) shown = c;
    out << shown->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* shown = &app;
    for (const CLI::App* c : app.get_subcommands()) shown = c;
    err << shown->help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(g, go, gen, err);
    if (smp->parsed()) return cmd_sample(g, so, smp, err);
    if (prb->parsed()) return cmd_probs(g, po, prb, err);
    if (fitc->parsed()) return cmd_fit(g, fo, fitc, err);
    if (swp->parsed()) return cmd_sweep(g, wo, swp, out, err);
    if (evl->parsed()) return cmd_eval(eo, out);
    if (std_->parsed()) return cmd_study(g, to, std_, out, err);
    err << app.help();
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << e.cmd()->help();
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rdsclust
