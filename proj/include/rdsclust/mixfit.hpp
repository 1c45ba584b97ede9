#pragma once
// Variational EM for the attributed-network mixture model.
//
// Each node carries a Gaussian feature x1 and a categorical feature x2; ties
// are Bernoulli with block probabilities phi. In unweighted mode the model is
// fitted to the sample as if it were the whole network. In weighted mode node
// terms are weighted by 1/S_i, observed ties by 1/R_ij, and non-ties by
// (1 - phi) / (SS_ij - R_ij phi), approximating the population likelihood.
// alpha scales the network part of the objective.

#include "rdsclust/netcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rdsclust {

enum class InitMethod {
  RandomResponsibilities,  // rows uniform on the simplex
  KmeansAttributes,        // hard k-means++ labels on (standardised x1, one-hot x2)
  // Responsibilities of the best alpha = 0 fit (random starts, same mode),
  // followed by a single run at the requested alpha.
  AttributeFit,
};

std::string to_string(InitMethod m);
InitMethod parse_init_method(const std::string& name);

// How the weighted M-step sets phi.
enum class PhiMethod {
  // Non-tie weights (1 - phi)/(SS - R phi) are the expected share of sampled
  // non-ties that are population non-ties, evaluated at the phi being solved
  // for: root of T/phi - sum_ij w_ij / (SS_ij - R_ij phi), where T is the
  // weighted tie count. Unique root, always interior when it exists.
  SelfConsistent,
  // First local maximum of objective_weighted in phi, differentiating the
  // weight as well. The objective's supremum is at phi -> 1, and for dense
  // blocks there is often no interior maximum, in which case the upper bound
  // is returned.
  ObjectiveRoot,
};

// Order of the tau updates within one E-step.
enum class TauSchedule {
  Synchronous,  // every row from the previous tau
  Sequential,   // rows in index order, each seeing the rows already updated
};

std::string to_string(TauSchedule s);
TauSchedule parse_tau_schedule(const std::string& name);

std::string to_string(PhiMethod m);
PhiMethod parse_phi_method(const std::string& name);

struct FitConfig {
  int K = 2;
  double alpha = 1.0;
  bool weighted = false;
  int max_iter = 500;
  double tol = 1e-6;  // relative objective change
  int restarts = 10;
  InitMethod init = InitMethod::RandomResponsibilities;
  int newton_max = 50;
  double newton_tol = 1e-10;
  PhiMethod phi_method = PhiMethod::SelfConsistent;
  TauSchedule tau_schedule = TauSchedule::Synchronous;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Raised by update_params when a cluster's effective weight vanishes.
class ClusterCollapse : public Error {
 public:
  explicit ClusterCollapse(int cluster)
      : Error("cluster " + std::to_string(cluster + 1) + " collapsed"),
        cluster_(cluster) {}
  int cluster() const noexcept { return cluster_; }

 private:
  int cluster_;
};

struct PhiUpdate {
  Eigen::MatrixXd phi;
  int boundary = 0;        // entries returned at a bracket boundary
  int bisection = 0;       // entries that needed bisection steps
};

struct FitDiagnostics {
  int phi_boundary = 0;
  int phi_bisection = 0;
  int objective_decreases = 0;  // cycles with a drop larger than 1e-6
  int collapsed_restarts = 0;
};

struct FitResult {
  ModelParams params;
  Responsibilities tau;
  std::vector<int> labels;
  std::vector<double> objective_trace;
  bool converged = false;
  int restart_index = 0;
  int iterations = 0;
  FitDiagnostics diagnostics;
};

// Variational objective of the plain mixture model: attribute term, half the
// pairwise Bernoulli term (scaled by alpha) and the entropy of tau.
double objective_unweighted(const RdsSample& sample, const ModelParams& params,
                            const Responsibilities& tau, double alpha = 1.0);

// Inverse-probability-weighted objective.
double objective_weighted(const RdsSample& sample, const ExpandedProbs& probs,
                          const ModelParams& params,
                          const Responsibilities& tau, double alpha = 1.0);

// One mean-field update of all rows from tau_prev, per cfg.tau_schedule. probs is
// required when cfg.weighted and ignored otherwise.
Responsibilities update_tau(const RdsSample& sample, const ExpandedProbs* probs,
                            const ModelParams& params,
                            const Responsibilities& tau_prev,
                            const FitConfig& cfg);

// Closed-form M-step for lambda, mu, sigma, theta; phi via update_phi.
// phi_prev seeds the weighted root search when given.
ModelParams update_params(const RdsSample& sample, const ExpandedProbs* probs,
                          const Responsibilities& tau, const FitConfig& cfg,
                          const Eigen::MatrixXd* phi_prev = nullptr);

// Unweighted: ratio of expected ties to expected pairs. Weighted: root per
// cfg.phi_method by bracketed Newton-Raphson with bisection fallback.
PhiUpdate update_phi(const RdsSample& sample, const ExpandedProbs* probs,
                     const Responsibilities& tau,
                     const Eigen::MatrixXd& phi_prev, const FitConfig& cfg);

// Derivative of objective_weighted with respect to the symmetric parameter
// phi_kh = phi_hk (both entries move together).
double phi_derivative(const RdsSample& sample, const ExpandedProbs& probs,
                      const Responsibilities& tau, const Eigen::MatrixXd& phi,
                      int k, int h, double alpha = 1.0);

// Best of cfg.restarts runs by final objective.
FitResult fit(const RdsSample& sample, const ExpandedProbs* probs,
              const FitConfig& cfg);

// A single run from the given initial responsibilities.
FitResult fit_from(const RdsSample& sample, const ExpandedProbs* probs,
                   const FitConfig& cfg, const Responsibilities& init);

// Initial responsibilities for restart `restart` under cfg.init. AttributeFit
// needs a fit and is handled by fit() only.
Responsibilities initial_responsibilities(const RdsSample& sample,
                                          const FitConfig& cfg, int restart);

}  // namespace rdsclust
