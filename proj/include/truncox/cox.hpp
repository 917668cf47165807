#pragma once

#include <cstddef>
#include <vector>

#include "truncox/data.hpp"

namespace truncox {

// Risk set at time t: from_entry keeps {j : entry_j <= t <= time_j},
// from_origin keeps {j : time_j >= t} and ignores entries.
enum class RiskRule { from_entry, from_origin };

// One expanded observation: an event at `time` with mass `weight`.
// entry = -inf means at risk from the origin.
struct WeightedObservation {
  double time = 0.0;
  double weight = 1.0;
  double entry = 0.0;
  std::vector<double> z;
};

// Struct-of-arrays design; the hot path for repeated fits. Rows with
// weight 0 are dropped on ingestion.
struct CoxDesign {
  std::vector<double> time;
  std::vector<double> weight;
  std::vector<double> entry;
  std::vector<double> z;  // row-major, rows() x p
  std::size_t p = 0;

  std::size_t rows() const { return time.size(); }
  void clear();
  void reserve(std::size_t rows, std::size_t p);
  void add(double t, double w, double ent, const double* zrow);

  static CoxDesign from_observations(const std::vector<WeightedObservation>& obs);
};

struct CoxSolverOptions {
  double score_tol = 1e-8;        // max-norm of the weighted score
  double loglik_rel_tol = 1e-10;  // relative log-likelihood change
  int max_iter = 100;
  int max_halvings = 30;
};

struct CoxFit {
  std::vector<double> beta;
  std::vector<double> baseline_times;  // distinct event times t_j
  std::vector<double> baseline_jumps;  // lambda_j at t_j
  double loglik = 0.0;                 // weighted partial log-likelihood at beta
  int iterations = 0;
  bool converged = false;
  double score_norm = 0.0;
};

// Newton-Raphson with step-halving for the weighted Cox partial
// likelihood (Breslow ties). Every observation is an event at its time.
// Throws SingularHessian, NoConvergence, EmptyRiskSet.
CoxFit fit_weighted_cox(const CoxDesign& design, RiskRule rule,
                        std::vector<double> init = {},
                        const CoxSolverOptions& options = {});

CoxFit fit_weighted_cox(const std::vector<WeightedObservation>& observations, RiskRule rule,
                        std::vector<double> init = {},
                        const CoxSolverOptions& options = {});

// Breslow jumps: lambda_j = (weighted event mass at t_j) / sum_{at risk} w e^{beta'z}.
// Returns (t_j, lambda_j) with t_j ascending.
std::pair<std::vector<double>, std::vector<double>> breslow_baseline(
    const std::vector<double>& beta, const CoxDesign& design, RiskRule rule);

// Standard Cox estimator: unit weights, from-origin risk sets, truncation
// ignored entirely.
CoxFit cox_standard(const TruncatedDataset& dataset, const CoxSolverOptions& options = {});

// Left-truncation-adjusted estimator: risk set {j : L_j <= t <= T_j}.
// Right truncation is ignored by construction.
CoxFit cox_left_adjusted(const TruncatedDataset& dataset, const CoxSolverOptions& options = {});

}  // namespace truncox
