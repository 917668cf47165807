#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "truncox/cox.hpp"
#include "truncox/data.hpp"
#include "truncox/errors.hpp"

namespace truncox {

enum class EMNorm { max_norm, euclidean };

struct EMConfig {
  double epsilon = 1e-6;     // threshold on ||theta^(k+1) - theta^(k)||
  int max_iter = 500;
  EMNorm norm = EMNorm::max_norm;
  double alpha_floor = 1e-12;
  CoxSolverOptions inner;    // forwarded to the M-step fit
  // Warm start; lambda must match the dataset's distinct-time grid.
  // Unset: standard Cox fit with its Breslow baseline.
  std::optional<ParameterState> init;
};

struct EMFit {
  ParameterState theta;                 // (beta_em, lambda_em)
  std::vector<double> times;            // distinct times the jumps live on
  std::vector<double> loglik_trace;     // observed-data log-likelihood per iteration
  std::vector<double> alpha;            // final alpha_i
  int iterations = 0;
  bool converged = false;
};

class EMNoConvergence : public NoConvergence {
public:
  EMNoConvergence(int iterations, EMFit partial)
      : NoConvergence(iterations), partial(std::move(partial)) {}
  EMFit partial;
};

// n x d conditional-expectation weights; entry (i, j) is the event
// indicator plus the expected latent mass subject i places at t_j.
struct WeightMatrix {
  std::size_t n = 0, d = 0;
  std::vector<double> w;  // row-major

  WeightMatrix() = default;
  WeightMatrix(std::size_t n, std::size_t d) : n(n), d(d), w(n * d, 0.0) {}
  double at(std::size_t i, std::size_t j) const { return w[i * d + j]; }
  double& at(std::size_t i, std::size_t j) { return w[i * d + j]; }
};

// P(observed | Z_i, L_i, R_i; theta)
//   = exp{-Lam(L_i-) e^{beta'Z_i}} - exp{-Lam(R_i) e^{beta'Z_i}}
// with Lam(L-) = sum_{t_s < L} lambda_s and Lam(R) = sum_{t_s <= R} lambda_s.
// Sentinel bounds use the continuous limits, so a full window gives exactly 1.
// Throws AlphaUnderflow below `floor`.
double alpha(const ParameterState& theta, const SubjectRecord& subject,
             const std::vector<double>& times, double floor = 1e-12,
             std::size_t subject_index = 0);

// n^{-1} sum_i [beta'Z_i + log lambda_{j(i)} - Lam(T_i) e^{beta'Z_i} - log alpha_i]
double observed_loglik(const ParameterState& theta, const TruncatedDataset& dataset,
                       double alpha_floor = 1e-12);

// Analytic gradient of observed_loglik in beta.
std::vector<double> observed_score_beta(const ParameterState& theta,
                                        const TruncatedDataset& dataset,
                                        double alpha_floor = 1e-12);

// w_ij = I(T_i = t_j) + [I(t_j < L_i) + I(t_j > R_i)] f_i(t_j; theta) / alpha_i(theta)
// with f_i(t_j; theta) = lambda_j e^{beta'Z_i} exp{-sum_{s<=j} lambda_s e^{beta'Z_i}}.
WeightMatrix e_step(const ParameterState& theta, const TruncatedDataset& dataset,
                    double alpha_floor = 1e-12);

// beta update: weighted Cox fit on the expanded design (t_j, w_ij, Z_i),
// rows with w_ij = 0 excluded, from-origin risk sets. lambda update:
// lambda_j = w_{+j} / sum_{s>=j} sum_i w_is e^{beta'Z_i}.
ParameterState m_step(const WeightMatrix& weights, const TruncatedDataset& dataset,
                      std::vector<double> init_beta = {},
                      const CoxSolverOptions& options = {});

// Alternates e_step / m_step from the standard Cox fit until the change in
// (beta, lambda) drops below config.epsilon. For an untruncated dataset the
// standard fit is already the fixed point and is returned directly.
EMFit fit_em(const TruncatedDataset& dataset, const EMConfig& config = {});

// Right-continuous step function sum_{t_j <= t} lambda_j; 0 before t_1.
double cumulative_hazard(const EMFit& fit, double t);

}  // namespace truncox
