#include "truncox/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace truncox {

namespace {

struct Bounds {
  std::size_t below_l;  // count of t_s < L_i  (0 when L = -inf)
  std::size_t upto_r;   // count of t_s <= R_i (d when R = +inf)
  bool l_inf;
  bool r_inf;
};

Bounds locate(const SubjectRecord& rec, const std::vector<double>& times) {
  Bounds b{};
  b.l_inf = std::isinf(rec.l);
  b.r_inf = std::isinf(rec.r);
  b.below_l = b.l_inf ? 0
                      : static_cast<std::size_t>(
                            std::lower_bound(times.begin(), times.end(), rec.l) - times.begin());
  b.upto_r = b.r_inf ? times.size()
                     : static_cast<std::size_t>(
                           std::upper_bound(times.begin(), times.end(), rec.r) - times.begin());
  return b;
}

double dot(const std::vector<double>& beta, const std::vector<double>& z) {
  double s = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) s += beta[k] * z[k];
  return s;
}

// alpha from precomputed pieces; cum[j] = lambda_1 + ... + lambda_{j+1}
double alpha_from(const Bounds& b, const std::vector<double>& cum, double exp_eta) {
  const double term_l =
      b.l_inf ? 1.0 : std::exp(-(b.below_l > 0 ? cum[b.below_l - 1] : 0.0) * exp_eta);
  const double term_r =
      b.r_inf ? 0.0 : std::exp(-(b.upto_r > 0 ? cum[b.upto_r - 1] : 0.0) * exp_eta);
  return term_l - term_r;
}

std::vector<double> cumulative(const std::vector<double>& lambda) {
  std::vector<double> cum(lambda.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) cum[j] = (acc += lambda[j]);
  return cum;
}

void check_theta(const ParameterState& theta, const TruncatedDataset& dataset) {
  if (theta.beta.size() != dataset.p) throw ValidationError("beta dimension mismatch");
  if (theta.lambda.size() != dataset.d) throw ValidationError("lambda dimension mismatch");
  for (double l : theta.lambda)
    if (!(l > 0.0) || !std::isfinite(l))
      throw ValidationError("baseline jumps must be positive and finite");
}

void e_step_into(WeightMatrix& w, const ParameterState& theta, const TruncatedDataset& dataset,
                 double alpha_floor) {
  const std::size_t n = dataset.n, d = dataset.d;
  w.n = n;
  w.d = d;
  w.w.assign(n * d, 0.0);
  const std::vector<double> cum = cumulative(theta.lambda);

  for (std::size_t i = 0; i < n; ++i) {
    const SubjectRecord& rec = dataset.records[i];
    const double exp_eta = std::exp(dot(theta.beta, rec.z));
    const Bounds b = locate(rec, dataset.distinct_times);
    const double a = alpha_from(b, cum, exp_eta);
    if (!(a >= alpha_floor)) throw AlphaUnderflow(i, a);

    double* row = w.w.data() + i * d;
    row[dataset.event_index[i]] = 1.0;
    for (std::size_t j = 0; j < b.below_l; ++j)
      row[j] += theta.lambda[j] * exp_eta * std::exp(-cum[j] * exp_eta) / a;
    for (std::size_t j = b.upto_r; j < d; ++j)
      row[j] += theta.lambda[j] * exp_eta * std::exp(-cum[j] * exp_eta) / a;
  }
}

ParameterState m_step_impl(const WeightMatrix& w, const TruncatedDataset& dataset,
                           std::vector<double> init_beta, const CoxSolverOptions& options,
                           CoxDesign& design) {
  const std::size_t n = w.n, d = w.d;

  // expanded design in time order: rows of column j are contiguous
  std::vector<std::size_t> col_count(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = w.w.data() + i * d;
    for (std::size_t j = 0; j < d; ++j)
      if (row[j] > 0.0) ++col_count[j];
  }
  std::size_t rows = 0;
  std::vector<std::size_t> offset(d);
  for (std::size_t j = 0; j < d; ++j) {
    offset[j] = rows;
    rows += col_count[j];
  }

  const std::size_t p = dataset.p;
  design.p = p;
  design.time.resize(rows);
  design.weight.resize(rows);
  design.entry.assign(rows, -std::numeric_limits<double>::infinity());
  design.z.resize(rows * p);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = w.w.data() + i * d;
    const double* zi = dataset.records[i].z.data();
    for (std::size_t j = 0; j < d; ++j) {
      if (row[j] <= 0.0) continue;
      const std::size_t slot = offset[j]++;
      design.time[slot] = dataset.distinct_times[j];
      design.weight[slot] = row[j];
      std::copy(zi, zi + p, design.z.begin() + slot * p);
    }
  }

  CoxFit fit = fit_weighted_cox(design, RiskRule::from_origin, std::move(init_beta), options);

  // lambda_j = w_{+j} / sum_{s >= j} sum_i w_is e^{beta'Z_i}
  std::vector<double> col_risk(d, 0.0), wplus(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double exp_eta = std::exp(dot(fit.beta, dataset.records[i].z));
    const double* row = w.w.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      wplus[j] += row[j];
      col_risk[j] += row[j] * exp_eta;
    }
  }
  std::vector<double> lambda(d);
  double suffix = 0.0;
  for (std::size_t j = d; j-- > 0;) {
    suffix += col_risk[j];
    lambda[j] = wplus[j] / suffix;
  }
  return ParameterState{std::move(fit.beta), std::move(lambda)};
}

double theta_delta(const ParameterState& a, const ParameterState& b, EMNorm norm) {
  double maxd = 0.0, sumsq = 0.0;
  auto acc = [&](double x, double y) {
    const double dlt = std::fabs(x - y);
    maxd = std::max(maxd, dlt);
    sumsq += dlt * dlt;
  };
  for (std::size_t k = 0; k < a.beta.size(); ++k) acc(a.beta[k], b.beta[k]);
  for (std::size_t j = 0; j < a.lambda.size(); ++j) acc(a.lambda[j], b.lambda[j]);
  return norm == EMNorm::max_norm ? maxd : std::sqrt(sumsq);
}

}  // namespace

double alpha(const ParameterState& theta, const SubjectRecord& subject,
             const std::vector<double>& times, double floor, std::size_t subject_index) {
  if (theta.lambda.size() != times.size()) throw ValidationError("lambda/grid size mismatch");
  const double exp_eta = std::exp(dot(theta.beta, subject.z));
  const double a = alpha_from(locate(subject, times), cumulative(theta.lambda), exp_eta);
  if (!(a >= floor)) throw AlphaUnderflow(subject_index, a);
  return a;
}

double observed_loglik(const ParameterState& theta, const TruncatedDataset& dataset,
                       double alpha_floor) {
  check_theta(theta, dataset);
  const std::vector<double> cum = cumulative(theta.lambda);
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.n; ++i) {
    const SubjectRecord& rec = dataset.records[i];
    const double eta = dot(theta.beta, rec.z);
    const double exp_eta = std::exp(eta);
    const std::size_t j = dataset.event_index[i];
    const double a = alpha_from(locate(rec, dataset.distinct_times), cum, exp_eta);
    if (!(a >= alpha_floor)) throw AlphaUnderflow(i, a);
    total += eta + std::log(theta.lambda[j]) - cum[j] * exp_eta - std::log(a);
  }
  return total / static_cast<double>(dataset.n);
}

std::vector<double> observed_score_beta(const ParameterState& theta,
                                        const TruncatedDataset& dataset, double alpha_floor) {
  check_theta(theta, dataset);
  const std::vector<double> cum = cumulative(theta.lambda);
  std::vector<double> score(dataset.p, 0.0);
  for (std::size_t i = 0; i < dataset.n; ++i) {
    const SubjectRecord& rec = dataset.records[i];
    const double exp_eta = std::exp(dot(theta.beta, rec.z));
    const Bounds b = locate(rec, dataset.distinct_times);
    const double lam_l = b.below_l > 0 ? cum[b.below_l - 1] : 0.0;
    const double lam_r = b.upto_r > 0 ? cum[b.upto_r - 1] : 0.0;
    const double term_l = b.l_inf ? 1.0 : std::exp(-lam_l * exp_eta);
    const double term_r = b.r_inf ? 0.0 : std::exp(-lam_r * exp_eta);
    const double a = term_l - term_r;
    if (!(a >= alpha_floor)) throw AlphaUnderflow(i, a);
    // d/d beta of -log alpha_i = -e^{eta} (Lam(R) term_r - Lam(L-) term_l) / alpha * Z_i
    const double dl = b.l_inf ? 0.0 : lam_l * term_l;
    const double dr = b.r_inf ? 0.0 : lam_r * term_r;
    const double coef = 1.0 - cum[dataset.event_index[i]] * exp_eta - exp_eta * (dr - dl) / a;
    for (std::size_t k = 0; k < dataset.p; ++k) score[k] += coef * rec.z[k];
  }
  for (double& s : score) s /= static_cast<double>(dataset.n);
  return score;
}

WeightMatrix e_step(const ParameterState& theta, const TruncatedDataset& dataset,
                    double alpha_floor) {
  check_theta(theta, dataset);
  WeightMatrix w;
  e_step_into(w, theta, dataset, alpha_floor);
  return w;
}

ParameterState m_step(const WeightMatrix& weights, const TruncatedDataset& dataset,
                      std::vector<double> init_beta, const CoxSolverOptions& options) {
  if (weights.n != dataset.n || weights.d != dataset.d)
    throw ValidationError("weight matrix shape mismatch");
  CoxDesign design;
  design.reserve(weights.n * weights.d / 4, dataset.p);
  return m_step_impl(weights, dataset, std::move(init_beta), options, design);
}

EMFit fit_em(const TruncatedDataset& dataset, const EMConfig& config) {
  EMFit fit;
  fit.times = dataset.distinct_times;

  if (dataset.mode == TruncationMode::none && !config.init) {
    CoxFit std_fit = cox_standard(dataset, config.inner);
    fit.theta = ParameterState{std_fit.beta, std_fit.baseline_jumps};
    fit.loglik_trace.push_back(observed_loglik(fit.theta, dataset, config.alpha_floor));
    fit.alpha.assign(dataset.n, 1.0);
    fit.iterations = 0;
    fit.converged = true;
    return fit;
  }

  ParameterState theta;
  if (config.init) {
    theta = *config.init;
    check_theta(theta, dataset);
  } else {
    CoxFit std_fit = cox_standard(dataset, config.inner);
    theta = ParameterState{std::move(std_fit.beta), std::move(std_fit.baseline_jumps)};
  }

  fit.loglik_trace.push_back(observed_loglik(theta, dataset, config.alpha_floor));

  WeightMatrix w;
  CoxDesign design;
  bool converged = false;
  int it = 0;
  while (it < config.max_iter) {
    ++it;
    e_step_into(w, theta, dataset, config.alpha_floor);
    ParameterState next = m_step_impl(w, dataset, theta.beta, config.inner, design);
    const double delta = theta_delta(next, theta, config.norm);
    theta = std::move(next);
    fit.loglik_trace.push_back(observed_loglik(theta, dataset, config.alpha_floor));
    if (delta < config.epsilon) {
      converged = true;
      break;
    }
  }

  fit.iterations = it;
  fit.converged = converged;
  fit.alpha.resize(dataset.n);
  for (std::size_t i = 0; i < dataset.n; ++i)
    fit.alpha[i] =
        alpha(theta, dataset.records[i], dataset.distinct_times, config.alpha_floor, i);
  fit.theta = std::move(theta);
  if (!converged) throw EMNoConvergence(it, std::move(fit));
  return fit;
}

double cumulative_hazard(const EMFit& fit, double t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < fit.times.size() && fit.times[j] <= t; ++j)
    acc += fit.theta.lambda[j];
  return acc;
}

}  // namespace truncox
