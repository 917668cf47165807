#include "truncox/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "truncox/errors.hpp"

namespace truncox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBetaBound = 50.0;  // |beta_k| beyond this is treated as divergence

// Solves info * x = rhs in place via Cholesky; info is p x p row-major
// and is destroyed. Throws SingularHessian on a non-positive pivot.
void solve_spd(std::vector<double>& info, std::vector<double>& rhs, std::size_t p) {
  double max_diag = 0.0;
  for (std::size_t k = 0; k < p; ++k) max_diag = std::max(max_diag, info[k * p + k]);
  const double floor = 1e-12 * std::max(max_diag, 1.0);

  for (std::size_t k = 0; k < p; ++k) {
    double piv = info[k * p + k];
    for (std::size_t s = 0; s < k; ++s) piv -= info[k * p + s] * info[k * p + s];
    if (!(piv > floor)) throw SingularHessian();
    piv = std::sqrt(piv);
    info[k * p + k] = piv;
    for (std::size_t i = k + 1; i < p; ++i) {
      double v = info[i * p + k];
      for (std::size_t s = 0; s < k; ++s) v -= info[i * p + s] * info[k * p + s];
      info[i * p + k] = v / piv;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    double v = rhs[i];
    for (std::size_t s = 0; s < i; ++s) v -= info[i * p + s] * rhs[s];
    rhs[i] = v / info[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double v = rhs[ii];
    for (std::size_t s = ii + 1; s < p; ++s) v -= info[s * p + ii] * rhs[s];
    rhs[ii] = v / info[ii * p + ii];
  }
}

// Preprocessed sweep order shared by all Newton iterations of one fit.
struct SweepPlan {
  const CoxDesign* design = nullptr;
  RiskRule rule = RiskRule::from_origin;
  std::vector<std::size_t> by_time;    // ascending event time
  std::vector<std::size_t> by_entry;   // ascending entry (from_entry only)
  std::vector<std::size_t> tie_begin;  // group s occupies by_time[tie_begin[s], tie_begin[s+1])
  std::size_t groups = 0;              // distinct event times, ascending index
};

SweepPlan make_plan(const CoxDesign& design, RiskRule rule) {
  SweepPlan plan;
  plan.design = &design;
  plan.rule = rule;
  const std::size_t n = design.rows();
  plan.by_time.resize(n);
  std::iota(plan.by_time.begin(), plan.by_time.end(), std::size_t{0});
  if (!std::is_sorted(design.time.begin(), design.time.end()))
    std::sort(plan.by_time.begin(), plan.by_time.end(),
              [&](std::size_t a, std::size_t b) { return design.time[a] < design.time[b]; });

  plan.tie_begin.push_back(0);
  for (std::size_t k = 1; k < n; ++k)
    if (design.time[plan.by_time[k]] != design.time[plan.by_time[k - 1]])
      plan.tie_begin.push_back(k);
  plan.tie_begin.push_back(n);
  plan.groups = plan.tie_begin.size() - 1;

  if (rule == RiskRule::from_entry) {
    plan.by_entry = plan.by_time;
    std::sort(plan.by_entry.begin(), plan.by_entry.end(),
              [&](std::size_t a, std::size_t b) { return design.entry[a] < design.entry[b]; });
  }
  return plan;
}

// Accumulates log-likelihood, score and (optionally) information at beta
// in one descending sweep over distinct event times.
struct SweepResult {
  double loglik = 0.0;
  std::vector<double> score;
  std::vector<double> info;  // p x p, row-major; filled only if want_info
};

SweepResult sweep(const SweepPlan& plan, const std::vector<double>& beta,
                  std::vector<double>& risk, bool want_info) {
  const CoxDesign& dsn = *plan.design;
  const std::size_t n = dsn.rows();
  const std::size_t p = dsn.p;

  risk.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    const double* zi = dsn.z.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) eta += beta[k] * zi[k];
    risk[i] = dsn.weight[i] * std::exp(eta);
  }

  SweepResult out;
  out.score.assign(p, 0.0);
  if (want_info) out.info.assign(p * p, 0.0);

  double s0 = 0.0;
  std::vector<double> s1(p, 0.0);
  std::vector<double> s2(want_info ? p * p : 0, 0.0);

  auto add_row = [&](std::size_t i, double sign) {
    const double r = sign * risk[i];
    const double* zi = dsn.z.data() + i * p;
    s0 += r;
    for (std::size_t a = 0; a < p; ++a) {
      s1[a] += r * zi[a];
      if (want_info)
        for (std::size_t b = 0; b <= a; ++b) s2[a * p + b] += r * zi[a] * zi[b];
    }
  };

  std::size_t next_add = n;    // consumes by_time from the back (largest times first)
  std::size_t next_del = n;    // consumes by_entry from the back (largest entries first)
  std::vector<double> dwz(p);

  for (std::size_t g = plan.groups; g-- > 0;) {
    const std::size_t lo = plan.tie_begin[g];
    const std::size_t hi = plan.tie_begin[g + 1];
    const double t = dsn.time[plan.by_time[lo]];

    while (next_add > lo) add_row(plan.by_time[--next_add], +1.0);
    if (plan.rule == RiskRule::from_entry)
      while (next_del > 0 && dsn.entry[plan.by_entry[next_del - 1]] > t)
        add_row(plan.by_entry[--next_del], -1.0);

    double dw = 0.0, dweta = 0.0;
    std::fill(dwz.begin(), dwz.end(), 0.0);
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = plan.by_time[k];
      const double w = dsn.weight[i];
      const double* zi = dsn.z.data() + i * p;
      dw += w;
      for (std::size_t a = 0; a < p; ++a) {
        dwz[a] += w * zi[a];
        dweta += beta[a] * zi[a] * w;
      }
    }

    if (!(s0 > 0.0)) throw EmptyRiskSet(t);
    out.loglik += dweta - dw * std::log(s0);
    for (std::size_t a = 0; a < p; ++a) {
      const double xbar = s1[a] / s0;
      out.score[a] += dwz[a] - dw * xbar;
      if (want_info)
        for (std::size_t b = 0; b <= a; ++b)
          out.info[a * p + b] += dw * (s2[a * p + b] / s0 - xbar * s1[b] / s0);
    }
  }
  if (want_info)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) out.info[a * p + b] = out.info[b * p + a];
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

void CoxDesign::clear() {
  time.clear();
  weight.clear();
  entry.clear();
  z.clear();
}

void CoxDesign::reserve(std::size_t rows, std::size_t pp) {
  p = pp;
  time.reserve(rows);
  weight.reserve(rows);
  entry.reserve(rows);
  z.reserve(rows * pp);
}

void CoxDesign::add(double t, double w, double ent, const double* zrow) {
  if (w < 0.0) throw ValidationError("negative observation weight");
  if (w == 0.0) return;
  time.push_back(t);
  weight.push_back(w);
  entry.push_back(ent);
  z.insert(z.end(), zrow, zrow + p);
}

CoxDesign CoxDesign::from_observations(const std::vector<WeightedObservation>& obs) {
  CoxDesign dsn;
  if (obs.empty()) return dsn;
  dsn.reserve(obs.size(), obs.front().z.size());
  for (const WeightedObservation& o : obs) {
    if (o.z.size() != dsn.p) throw ValidationError("observation covariate dimension mismatch");
    if (std::isfinite(o.entry) && !(o.entry < o.time))
      throw ValidationError("observation entry must precede its event time");
    dsn.add(o.time, o.weight, o.entry, o.z.data());
  }
  return dsn;
}

CoxFit fit_weighted_cox(const CoxDesign& design, RiskRule rule, std::vector<double> init,
                        const CoxSolverOptions& options) {
  const std::size_t p = design.p;
  if (design.rows() == 0) throw ValidationError("no positive-weight observations");
  if (init.empty()) init.assign(p, 0.0);
  if (init.size() != p) throw ValidationError("init dimension mismatch");

  const SweepPlan plan = make_plan(design, rule);
  std::vector<double> risk;

  std::vector<double> beta = std::move(init);
  SweepResult cur = sweep(plan, beta, risk, true);

  CoxFit fit;
  int it = 0;
  bool converged = false;
  while (it < options.max_iter) {
    ++it;
    std::vector<double> step = cur.score;
    std::vector<double> chol = cur.info;
    solve_spd(chol, step, p);

    std::vector<double> cand(p);
    SweepResult next;
    int halvings = 0;
    double scale = 1.0;
    for (;;) {
      for (std::size_t k = 0; k < p; ++k) cand[k] = beta[k] + scale * step[k];
      next = sweep(plan, cand, risk, true);
      if (next.loglik >= cur.loglik - 1e-12 * (std::fabs(cur.loglik) + 1.0)) break;
      if (++halvings > options.max_halvings) throw NoConvergence(it);
      scale *= 0.5;
    }

    const double rel_change =
        std::fabs(next.loglik - cur.loglik) / (std::fabs(cur.loglik) + 1.0);
    beta = cand;
    cur = std::move(next);
    if (max_abs(beta) > kBetaBound) throw NoConvergence(it);
    if (max_abs(cur.score) < options.score_tol && rel_change < options.loglik_rel_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence(it);

  fit.beta = beta;
  fit.loglik = cur.loglik;
  fit.iterations = it;
  fit.converged = true;
  fit.score_norm = max_abs(cur.score);
  std::tie(fit.baseline_times, fit.baseline_jumps) = breslow_baseline(beta, design, rule);
  return fit;
}

CoxFit fit_weighted_cox(const std::vector<WeightedObservation>& observations, RiskRule rule,
                        std::vector<double> init, const CoxSolverOptions& options) {
  return fit_weighted_cox(CoxDesign::from_observations(observations), rule, std::move(init),
                          options);
}

std::pair<std::vector<double>, std::vector<double>> breslow_baseline(
    const std::vector<double>& beta, const CoxDesign& design, RiskRule rule) {
  const std::size_t p = design.p;
  const std::size_t n = design.rows();
  if (n == 0) throw ValidationError("no positive-weight observations");
  const SweepPlan plan = make_plan(design, rule);

  std::vector<double> risk(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    const double* zi = design.z.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) eta += beta[k] * zi[k];
    risk[i] = design.weight[i] * std::exp(eta);
  }

  std::vector<double> times(plan.groups), jumps(plan.groups);
  double s0 = 0.0;
  std::size_t next_add = n, next_del = n;
  for (std::size_t g = plan.groups; g-- > 0;) {
    const std::size_t lo = plan.tie_begin[g];
    const std::size_t hi = plan.tie_begin[g + 1];
    const double t = design.time[plan.by_time[lo]];
    while (next_add > lo) s0 += risk[plan.by_time[--next_add]];
    if (rule == RiskRule::from_entry)
      while (next_del > 0 && design.entry[plan.by_entry[next_del - 1]] > t)
        s0 -= risk[plan.by_entry[--next_del]];
    double dw = 0.0;
    for (std::size_t k = lo; k < hi; ++k) dw += design.weight[plan.by_time[k]];
    if (!(s0 > 0.0)) throw EmptyRiskSet(t);
    times[g] = t;
    jumps[g] = dw / s0;
  }
  return {times, jumps};
}

namespace {

CoxDesign dataset_design(const TruncatedDataset& dataset, bool use_entry) {
  CoxDesign dsn;
  dsn.reserve(dataset.n, dataset.p);
  for (const SubjectRecord& rec : dataset.records)
    dsn.add(rec.t, 1.0, use_entry ? rec.l : -kInf, rec.z.data());
  return dsn;
}

}  // namespace

CoxFit cox_standard(const TruncatedDataset& dataset, const CoxSolverOptions& options) {
  return fit_weighted_cox(dataset_design(dataset, false), RiskRule::from_origin, {}, options);
}

CoxFit cox_left_adjusted(const TruncatedDataset& dataset, const CoxSolverOptions& options) {
  return fit_weighted_cox(dataset_design(dataset, true), RiskRule::from_entry, {}, options);
}

}  // namespace truncox
