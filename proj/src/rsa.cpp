#include "polite/rsa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polite::rsa {

namespace {

std::string ordinal_state(std::size_t s) { return std::to_string(s + 1); }

void check_prior(const std::vector<double>& prior, std::size_t n, const char* who) {
  if (prior.size() != n)
    throw std::invalid_argument(std::string(who) + ": state prior has " +
                                std::to_string(prior.size()) + " entries, expected " +
                                std::to_string(n));
  double z = 0.0;
  for (double p : prior) {
    if (p < 0.0) throw std::invalid_argument(std::string(who) + ": negative state prior entry");
    z += p;
  }
  if (z <= 0.0) throw std::invalid_argument(std::string(who) + ": state prior sums to zero");
}

// phi * log L0(s|u) + (1 - phi) * E_L0[V|u] for every (utterance, state).
Mat first_order_utility(const Mat& log_l0, const std::vector<double>& soc_l0, double phi) {
  Mat util(log_l0.rows, log_l0.cols);
  for (std::size_t u = 0; u < log_l0.rows; ++u)
    for (std::size_t s = 0; s < log_l0.cols; ++s)
      util.at(u, s) = phi * log_l0.at(u, s) + (1.0 - phi) * soc_l0[u];
  return util;
}

// Softmax over utterances of alpha * util, one row per state. Throws when a
// state has no possible utterance under a positive alpha.
ConditionalDistribution soft_speaker(const Mat& util, double alpha, const char* who) {
  const std::size_t nu = util.rows, ns = util.cols;
  ConditionalDistribution out;
  out.p = Mat(ns, nu);
  for (std::size_t s = 0; s < ns; ++s) {
    double best = -HUGE_VAL;
    for (std::size_t u = 0; u < nu; ++u) best = std::max(best, util.at(u, s));
    if (alpha > 0.0 && best <= kLogZeroGuard)
      throw std::runtime_error(std::string(who) + ": every utterance is impossible for state " +
                               ordinal_state(s));
    double z = 0.0;
    double m = alpha * best;
    for (std::size_t u = 0; u < nu; ++u) {
      double w = std::exp(alpha * util.at(u, s) - m);
      out.p.at(s, u) = w;
      z += w;
    }
    for (std::size_t u = 0; u < nu; ++u) out.p.at(s, u) /= z;
  }
  return out;
}

double interp_log_marginal(const std::vector<double>& grid_values, std::span<const double> marg,
                           double phi) {
  const std::size_t k = grid_values.size();
  if (k == 1) return log_or_sentinel(marg[0]);
  double lo = grid_values.front(), hi = grid_values.back();
  double x = std::clamp(phi, lo, hi);
  std::size_t i = 0;
  while (i + 2 < k && grid_values[i + 1] < x) ++i;
  double x0 = grid_values[i], x1 = grid_values[i + 1];
  double y0 = log_or_sentinel(marg[i]), y1 = log_or_sentinel(marg[i + 1]);
  double t = (x - x0) / (x1 - x0);
  return y0 + t * (y1 - y0);
}

}  // namespace

Lexicon default_lexicon() { return Lexicon{{"terrible", "bad", "good", "amazing"}}; }

std::vector<Utterance> utterance_set(const Lexicon& lex) {
  std::vector<Utterance> out;
  out.reserve(lex.descriptors.size() * 2);
  for (const auto& d : lex.descriptors) out.push_back({d, false});
  for (const auto& d : lex.descriptors) out.push_back({d, true});
  return out;
}

void SemanticsTable::validate() const {
  if (utterances.size() != theta.rows || num_states != theta.cols)
    throw std::invalid_argument("semantics table: label/shape mismatch");
  if (theta.rows == 0 || theta.cols == 0)
    throw std::invalid_argument("semantics table: empty");
  for (std::size_t u = 0; u < theta.rows; ++u)
    for (std::size_t s = 0; s < theta.cols; ++s) {
      double t = theta.at(u, s);
      if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("semantics table: theta('" + utterances[u] + "', state " +
                                    ordinal_state(s) + ") = " + format_double(t) +
                                    " outside [0, 1]");
    }
}

void PhiGrid::validate() const {
  if (values.empty() || values.size() != prior.size())
    throw std::invalid_argument("phi grid: values/prior size mismatch");
  double z = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      throw std::invalid_argument("phi grid: value outside [0, 1]");
    if (i > 0 && values[i] <= values[i - 1])
      throw std::invalid_argument("phi grid: values must be strictly increasing");
    if (prior[i] < 0.0) throw std::invalid_argument("phi grid: negative prior");
    z += prior[i];
  }
  if (std::abs(z - 1.0) > 1e-9)
    throw std::invalid_argument("phi grid: prior sums to " + format_double(z) + ", expected 1");
}

PhiGrid PhiGrid::uniform_midpoints(std::size_t k) {
  PhiGrid g;
  g.values.resize(k);
  g.prior.assign(k, 1.0 / static_cast<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    g.values[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
  return g;
}

PhiGrid default_phi_grid() { return PhiGrid::uniform_midpoints(10); }

void ParamVector::validate(bool strict_alpha) const {
  if (!(phi >= 0.0 && phi <= 1.0))
    throw std::invalid_argument("params: phi = " + format_double(phi) + " outside [0, 1]");
  if (!(alpha >= 0.0) || (strict_alpha && alpha == 0.0))
    throw std::invalid_argument("params: alpha = " + format_double(alpha) + " must be positive");
  double z = 0.0;
  for (double w : omega) {
    if (!(w >= 0.0)) throw std::invalid_argument("params: negative omega component");
    z += w;
  }
  if (std::abs(z - 1.0) > 1e-9)
    throw std::invalid_argument("params: omega sums to " + format_double(z) + ", expected 1");
}

void ConditionalDistribution::validate(double tol) const {
  for (std::size_t r = 0; r < rows(); ++r) {
    double z = 0.0;
    for (double x : row(r)) {
      if (!(x >= 0.0 && x <= 1.0 + tol))
        throw std::runtime_error("distribution: entry outside [0, 1]");
      z += x;
    }
    if (std::abs(z - 1.0) > tol)
      throw std::runtime_error("distribution: row " + std::to_string(r) + " sums to " +
                               format_double(z));
  }
}

std::vector<double> uniform_state_prior(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> default_state_values(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i + 1);
  return v;
}

ConditionalDistribution literal_listener(const SemanticsTable& theta,
                                         const std::vector<double>& state_prior) {
  theta.validate();
  check_prior(state_prior, theta.num_states, "literal_listener");
  ConditionalDistribution out;
  out.p = Mat(theta.theta.rows, theta.num_states);
  for (std::size_t u = 0; u < theta.theta.rows; ++u) {
    double z = 0.0;
    for (std::size_t s = 0; s < theta.num_states; ++s) {
      double w = theta.at(u, s) * state_prior[s];
      out.p.at(u, s) = w;
      z += w;
    }
    if (z <= 0.0)
      throw std::runtime_error("literal_listener: utterance '" + theta.utterances[u] +
                               "' is true of no state with prior mass; cannot normalize");
    for (std::size_t s = 0; s < theta.num_states; ++s) out.p.at(u, s) /= z;
  }
  return out;
}

ConditionalDistribution speaker1(const ConditionalDistribution& l0, double phi, double alpha,
                                 const std::vector<double>& values) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw std::invalid_argument("speaker1: phi outside [0, 1]");
  if (!(alpha >= 0.0)) throw std::invalid_argument("speaker1: alpha must be >= 0");
  if (values.size() != l0.cols())
    throw std::invalid_argument("speaker1: values size does not match state count");
  Mat log_l0(l0.rows(), l0.cols());
  std::vector<double> soc(l0.rows());
  for (std::size_t u = 0; u < l0.rows(); ++u) {
    for (std::size_t s = 0; s < l0.cols(); ++s) log_l0.at(u, s) = log_or_sentinel(l0.p.at(u, s));
    soc[u] = dot(l0.row(u), values);
  }
  return soft_speaker(first_order_utility(log_l0, soc, phi), alpha, "speaker1");
}

JointListener pragmatic_listener(const SemanticsTable& theta, const PhiGrid& grid, double alpha,
                                 const std::vector<double>& state_prior,
                                 const std::vector<double>& values) {
  grid.validate();
  if (!(alpha >= 0.0)) throw std::invalid_argument("pragmatic_listener: alpha must be >= 0");
  auto l0 = literal_listener(theta, state_prior);
  const std::size_t nu = theta.theta.rows, ns = theta.num_states, nk = grid.values.size();
  std::vector<double> vals = values.empty() ? default_state_values(ns) : values;
  if (vals.size() != ns)
    throw std::invalid_argument("pragmatic_listener: values size does not match state count");

  Mat log_l0(nu, ns);
  std::vector<double> soc(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t s = 0; s < ns; ++s) log_l0.at(u, s) = log_or_sentinel(l0.p.at(u, s));
    soc[u] = dot(l0.row(u), vals);
  }

  std::vector<ConditionalDistribution> s1(nk);
  for (std::size_t k = 0; k < nk; ++k)
    s1[k] = soft_speaker(first_order_utility(log_l0, soc, grid.values[k]), alpha,
                         "pragmatic_listener");

  JointListener out;
  out.grid = grid;
  out.num_states = ns;
  out.joint.assign(nu, Mat(nk, ns));
  out.state_marginal = Mat(nu, ns);
  out.phi_marginal = Mat(nu, nk);
  for (std::size_t u = 0; u < nu; ++u) {
    double z = 0.0;
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t s = 0; s < ns; ++s) {
        double w = s1[k].p.at(s, u) * state_prior[s] * grid.prior[k];
        out.joint[u].at(k, s) = w;
        z += w;
      }
    if (z <= 0.0)
      throw std::runtime_error("pragmatic_listener: utterance '" + theta.utterances[u] +
                               "' has zero posterior mass; cannot normalize");
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t s = 0; s < ns; ++s) {
        double p = out.joint[u].at(k, s) / z;
        out.joint[u].at(k, s) = p;
        out.state_marginal.at(u, s) += p;
        out.phi_marginal.at(u, k) += p;
      }
  }
  return out;
}

double log_phi_marginal_at(const JointListener& l1, std::size_t u, double phi) {
  return interp_log_marginal(l1.grid.values, l1.phis_given(u), phi);
}

Utilities utilities(const JointListener& l1, std::size_t u, std::size_t s, double phi,
                    const std::vector<double>& values) {
  Utilities out;
  out.informational = log_or_sentinel(l1.state_marginal.at(u, s));
  out.social = dot(l1.states_given(u), values);
  out.presentational = log_phi_marginal_at(l1, u, phi);
  return out;
}

ConditionalDistribution speaker2(const SemanticsTable& theta, const ParamVector& params,
                                 const PhiGrid& grid, const std::vector<double>& state_prior,
                                 const std::vector<double>& values) {
  params.validate(false);
  if (values.size() != theta.num_states)
    throw std::invalid_argument("speaker2: values size does not match state count");
  auto l1 = pragmatic_listener(theta, grid, params.alpha, state_prior, values);
  const std::size_t nu = theta.theta.rows, ns = theta.num_states;
  Mat total(nu, ns);
  for (std::size_t u = 0; u < nu; ++u) {
    double pre = log_phi_marginal_at(l1, u, params.phi);
    double soc = dot(l1.states_given(u), values);
    for (std::size_t s = 0; s < ns; ++s) {
      double inf = log_or_sentinel(l1.state_marginal.at(u, s));
      total.at(u, s) = params.omega[0] * inf + params.omega[1] * soc + params.omega[2] * pre;
    }
  }
  return soft_speaker(total, params.alpha, "speaker2");
}

S2Evaluator::S2Evaluator(SemanticsTable theta, PhiGrid grid, std::vector<double> state_prior,
                         std::vector<double> values)
    : theta_(std::move(theta)),
      grid_(std::move(grid)),
      prior_(std::move(state_prior)),
      values_(std::move(values)) {
  theta_.validate();
  grid_.validate();
  check_prior(prior_, theta_.num_states, "speaker2");
  if (values_.size() != theta_.num_states)
    throw std::invalid_argument("speaker2: values size does not match state count");
  u_ = theta_.theta.rows;
  s_ = theta_.num_states;
  k_ = grid_.values.size();

  auto l0 = literal_listener(theta_, prior_);
  log_l0_ = Mat(u_, s_);
  soc_l0_.resize(u_);
  for (std::size_t u = 0; u < u_; ++u) {
    for (std::size_t s = 0; s < s_; ++s) log_l0_.at(u, s) = log_or_sentinel(l0.p.at(u, s));
    soc_l0_[u] = dot(l0.row(u), values_);
  }
  util_k_.reserve(k_);
  for (std::size_t k = 0; k < k_; ++k)
    util_k_.push_back(first_order_utility(log_l0_, soc_l0_, grid_.values[k]));
}

void S2Evaluator::prepare(double alpha, AlphaContext& ctx) const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("speaker2: alpha must be >= 0");
  ctx.alpha = alpha;
  ctx.u_inf = Mat(u_, s_);
  ctx.u_soc.assign(u_, 0.0);
  ctx.log_phi_marg = Mat(u_, k_);

  // log S1 under each grid phi, normalized per state in log space.
  std::vector<double> log_s1(k_ * s_ * u_);
  std::vector<double> w(u_);
  for (std::size_t k = 0; k < k_; ++k)
    for (std::size_t s = 0; s < s_; ++s) {
      for (std::size_t u = 0; u < u_; ++u) w[u] = alpha * util_k_[k].at(u, s);
      double lse = log_sum_exp(w);
      for (std::size_t u = 0; u < u_; ++u) log_s1[(k * s_ + s) * u_ + u] = w[u] - lse;
    }

  std::vector<double> log_joint(k_ * s_);
  for (std::size_t u = 0; u < u_; ++u) {
    for (std::size_t k = 0; k < k_; ++k)
      for (std::size_t s = 0; s < s_; ++s)
        log_joint[k * s_ + s] = log_s1[(k * s_ + s) * u_ + u] + log_or_sentinel(prior_[s]) +
                                log_or_sentinel(grid_.prior[k]);
    double lse = log_sum_exp(log_joint);
    double soc = 0.0;
    std::vector<double> marg_s(s_, 0.0);
    for (std::size_t k = 0; k < k_; ++k) {
      double mk = 0.0;
      for (std::size_t s = 0; s < s_; ++s) {
        double p = std::exp(log_joint[k * s_ + s] - lse);
        marg_s[s] += p;
        mk += p;
      }
      ctx.log_phi_marg.at(u, k) = log_or_sentinel(mk);
    }
    for (std::size_t s = 0; s < s_; ++s) {
      ctx.u_inf.at(u, s) = log_or_sentinel(marg_s[s]);
      soc += marg_s[s] * values_[s];
    }
    ctx.u_soc[u] = soc;
  }
}

double S2Evaluator::presentational(const AlphaContext& ctx, std::size_t u, double phi) const {
  if (k_ == 1) return ctx.log_phi_marg.at(u, 0);
  double lo = grid_.values.front(), hi = grid_.values.back();
  double x = std::clamp(phi, lo, hi);
  std::size_t i = 0;
  while (i + 2 < k_ && grid_.values[i + 1] < x) ++i;
  double x0 = grid_.values[i], x1 = grid_.values[i + 1];
  double t = (x - x0) / (x1 - x0);
  return ctx.log_phi_marg.at(u, i) + t * (ctx.log_phi_marg.at(u, i + 1) - ctx.log_phi_marg.at(u, i));
}

int S2Evaluator::log_speaker2(const AlphaContext& ctx, double phi,
                              const std::array<double, 3>& omega, Mat& out) const {
  if (out.rows != s_ || out.cols != u_) out = Mat(s_, u_);
  std::vector<double> pre(u_);
  for (std::size_t u = 0; u < u_; ++u) pre[u] = presentational(ctx, u, phi);
  std::vector<double> w(u_);
  for (std::size_t s = 0; s < s_; ++s) {
    double best = -HUGE_VAL;
    for (std::size_t u = 0; u < u_; ++u) {
      double tot = omega[0] * ctx.u_inf.at(u, s) + omega[1] * ctx.u_soc[u] + omega[2] * pre[u];
      w[u] = tot;
      best = std::max(best, tot);
    }
    if (ctx.alpha > 0.0 && best <= kLogZeroGuard) return static_cast<int>(s);
    for (std::size_t u = 0; u < u_; ++u) w[u] *= ctx.alpha;
    double lse = log_sum_exp(w);
    for (std::size_t u = 0; u < u_; ++u) out.at(s, u) = w[u] - lse;
  }
  return -1;
}

}  // namespace polite::rsa
