#include "polite/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "polite/io.hpp"
#include "polite/rng.hpp"

namespace polite::infer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Unconstrained chart: z = (logit phi, log alpha, omega log-ratios vs pre).
std::array<double, 4> to_z(const rsa::ParamVector& p) {
  auto clamp01 = [](double x) { return std::clamp(x, 1e-12, 1.0 - 1e-12); };
  double phi = clamp01(p.phi);
  double w0 = std::max(p.omega[0], 1e-12);
  double w1 = std::max(p.omega[1], 1e-12);
  double w2 = std::max(p.omega[2], 1e-12);
  return {std::log(phi / (1.0 - phi)), std::log(std::max(p.alpha, 1e-300)), std::log(w0 / w2),
          std::log(w1 / w2)};
}

rsa::ParamVector to_params(const std::array<double, 4>& z) {
  rsa::ParamVector p;
  p.phi = sigmoid(z[0]);
  p.alpha = std::exp(z[1]);
  double m = std::max({z[2], z[3], 0.0});
  double e0 = std::exp(z[2] - m), e1 = std::exp(z[3] - m), e2 = std::exp(-m);
  double s = e0 + e1 + e2;
  p.omega = {e0 / s, e1 / s, e2 / s};
  return p;
}

// log |det d(params)/dz| = log(phi(1-phi)) + log(alpha) + sum log(omega_i).
double log_jacobian(const rsa::ParamVector& p) {
  double j = std::log(p.phi) + std::log1p(-p.phi) + std::log(p.alpha);
  for (double w : p.omega) j += std::log(w);
  return j;
}

double sample_mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_var(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Each chain contributes its first and last half (of the first 2*(n/2)
// draws), so within-chain drift shows up as between-segment variance.
std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
  std::size_t len = SIZE_MAX;
  for (const auto& c : chains) len = std::min(len, c.size());
  if (chains.empty() || len < 4) return {};
  std::size_t half = len / 2;
  std::vector<std::vector<double>> segs;
  segs.reserve(chains.size() * 2);
  for (const auto& c : chains) {
    segs.emplace_back(c.begin(), c.begin() + half);
    segs.emplace_back(c.begin() + (len - half), c.begin() + len);
  }
  return segs;
}

struct Variances {
  double w = 0.0;       // mean within-segment variance
  double var_hat = 0.0; // pooled posterior variance estimate
  std::size_t m = 0, n = 0;
};

bool segment_variances(const std::vector<std::vector<double>>& segs, Variances& out) {
  if (segs.size() < 2) return false;
  out.m = segs.size();
  out.n = segs[0].size();
  std::vector<double> means(out.m);
  double w = 0.0;
  for (std::size_t i = 0; i < out.m; ++i) {
    means[i] = sample_mean(segs[i]);
    w += sample_var(segs[i]);
  }
  out.w = w / static_cast<double>(out.m);
  double b_over_n = sample_var(means);
  double n = static_cast<double>(out.n);
  out.var_hat = (n - 1.0) / n * out.w + b_over_n;
  return true;
}

// Biased (divisor n) autocovariance at the given lag.
double autocov(const std::vector<double>& xs, std::size_t lag) {
  double m = sample_mean(xs);
  double s = 0.0;
  for (std::size_t i = 0; i + lag < xs.size(); ++i) s += (xs[i] - m) * (xs[i + lag] - m);
  return s / static_cast<double>(xs.size());
}

}  // namespace

double param_component(const rsa::ParamVector& p, std::size_t i) {
  switch (i) {
    case 0: return p.phi;
    case 1: return p.alpha;
    case 2: return p.omega[0];
    case 3: return p.omega[1];
    case 4: return p.omega[2];
    default: throw std::out_of_range("param_component");
  }
}

std::int64_t CountMatrix::row_total(std::size_t s) const {
  std::int64_t t = 0;
  for (std::size_t u = 0; u < num_utterances; ++u) t += at(s, u);
  return t;
}

void CountMatrix::validate() const {
  if (num_states == 0 || num_utterances == 0 || counts.size() != num_states * num_utterances)
    throw std::invalid_argument("count matrix: empty or shape mismatch");
  for (auto c : counts)
    if (c < 0) throw std::invalid_argument("count matrix: negative count");
}

CountMatrix transform_to_counts(const Mat& probs, std::int64_t per_state_total) {
  if (per_state_total < 0) throw std::invalid_argument("transform_to_counts: negative total");
  if (probs.rows == 0 || probs.cols == 0)
    throw std::invalid_argument("transform_to_counts: empty distribution");
  CountMatrix out;
  out.num_states = probs.rows;
  out.num_utterances = probs.cols;
  out.counts.assign(probs.rows * probs.cols, 0);
  const double total = static_cast<double>(per_state_total);
  for (std::size_t s = 0; s < probs.rows; ++s) {
    double z = 0.0;
    for (std::size_t u = 0; u < probs.cols; ++u) {
      double p = probs.at(s, u);
      if (!(p >= 0.0))
        throw std::invalid_argument("transform_to_counts: negative probability in state " +
                                    std::to_string(s + 1));
      z += p;
    }
    if (std::abs(z - 1.0) > 1e-6)
      throw std::invalid_argument("transform_to_counts: state " + std::to_string(s + 1) +
                                  " probabilities sum to " + format_double(z));

    std::int64_t row_sum = 0;
    std::vector<double> residual(probs.cols);
    for (std::size_t u = 0; u < probs.cols; ++u) {
      double expected = probs.at(s, u) * total;
      auto rounded = static_cast<std::int64_t>(std::llround(expected));
      out.at(s, u) = rounded;
      residual[u] = expected - static_cast<double>(rounded);
      row_sum += rounded;
    }
    // Largest-remainder repair: hand surplus units to the most-underrounded
    // entries, take deficits from the most-overrounded.
    std::vector<std::size_t> order(probs.cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (residual[a] != residual[b]) return residual[a] > residual[b];
      return a < b;
    });
    std::int64_t diff = per_state_total - row_sum;
    for (std::int64_t i = 0; i < diff; ++i) out.at(s, order[static_cast<std::size_t>(i)]) += 1;
    for (std::int64_t i = 0; i < -diff; ++i) {
      std::size_t u = order[order.size() - 1 - static_cast<std::size_t>(i)];
      out.at(s, u) -= 1;
    }
  }
  out.validate();
  return out;
}

ModelContext ModelContext::defaults(rsa::SemanticsTable theta) {
  ModelContext ctx;
  ctx.theta = std::move(theta);
  ctx.grid = rsa::default_phi_grid();
  ctx.state_prior = rsa::uniform_state_prior(ctx.theta.num_states);
  ctx.values = rsa::default_state_values(ctx.theta.num_states);
  return ctx;
}

PosteriorModel::PosteriorModel(ModelContext ctx, CountMatrix data)
    : ctx_(std::move(ctx)),
      data_(std::move(data)),
      eval_(ctx_.theta, ctx_.grid, ctx_.state_prior, ctx_.values) {
  data_.validate();
  if (data_.num_states != ctx_.theta.num_states ||
      data_.num_utterances != ctx_.theta.theta.rows)
    throw std::invalid_argument("posterior model: counts shape does not match semantics table");
  if (!(ctx_.alpha_max > 0.0))
    throw std::invalid_argument("posterior model: alpha_max must be positive");
}

bool PosteriorModel::in_support(const rsa::ParamVector& p) const {
  if (!(p.phi >= 0.0 && p.phi <= 1.0)) return false;
  if (!(p.alpha > 0.0 && p.alpha <= ctx_.alpha_max)) return false;
  double z = 0.0;
  for (double w : p.omega) {
    if (!(w >= 0.0)) return false;
    z += w;
  }
  return std::abs(z - 1.0) <= 1e-9;
}

double PosteriorModel::log_likelihood(const rsa::ParamVector& p, Scratch& scratch) const {
  if (scratch.alpha_ctx.alpha != p.alpha) eval_.prepare(p.alpha, scratch.alpha_ctx);
  int bad = eval_.log_speaker2(scratch.alpha_ctx, p.phi, p.omega, scratch.log_s2);
  if (bad >= 0) return kNegInf;
  double ll = 0.0;
  for (std::size_t s = 0; s < data_.num_states; ++s)
    for (std::size_t u = 0; u < data_.num_utterances; ++u) {
      auto c = data_.at(s, u);
      if (c > 0) ll += static_cast<double>(c) * scratch.log_s2.at(s, u);
    }
  return ll;
}

double PosteriorModel::log_posterior(const rsa::ParamVector& p, Scratch& scratch) const {
  if (!in_support(p)) return kNegInf;
  return log_likelihood(p, scratch);
}

double PosteriorModel::log_posterior(const rsa::ParamVector& p) const {
  Scratch scratch;
  return log_posterior(p, scratch);
}

Mat PosteriorModel::predictive(const rsa::ParamVector& p) const {
  // The uniform collapse at alpha == 0 is exact; exp(-log n) is not.
  if (p.alpha == 0.0)
    return Mat(data_.num_states, data_.num_utterances,
               1.0 / static_cast<double>(data_.num_utterances));
  Scratch scratch;
  eval_.prepare(p.alpha, scratch.alpha_ctx);
  int bad = eval_.log_speaker2(scratch.alpha_ctx, p.phi, p.omega, scratch.log_s2);
  if (bad >= 0)
    throw std::runtime_error("predictive: every utterance is impossible for state " +
                             std::to_string(bad + 1));
  Mat out(data_.num_states, data_.num_utterances);
  for (std::size_t s = 0; s < out.rows; ++s)
    for (std::size_t u = 0; u < out.cols; ++u) out.at(s, u) = std::exp(scratch.log_s2.at(s, u));
  return out;
}

double log_posterior(const rsa::ParamVector& p, const CountMatrix& data,
                     const rsa::SemanticsTable& theta) {
  PosteriorModel model(ModelContext::defaults(theta), data);
  return model.log_posterior(p);
}

std::vector<double> Chains::pooled(std::size_t param) const {
  std::vector<double> out;
  for (const auto& c : chains)
    for (const auto& d : c) out.push_back(param_component(d.params, param));
  return out;
}

std::vector<std::vector<double>> Chains::per_chain(std::size_t param) const {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    std::vector<double> xs;
    xs.reserve(c.size());
    for (const auto& d : c) xs.push_back(param_component(d.params, param));
    out.push_back(std::move(xs));
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  auto segs = split_halves(chains);
  Variances v;
  if (!segment_variances(segs, v)) return std::numeric_limits<double>::quiet_NaN();
  if (v.w <= 0.0) return v.var_hat <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(v.var_hat / v.w);
}

double split_ess(const std::vector<std::vector<double>>& chains) {
  auto segs = split_halves(chains);
  Variances v;
  if (!segment_variances(segs, v)) return std::numeric_limits<double>::quiet_NaN();
  double total = static_cast<double>(v.m * v.n);
  if (v.var_hat <= 0.0) return total;

  // Geyer initial-monotone pairing of averaged autocorrelations.
  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (const auto& seg : segs) s += autocov(seg, lag);
    s /= static_cast<double>(v.m);
    return 1.0 - (v.w - s) / v.var_hat;
  };
  double tau_sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < v.n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev);
    tau_sum += pair;
    prev = pair;
  }
  double tau = std::max(-1.0 + 2.0 * tau_sum, 1e-3);
  return std::min(total / tau, 10.0 * total);
}

std::pair<double, double> hdi(std::vector<double> draws, double mass) {
  if (draws.empty()) throw std::invalid_argument("hdi: no draws");
  if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("hdi: mass outside (0, 1]");
  std::sort(draws.begin(), draws.end());
  std::size_t n = draws.size();
  auto m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)));
  m = std::clamp<std::size_t>(m, 1, n);
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + m <= n; ++i) {
    double width = draws[i + m - 1] - draws[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {draws[best], draws[best + m - 1]};
}

namespace {

void fill_diagnostics(Chains& out) {
  out.warnings.clear();
  out.converged = true;
  for (std::size_t i = 0; i < 5; ++i) {
    auto seqs = out.per_chain(i);
    out.rhat[i] = split_rhat(seqs);
    out.ess[i] = split_ess(seqs);
    if (!(out.rhat[i] <= 1.05)) {
      out.converged = false;
      out.warnings.push_back(std::string("R-hat for ") + kParamNames[i] + " = " +
                             (std::isnan(out.rhat[i]) ? "nan" : format_double(out.rhat[i])) +
                             " exceeds 1.05");
    }
  }
}

struct TargetEval {
  double lp_model = kNegInf;  // log posterior of the constrained params
  double lp = kNegInf;        // plus the change-of-variables term
};

TargetEval eval_target(const PosteriorModel& model, const std::array<double, 4>& z,
                       PosteriorModel::Scratch& scratch) {
  auto p = to_params(z);
  if (!model.in_support(p)) return {};
  TargetEval e;
  e.lp_model = model.log_posterior(p, scratch);
  e.lp = e.lp_model + log_jacobian(p);
  return e;
}

bool cholesky4(const std::array<std::array<double, 4>, 4>& a,
               std::array<std::array<double, 4>, 4>& l) {
  for (auto& row : l) row.fill(0.0);
  for (std::size_t j = 0; j < 4; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0)) return false;
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < 4; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return true;
}

// Cholesky factor of the sample covariance of warmup visits. Fails (keeping
// whatever shape was in use) when the window is too short to estimate one.
bool learn_shape(const std::vector<std::array<double, 4>>& visits,
                 std::array<std::array<double, 4>, 4>& shape) {
  if (visits.size() < 50) return false;
  const double n = static_cast<double>(visits.size());
  std::array<double, 4> mean{};
  for (const auto& v : visits)
    for (std::size_t i = 0; i < 4; ++i) mean[i] += v[i];
  for (auto& m : mean) m /= n;
  std::array<std::array<double, 4>, 4> cov{};
  for (const auto& v : visits)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t k = 0; k <= i; ++k) cov[i][k] += (v[i] - mean[i]) * (v[k] - mean[k]);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k <= i; ++k) {
      cov[i][k] /= n - 1.0;
      cov[k][i] = cov[i][k];
    }
  // Jitter keeps the factorization alive when a chain sat still in a direction.
  for (std::size_t i = 0; i < 4; ++i) cov[i][i] += 1e-8 + 1e-6 * cov[i][i];
  return cholesky4(cov, shape);
}

}  // namespace

Chains sample_posterior(const PosteriorModel& model, const ChainConfig& config) {
  if (config.n_chains < 1 || config.n_samples < 1 || config.n_warmup < 0)
    throw std::invalid_argument("sample_posterior: invalid chain configuration");
  Chains out;
  out.config = config;
  out.chains.resize(static_cast<std::size_t>(config.n_chains));

  for (int chain = 0; chain < config.n_chains; ++chain) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(chain)));
    PosteriorModel::Scratch scratch;

    std::array<double, 4> z{};
    TargetEval cur;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      rsa::ParamVector init;
      init.phi = rng.uniform(0.15, 0.85);
      init.alpha = rng.uniform(0.4, std::min(6.0, model.context().alpha_max));
      init.omega = rng.dirichlet3();
      z = to_z(init);
      cur = eval_target(model, z, scratch);
      ok = std::isfinite(cur.lp);
    }
    if (!ok)
      throw std::runtime_error("sample_posterior: could not find a starting point with "
                               "positive posterior density");

    std::array<double, 4> log_step;
    log_step.fill(std::log(config.init_step));
    auto& draws = out.chains[static_cast<std::size_t>(chain)];
    draws.reserve(static_cast<std::size_t>(config.n_samples));

    // Coordinate steps cannot follow the ridge the likelihood carves between
    // alpha and the omega weights, so later warmup adds a correlated proposal
    // whose shape is the sample covariance of earlier warmup visits. The shape
    // is re-learned at each quarter of the remaining warmup from progressively
    // better-mixed visits, then frozen with everything else for sampling.
    const int phase_a = config.n_warmup / 2;
    const int quarter = (config.n_warmup - phase_a) / 4;
    std::vector<std::array<double, 4>> visits;
    visits.reserve(static_cast<std::size_t>(config.n_warmup) / 2 + 1);
    std::array<std::array<double, 4>, 4> shape{};
    bool have_shape = false;
    double log_scale = std::log(2.38 / 2.0);

    const auto coordinate_sweep = [&](int it, bool adapting) {
      for (std::size_t d = 0; d < 4; ++d) {
        auto zp = z;
        zp[d] += std::exp(log_step[d]) * rng.normal();
        TargetEval prop = eval_target(model, zp, scratch);
        double log_a = prop.lp - cur.lp;
        double a = log_a >= 0.0 ? 1.0 : std::exp(log_a);
        if (rng.uniform() < a) {
          z = zp;
          cur = prop;
        }
        if (adapting) {
          double gamma = std::min(0.5, std::pow(static_cast<double>(it), -0.6));
          log_step[d] = std::clamp(log_step[d] + gamma * (a - config.target_accept), -8.0, 3.0);
        }
      }
    };

    // A unit-scale shaped move plus a triple-length one, so the chain can both
    // track the valley floor and cross between segments when it curves.
    const auto joint_moves = [&](int it, bool adapting) {
      for (int hop = 0; hop < 2; ++hop) {
        std::array<double, 4> xi{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        auto zp = z;
        const double scale = std::exp(log_scale) * (hop == 0 ? 1.0 : 3.0);
        for (std::size_t i = 0; i < 4; ++i) {
          double move = 0.0;
          for (std::size_t k = 0; k <= i; ++k) move += shape[i][k] * xi[k];
          zp[i] += scale * move;
        }
        TargetEval prop = eval_target(model, zp, scratch);
        double log_a = prop.lp - cur.lp;
        double a = log_a >= 0.0 ? 1.0 : std::exp(log_a);
        if (rng.uniform() < a) {
          z = zp;
          cur = prop;
        }
        if (hop == 0 && adapting) {
          double gamma = std::min(0.5, std::pow(static_cast<double>(it - phase_a), -0.6));
          log_scale = std::clamp(log_scale + gamma * (a - 0.25), -8.0, 3.0);
        }
      }
    };

    const int total = config.n_warmup + config.n_samples;
    for (int it = 1; it <= total; ++it) {
      const bool warm = it <= config.n_warmup;
      // Each recorded draw consumes several kernel rounds; the slow direction
      // of a near-flat valley decorrelates too gradually for one to be enough.
      const int rounds = warm ? 1 : 3;
      for (int round = 0; round < rounds; ++round) {
        coordinate_sweep(it, warm);
        if (have_shape && it > phase_a) joint_moves(it, warm);
      }

      if (warm) {
        if (it > phase_a / 2) visits.push_back(z);
        const bool boundary =
            it == phase_a ||
            (quarter > 0 && it > phase_a && (it - phase_a) % quarter == 0 && it < config.n_warmup);
        if (boundary) {
          if (learn_shape(visits, shape)) have_shape = true;
          visits.clear();
        }
      } else {
        draws.push_back({to_params(z), cur.lp_model});
      }
    }
  }

  fill_diagnostics(out);
  return out;
}

PosteriorSummary summarize(const Chains& chains, const PosteriorModel* model) {
  bool enough = false;
  for (const auto& c : chains.chains) enough = enough || c.size() >= 100;
  if (!enough)
    throw std::invalid_argument("summarize: need at least one chain with 100 draws");

  PosteriorSummary out;
  out.warnings = chains.warnings;

  const Draw* best = nullptr;
  for (const auto& c : chains.chains)
    for (const auto& d : c)
      if (!best || d.log_post > best->log_post) best = &d;
  out.map_params = best->params;
  out.map_log_posterior = best->log_post;

  if (model) {
    auto z = to_z(out.map_params);
    double best_lp = out.map_log_posterior;
    double step = 0.25;
    for (int iter = 0; iter < 200 && step > 1e-7; ++iter) {
      bool improved = false;
      for (std::size_t d = 0; d < 4; ++d)
        for (double dir : {1.0, -1.0}) {
          auto zt = z;
          zt[d] += dir * step;
          auto p = to_params(zt);
          double lp = model->log_posterior(p);
          if (lp > best_lp) {
            best_lp = lp;
            z = zt;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    out.map_params = to_params(z);
    out.map_log_posterior = best_lp;
  }

  for (std::size_t i = 0; i < 5; ++i) {
    auto pooled = chains.pooled(i);
    auto& ps = out.params[i];
    ps.mean = sample_mean(pooled);
    auto [lo, hi] = hdi(pooled, 0.95);
    ps.hdi_low = lo;
    ps.hdi_high = hi;
    if (lo == hi)
      out.warnings.push_back(std::string("degenerate HDI for ") + kParamNames[i]);
    ps.map = param_component(out.map_params, i);
    auto seqs = chains.per_chain(i);
    ps.rhat = split_rhat(seqs);
    ps.ess = split_ess(seqs);
  }
  out.converged = chains.converged;
  return out;
}

namespace {

// Centers of n equal cells spanning [lo, hi].
std::vector<double> cell_centers(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (static_cast<double>(i) + 0.5) / static_cast<double>(n) * (hi - lo);
  return out;
}

// Centroids of the equal-area triangulation of the simplex (side G).
std::vector<std::array<double, 3>> simplex_centroids(std::size_t g) {
  std::vector<std::array<double, 3>> out;
  out.reserve(g * g);
  double den = 3.0 * static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; i + j < g; ++j) {
      double w0 = (3.0 * static_cast<double>(i) + 1.0) / den;
      double w1 = (3.0 * static_cast<double>(j) + 1.0) / den;
      out.push_back({w0, w1, 1.0 - w0 - w1});
    }
  for (std::size_t i = 0; i + 1 < g; ++i)
    for (std::size_t j = 0; i + j + 1 < g; ++j) {
      double w0 = (3.0 * static_cast<double>(i) + 2.0) / den;
      double w1 = (3.0 * static_cast<double>(j) + 2.0) / den;
      out.push_back({w0, w1, 1.0 - w0 - w1});
    }
  return out;
}

struct PassAccum {
  std::array<double, 5> mean{};
  std::array<double, 5> sd{};
  double log_norm = 0.0;
  std::vector<double> log_density;
  std::vector<rsa::ParamVector> params;
};

// Sweeps alpha outermost so the pragmatic-listener tables are built once per
// alpha; phi next so presentational utilities are interpolated once per
// (alpha, phi).
PassAccum run_pass(const PosteriorModel& model, const std::vector<double>& phis,
                   const std::vector<double>& alphas,
                   const std::vector<std::array<double, 3>>& omegas) {
  const auto& eval = model.evaluator();
  const auto& data = model.data();
  PassAccum acc;
  acc.log_density.reserve(phis.size() * alphas.size() * omegas.size());
  acc.params.reserve(phis.size() * alphas.size() * omegas.size());

  rsa::S2Evaluator::AlphaContext ctx;
  Mat log_s2;
  for (double alpha : alphas) {
    eval.prepare(alpha, ctx);
    for (double phi : phis) {
      for (const auto& omega : omegas) {
        int bad = eval.log_speaker2(ctx, phi, omega, log_s2);
        double ll;
        if (bad >= 0) {
          ll = kNegInf;
        } else {
          ll = 0.0;
          for (std::size_t s = 0; s < data.num_states; ++s)
            for (std::size_t u = 0; u < data.num_utterances; ++u) {
              auto c = data.at(s, u);
              if (c > 0) ll += static_cast<double>(c) * log_s2.at(s, u);
            }
        }
        acc.log_density.push_back(ll);
        acc.params.push_back({phi, alpha, omega});
      }
    }
  }

  acc.log_norm = log_sum_exp(acc.log_density);
  if (!std::isfinite(acc.log_norm))
    throw std::runtime_error("grid_posterior: zero posterior mass over the grid");
  std::array<double, 5> sq{};
  for (std::size_t c = 0; c < acc.log_density.size(); ++c) {
    double w = std::exp(acc.log_density[c] - acc.log_norm);
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < 5; ++i) {
      double x = param_component(acc.params[c], i);
      acc.mean[i] += w * x;
      sq[i] += w * x * x;
    }
  }
  for (std::size_t i = 0; i < 5; ++i)
    acc.sd[i] = std::sqrt(std::max(0.0, sq[i] - acc.mean[i] * acc.mean[i]));
  return acc;
}

}  // namespace

GridPosterior grid_posterior(const PosteriorModel& model, const GridResolution& res) {
  const double alpha_max = model.context().alpha_max;
  std::size_t coarse_cells = res.coarse_phi * res.coarse_alpha * res.coarse_omega_side *
                             res.coarse_omega_side;
  std::size_t fine_cells = res.fine_phi * res.fine_alpha * res.fine_omega_side *
                           res.fine_omega_side;
  if (coarse_cells > res.max_cells || fine_cells > res.max_cells)
    throw std::invalid_argument("grid_posterior: resolution exceeds max_cells = " +
                                std::to_string(res.max_cells));

  auto coarse = run_pass(model, cell_centers(0.0, 1.0, res.coarse_phi),
                         cell_centers(0.0, alpha_max, res.coarse_alpha),
                         simplex_centroids(res.coarse_omega_side));

  // Window the fine pass around the coarse mass; the floor keeps the window
  // several coarse cells wide even when one cell dominates.
  auto window = [&](std::size_t i, double cell_width, double lo_lim, double hi_lim) {
    double sd = std::max(coarse.sd[i], 0.5 * cell_width);
    double lo = std::max(lo_lim, coarse.mean[i] - res.window_sds * sd);
    double hi = std::min(hi_lim, coarse.mean[i] + res.window_sds * sd);
    return std::pair<double, double>{lo, hi};
  };
  auto [phi_lo, phi_hi] = window(0, 1.0 / static_cast<double>(res.coarse_phi), 0.0, 1.0);
  auto [alpha_lo, alpha_hi] =
      window(1, alpha_max / static_cast<double>(res.coarse_alpha), 1e-9, alpha_max);
  auto [w0_lo, w0_hi] = window(2, 1.0 / static_cast<double>(res.coarse_omega_side), 0.0, 1.0);
  auto [w1_lo, w1_hi] = window(3, 1.0 / static_cast<double>(res.coarse_omega_side), 0.0, 1.0);

  auto w0s = cell_centers(w0_lo, w0_hi, res.fine_omega_side);
  auto w1s = cell_centers(w1_lo, w1_hi, res.fine_omega_side);
  std::vector<std::array<double, 3>> omegas;
  omegas.reserve(w0s.size() * w1s.size());
  for (double w0 : w0s)
    for (double w1 : w1s) {
      double w2 = 1.0 - w0 - w1;
      if (w2 > 1e-12) omegas.push_back({w0, w1, w2});
    }
  if (omegas.empty())
    throw std::runtime_error("grid_posterior: fine omega window has no simplex cells");

  auto fine = run_pass(model, cell_centers(phi_lo, phi_hi, res.fine_phi),
                       cell_centers(alpha_lo, alpha_hi, res.fine_alpha), omegas);

  GridPosterior out;
  out.mean = fine.mean;
  out.sd = fine.sd;
  out.coarse_mean = coarse.mean;
  out.log_normalizer = fine.log_norm;
  out.num_cells = fine.log_density.size();
  out.log_density = std::move(fine.log_density);
  out.cell_params = std::move(fine.params);
  return out;
}

GridPosterior grid_posterior(const CountMatrix& data, const rsa::SemanticsTable& theta,
                             const GridResolution& res) {
  PosteriorModel model(ModelContext::defaults(theta), data);
  return grid_posterior(model, res);
}

double posterior_predictive_mse(const PosteriorModel& model, const rsa::ParamVector& p,
                                const CountMatrix& heldout) {
  heldout.validate();
  if (heldout.num_states != model.data().num_states ||
      heldout.num_utterances != model.data().num_utterances)
    throw std::invalid_argument("posterior_predictive_mse: held-out shape mismatch");
  auto pred = model.predictive(p);
  double se = 0.0;
  for (std::size_t s = 0; s < heldout.num_states; ++s) {
    auto total = heldout.row_total(s);
    if (total <= 0)
      throw std::invalid_argument("posterior_predictive_mse: state " + std::to_string(s + 1) +
                                  " has no held-out observations");
    for (std::size_t u = 0; u < heldout.num_utterances; ++u) {
      double emp = static_cast<double>(heldout.at(s, u)) / static_cast<double>(total);
      double d = pred.at(s, u) - emp;
      se += d * d;
    }
  }
  return se / static_cast<double>(heldout.num_states * heldout.num_utterances);
}

BaselineResult random_baseline(const PosteriorModel& model, const CountMatrix& heldout,
                               std::size_t n_draws, std::uint64_t seed) {
  if (n_draws == 0) throw std::invalid_argument("random_baseline: n_draws must be positive");
  Rng rng(derive_seed(seed, 0x9ba5e11UL));
  BaselineResult out;
  out.mses.reserve(n_draws);
  for (std::size_t i = 0; i < n_draws; ++i) {
    rsa::ParamVector p;
    p.phi = rng.uniform();
    do {
      p.alpha = rng.gamma2();
    } while (!(p.alpha > 0.0 && p.alpha <= model.context().alpha_max));
    p.omega = rng.dirichlet3();
    out.mses.push_back(posterior_predictive_mse(model, p, heldout));
  }
  out.mean = sample_mean(out.mses);
  out.sd = std::sqrt(sample_var(out.mses));
  return out;
}

double two_sample_z(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("two_sample_z: empty sample");
  double se2 = sample_var(a) / static_cast<double>(a.size()) +
               sample_var(b) / static_cast<double>(b.size());
  double diff = sample_mean(a) - sample_mean(b);
  if (se2 <= 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : kNegInf;
  }
  return diff / std::sqrt(se2);
}

void write_chains_csv(const std::filesystem::path& p, const Chains& chains) {
  std::string out = "chain,draw,phi,alpha,omega_inf,omega_soc,omega_pre,log_posterior\n";
  for (std::size_t c = 0; c < chains.chains.size(); ++c)
    for (std::size_t d = 0; d < chains.chains[c].size(); ++d) {
      const auto& draw = chains.chains[c][d];
      out += std::to_string(c) + "," + std::to_string(d) + "," + format_double(draw.params.phi) +
             "," + format_double(draw.params.alpha) + "," + format_double(draw.params.omega[0]) +
             "," + format_double(draw.params.omega[1]) + "," +
             format_double(draw.params.omega[2]) + "," + format_double(draw.log_post) + "\n";
    }
  io::write_file(p, out);
}

Chains read_chains_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() ||
      lines[0] != "chain,draw,phi,alpha,omega_inf,omega_soc,omega_pre,log_posterior")
    throw std::runtime_error(p.string() + ": unexpected chains header");
  Chains out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 8) throw std::runtime_error(p.string() + ": malformed row " + lines[i]);
    std::size_t chain = 0;
    auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), chain);
    if (ec != std::errc()) throw std::runtime_error(p.string() + ": bad chain index " + f[0]);
    if (chain >= out.chains.size()) out.chains.resize(chain + 1);
    Draw d;
    d.params.phi = parse_double(f[2]);
    d.params.alpha = parse_double(f[3]);
    d.params.omega = {parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    d.log_post = parse_double(f[7]);
    out.chains[chain].push_back(d);
  }
  if (out.chains.empty()) throw std::runtime_error(p.string() + ": no draws");
  out.config.n_chains = static_cast<int>(out.chains.size());
  out.config.n_samples = static_cast<int>(out.chains[0].size());
  fill_diagnostics(out);
  return out;
}

}  // namespace polite::infer
