#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polite/rsa.hpp"

namespace polite::infer {

inline constexpr std::array<const char*, 5> kParamNames = {"phi", "alpha", "omega_inf",
                                                           "omega_soc", "omega_pre"};

double param_component(const rsa::ParamVector& p, std::size_t i);

// Observed utterance counts, one row per state.
struct CountMatrix {
  std::size_t num_states = 0;
  std::size_t num_utterances = 0;
  std::vector<std::int64_t> counts;  // states x utterances, row-major

  std::int64_t at(std::size_t s, std::size_t u) const { return counts[s * num_utterances + u]; }
  std::int64_t& at(std::size_t s, std::size_t u) { return counts[s * num_utterances + u]; }
  std::int64_t row_total(std::size_t s) const;
  void validate() const;  // non-negative entries, non-empty
};

// Rounds each probability to expected counts at the row total, then repairs
// rounding drift by largest remainder so every row sums exactly to total.
CountMatrix transform_to_counts(const Mat& probs, std::int64_t per_state_total);

// Everything the speaker model is conditioned on besides the parameters.
struct ModelContext {
  rsa::SemanticsTable theta;
  rsa::PhiGrid grid;
  std::vector<double> state_prior;
  std::vector<double> values;
  double alpha_max = 20.0;

  static ModelContext defaults(rsa::SemanticsTable theta);
};

// Uniform-prior posterior over ParamVector given counts. Owns the factored
// speaker evaluator; Scratch carries per-caller buffers so const evaluation
// is safe from multiple threads.
class PosteriorModel {
 public:
  PosteriorModel(ModelContext ctx, CountMatrix data);

  struct Scratch {
    rsa::S2Evaluator::AlphaContext alpha_ctx;
    Mat log_s2;
  };

  // Sum over cells of count * log P_S2(u|s); -inf when some state has no
  // possible utterance. Reuses the alpha context when alpha is unchanged.
  double log_likelihood(const rsa::ParamVector& p, Scratch& scratch) const;
  // Likelihood plus flat prior over the support: phi in [0,1], alpha in
  // (0, alpha_max], omega on the simplex.
  double log_posterior(const rsa::ParamVector& p, Scratch& scratch) const;
  double log_posterior(const rsa::ParamVector& p) const;

  bool in_support(const rsa::ParamVector& p) const;

  // Model-predicted utterance distribution per state (states x utterances).
  Mat predictive(const rsa::ParamVector& p) const;

  const ModelContext& context() const { return ctx_; }
  const CountMatrix& data() const { return data_; }
  const rsa::S2Evaluator& evaluator() const { return eval_; }

 private:
  ModelContext ctx_;
  CountMatrix data_;
  rsa::S2Evaluator eval_;
};

double log_posterior(const rsa::ParamVector& p, const CountMatrix& data,
                     const rsa::SemanticsTable& theta);

struct ChainConfig {
  int n_chains = 4;
  int n_warmup = 2000;
  int n_samples = 2000;
  std::uint64_t seed = 0;
  double target_accept = 0.44;  // per-coordinate random walk optimum
  double init_step = 0.5;
};

struct Draw {
  rsa::ParamVector params;
  double log_post = 0.0;
};

struct Chains {
  std::vector<std::vector<Draw>> chains;
  ChainConfig config;
  std::array<double, 5> rhat{};
  std::array<double, 5> ess{};
  bool converged = false;
  std::vector<std::string> warnings;

  std::vector<double> pooled(std::size_t param) const;
  std::vector<std::vector<double>> per_chain(std::size_t param) const;
};

// Adaptive random-walk Metropolis on the unconstrained reparameterization
// (logit phi, log alpha, softmax omega), component-wise with Robbins-Monro
// step adaptation during warmup. Convergence is flagged, never enforced.
Chains sample_posterior(const PosteriorModel& model, const ChainConfig& config);

struct ParamSummary {
  double mean = 0.0;
  double map = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::array<ParamSummary, 5> params;
  rsa::ParamVector map_params;
  double map_log_posterior = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Pooled means, shortest-interval HDIs, split R-hat / ESS, and the MAP (best
// pooled draw, hill-climbed when a model is supplied).
PosteriorSummary summarize(const Chains& chains, const PosteriorModel* model = nullptr);

// Split-chain diagnostics on raw sequences.
double split_rhat(const std::vector<std::vector<double>>& chains);
double split_ess(const std::vector<std::vector<double>>& chains);
// Shortest window covering the given mass of the pooled draws.
std::pair<double, double> hdi(std::vector<double> draws, double mass = 0.95);

// Deterministic quadrature reference for the same posterior: a coarse pass
// over the full support locates the mass, a fine pass over a +-window_sds
// window integrates it. All cells within a pass have equal volume.
struct GridResolution {
  std::size_t coarse_phi = 25, coarse_alpha = 100, coarse_omega_side = 20;
  std::size_t fine_phi = 24, fine_alpha = 40, fine_omega_side = 32;
  double window_sds = 6.0;
  std::size_t max_cells = 1'000'000;
};

struct GridPosterior {
  std::array<double, 5> mean{};    // posterior means from the fine pass
  std::array<double, 5> sd{};
  std::array<double, 5> coarse_mean{};
  double log_normalizer = 0.0;     // over the fine window, cell volume factored out
  std::size_t num_cells = 0;
  std::vector<double> log_density;            // fine cells, outside-simplex cells excluded
  std::vector<rsa::ParamVector> cell_params;  // matching fine cells
};

GridPosterior grid_posterior(const PosteriorModel& model, const GridResolution& res = {});
GridPosterior grid_posterior(const CountMatrix& data, const rsa::SemanticsTable& theta,
                             const GridResolution& res = {});

// Mean squared error between model-predicted distributions and held-out
// empirical proportions, over all (state, utterance) cells.
double posterior_predictive_mse(const PosteriorModel& model, const rsa::ParamVector& p,
                                const CountMatrix& heldout);

struct BaselineResult {
  std::vector<double> mses;
  double mean = 0.0;
  double sd = 0.0;
};

// MSE sample under parameters drawn from the baseline distributions:
// phi ~ U[0,1], alpha ~ Gamma(2,1) truncated to the support, omega ~ flat
// Dirichlet.
BaselineResult random_baseline(const PosteriorModel& model, const CountMatrix& heldout,
                               std::size_t n_draws, std::uint64_t seed);

// Welch z comparing two MSE samples (inferred vs. baseline).
double two_sample_z(const std::vector<double>& a, const std::vector<double>& b);

// CSV with header chain,draw,phi,alpha,omega_inf,omega_soc,omega_pre,log_posterior.
void write_chains_csv(const std::filesystem::path& p, const Chains& chains);
Chains read_chains_csv(const std::filesystem::path& p);

}  // namespace polite::infer
