#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "polite/numeric.hpp"

namespace polite::rsa {

// Descriptor words; the full utterance set is every descriptor plus its
// negation ("amazing", "not amazing").
struct Lexicon {
  std::vector<std::string> descriptors;
};

Lexicon default_lexicon();  // terrible, bad, good, amazing

struct Utterance {
  std::string descriptor;
  bool negated = false;

  // Stable identifier used in files: "amazing" / "not_amazing".
  std::string id() const { return negated ? "not_" + descriptor : descriptor; }
  // Display form shown to a model: "amazing" / "not amazing".
  std::string text() const { return negated ? "not " + descriptor : descriptor; }
};

// Positives in lexicon order, then negations in lexicon order.
std::vector<Utterance> utterance_set(const Lexicon& lex);

// P(utterance applies | state), one row per utterance.
struct SemanticsTable {
  std::vector<std::string> utterances;  // row labels, utterance ids
  std::size_t num_states = 0;
  Mat theta;  // utterances x states, entries in [0, 1]

  double at(std::size_t u, std::size_t s) const { return theta.at(u, s); }
  void validate() const;  // throws on shape mismatch or out-of-range entries
};

// Discretized support for the informativity/social mixture weight phi.
struct PhiGrid {
  std::vector<double> values;
  std::vector<double> prior;

  void validate() const;
  static PhiGrid uniform_midpoints(std::size_t k);  // {(i+0.5)/k}, flat prior
};

PhiGrid default_phi_grid();  // 10 midpoints

// Full speaker parameterization: phi (literal/social mix), alpha
// (rationality), omega (informational/social/presentational weights).
struct ParamVector {
  double phi = 0.5;
  double alpha = 1.0;
  std::array<double, 3> omega = {1.0 / 3, 1.0 / 3, 1.0 / 3};

  // strict_alpha requires alpha > 0; model operations also accept alpha == 0
  // (which collapses every speaker to uniform).
  void validate(bool strict_alpha = true) const;
};

// Rows are conditions, each row a probability vector over the column domain.
struct ConditionalDistribution {
  Mat p;

  std::size_t rows() const { return p.rows; }
  std::size_t cols() const { return p.cols; }
  std::span<const double> row(std::size_t r) const { return p.row(r); }
  void validate(double tol = 1e-9) const;  // rows sum to 1, entries in [0, 1]
};

std::vector<double> uniform_state_prior(std::size_t n);
std::vector<double> default_state_values(std::size_t n);  // 1..n stars

// Literal listener: P(s | u) proportional to theta(u, s) * prior(s).
// Rows = utterances. Throws if some utterance is true of no weighted state.
ConditionalDistribution literal_listener(const SemanticsTable& theta,
                                         const std::vector<double>& state_prior);

// First-order speaker: softmax over utterances of
// alpha * (phi * log L0(s|u) + (1 - phi) * E_L0[V | u]). Rows = states.
ConditionalDistribution speaker1(const ConditionalDistribution& l0, double phi, double alpha,
                                 const std::vector<double>& values);

// Pragmatic listener: joint posterior over (phi_k, s) given u, marginalizing
// the first-order speaker over the phi grid at a shared alpha.
struct JointListener {
  PhiGrid grid;
  std::size_t num_states = 0;
  std::vector<Mat> joint;       // per utterance: K x S, sums to 1
  Mat state_marginal;           // utterances x S
  Mat phi_marginal;             // utterances x K

  std::span<const double> states_given(std::size_t u) const { return state_marginal.row(u); }
  std::span<const double> phis_given(std::size_t u) const { return phi_marginal.row(u); }
};

// values feeds the first-order speaker's social term; empty means 1..n stars.
JointListener pragmatic_listener(const SemanticsTable& theta, const PhiGrid& grid, double alpha,
                                 const std::vector<double>& state_prior,
                                 const std::vector<double>& values = {});

// log P(phi | u) linearly interpolated between the neighboring grid values;
// clamped to the end intervals outside the grid range.
double log_phi_marginal_at(const JointListener& l1, std::size_t u, double phi);

// Second-order speaker utilities for one (utterance, state) cell.
// Impossible outcomes surface as the log-zero sentinel, never as a crash.
struct Utilities {
  double informational = 0.0;   // log P_L1(s | u)
  double social = 0.0;          // E_L1[V | u]
  double presentational = 0.0;  // log P_L1(phi | u)
};

Utilities utilities(const JointListener& l1, std::size_t u, std::size_t s, double phi,
                    const std::vector<double>& values);

// Second-order speaker: softmax over utterances of alpha * omega . U(u, s).
// Rows = states. Throws if every utterance is impossible for some state.
ConditionalDistribution speaker2(const SemanticsTable& theta, const ParamVector& params,
                                 const PhiGrid& grid, const std::vector<double>& state_prior,
                                 const std::vector<double>& values);

// Factored evaluator for the second-order speaker. Everything that depends
// only on (theta, grid, prior, values) is precomputed once; everything that
// depends only on alpha goes into an AlphaContext the caller owns, so sweeps
// ordered alpha-outermost pay the pragmatic-listener cost once per alpha.
class S2Evaluator {
 public:
  S2Evaluator(SemanticsTable theta, PhiGrid grid, std::vector<double> state_prior,
              std::vector<double> values);

  std::size_t num_states() const { return s_; }
  std::size_t num_utterances() const { return u_; }
  const SemanticsTable& theta() const { return theta_; }
  const PhiGrid& grid() const { return grid_; }

  struct AlphaContext {
    double alpha = -1.0;
    Mat u_inf;         // utterances x states, log P_L1(s|u), sentinel-coded
    std::vector<double> u_soc;  // per utterance
    Mat log_phi_marg;  // utterances x K, sentinel-coded
  };

  // Fills ctx for the given alpha (alpha >= 0). Reuses ctx storage.
  void prepare(double alpha, AlphaContext& ctx) const;

  // Presentational utility at an off-grid phi.
  double presentational(const AlphaContext& ctx, std::size_t u, double phi) const;

  // log P_S2(u | s) for all cells into out (states x utterances).
  // Returns -1 on success, else the index of a state whose utterances are all
  // impossible under a positive alpha.
  int log_speaker2(const AlphaContext& ctx, double phi, const std::array<double, 3>& omega,
                   Mat& out) const;

 private:
  SemanticsTable theta_;
  PhiGrid grid_;
  std::vector<double> prior_;
  std::vector<double> values_;
  std::size_t u_ = 0, s_ = 0, k_ = 0;
  Mat log_l0_;              // utterances x states, sentinel-coded
  std::vector<double> soc_l0_;  // E_L0[V | u]
  std::vector<Mat> util_k_;  // per grid phi: utterances x states first-order utility
};

}  // namespace polite::rsa
