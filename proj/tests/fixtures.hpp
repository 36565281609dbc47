#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "oracle.hpp"
#include "polite/rng.hpp"
#include "polite/rsa.hpp"

namespace fixtures {

// Graded semantics over the default eight utterances and five states.
// Positives peak at their sentiment anchor; negations mirror them, so each
// negation is exactly false at its anchor state (exercises the sentinels).
inline polite::rsa::SemanticsTable synthetic_theta() {
  const auto utts = polite::rsa::utterance_set(polite::rsa::default_lexicon());
  const double centers[4] = {1.0, 2.0, 4.0, 5.0};
  polite::rsa::SemanticsTable t;
  t.num_states = 5;
  t.theta = polite::Mat(utts.size(), 5);
  for (std::size_t u = 0; u < utts.size(); ++u) {
    t.utterances.push_back(utts[u].id());
    const double center = centers[u % 4];
    for (std::size_t s = 0; s < 5; ++s) {
      const double d = static_cast<double>(s + 1) - center;
      const double positive = std::exp(-0.5 * d * d);
      t.theta.at(u, s) = utts[u].negated ? 1.0 - positive : positive;
    }
  }
  t.validate();
  return t;
}

// Two utterances over two states: u0 true everywhere, u1 true only of s1.
inline polite::rsa::SemanticsTable miniature_theta() {
  polite::rsa::SemanticsTable t;
  t.utterances = {"u0", "u1"};
  t.num_states = 2;
  t.theta = polite::Mat(2, 2);
  t.theta.at(0, 0) = 1.0;
  t.theta.at(0, 1) = 1.0;
  t.theta.at(1, 0) = 0.0;
  t.theta.at(1, 1) = 1.0;
  return t;
}

inline oracle::Setup to_setup(const polite::rsa::SemanticsTable& t,
                              const std::vector<double>& state_prior,
                              const polite::rsa::PhiGrid& grid,
                              const std::vector<double>& values) {
  oracle::Setup s;
  s.theta.resize(t.theta.rows);
  for (std::size_t u = 0; u < t.theta.rows; ++u)
    s.theta[u].assign(t.theta.row(u).begin(), t.theta.row(u).end());
  s.state_prior = state_prior;
  s.phis = grid.values;
  s.phi_prior = grid.prior;
  s.values = values;
  return s;
}

// Random instance with sparse zeros but every utterance true somewhere and
// every state coverable, so both implementations stay well defined.
inline polite::rsa::SemanticsTable random_theta(polite::Rng& rng, std::size_t num_utts,
                                                std::size_t num_states, double zero_rate) {
  polite::rsa::SemanticsTable t;
  t.num_states = num_states;
  t.theta = polite::Mat(num_utts, num_states);
  for (std::size_t u = 0; u < num_utts; ++u) t.utterances.push_back("u" + std::to_string(u));
  while (true) {
    for (std::size_t u = 0; u < num_utts; ++u)
      for (std::size_t s = 0; s < num_states; ++s)
        t.theta.at(u, s) = rng.uniform() < zero_rate ? 0.0 : rng.uniform_pos();
    bool ok = true;
    for (std::size_t u = 0; u < num_utts && ok; ++u) ok = polite::sum(t.theta.row(u)) > 0.0;
    for (std::size_t s = 0; s < num_states && ok; ++s) {
      double col = 0.0;
      for (std::size_t u = 0; u < num_utts; ++u) col += t.theta.at(u, s);
      ok = col > 0.0;
    }
    if (ok) return t;
  }
}

}  // namespace fixtures
