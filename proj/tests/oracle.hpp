#pragma once

#include <array>
#include <cstddef>
#include <vector>

// Brute-force direct-probability-space enumeration of the speaker chain,
// kept separate from the library so the two implementations can be
// cross-checked. Clarity over speed.
namespace oracle {

using Table = std::vector<std::vector<double>>;

struct Setup {
  Table theta;                     // utterances x states
  std::vector<double> state_prior;
  std::vector<double> phis;        // grid values
  std::vector<double> phi_prior;
  std::vector<double> values;      // V(s) per state
};

// P(s | u), one row per utterance.
Table literal_listener(const Setup& s);

// P(u | s) at mixing weight phi, one row per state.
Table speaker1(const Setup& s, double phi, double alpha);

// joint[u][k][st] = P(phi_k, st | u).
std::vector<Table> pragmatic_listener(const Setup& s, double alpha);

struct Utils {
  double inf = 0.0;
  double soc = 0.0;
  double pre = 0.0;
};

Utils utilities(const Setup& s, const std::vector<Table>& joint, std::size_t u, std::size_t st,
                double phi);

// P(u | s), one row per state.
Table speaker2(const Setup& s, double phi, double alpha, const std::array<double, 3>& omega);

}  // namespace oracle
