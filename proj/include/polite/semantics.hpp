#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polite/rsa.hpp"

namespace polite::semantics {

// Yes/total endorsement tallies per (utterance, state) cell.
struct EndorsementCounts {
  std::vector<std::string> utterances;
  std::size_t num_states = 0;
  std::vector<std::int64_t> yes;    // utterances x states, row-major
  std::vector<std::int64_t> total;

  std::int64_t yes_at(std::size_t u, std::size_t s) const { return yes[u * num_states + s]; }
  std::int64_t total_at(std::size_t u, std::size_t s) const { return total[u * num_states + s]; }
  void set(std::size_t u, std::size_t s, std::int64_t y, std::int64_t n);
  void validate() const;  // 0 <= yes <= total, total > 0 everywhere
};

// Posterior mean of a Beta(1, 1)-Binomial model per cell: (yes+1)/(total+2).
rsa::SemanticsTable estimate_theta(const EndorsementCounts& counts);

// CSV with header "utterance,state,theta"; states are 1-based; doubles are
// shortest round-trip so read(write(x)) is bit-exact.
void write_semantics_csv(const std::filesystem::path& p, const rsa::SemanticsTable& table);
rsa::SemanticsTable read_semantics_csv(const std::filesystem::path& p);

// CSV with header "utterance,state,yes,total".
void write_endorsements_csv(const std::filesystem::path& p, const EndorsementCounts& counts);
EndorsementCounts read_endorsements_csv(const std::filesystem::path& p);

}  // namespace polite::semantics
