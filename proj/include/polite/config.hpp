#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polite/gateway.hpp"
#include "polite/inference.hpp"
#include "polite/vignettes.hpp"

namespace polite::cli {

// Declarative description of one evaluation run. Strings may reference
// environment variables as ${VAR}; secrets stay out of the file by naming
// the variable in api_key_env instead.
struct RunConfig {
  std::vector<gateway::EndpointProfile> endpoints;
  std::optional<gateway::EndpointProfile> judge;
  std::vector<vignettes::Framing> framings;
  std::vector<vignettes::Goal> goals;
  std::string vignette_pack = "data/vignettes.json";
  std::vector<std::string> names;  // empty = built-in pool
  int name_combos = 10;
  int semantics_combos = 4;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::int64_t per_state_total = 104;
  double train_fraction = 0.8;
  infer::ChainConfig chains;
  std::size_t ppc_draws = 100;
  std::size_t baseline_draws = 100;
  double alpha_max = 20.0;

  void validate() const;  // throws naming the offending field
  // Stable fingerprint of everything that affects outputs; out_dir excluded
  // so a run directory can be relocated.
  std::string canonical_hash() const;
};

RunConfig load_config(const std::filesystem::path& p);

struct CommandOptions {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  bool dry_run = false;
  bool allow_warnings = false;
  std::size_t limit = SIZE_MAX;  // cap on new requests per endpoint
  std::string task = "all";     // all | main | semantics
};

}  // namespace polite::cli
