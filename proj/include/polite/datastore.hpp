#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "polite/inference.hpp"
#include "polite/vignettes.hpp"

namespace polite::store {

// One experimental condition: endpoint under a framing and goal.
struct ConditionKey {
  std::string endpoint_label;
  std::string framing;
  std::string goal;

  std::string str() const { return endpoint_label + "__" + framing + "__" + goal; }
  bool operator==(const ConditionKey&) const = default;
};

struct ChoiceRow {
  std::string trial_id;
  std::string condition;  // ConditionKey::str(), or "<label>__semantics" rows
  int state = 1;
  std::string choice;  // utterance id, yes/no, or INVALID
  std::string method;  // letter | text | judge | invalid | failed | missing
};

void write_choices_csv(const std::filesystem::path& p, std::vector<ChoiceRow> rows);
std::vector<ChoiceRow> read_choices_csv(const std::filesystem::path& p);

// Deterministic 80/20-style split over trial identities (speaker, listener,
// vignette); every trial of one identity lands on the same side.
struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

Split split_train_test(const std::vector<vignettes::TrialSpec>& trials, double train_fraction,
                       std::uint64_t seed);

// Valid-choice tallies per (state, utterance) plus per-state invalid counts.
struct Tally {
  infer::CountMatrix counts;
  std::vector<std::int64_t> n_invalid;
};

Tally tally_choices(const std::vector<const vignettes::TrialSpec*>& trials,
                    const std::unordered_map<std::string, ChoiceRow>& choices,
                    const std::vector<std::string>& utterance_ids, std::size_t num_states);

// Normalized per-state proportions; throws naming the condition and state
// when a state has no valid responses.
Mat normalize_tally(const infer::CountMatrix& counts, const std::string& condition);

// Fixed layout of one evaluation run directory.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path plan_path() const { return root_ / "plan.jsonl"; }
  std::filesystem::path config_hash_path() const { return root_ / "config_hash.txt"; }
  std::filesystem::path raw_path(const std::string& endpoint_label,
                                 const std::string& stream) const {
    return root_ / "raw" / (endpoint_label + "-" + stream + ".jsonl");
  }
  std::filesystem::path choices_path() const { return root_ / "choices.csv"; }
  std::filesystem::path distributions_path() const { return root_ / "distributions.csv"; }
  std::filesystem::path counts_path() const { return root_ / "counts.csv"; }
  std::filesystem::path semantics_path() const { return root_ / "semantics.csv"; }
  std::filesystem::path theta_path(const std::string& endpoint_label) const {
    return root_ / "theta" / (endpoint_label + ".csv");
  }
  std::filesystem::path fit_path(const std::string& condition) const {
    return root_ / "fits" / (condition + ".json");
  }
  std::filesystem::path chains_path(const std::string& condition) const {
    return root_ / "fits" / (condition + "-chains.csv");
  }
  std::filesystem::path ppc_path() const { return root_ / "ppc.csv"; }
  std::filesystem::path report_path() const { return root_ / "report.csv"; }
  std::filesystem::path human_reference_path() const { return root_ / "human_reference.csv"; }

  // Guards a run directory against being reused with a different config.
  void check_or_write_config_hash(const std::string& hash) const;

 private:
  std::filesystem::path root_;
};

// counts.csv: per condition and split, integer counts per (state, utterance).
struct CountsRow {
  std::string condition;
  std::string split;  // train | test
  int state = 1;
  std::string utterance;
  std::int64_t count = 0;
};

void write_counts_csv(const std::filesystem::path& p, const std::vector<CountsRow>& rows);
std::vector<CountsRow> read_counts_csv(const std::filesystem::path& p);

// Reassembles one condition/split into a matrix with the given utterance
// order; throws when cells are missing.
infer::CountMatrix counts_for(const std::vector<CountsRow>& rows, const std::string& condition,
                              const std::string& split,
                              const std::vector<std::string>& utterance_ids,
                              std::size_t num_states);

// distributions.csv: normalized proportions plus per-state response tallies.
struct DistributionRow {
  std::string condition;
  int state = 1;
  std::string utterance;
  double prob = 0.0;
  std::int64_t n_valid = 0;
  std::int64_t n_invalid = 0;
};

void write_distributions_csv(const std::filesystem::path& p,
                             const std::vector<DistributionRow>& rows);

// semantics.csv: endorsement tallies per endpoint with a condition column.
struct SemanticsRow {
  std::string condition;  // endpoint label
  std::string utterance;
  int state = 1;
  std::int64_t yes = 0;
  std::int64_t total = 0;
};

void write_semantics_run_csv(const std::filesystem::path& p,
                             const std::vector<SemanticsRow>& rows);
std::vector<SemanticsRow> read_semantics_run_csv(const std::filesystem::path& p);

}  // namespace polite::store
