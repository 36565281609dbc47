#include "polite/datastore.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "polite/io.hpp"
#include "polite/rng.hpp"

namespace polite::store {

void write_choices_csv(const std::filesystem::path& p, std::vector<ChoiceRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ChoiceRow& a, const ChoiceRow& b) {
    if (a.condition != b.condition) return a.condition < b.condition;
    return a.trial_id < b.trial_id;
  });
  std::string out = "trial_id,condition,state,choice,method\n";
  for (const auto& r : rows) {
    out += r.trial_id;
    out += ',';
    out += r.condition;
    out += ',';
    out += std::to_string(r.state);
    out += ',';
    out += r.choice;
    out += ',';
    out += r.method;
    out += '\n';
  }
  io::write_file(p, out);
}

std::vector<ChoiceRow> read_choices_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() || lines[0] != "trial_id,condition,state,choice,method")
    throw std::runtime_error(p.string() + ": expected header trial_id,condition,state,choice,method");
  std::vector<ChoiceRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 5)
      throw std::runtime_error(p.string() + " line " + std::to_string(i + 1) + ": expected 5 fields");
    rows.push_back({f[0], f[1], std::stoi(f[2]), f[3], f[4]});
  }
  return rows;
}

Split split_train_test(const std::vector<vignettes::TrialSpec>& trials, double train_fraction,
                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
  // Group main-task trials by identity so a speaker/listener/vignette triple
  // never straddles the split.
  std::map<std::string, std::vector<const vignettes::TrialSpec*>> groups;
  for (const auto& t : trials) {
    if (t.task != vignettes::Task::Main) continue;
    groups[t.speaker + "|" + t.listener + "|" + std::to_string(t.vignette)].push_back(&t);
  }
  if (groups.empty()) throw std::invalid_argument("no main-task trials to split");

  std::vector<std::string> keys;
  keys.reserve(groups.size());
  for (const auto& [k, _] : groups) keys.push_back(k);
  Rng rng(derive_seed(seed, 0x73706c6974ULL));  // "split"
  rng.shuffle(keys);

  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(keys.size())));
  n_train = std::min(std::max<std::size_t>(n_train, 1), keys.size() - 1);

  Split split;
  std::vector<std::int64_t> train_per_state, test_per_state;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto& ids = i < n_train ? split.train_ids : split.test_ids;
    auto& per_state = i < n_train ? train_per_state : test_per_state;
    for (const auto* t : groups[keys[i]]) {
      ids.push_back(t->id);
      if (per_state.size() < static_cast<std::size_t>(t->state))
        per_state.resize(static_cast<std::size_t>(t->state), 0);
      ++per_state[static_cast<std::size_t>(t->state) - 1];
    }
  }
  for (std::size_t s = 0; s < train_per_state.size(); ++s)
    if (train_per_state[s] < 5)
      throw std::runtime_error("train split has fewer than 5 trials for state " +
                               std::to_string(s + 1));
  for (std::size_t s = 0; s < test_per_state.size(); ++s)
    if (test_per_state[s] < 5)
      throw std::runtime_error("test split has fewer than 5 trials for state " +
                               std::to_string(s + 1));
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

Tally tally_choices(const std::vector<const vignettes::TrialSpec*>& trials,
                    const std::unordered_map<std::string, ChoiceRow>& choices,
                    const std::vector<std::string>& utterance_ids, std::size_t num_states) {
  std::unordered_map<std::string, std::size_t> utt_index;
  for (std::size_t u = 0; u < utterance_ids.size(); ++u) utt_index[utterance_ids[u]] = u;

  Tally tally;
  tally.counts.num_states = num_states;
  tally.counts.num_utterances = utterance_ids.size();
  tally.counts.counts.assign(num_states * utterance_ids.size(), 0);
  tally.n_invalid.assign(num_states, 0);
  for (const auto* t : trials) {
    if (t->state < 1 || static_cast<std::size_t>(t->state) > num_states)
      throw std::runtime_error("trial " + t->id + " has out-of-range state " +
                               std::to_string(t->state));
    auto s = static_cast<std::size_t>(t->state) - 1;
    auto it = choices.find(t->id);
    if (it == choices.end()) {
      ++tally.n_invalid[s];
      continue;
    }
    auto ut = utt_index.find(it->second.choice);
    if (ut == utt_index.end()) {
      ++tally.n_invalid[s];
      continue;
    }
    ++tally.counts.at(s, ut->second);
  }
  return tally;
}

Mat normalize_tally(const infer::CountMatrix& counts, const std::string& condition) {
  Mat probs(counts.num_states, counts.num_utterances);
  for (std::size_t s = 0; s < counts.num_states; ++s) {
    std::int64_t total = counts.row_total(s);
    if (total <= 0)
      throw std::runtime_error("condition " + condition + " has no valid responses for state " +
                               std::to_string(s + 1));
    for (std::size_t u = 0; u < counts.num_utterances; ++u)
      probs.at(s, u) = static_cast<double>(counts.at(s, u)) / static_cast<double>(total);
  }
  return probs;
}

void RunStore::check_or_write_config_hash(const std::string& hash) const {
  auto p = config_hash_path();
  if (std::filesystem::exists(p)) {
    auto lines = io::read_lines(p);
    std::string existing = lines.empty() ? "" : lines[0];
    if (existing != hash)
      throw std::runtime_error(root_.string() +
                               " was created with a different config (hash " + existing +
                               ", current " + hash + "); use a fresh --out directory");
    return;
  }
  io::write_file(p, hash + "\n");
}

void write_counts_csv(const std::filesystem::path& p, const std::vector<CountsRow>& rows) {
  std::string out = "condition,split,state,utterance,count\n";
  for (const auto& r : rows) {
    out += r.condition;
    out += ',';
    out += r.split;
    out += ',';
    out += std::to_string(r.state);
    out += ',';
    out += r.utterance;
    out += ',';
    out += std::to_string(r.count);
    out += '\n';
  }
  io::write_file(p, out);
}

std::vector<CountsRow> read_counts_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() || lines[0] != "condition,split,state,utterance,count")
    throw std::runtime_error(p.string() + ": expected header condition,split,state,utterance,count");
  std::vector<CountsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 5)
      throw std::runtime_error(p.string() + " line " + std::to_string(i + 1) + ": expected 5 fields");
    rows.push_back({f[0], f[1], std::stoi(f[2]), f[3], std::stoll(f[4])});
  }
  return rows;
}

infer::CountMatrix counts_for(const std::vector<CountsRow>& rows, const std::string& condition,
                              const std::string& split,
                              const std::vector<std::string>& utterance_ids,
                              std::size_t num_states) {
  std::unordered_map<std::string, std::size_t> utt_index;
  for (std::size_t u = 0; u < utterance_ids.size(); ++u) utt_index[utterance_ids[u]] = u;

  infer::CountMatrix counts;
  counts.num_states = num_states;
  counts.num_utterances = utterance_ids.size();
  counts.counts.assign(num_states * utterance_ids.size(), 0);
  std::vector<bool> seen(num_states * utterance_ids.size(), false);
  for (const auto& r : rows) {
    if (r.condition != condition || r.split != split) continue;
    auto it = utt_index.find(r.utterance);
    if (it == utt_index.end())
      throw std::runtime_error("unknown utterance '" + r.utterance + "' in counts for " + condition);
    if (r.state < 1 || static_cast<std::size_t>(r.state) > num_states)
      throw std::runtime_error("out-of-range state " + std::to_string(r.state) + " in counts for " +
                               condition);
    auto idx = (static_cast<std::size_t>(r.state) - 1) * counts.num_utterances + it->second;
    counts.counts[idx] = r.count;
    seen[idx] = true;
  }
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t u = 0; u < utterance_ids.size(); ++u)
      if (!seen[s * utterance_ids.size() + u])
        throw std::runtime_error("missing count for condition " + condition + " split " + split +
                                 ", state " + std::to_string(s + 1) + ", utterance '" +
                                 utterance_ids[u] + "'");
  return counts;
}

void write_distributions_csv(const std::filesystem::path& p,
                             const std::vector<DistributionRow>& rows) {
  std::string out = "condition,state,utterance,prob,n_valid,n_invalid\n";
  for (const auto& r : rows) {
    out += r.condition;
    out += ',';
    out += std::to_string(r.state);
    out += ',';
    out += r.utterance;
    out += ',';
    out += format_double(r.prob);
    out += ',';
    out += std::to_string(r.n_valid);
    out += ',';
    out += std::to_string(r.n_invalid);
    out += '\n';
  }
  io::write_file(p, out);
}

void write_semantics_run_csv(const std::filesystem::path& p,
                             const std::vector<SemanticsRow>& rows) {
  std::string out = "condition,utterance,state,yes,total\n";
  for (const auto& r : rows) {
    out += r.condition;
    out += ',';
    out += r.utterance;
    out += ',';
    out += std::to_string(r.state);
    out += ',';
    out += std::to_string(r.yes);
    out += ',';
    out += std::to_string(r.total);
    out += '\n';
  }
  io::write_file(p, out);
}

std::vector<SemanticsRow> read_semantics_run_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() || lines[0] != "condition,utterance,state,yes,total")
    throw std::runtime_error(p.string() + ": expected header condition,utterance,state,yes,total");
  std::vector<SemanticsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 5)
      throw std::runtime_error(p.string() + " line " + std::to_string(i + 1) + ": expected 5 fields");
    rows.push_back({f[0], f[1], std::stoi(f[2]), std::stoll(f[3]), std::stoll(f[4])});
  }
  return rows;
}

}  // namespace polite::store
