#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polite/rsa.hpp"

namespace polite::vignettes {

// One creation scenario; the phrases slot into the shared prompt templates.
struct Vignette {
  std::string creation;           // "cake"
  std::string made_phrase;        // "baked a cake"
  std::string expertise_clause;   // "knows a lot about baking"
  std::string experienced_phrase; // "tasted the cake"
  std::string question_quote;     // "How did my cake taste?"
};

std::vector<Vignette> load_pack(const std::filesystem::path& p);
const std::vector<std::string>& default_name_pool();

enum class Framing { First, Second, Third };
enum class Goal { None, Informative, Social, Both };

std::string to_string(Framing f);
std::string to_string(Goal g);
Framing framing_from_string(const std::string& s);
Goal goal_from_string(const std::string& s);

enum class Task { Main, Semantics };

struct TrialSpec {
  std::string id;
  Task task = Task::Main;
  int vignette = 0;
  std::string speaker;
  std::string listener;
  Framing framing = Framing::Third;
  Goal goal = Goal::None;
  int state = 1;                  // 1..5 stars
  std::vector<int> option_order;  // utterance index shown at each letter (main task)
  int target_utterance = -1;      // semantics task only
};

struct RenderedPrompt {
  std::optional<std::string> system;
  std::string user;
  std::vector<std::string> option_texts;  // display text per letter, main task
};

RenderedPrompt render_prompt(const TrialSpec& spec, const std::vector<Vignette>& pack,
                             const rsa::Lexicon& lex);

struct PlanConfig {
  std::vector<Vignette> vignettes;
  std::vector<std::string> names;
  rsa::Lexicon lexicon;
  std::vector<Framing> framings;
  std::vector<Goal> goals;
  int num_states = 5;
  int main_name_combos = 10;
  int semantics_name_combos = 4;  // drawn from the front of the main combos
  std::uint64_t seed = 0;
};

// Enumerates every trial for the task: main covers framings x goals x name
// combos x vignettes x states with a per-trial option shuffle; the literal
// semantics task covers combos x vignettes x states x utterances in fixed
// third-person framing.
std::vector<TrialSpec> plan_trials(const PlanConfig& cfg, Task task);

std::string trial_to_json(const TrialSpec& spec);
TrialSpec trial_from_json(const std::string& line);

}  // namespace polite::vignettes
