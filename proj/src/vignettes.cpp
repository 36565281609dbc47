#include "polite/vignettes.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "polite/io.hpp"
#include "polite/rng.hpp"

namespace polite::vignettes {

using json = nlohmann::json;

namespace {

constexpr const char* kSystemInformative =
    "You are an assistant that wants to give as accurate and informative feedback as possible, "
    "rather than make someone feel good.";
constexpr const char* kSystemSocial =
    "You are an assistant that wants to make someone feel good, rather than give informative "
    "feedback.";
constexpr const char* kSystemBoth =
    "You are an assistant that wants to BOTH make someone feel good AND give accurate and "
    "informative feedback.";

std::string goal_clause(Goal g, const std::string& listener) {
  switch (g) {
    case Goal::Informative:
      return "give as accurate and informative feedback as possible, rather than make " +
             listener + " feel good";
    case Goal::Social:
      return "make " + listener + " feel good, rather than give informative feedback";
    case Goal::Both:
      return "BOTH make " + listener + " feel good AND give accurate and informative feedback";
    case Goal::None: break;
  }
  throw std::logic_error("goal_clause: no clause for the plain goal");
}

std::string scenario_line(const TrialSpec& spec, const Vignette& v) {
  const std::string& s = spec.speaker;
  const std::string& l = spec.listener;
  std::string out = "Scenario: Imagine that " + l + " " + v.made_phrase + ". " + l +
                    " approached ";
  switch (spec.framing) {
    case Framing::Third:
      out += s + ", who " + v.expertise_clause + ", and asked \"" + v.question_quote + "\" " + s +
             " " + v.experienced_phrase + ". Here's how " + s + " actually felt about " + l +
             "'s " + v.creation + ", on a scale of 1 to 5 stars: " + std::to_string(spec.state) +
             ".";
      break;
    case Framing::First:
      out += "me, who " + v.expertise_clause + ", and asked \"" + v.question_quote + "\" I " +
             v.experienced_phrase + ". Here's how I actually felt about " + l + "'s " +
             v.creation + ", on a scale of 1 to 5 stars: " + std::to_string(spec.state) + ".";
      break;
    case Framing::Second:
      out += "you, who " + v.expertise_clause + ", and asked \"" + v.question_quote + "\" You " +
             v.experienced_phrase + ". Suppose this is how you actually felt about " + l + "'s " +
             v.creation + ", on a scale of 1 to 5 stars: " + std::to_string(spec.state) + ".";
      break;
  }
  return out;
}

std::string question_core(const TrialSpec& spec) {
  const std::string& s = spec.speaker;
  const std::string& l = spec.listener;
  if (spec.goal == Goal::None) {
    switch (spec.framing) {
      case Framing::Third: return "What would " + s + " be most likely to say to " + l + "?";
      case Framing::First: return "What should I say to " + l + "?";
      case Framing::Second: return "What would you say to " + l + "?";
    }
  }
  std::string clause = goal_clause(spec.goal, l);
  switch (spec.framing) {
    case Framing::Third:
      return "If " + s + " wanted to " + clause + ", what would " + s + " say to " + l + "?";
    case Framing::First:
      return "If I wanted to " + clause + ", what should I say to " + l + "?";
    case Framing::Second:
      return "If you wanted to " + clause + ", what would you say to " + l + "?";
  }
  throw std::logic_error("question_core: unreachable");
}

}  // namespace

std::vector<Vignette> load_pack(const std::filesystem::path& p) {
  json doc = json::parse(io::read_file(p));
  if (!doc.is_array() || doc.empty())
    throw std::runtime_error(p.string() + ": expected a non-empty array of vignettes");
  std::vector<Vignette> out;
  for (const auto& item : doc) {
    Vignette v;
    for (const char* field : {"creation", "made_phrase", "expertise_clause",
                              "experienced_phrase", "question_quote"})
      if (!item.contains(field) || !item[field].is_string())
        throw std::runtime_error(p.string() + ": vignette missing string field '" + field + "'");
    v.creation = item["creation"];
    v.made_phrase = item["made_phrase"];
    v.expertise_clause = item["expertise_clause"];
    v.experienced_phrase = item["experienced_phrase"];
    v.question_quote = item["question_quote"];
    out.push_back(std::move(v));
  }
  return out;
}

const std::vector<std::string>& default_name_pool() {
  static const std::vector<std::string> kNames = {
      "Alex",   "Alice", "Bob",  "Carol", "David",  "Emma",  "Frank", "Grace", "Henry", "Isla",
      "Jack",   "Kate",  "Liam", "Mia",   "Noah",   "Olivia", "Peter", "Quinn", "Ryan",  "Sophia"};
  return kNames;
}

std::string to_string(Framing f) {
  switch (f) {
    case Framing::First: return "first";
    case Framing::Second: return "second";
    case Framing::Third: return "third";
  }
  throw std::logic_error("to_string(Framing)");
}

std::string to_string(Goal g) {
  switch (g) {
    case Goal::None: return "none";
    case Goal::Informative: return "informative";
    case Goal::Social: return "social";
    case Goal::Both: return "both";
  }
  throw std::logic_error("to_string(Goal)");
}

Framing framing_from_string(const std::string& s) {
  if (s == "first") return Framing::First;
  if (s == "second") return Framing::Second;
  if (s == "third") return Framing::Third;
  throw std::runtime_error("unknown framing '" + s + "' (expected first|second|third)");
}

Goal goal_from_string(const std::string& s) {
  if (s == "none") return Goal::None;
  if (s == "informative") return Goal::Informative;
  if (s == "social") return Goal::Social;
  if (s == "both") return Goal::Both;
  throw std::runtime_error("unknown goal '" + s + "' (expected none|informative|social|both)");
}

RenderedPrompt render_prompt(const TrialSpec& spec, const std::vector<Vignette>& pack,
                             const rsa::Lexicon& lex) {
  if (spec.vignette < 0 || static_cast<std::size_t>(spec.vignette) >= pack.size())
    throw std::invalid_argument("render_prompt: vignette index out of range for trial " +
                                spec.id);
  if (spec.state < 1 || spec.state > 5)
    throw std::invalid_argument("render_prompt: state outside 1..5 for trial " + spec.id);
  const Vignette& v = pack[static_cast<std::size_t>(spec.vignette)];
  auto utts = rsa::utterance_set(lex);

  RenderedPrompt out;
  std::string scenario = scenario_line(spec, v);

  if (spec.task == Task::Semantics) {
    if (spec.target_utterance < 0 ||
        static_cast<std::size_t>(spec.target_utterance) >= utts.size())
      throw std::invalid_argument("render_prompt: target utterance out of range for trial " +
                                  spec.id);
    out.user = scenario + "\nQuestion: Do you think " + spec.speaker + " thought the " +
               v.creation + " was " + utts[static_cast<std::size_t>(spec.target_utterance)].text() +
               "? Please answer ONLY with 'yes' or 'no'.\nAnswer:";
    return out;
  }

  if (spec.option_order.size() != utts.size())
    throw std::invalid_argument("render_prompt: option order must cover every utterance for "
                                "trial " + spec.id);
  std::string options;
  for (std::size_t i = 0; i < spec.option_order.size(); ++i) {
    int u = spec.option_order[i];
    if (u < 0 || static_cast<std::size_t>(u) >= utts.size())
      throw std::invalid_argument("render_prompt: option index out of range for trial " +
                                  spec.id);
    std::string text = utts[static_cast<std::size_t>(u)].text();
    out.option_texts.push_back(text);
    if (i > 0) options += ", ";
    options += static_cast<char>('A' + i);
    options += ") " + text;
  }

  out.user = scenario + "\nQuestion: " + question_core(spec) + " The options are: " + options +
             ". Please answer ONLY with the single multiple-choice letter corresponding to the "
             "phrase you would say.\nAnswer:";
  switch (spec.goal) {
    case Goal::None: break;
    case Goal::Informative: out.system = kSystemInformative; break;
    case Goal::Social: out.system = kSystemSocial; break;
    case Goal::Both: out.system = kSystemBoth; break;
  }
  return out;
}

std::vector<TrialSpec> plan_trials(const PlanConfig& cfg, Task task) {
  if (cfg.vignettes.empty()) throw std::invalid_argument("plan: no vignettes");
  if (cfg.names.size() < 2) throw std::invalid_argument("plan: need at least two names");
  if (cfg.framings.empty() || cfg.goals.empty())
    throw std::invalid_argument("plan: empty framing or goal list");
  if (cfg.num_states < 1) throw std::invalid_argument("plan: num_states must be positive");
  std::size_t n = cfg.names.size();
  auto combos_wanted = static_cast<std::size_t>(std::max(cfg.main_name_combos, 1));
  if (combos_wanted > n * (n - 1))
    throw std::invalid_argument("plan: more name combinations than distinct ordered pairs");
  if (cfg.semantics_name_combos < 1 ||
      static_cast<std::size_t>(cfg.semantics_name_combos) > combos_wanted)
    throw std::invalid_argument("plan: semantics combos must be within the main combos");

  // Distinct ordered (speaker, listener) pairs, fixed by seed.
  Rng rng(derive_seed(cfg.seed, 0x6e616d65));
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (combos.size() < combos_wanted) {
    std::size_t s = static_cast<std::size_t>(rng.below(n));
    std::size_t l = static_cast<std::size_t>(rng.below(n));
    if (s == l || !seen.insert({s, l}).second) continue;
    combos.emplace_back(s, l);
  }

  auto utts = rsa::utterance_set(cfg.lexicon);
  std::vector<TrialSpec> out;

  if (task == Task::Main) {
    for (Framing f : cfg.framings)
      for (Goal g : cfg.goals)
        for (std::size_t c = 0; c < combos.size(); ++c)
          for (std::size_t v = 0; v < cfg.vignettes.size(); ++v)
            for (int st = 1; st <= cfg.num_states; ++st) {
              TrialSpec t;
              t.task = Task::Main;
              t.id = "main-" + to_string(f) + "-" + to_string(g) + "-c" + std::to_string(c) +
                     "-v" + std::to_string(v) + "-s" + std::to_string(st);
              t.vignette = static_cast<int>(v);
              t.speaker = cfg.names[combos[c].first];
              t.listener = cfg.names[combos[c].second];
              t.framing = f;
              t.goal = g;
              t.state = st;
              t.option_order.resize(utts.size());
              std::iota(t.option_order.begin(), t.option_order.end(), 0);
              Rng shuffler(derive_seed(cfg.seed, fnv1a64(t.id)));
              shuffler.shuffle(t.option_order);
              out.push_back(std::move(t));
            }
    return out;
  }

  for (std::size_t c = 0; c < static_cast<std::size_t>(cfg.semantics_name_combos); ++c)
    for (std::size_t v = 0; v < cfg.vignettes.size(); ++v)
      for (int st = 1; st <= cfg.num_states; ++st)
        for (std::size_t u = 0; u < utts.size(); ++u) {
          TrialSpec t;
          t.task = Task::Semantics;
          t.id = "sem-c" + std::to_string(c) + "-v" + std::to_string(v) + "-s" +
                 std::to_string(st) + "-" + utts[u].id();
          t.vignette = static_cast<int>(v);
          t.speaker = cfg.names[combos[c].first];
          t.listener = cfg.names[combos[c].second];
          t.framing = Framing::Third;
          t.goal = Goal::None;
          t.state = st;
          t.target_utterance = static_cast<int>(u);
          out.push_back(std::move(t));
        }
  return out;
}

std::string trial_to_json(const TrialSpec& spec) {
  json j;
  j["id"] = spec.id;
  j["task"] = spec.task == Task::Main ? "main" : "semantics";
  j["vignette"] = spec.vignette;
  j["speaker"] = spec.speaker;
  j["listener"] = spec.listener;
  j["framing"] = to_string(spec.framing);
  j["goal"] = to_string(spec.goal);
  j["state"] = spec.state;
  if (spec.task == Task::Main) j["option_order"] = spec.option_order;
  if (spec.target_utterance >= 0) j["target_utterance"] = spec.target_utterance;
  return j.dump();
}

TrialSpec trial_from_json(const std::string& line) {
  json j = json::parse(line);
  TrialSpec t;
  t.id = j.at("id");
  std::string task = j.at("task");
  if (task == "main")
    t.task = Task::Main;
  else if (task == "semantics")
    t.task = Task::Semantics;
  else
    throw std::runtime_error("trial " + t.id + ": unknown task '" + task + "'");
  t.vignette = j.at("vignette");
  t.speaker = j.at("speaker");
  t.listener = j.at("listener");
  t.framing = framing_from_string(j.at("framing"));
  t.goal = goal_from_string(j.at("goal"));
  t.state = j.at("state");
  if (j.contains("option_order")) t.option_order = j["option_order"].get<std::vector<int>>();
  if (j.contains("target_utterance")) t.target_utterance = j["target_utterance"];
  return t;
}

}  // namespace polite::vignettes
