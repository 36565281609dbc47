#include "polite/config.hpp"

#include <cstdlib>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "polite/io.hpp"
#include "polite/numeric.hpp"

namespace polite::cli {
namespace {

using nlohmann::json;

std::string interpolate_env(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto start = s.find("${", i);
    if (start == std::string::npos) {
      out.append(s, i, std::string::npos);
      break;
    }
    auto end = s.find('}', start + 2);
    if (end == std::string::npos)
      throw std::runtime_error("config: unterminated ${ in string \"" + s + "\"");
    out.append(s, i, start - i);
    std::string var = s.substr(start + 2, end - start - 2);
    const char* val = std::getenv(var.c_str());
    if (val == nullptr)
      throw std::runtime_error("config: environment variable " + var + " is not set");
    out += val;
    i = end + 1;
  }
  return out;
}

void interpolate_all(json& j) {
  if (j.is_string())
    j = interpolate_env(j.get<std::string>());
  else if (j.is_object() || j.is_array())
    for (auto& child : j) interpolate_all(child);
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw std::runtime_error("config: unknown field \"" + key + "\" in " + where);
}

gateway::EndpointProfile parse_endpoint(const json& j, const std::string& where) {
  if (!j.is_object()) throw std::runtime_error("config: " + where + " must be an object");
  require_keys(j,
               {"provider", "model", "reasoning_effort", "budget_mode", "checkpoint", "base_url",
                "chat_path", "api_key_env", "rate_limit_rpm", "timeout_sec", "max_retries",
                "backoff_ms", "max_parallel"},
               where);
  gateway::EndpointProfile p;
  p.provider = j.value("provider", p.provider);
  p.model = j.value("model", p.model);
  p.reasoning_effort = j.value("reasoning_effort", p.reasoning_effort);
  p.budget_mode = j.value("budget_mode", p.budget_mode);
  p.checkpoint = j.value("checkpoint", p.checkpoint);
  p.base_url = j.value("base_url", p.base_url);
  p.chat_path = j.value("chat_path", p.chat_path);
  p.api_key_env = j.value("api_key_env", p.api_key_env);
  p.rate_limit_rpm = j.value("rate_limit_rpm", p.rate_limit_rpm);
  p.timeout_sec = j.value("timeout_sec", p.timeout_sec);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.backoff_ms = j.value("backoff_ms", p.backoff_ms);
  p.max_parallel = j.value("max_parallel", p.max_parallel);
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("config: " + where + ": " + e.what());
  }
  return p;
}

json endpoint_to_json(const gateway::EndpointProfile& p) {
  return json{{"provider", p.provider},
              {"model", p.model},
              {"reasoning_effort", p.reasoning_effort},
              {"budget_mode", p.budget_mode},
              {"checkpoint", p.checkpoint},
              {"base_url", p.base_url},
              {"chat_path", p.chat_path},
              {"api_key_env", p.api_key_env},
              {"rate_limit_rpm", p.rate_limit_rpm},
              {"timeout_sec", p.timeout_sec},
              {"max_retries", p.max_retries},
              {"backoff_ms", p.backoff_ms},
              {"max_parallel", p.max_parallel}};
}

}  // namespace

RunConfig load_config(const std::filesystem::path& p) {
  json j;
  try {
    j = json::parse(io::read_file(p));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
  interpolate_all(j);
  require_keys(j,
               {"endpoints", "judge", "framings", "goals", "vignette_pack", "names", "name_combos",
                "semantics_combos", "seed", "out_dir", "per_state_total", "train_fraction",
                "chains", "ppc_draws", "baseline_draws", "alpha_max"},
               "config");

  RunConfig cfg;
  if (!j.contains("endpoints") || !j["endpoints"].is_array() || j["endpoints"].empty())
    throw std::runtime_error("config: endpoints must be a non-empty array");
  for (std::size_t i = 0; i < j["endpoints"].size(); ++i)
    cfg.endpoints.push_back(parse_endpoint(j["endpoints"][i], "endpoints[" + std::to_string(i) + "]"));
  if (j.contains("judge") && !j["judge"].is_null())
    cfg.judge = parse_endpoint(j["judge"], "judge");

  auto parse_list = [&](const char* key, auto parse_one, auto& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) throw std::runtime_error(std::string("config: ") + key + " must be an array");
    out.clear();
    for (const auto& v : j[key]) {
      if (!v.is_string())
        throw std::runtime_error(std::string("config: ") + key + " entries must be strings");
      out.push_back(parse_one(v.template get<std::string>()));
    }
  };
  cfg.framings = {vignettes::Framing::Third};
  cfg.goals = {vignettes::Goal::None, vignettes::Goal::Informative, vignettes::Goal::Social,
               vignettes::Goal::Both};
  try {
    parse_list("framings", vignettes::framing_from_string, cfg.framings);
    parse_list("goals", vignettes::goal_from_string, cfg.goals);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  parse_list("names", [](std::string s) { return s; }, cfg.names);

  cfg.vignette_pack = j.value("vignette_pack", cfg.vignette_pack);
  cfg.name_combos = j.value("name_combos", cfg.name_combos);
  cfg.semantics_combos = j.value("semantics_combos", cfg.semantics_combos);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.per_state_total = j.value("per_state_total", cfg.per_state_total);
  cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
  if (j.contains("chains")) {
    const auto& c = j["chains"];
    require_keys(c, {"n_chains", "n_warmup", "n_samples", "target_accept", "init_step"}, "chains");
    cfg.chains.n_chains = c.value("n_chains", cfg.chains.n_chains);
    cfg.chains.n_warmup = c.value("n_warmup", cfg.chains.n_warmup);
    cfg.chains.n_samples = c.value("n_samples", cfg.chains.n_samples);
    cfg.chains.target_accept = c.value("target_accept", cfg.chains.target_accept);
    cfg.chains.init_step = c.value("init_step", cfg.chains.init_step);
  }
  cfg.ppc_draws = j.value("ppc_draws", cfg.ppc_draws);
  cfg.baseline_draws = j.value("baseline_draws", cfg.baseline_draws);
  cfg.alpha_max = j.value("alpha_max", cfg.alpha_max);
  return cfg;
}

void RunConfig::validate() const {
  if (endpoints.empty()) throw std::runtime_error("config: endpoints must be non-empty");
  std::set<std::string> labels;
  for (const auto& e : endpoints) {
    e.validate();
    if (!labels.insert(e.label()).second)
      throw std::runtime_error("config: duplicate endpoint label " + e.label() +
                               "; use checkpoint to disambiguate");
  }
  if (judge) judge->validate();
  if (framings.empty()) throw std::runtime_error("config: framings must be non-empty");
  if (goals.empty()) throw std::runtime_error("config: goals must be non-empty");
  if (vignette_pack.empty()) throw std::runtime_error("config: vignette_pack must be non-empty");
  if (out_dir.empty()) throw std::runtime_error("config: out_dir must be non-empty");
  if (name_combos < 1) throw std::runtime_error("config: name_combos must be at least 1");
  if (semantics_combos < 1 || semantics_combos > name_combos)
    throw std::runtime_error("config: semantics_combos must lie in [1, name_combos]");
  if (per_state_total < 1) throw std::runtime_error("config: per_state_total must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::runtime_error("config: train_fraction must lie strictly between 0 and 1");
  if (chains.n_chains < 1) throw std::runtime_error("config: chains.n_chains must be at least 1");
  if (chains.n_warmup < 0) throw std::runtime_error("config: chains.n_warmup must not be negative");
  if (chains.n_samples < 1) throw std::runtime_error("config: chains.n_samples must be at least 1");
  if (ppc_draws < 1) throw std::runtime_error("config: ppc_draws must be at least 1");
  if (baseline_draws < 2) throw std::runtime_error("config: baseline_draws must be at least 2");
  if (!(alpha_max > 0.0)) throw std::runtime_error("config: alpha_max must be positive");
}

std::string RunConfig::canonical_hash() const {
  json j;
  j["endpoints"] = json::array();
  for (const auto& e : endpoints) j["endpoints"].push_back(endpoint_to_json(e));
  j["judge"] = judge ? endpoint_to_json(*judge) : json();
  j["framings"] = json::array();
  for (auto f : framings) j["framings"].push_back(vignettes::to_string(f));
  j["goals"] = json::array();
  for (auto g : goals) j["goals"].push_back(vignettes::to_string(g));
  j["vignette_pack"] = vignette_pack;
  j["names"] = names;
  j["name_combos"] = name_combos;
  j["semantics_combos"] = semantics_combos;
  j["seed"] = seed;
  j["per_state_total"] = per_state_total;
  j["train_fraction"] = format_double(train_fraction);
  j["chains"] = {{"n_chains", chains.n_chains},
                 {"n_warmup", chains.n_warmup},
                 {"n_samples", chains.n_samples},
                 {"target_accept", format_double(chains.target_accept)},
                 {"init_step", format_double(chains.init_step)}};
  j["ppc_draws"] = ppc_draws;
  j["baseline_draws"] = baseline_draws;
  j["alpha_max"] = format_double(alpha_max);
  return hex64(fnv1a64(j.dump()));
}

}  // namespace polite::cli
