#include "polite/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "polite/datastore.hpp"
#include "polite/io.hpp"
#include "polite/numeric.hpp"
#include "polite/rng.hpp"
#include "polite/semantics.hpp"

namespace polite::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using vignettes::Task;
using vignettes::TrialSpec;

struct Session {
  RunConfig cfg;
  store::RunStore run;
  std::vector<vignettes::Vignette> pack;
  rsa::Lexicon lex;
  std::vector<std::string> utt_ids;
  vignettes::PlanConfig plan_cfg;
};

Session open_session(const CommandOptions& opts) {
  RunConfig cfg = load_config(opts.config_path);
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  if (opts.seed_override) cfg.seed = *opts.seed_override;
  cfg.validate();
  Session s{cfg, store::RunStore(cfg.out_dir), vignettes::load_pack(cfg.vignette_pack),
            rsa::default_lexicon()};
  for (const auto& u : rsa::utterance_set(s.lex)) s.utt_ids.push_back(u.id());
  s.plan_cfg.vignettes = s.pack;
  s.plan_cfg.names = cfg.names.empty() ? vignettes::default_name_pool() : cfg.names;
  s.plan_cfg.lexicon = s.lex;
  s.plan_cfg.framings = cfg.framings;
  s.plan_cfg.goals = cfg.goals;
  s.plan_cfg.main_name_combos = cfg.name_combos;
  s.plan_cfg.semantics_name_combos = cfg.semantics_combos;
  s.plan_cfg.seed = cfg.seed;
  return s;
}

void ensure_run_dir(const Session& s) {
  fs::create_directories(s.run.root());
  s.run.check_or_write_config_hash(s.cfg.canonical_hash());
}

std::vector<TrialSpec> load_plan(const Session& s) {
  auto p = s.run.plan_path();
  if (!fs::exists(p)) throw std::runtime_error(p.string() + " not found; run the plan command first");
  std::vector<TrialSpec> trials;
  for (const auto& line : io::read_lines(p)) {
    if (line.empty()) continue;
    trials.push_back(vignettes::trial_from_json(line));
  }
  return trials;
}

std::string utc_now_string() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool task_selected(const std::string& opt, Task t) {
  if (opt == "all") return true;
  if (opt == "main") return t == Task::Main;
  if (opt == "semantics") return t == Task::Semantics;
  throw std::runtime_error("unknown --task value \"" + opt + "\" (expected all, main, or semantics)");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<store::ConditionKey> condition_grid(const RunConfig& cfg) {
  std::vector<store::ConditionKey> keys;
  for (const auto& ep : cfg.endpoints)
    for (auto f : cfg.framings)
      for (auto g : cfg.goals)
        keys.push_back({ep.label(), vignettes::to_string(f), vignettes::to_string(g)});
  return keys;
}

// MAP estimates from the original human behavioral study, emitted next to
// the fitted values for side-by-side comparison.
void write_human_reference(const store::RunStore& run) {
  io::write_file(run.human_reference_path(),
                 "goal,phi_map,omega_pre_map\n"
                 "informative,0.49,0.62\n"
                 "social,0.37,0.44\n"
                 "both,0.36,0.54\n");
}

// Rebuilds every derived table (choices, distributions, counts, semantics,
// theta) from the raw logs currently on disk. Unparseable answers go through
// the judge endpoint when one is configured; judge replies are logged and
// reused. Conditions still missing valid responses are reported, not fatal.
std::vector<std::string> derive_tables(const Session& s, const std::vector<TrialSpec>& plan) {
  std::vector<std::string> notes;
  const auto& cfg = s.cfg;
  const auto n_states = static_cast<std::size_t>(s.plan_cfg.num_states);
  std::optional<gateway::JudgeClient> judge;
  if (cfg.judge) judge.emplace(*cfg.judge);

  std::vector<const TrialSpec*> main_trials, sem_trials;
  for (const auto& t : plan)
    (t.task == Task::Main ? main_trials : sem_trials).push_back(&t);

  std::vector<store::ChoiceRow> all_rows;
  std::map<std::string, std::unordered_map<std::string, store::ChoiceRow>> main_by_ep, sem_by_ep;

  for (const auto& ep : cfg.endpoints) {
    std::string label = ep.label();
    bool judge_down = false;
    for (Task task : {Task::Main, Task::Semantics}) {
      bool is_main = task == Task::Main;
      const auto& trials = is_main ? main_trials : sem_trials;
      auto raw_path = s.run.raw_path(label, is_main ? "main" : "semantics");
      if (trials.empty() || !fs::exists(raw_path)) continue;
      auto records = gateway::RawLog(raw_path).load();
      gateway::RawLog judge_log(s.run.raw_path(label, "judge"));
      auto judge_records = judge_log.load();
      auto& by_id = is_main ? main_by_ep[label] : sem_by_ep[label];
      for (const auto* trial : trials) {
        auto rendered = vignettes::render_prompt(*trial, s.pack, s.lex);
        std::vector<std::string> options =
            is_main ? rendered.option_texts : std::vector<std::string>{"yes", "no"};
        store::ChoiceRow row;
        row.trial_id = trial->id;
        row.condition = is_main ? store::ConditionKey{label, vignettes::to_string(trial->framing),
                                                      vignettes::to_string(trial->goal)}
                                      .str()
                                : label + "__semantics";
        row.state = trial->state;
        auto set_choice = [&](int idx, const char* method) {
          row.choice = is_main
                           ? s.utt_ids[static_cast<std::size_t>(
                                 trial->option_order[static_cast<std::size_t>(idx)])]
                           : (idx == 0 ? "yes" : "no");
          row.method = method;
        };
        auto rec_it = records.find(trial->id);
        if (rec_it == records.end()) {
          row.method = "missing";
        } else if (rec_it->second.status != "ok") {
          row.method = "failed";
        } else {
          const std::string& text = rec_it->second.text;
          std::optional<int> idx;
          if (is_main)
            idx = gateway::parse_choice_strict(text, options);
          else if (auto yn = gateway::parse_yes_no_strict(text))
            idx = *yn ? 0 : 1;
          if (idx) {
            set_choice(*idx, "strict");
          } else {
            auto jit = judge_records.find(trial->id);
            bool have = jit != judge_records.end() && jit->second.status == "ok";
            if (!have && judge && !judge_down) {
              if (auto reply = judge->ask(rendered.user, text, options)) {
                gateway::RawRecord jrec;
                jrec.trial_id = trial->id;
                jrec.payload_hash =
                    hex64(fnv1a64(gateway::JudgeClient::user_prompt(rendered.user, text, options)));
                jrec.status = "ok";
                jrec.text = *reply;
                jrec.timestamp = utc_now_string();
                judge_log.append(jrec);
                judge_records[trial->id] = jrec;
                jit = judge_records.find(trial->id);
                have = true;
              } else {
                judge_down = true;
                notes.push_back(label + ": judge endpoint unavailable; unparsed answers left pending");
              }
            }
            if (have) {
              if (auto j = gateway::JudgeClient::interpret(jit->second.text, options))
                set_choice(*j, "judge");
              else
                row.method = "invalid";
            } else {
              // Retried by the next derive when a judge is configured.
              row.method = judge ? "failed" : "invalid";
            }
          }
        }
        by_id[trial->id] = row;
        all_rows.push_back(row);
      }
    }
  }
  store::write_choices_csv(s.run.choices_path(), all_rows);

  std::vector<store::CountsRow> counts_rows;
  std::vector<store::DistributionRow> dist_rows;
  if (!main_trials.empty() && !main_by_ep.empty()) {
    auto split = store::split_train_test(plan, cfg.train_fraction, cfg.seed);
    std::unordered_set<std::string> train_ids(split.train_ids.begin(), split.train_ids.end());
    for (const auto& [label, by_id] : main_by_ep) {
      for (auto framing : cfg.framings) {
        for (auto goal : cfg.goals) {
          store::ConditionKey key{label, vignettes::to_string(framing), vignettes::to_string(goal)};
          std::vector<const TrialSpec*> cond_all, cond_train, cond_test;
          for (const auto* t : main_trials) {
            if (t->framing != framing || t->goal != goal) continue;
            cond_all.push_back(t);
            (train_ids.count(t->id) ? cond_train : cond_test).push_back(t);
          }
          if (cond_all.empty()) continue;
          auto tal_all = store::tally_choices(cond_all, by_id, s.utt_ids, n_states);
          auto tal_train = store::tally_choices(cond_train, by_id, s.utt_ids, n_states);
          auto tal_test = store::tally_choices(cond_test, by_id, s.utt_ids, n_states);
          bool complete = true;
          for (std::size_t st = 0; st < n_states; ++st)
            if (tal_train.counts.row_total(st) == 0 || tal_test.counts.row_total(st) == 0)
              complete = false;
          if (!complete) {
            notes.push_back("condition " + key.str() +
                            " lacks valid responses for some state; tables pending");
            continue;
          }
          auto probs_all = store::normalize_tally(tal_all.counts, key.str());
          for (std::size_t st = 0; st < n_states; ++st)
            for (std::size_t u = 0; u < s.utt_ids.size(); ++u)
              dist_rows.push_back({key.str(), static_cast<int>(st + 1), s.utt_ids[u],
                                   probs_all.at(st, u), tal_all.counts.row_total(st),
                                   tal_all.n_invalid[st]});
          auto probs_train = store::normalize_tally(tal_train.counts, key.str());
          auto train_counts = infer::transform_to_counts(probs_train, cfg.per_state_total);
          for (std::size_t st = 0; st < n_states; ++st)
            for (std::size_t u = 0; u < s.utt_ids.size(); ++u) {
              counts_rows.push_back(
                  {key.str(), "train", static_cast<int>(st + 1), s.utt_ids[u], train_counts.at(st, u)});
              counts_rows.push_back(
                  {key.str(), "test", static_cast<int>(st + 1), s.utt_ids[u], tal_test.counts.at(st, u)});
            }
        }
      }
    }
  }
  store::write_distributions_csv(s.run.distributions_path(), dist_rows);
  store::write_counts_csv(s.run.counts_path(), counts_rows);

  std::vector<store::SemanticsRow> sem_rows;
  for (const auto& [label, by_id] : sem_by_ep) {
    std::vector<std::int64_t> yes(s.utt_ids.size() * n_states, 0);
    std::vector<std::int64_t> total(s.utt_ids.size() * n_states, 0);
    for (const auto* t : sem_trials) {
      auto it = by_id.find(t->id);
      if (it == by_id.end()) continue;
      auto idx = static_cast<std::size_t>(t->target_utterance) * n_states +
                 static_cast<std::size_t>(t->state) - 1;
      if (it->second.choice == "yes") {
        ++yes[idx];
        ++total[idx];
      } else if (it->second.choice == "no") {
        ++total[idx];
      }
    }
    for (std::size_t u = 0; u < s.utt_ids.size(); ++u)
      for (std::size_t st = 0; st < n_states; ++st)
        sem_rows.push_back({label, s.utt_ids[u], static_cast<int>(st + 1), yes[u * n_states + st],
                            total[u * n_states + st]});
    if (std::all_of(total.begin(), total.end(), [](std::int64_t t) { return t > 0; })) {
      semantics::EndorsementCounts ec;
      ec.utterances = s.utt_ids;
      ec.num_states = n_states;
      ec.yes = yes;
      ec.total = total;
      semantics::write_semantics_csv(s.run.theta_path(label), semantics::estimate_theta(ec));
    } else {
      notes.push_back("semantics for " + label + " incomplete; endorsement table pending");
    }
  }
  store::write_semantics_run_csv(s.run.semantics_path(), sem_rows);
  return notes;
}

int run_task(const CommandOptions& opts, Task task) {
  auto s = open_session(opts);
  auto plan = load_plan(s);
  const char* stream = task == Task::Main ? "main" : "semantics";

  std::vector<gateway::TrialJob> jobs;
  for (const auto& t : plan) {
    if (t.task != task) continue;
    auto r = vignettes::render_prompt(t, s.pack, s.lex);
    jobs.push_back({t.id, r.system.value_or(""), r.user});
  }
  if (jobs.empty()) {
    std::printf("no %s trials in the plan\n", stream);
    return 0;
  }

  if (opts.dry_run) {
    for (const auto& ep : s.cfg.endpoints) {
      auto existing = gateway::RawLog(s.run.raw_path(ep.label(), stream)).load();
      std::size_t done = 0;
      for (const auto& job : jobs) {
        auto it = existing.find(job.trial_id);
        if (it != existing.end() && it->second.status == "ok") ++done;
      }
      std::printf("%s: %zu of %zu %s trials pending\n", ep.label().c_str(), jobs.size() - done,
                  jobs.size(), stream);
    }
    std::printf("dry run: no requests sent, nothing written\n");
    return 0;
  }

  ensure_run_dir(s);
  std::size_t total_failed = 0;
  for (const auto& ep : s.cfg.endpoints) {
    gateway::RawLog log(s.run.raw_path(ep.label(), stream));
    gateway::ChatClient client(ep);
    auto sum = gateway::run_requests(client, jobs, log, opts.limit);
    std::printf("%s: %zu sent, %zu skipped (already recorded), %zu failed\n", ep.label().c_str(),
                sum.requested, sum.skipped, sum.failed);
    if (!sum.fatal_error.empty()) throw std::runtime_error(ep.label() + ": " + sum.fatal_error);
    total_failed += sum.failed;
  }

  for (const auto& note : derive_tables(s, plan)) std::printf("note: %s\n", note.c_str());
  if (total_failed > 0) {
    std::printf("%zu requests failed; re-run this command to retry them\n", total_failed);
    return 1;
  }
  return 0;
}

json fit_to_json(const store::ConditionKey& key, const infer::PosteriorSummary& sum,
                 const infer::ChainConfig& cc) {
  json params;
  for (std::size_t i = 0; i < infer::kParamNames.size(); ++i) {
    const auto& p = sum.params[i];
    params[infer::kParamNames[i]] = {{"mean", p.mean},       {"map", p.map},
                                     {"hdi_low", p.hdi_low}, {"hdi_high", p.hdi_high},
                                     {"rhat", p.rhat},       {"ess", p.ess}};
  }
  json map_params;
  for (std::size_t i = 0; i < infer::kParamNames.size(); ++i)
    map_params[infer::kParamNames[i]] = infer::param_component(sum.map_params, i);
  return json{{"condition", key.str()},
              {"endpoint", key.endpoint_label},
              {"framing", key.framing},
              {"goal", key.goal},
              {"chain_config",
               {{"n_chains", cc.n_chains},
                {"n_warmup", cc.n_warmup},
                {"n_samples", cc.n_samples},
                {"seed", cc.seed},
                {"target_accept", cc.target_accept},
                {"init_step", cc.init_step}}},
              {"converged", sum.converged},
              {"warnings", sum.warnings},
              {"map_log_posterior", sum.map_log_posterior},
              {"map_params", map_params},
              {"params", params}};
}

}  // namespace

int cmd_plan(const CommandOptions& opts) {
  auto s = open_session(opts);
  std::vector<TrialSpec> trials;
  std::size_t n_main = 0, n_sem = 0;
  if (task_selected(opts.task, Task::Main)) {
    auto t = vignettes::plan_trials(s.plan_cfg, Task::Main);
    n_main = t.size();
    trials.insert(trials.end(), t.begin(), t.end());
  }
  if (task_selected(opts.task, Task::Semantics)) {
    auto t = vignettes::plan_trials(s.plan_cfg, Task::Semantics);
    n_sem = t.size();
    trials.insert(trials.end(), t.begin(), t.end());
  }
  std::size_t cells = s.cfg.framings.size() * s.cfg.goals.size();
  std::printf("planned %zu main trials across %zu condition cells (%zu each) and %zu semantics trials\n",
              n_main, cells, cells > 0 ? n_main / cells : 0, n_sem);
  if (opts.dry_run) {
    std::printf("dry run: nothing written\n");
    return 0;
  }
  ensure_run_dir(s);
  std::string out;
  for (const auto& t : trials) {
    out += vignettes::trial_to_json(t);
    out += '\n';
  }
  io::write_file(s.run.plan_path(), out);
  std::printf("wrote %s (%zu trials)\n", s.run.plan_path().string().c_str(), trials.size());
  return 0;
}

int cmd_run(const CommandOptions& opts) { return run_task(opts, Task::Main); }

int cmd_semantics(const CommandOptions& opts) { return run_task(opts, Task::Semantics); }

int cmd_fit(const CommandOptions& opts) {
  auto s = open_session(opts);
  auto counts_path = s.run.counts_path();
  if (!fs::exists(counts_path))
    throw std::runtime_error(counts_path.string() + " not found; run the run command first");
  auto counts_rows = store::read_counts_csv(counts_path);
  std::set<std::string> have_train;
  for (const auto& r : counts_rows)
    if (r.split == "train") have_train.insert(r.condition);

  std::vector<store::ConditionKey> todo;
  std::vector<std::string> missing;
  for (const auto& key : condition_grid(s.cfg))
    (have_train.count(key.str()) ? (void)todo.push_back(key)
                                 : (void)missing.push_back(key.str()));

  if (opts.dry_run) {
    for (const auto& key : todo) std::printf("would fit %s\n", key.str().c_str());
    for (const auto& c : missing) std::printf("no train counts yet for %s\n", c.c_str());
    std::printf("dry run: nothing written\n");
    return 0;
  }
  ensure_run_dir(s);

  bool all_converged = true;
  for (const auto& key : todo) {
    std::string cond = key.str();
    auto theta_path = s.run.theta_path(key.endpoint_label);
    if (!fs::exists(theta_path))
      throw std::runtime_error(theta_path.string() +
                               " not found; run the semantics command first");
    auto theta = semantics::read_semantics_csv(theta_path);
    auto train = store::counts_for(counts_rows, cond, "train", s.utt_ids, theta.num_states);
    auto ctx = infer::ModelContext::defaults(theta);
    ctx.alpha_max = s.cfg.alpha_max;
    infer::PosteriorModel model(std::move(ctx), train);
    infer::ChainConfig cc = s.cfg.chains;
    cc.seed = derive_seed(s.cfg.seed, fnv1a64(cond));
    auto chains = infer::sample_posterior(model, cc);
    auto summary = infer::summarize(chains, &model);
    infer::write_chains_csv(s.run.chains_path(cond), chains);
    io::write_file(s.run.fit_path(cond), fit_to_json(key, summary, cc).dump(2) + "\n");
    std::printf("%s: phi=%.3f alpha=%.3f omega=(%.3f, %.3f, %.3f)%s\n", cond.c_str(),
                summary.params[0].mean, summary.params[1].mean, summary.params[2].mean,
                summary.params[3].mean, summary.params[4].mean,
                summary.converged ? "" : "  [not converged]");
    for (const auto& w : summary.warnings) std::printf("  warning: %s\n", w.c_str());
    all_converged = all_converged && summary.converged;
  }
  write_human_reference(s.run);
  for (const auto& c : missing) std::printf("no train counts yet for %s; skipped\n", c.c_str());
  if (!all_converged && !opts.allow_warnings) {
    std::printf("some fits did not converge; rerun with --allow-warnings to accept them\n");
    return 2;
  }
  return 0;
}

int cmd_ppc(const CommandOptions& opts) {
  auto s = open_session(opts);
  auto counts_path = s.run.counts_path();
  if (!fs::exists(counts_path))
    throw std::runtime_error(counts_path.string() + " not found; run the run command first");
  auto counts_rows = store::read_counts_csv(counts_path);

  std::vector<store::ConditionKey> todo;
  std::vector<std::string> missing;
  for (const auto& key : condition_grid(s.cfg))
    (fs::exists(s.run.fit_path(key.str())) ? (void)todo.push_back(key)
                                           : (void)missing.push_back(key.str()));
  if (opts.dry_run) {
    for (const auto& key : todo) std::printf("would check %s\n", key.str().c_str());
    for (const auto& c : missing) std::printf("no fit yet for %s\n", c.c_str());
    std::printf("dry run: nothing written\n");
    return 0;
  }
  ensure_run_dir(s);

  std::string csv = "condition,n_inferred,inferred_mean,inferred_sd,n_baseline,baseline_mean,baseline_sd,z,direction_ok\n";
  json report = json::object();
  for (const auto& key : todo) {
    std::string cond = key.str();
    auto theta = semantics::read_semantics_csv(s.run.theta_path(key.endpoint_label));
    auto train = store::counts_for(counts_rows, cond, "train", s.utt_ids, theta.num_states);
    auto test = store::counts_for(counts_rows, cond, "test", s.utt_ids, theta.num_states);
    auto ctx = infer::ModelContext::defaults(theta);
    ctx.alpha_max = s.cfg.alpha_max;
    infer::PosteriorModel model(std::move(ctx), train);

    auto chains = infer::read_chains_csv(s.run.chains_path(cond));
    std::vector<const infer::Draw*> pooled;
    for (const auto& chain : chains.chains)
      for (const auto& d : chain) pooled.push_back(&d);
    if (pooled.empty()) throw std::runtime_error("no draws in " + s.run.chains_path(cond).string());
    std::size_t n = std::min(s.cfg.ppc_draws, pooled.size());
    std::vector<double> inferred;
    inferred.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& draw = *pooled[k * pooled.size() / n];
      inferred.push_back(infer::posterior_predictive_mse(model, draw.params, test));
    }
    auto baseline = infer::random_baseline(model, test, s.cfg.baseline_draws,
                                           derive_seed(s.cfg.seed, fnv1a64(cond + "|ppc")));
    double z = infer::two_sample_z(inferred, baseline.mses);
    double im = mean_of(inferred), isd = sd_of(inferred);
    bool direction_ok = im < baseline.mean;

    csv += cond + ',' + std::to_string(n) + ',' + format_double(im) + ',' + format_double(isd) +
           ',' + std::to_string(baseline.mses.size()) + ',' + format_double(baseline.mean) + ',' +
           format_double(baseline.sd) + ',' + format_double(z) + ',' +
           (direction_ok ? "true" : "false") + '\n';
    report[cond] = {{"inferred_mses", inferred},
                    {"baseline_mses", baseline.mses},
                    {"inferred_mean", im},
                    {"inferred_sd", isd},
                    {"baseline_mean", baseline.mean},
                    {"baseline_sd", baseline.sd},
                    {"z", z},
                    {"direction_ok", direction_ok}};
    std::printf("%s: held-out MSE %.4f under the fit vs %.4f under random parameters (z=%.2f)%s\n",
                cond.c_str(), im, baseline.mean, z,
                direction_ok ? "" : "  [fit does not beat the baseline]");
  }
  io::write_file(s.run.ppc_path(), csv);
  io::write_file(s.run.root() / "ppc.json", report.dump(2) + "\n");
  for (const auto& c : missing) std::printf("no fit yet for %s; skipped\n", c.c_str());
  return missing.empty() ? 0 : 1;
}

int cmd_report(const CommandOptions& opts) {
  auto s = open_session(opts);
  std::string csv = "condition,parameter,mean,hdi_low,hdi_high\n";
  std::vector<std::string> missing;
  bool all_converged = true;
  bool any = false;
  for (const auto& key : condition_grid(s.cfg)) {
    std::string cond = key.str();
    auto path = s.run.fit_path(cond);
    if (!fs::exists(path)) {
      missing.push_back(cond);
      continue;
    }
    any = true;
    json j = json::parse(io::read_file(path));
    for (const auto* name : infer::kParamNames) {
      const auto& p = j.at("params").at(name);
      csv += cond;
      csv += ',';
      csv += name;
      csv += ',';
      csv += format_double(p.at("mean").get<double>());
      csv += ',';
      csv += format_double(p.at("hdi_low").get<double>());
      csv += ',';
      csv += format_double(p.at("hdi_high").get<double>());
      csv += '\n';
    }
    bool converged = j.at("converged").get<bool>();
    all_converged = all_converged && converged;
    std::printf("%s: phi=%.3f [%.3f, %.3f]  omega_pre=%.3f [%.3f, %.3f]%s\n", cond.c_str(),
                j.at("params").at("phi").at("mean").get<double>(),
                j.at("params").at("phi").at("hdi_low").get<double>(),
                j.at("params").at("phi").at("hdi_high").get<double>(),
                j.at("params").at("omega_pre").at("mean").get<double>(),
                j.at("params").at("omega_pre").at("hdi_low").get<double>(),
                j.at("params").at("omega_pre").at("hdi_high").get<double>(),
                converged ? "" : "  [not converged]");
  }
  if (opts.dry_run) {
    for (const auto& c : missing) std::printf("missing fit for %s\n", c.c_str());
    std::printf("dry run: nothing written\n");
    return missing.empty() ? 0 : 1;
  }
  if (!any && !missing.empty())
    throw std::runtime_error("no fits found under " + s.run.root().string() +
                             "; run the fit command first");
  ensure_run_dir(s);
  io::write_file(s.run.report_path(), csv);
  write_human_reference(s.run);
  std::printf("human reference (MAP): informative phi=0.49 omega_pre=0.62; social phi=0.37 "
              "omega_pre=0.44; both phi=0.36 omega_pre=0.54\n");
  std::printf("wrote %s and %s\n", s.run.report_path().string().c_str(),
              s.run.human_reference_path().string().c_str());
  if (!missing.empty()) {
    for (const auto& c : missing) std::printf("missing fit for %s\n", c.c_str());
    return 1;
  }
  if (!all_converged && !opts.allow_warnings) {
    std::printf("some fits did not converge; rerun with --allow-warnings to accept them\n");
    return 2;
  }
  return 0;
}

}  // namespace polite::cli
