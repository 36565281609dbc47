#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "polite/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Polite-speech evaluation: plan a prompt battery, query chat endpoints, fit the "
               "speaker model per condition, and report parameter estimates."};
  app.require_subcommand(1);

  std::string config_path, out_override, task = "all";
  std::uint64_t seed_val = 0;
  std::size_t limit = SIZE_MAX;
  bool dry_run = false, allow_warnings = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config JSON file")->required();
    sub->add_option("--out", out_override, "override the config's output directory");
    sub->add_option("--seed", seed_val, "override the config's seed");
    sub->add_flag("--dry-run", dry_run, "describe the work without writing or sending anything");
    return sub;
  };

  auto* plan = add_common(app.add_subcommand("plan", "write the trial plan"));
  plan->add_option("--task", task, "which trials to plan: all | main | semantics");
  auto* run = add_common(app.add_subcommand("run", "send main-task prompts and derive tables"));
  run->add_option("--limit", limit, "cap on new requests per endpoint");
  auto* semantics =
      add_common(app.add_subcommand("semantics", "send literal-semantics prompts and derive tables"));
  semantics->add_option("--limit", limit, "cap on new requests per endpoint");
  auto* fit = add_common(app.add_subcommand("fit", "sample the parameter posterior per condition"));
  fit->add_flag("--allow-warnings", allow_warnings,
                "exit 0 even when fits carry non-convergence flags");
  auto* ppc = add_common(
      app.add_subcommand("ppc", "held-out predictive check against a random-parameter baseline"));
  auto* report = add_common(app.add_subcommand("report", "collect fits into plot-ready tables"));
  report->add_flag("--allow-warnings", allow_warnings,
                   "exit 0 even when fits carry non-convergence flags");

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  polite::cli::CommandOptions opts;
  opts.config_path = config_path;
  opts.out_override = out_override;
  if (sub->count("--seed") > 0) opts.seed_override = seed_val;
  opts.dry_run = dry_run;
  opts.allow_warnings = allow_warnings;
  opts.limit = limit;
  opts.task = task;

  try {
    if (sub == plan) return polite::cli::cmd_plan(opts);
    if (sub == run) return polite::cli::cmd_run(opts);
    if (sub == semantics) return polite::cli::cmd_semantics(opts);
    if (sub == fit) return polite::cli::cmd_fit(opts);
    if (sub == ppc) return polite::cli::cmd_ppc(opts);
    if (sub == report) return polite::cli::cmd_report(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
