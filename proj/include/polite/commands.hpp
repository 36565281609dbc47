#pragma once

#include "polite/config.hpp"

namespace polite::cli {

// Pipeline commands. Each throws on hard errors (bad config, missing inputs,
// fatal endpoint errors) and otherwise returns 0 on success, 1 when per-trial
// failures or missing upstream outputs were reported, or 2 when fits carry
// non-convergence flags and allow_warnings is not set.
int cmd_plan(const CommandOptions& opts);
int cmd_run(const CommandOptions& opts);
int cmd_semantics(const CommandOptions& opts);
int cmd_fit(const CommandOptions& opts);
int cmd_ppc(const CommandOptions& opts);
int cmd_report(const CommandOptions& opts);

}  // namespace polite::cli
