#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace polite::gateway {

// One model endpoint under one reasoning-effort setting.
struct EndpointProfile {
  std::string provider = "openai";        // wire format; openai-compatible chat only
  std::string model;
  std::string reasoning_effort = "none";  // none | low | medium
  std::string budget_mode = "tokens";     // none: omit | tokens: budget field | effort: pass-through
  std::string checkpoint;                 // optional label distinguishing checkpoints
  std::string base_url = "http://127.0.0.1:8080";
  std::string chat_path = "/v1/chat/completions";
  std::string api_key_env;                // env var with the bearer token; empty = no auth
  double rate_limit_rpm = 0.0;            // 0 = unlimited
  int timeout_sec = 60;
  int max_retries = 3;
  int backoff_ms = 500;
  int max_parallel = 4;

  std::string label() const;  // filesystem-safe: model[-checkpoint]-effort
  void validate() const;
};

// Thinking-budget mapping: low -> 1000 tokens, medium -> 8000, none -> 0.
int reasoning_budget_tokens(const std::string& effort);

struct ChatResult {
  std::string text;
  std::string status = "ok";  // ok | error
  std::string error;
  int attempts = 0;
  double latency_ms = 0.0;
  std::string payload_hash;
};

class ChatClient {
 public:
  explicit ChatClient(EndpointProfile profile);
  ~ChatClient();
  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  const EndpointProfile& profile() const;
  // Exact request body, deterministic key order; hashed for idempotency.
  std::string build_payload(const std::string& system, const std::string& user) const;
  // Sends with retry/backoff on transport errors, 429 and 5xx. Thread-safe.
  ChatResult complete(const std::string& system, const std::string& user);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// True when the error means every further request would also fail.
bool is_fatal_error(const std::string& error);

// Strict extraction: a bare option letter (with optional decoration) or the
// exact option text. Returns the option index.
std::optional<int> parse_choice_strict(const std::string& answer,
                                       const std::vector<std::string>& options);
std::optional<bool> parse_yes_no_strict(const std::string& answer);

// Secondary model that maps free-form answers back onto the option list.
class JudgeClient {
 public:
  explicit JudgeClient(EndpointProfile profile);
  const EndpointProfile& profile() const { return client_.profile(); }

  static std::string system_prompt();
  static std::string user_prompt(const std::string& prompt_text, const std::string& model_answer,
                                 const std::vector<std::string>& options);
  // Raw judge call; empty optional on transport failure.
  std::optional<std::string> ask(const std::string& prompt_text, const std::string& model_answer,
                                 const std::vector<std::string>& options);
  // Maps a judge reply onto an option index; nullopt = invalid answer.
  static std::optional<int> interpret(const std::string& reply,
                                      const std::vector<std::string>& options);

 private:
  ChatClient client_;
};

// One line per completed request, appended as JSONL before any parsing.
struct RawRecord {
  std::string trial_id;
  std::string payload_hash;
  std::string status;  // ok | error
  std::string text;
  std::string error;
  int attempts = 0;
  double latency_ms = 0.0;
  std::string timestamp;  // UTC, second resolution

  std::string to_json() const;
  static RawRecord from_json(const std::string& line);
};

class RawLog {
 public:
  explicit RawLog(std::filesystem::path path);
  const std::filesystem::path& path() const { return path_; }
  // Last record per trial wins; missing file means empty.
  std::unordered_map<std::string, RawRecord> load() const;
  void append(const RawRecord& rec);  // serialized across threads

 private:
  struct State;
  std::filesystem::path path_;
  std::shared_ptr<State> state_;
};

struct TrialJob {
  std::string trial_id;
  std::string system;  // empty = no system message
  std::string user;
};

struct ExecSummary {
  std::size_t requested = 0;  // jobs sent this run
  std::size_t skipped = 0;    // already had an ok record
  std::size_t failed = 0;     // recorded with status=error
  std::string fatal_error;    // non-empty when the run aborted early
};

// Runs jobs against the endpoint with bounded parallelism, skipping trials
// that already have an ok record. Every response lands in the log before it
// is interpreted anywhere. `limit` caps how many missing trials are sent.
ExecSummary run_requests(ChatClient& client, const std::vector<TrialJob>& jobs, RawLog& log,
                         std::size_t limit = SIZE_MAX);

}  // namespace polite::gateway
