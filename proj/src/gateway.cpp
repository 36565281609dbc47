#include "polite/gateway.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "polite/io.hpp"
#include "polite/numeric.hpp"

namespace polite::gateway {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Peels quotes, markdown stars, parens and a trailing period off an answer.
std::string strip_decoration(std::string t) {
  auto is_front_junk = [](char c) { return c == '"' || c == '\'' || c == '*' || c == '('; };
  auto is_back_junk = [](char c) {
    return c == '"' || c == '\'' || c == '*' || c == ')' || c == '.' || c == ' ';
  };
  bool changed = true;
  while (changed && !t.empty()) {
    changed = false;
    if (is_front_junk(t.front())) {
      t.erase(t.begin());
      changed = true;
    }
    if (!t.empty() && is_back_junk(t.back())) {
      t.pop_back();
      changed = true;
    }
    t = trim(t);
  }
  return t;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string EndpointProfile::label() const {
  std::string raw = model;
  if (!checkpoint.empty()) raw += "-" + checkpoint;
  raw += "-" + reasoning_effort;
  for (char& c : raw)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-'))
      c = '_';
  return raw;
}

void EndpointProfile::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("endpoint: " + msg); };
  if (model.empty()) fail("model must not be empty");
  if (reasoning_effort != "none" && reasoning_effort != "low" && reasoning_effort != "medium")
    fail("reasoning_effort '" + reasoning_effort + "' not one of none|low|medium");
  if (budget_mode != "none" && budget_mode != "effort" && budget_mode != "tokens")
    fail("budget_mode '" + budget_mode + "' not one of none|effort|tokens");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
    fail("base_url must start with http:// or https://");
  if (chat_path.empty() || chat_path[0] != '/') fail("chat_path must start with /");
  if (timeout_sec <= 0) fail("timeout_sec must be positive");
  if (max_retries < 0) fail("max_retries must be >= 0");
  if (backoff_ms < 0) fail("backoff_ms must be >= 0");
  if (max_parallel < 1) fail("max_parallel must be >= 1");
  if (rate_limit_rpm < 0) fail("rate_limit_rpm must be >= 0");
}

int reasoning_budget_tokens(const std::string& effort) {
  if (effort == "none") return 0;
  if (effort == "low") return 1000;
  if (effort == "medium") return 8000;
  throw std::invalid_argument("unknown reasoning effort '" + effort + "'");
}

struct ChatClient::Impl {
  EndpointProfile profile;
  std::mutex rate_mutex;
  std::chrono::steady_clock::time_point next_allowed = std::chrono::steady_clock::now();

  void rate_acquire() {
    if (profile.rate_limit_rpm <= 0.0) return;
    auto spacing = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / profile.rate_limit_rpm));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(rate_mutex);
      auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_allowed);
      next_allowed = slot + spacing;
    }
    std::this_thread::sleep_until(slot);
  }
};

ChatClient::ChatClient(EndpointProfile profile) : impl_(std::make_unique<Impl>()) {
  profile.validate();
#ifndef POLITE_HAVE_OPENSSL
  if (profile.base_url.rfind("https://", 0) == 0)
    throw std::invalid_argument("endpoint: https base_url requires a build with OpenSSL");
#endif
  impl_->profile = std::move(profile);
}

ChatClient::~ChatClient() = default;

const EndpointProfile& ChatClient::profile() const { return impl_->profile; }

std::string ChatClient::build_payload(const std::string& system, const std::string& user) const {
  const auto& p = impl_->profile;
  json messages = json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  json payload = {{"model", p.model}, {"messages", messages}};
  if (p.reasoning_effort != "none" && p.budget_mode != "none") {
    if (p.budget_mode == "effort")
      payload["reasoning_effort"] = p.reasoning_effort;
    else
      payload["reasoning"] = {{"budget_tokens", reasoning_budget_tokens(p.reasoning_effort)}};
  }
  return payload.dump();
}

ChatResult ChatClient::complete(const std::string& system, const std::string& user) {
  const auto& p = impl_->profile;
  ChatResult out;
  std::string payload = build_payload(system, user);
  out.payload_hash = hex64(fnv1a64(payload));

  std::string bearer;
  if (!p.api_key_env.empty()) {
    const char* key = std::getenv(p.api_key_env.c_str());
    if (!key || !*key) {
      out.status = "error";
      out.error = "api key environment variable " + p.api_key_env + " is not set";
      return out;
    }
    bearer = key;
  }

  auto started = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt <= p.max_retries; ++attempt) {
    out.attempts = attempt + 1;
    if (attempt > 0) {
      auto wait = std::chrono::milliseconds(
          std::min<std::int64_t>(30000, p.backoff_ms * (std::int64_t{1} << (attempt - 1))));
      std::this_thread::sleep_for(wait);
    }
    impl_->rate_acquire();

    httplib::Client cli(p.base_url);
    cli.set_connection_timeout(p.timeout_sec, 0);
    cli.set_read_timeout(p.timeout_sec, 0);
    cli.set_write_timeout(p.timeout_sec, 0);
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

    auto res = cli.Post(p.chat_path, headers, payload, "application/json");
    if (!res) {
      out.status = "error";
      out.error = std::string("transport: ") + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 429 || res->status >= 500) {
      out.status = "error";
      out.error = "http " + std::to_string(res->status);
      continue;  // retryable
    }
    if (res->status != 200) {
      out.status = "error";
      out.error = "http " + std::to_string(res->status);
      break;  // auth/client errors will not fix themselves
    }
    try {
      json body = json::parse(res->body);
      out.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
      out.status = "ok";
      out.error.clear();
      break;
    } catch (const std::exception& e) {
      out.status = "error";
      out.error = std::string("malformed response body: ") + e.what();
      continue;
    }
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             started)
                       .count();
  return out;
}

bool is_fatal_error(const std::string& error) {
  return error.find("http 401") != std::string::npos ||
         error.find("http 403") != std::string::npos ||
         error.find("api key environment variable") != std::string::npos;
}

std::optional<int> parse_choice_strict(const std::string& answer,
                                       const std::vector<std::string>& options) {
  std::string t = strip_decoration(trim(answer));
  if (t.empty()) return std::nullopt;
  auto letter_index = [&](char c) -> std::optional<int> {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
    int idx = std::toupper(static_cast<unsigned char>(c)) - 'A';
    if (idx < 0 || static_cast<std::size_t>(idx) >= options.size()) return std::nullopt;
    return idx;
  };
  if (t.size() == 1) return letter_index(t[0]);
  if (t.size() >= 2 && (t[1] == ')' || t[1] == '.' || t[1] == ':'))
    if (auto idx = letter_index(t[0])) return idx;
  std::string tl = lower(t);
  for (std::size_t i = 0; i < options.size(); ++i)
    if (tl == lower(options[i])) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<bool> parse_yes_no_strict(const std::string& answer) {
  std::string t = lower(strip_decoration(trim(answer)));
  if (t == "yes") return true;
  if (t == "no") return false;
  return std::nullopt;
}

JudgeClient::JudgeClient(EndpointProfile profile) : client_(std::move(profile)) {}

std::string JudgeClient::system_prompt() {
  return "Another LLM was given a set of answer options and a prompt, and asked to output an "
         "answer. Sometimes that answer doesn't exactly match the provided answer options. Your "
         "job is to determine which of the answer options the model's answer is selecting, or "
         "if none, respond with \"INVALID ANSWER\". Respond ONLY with one of the possible "
         "answer options.";
}

std::string JudgeClient::user_prompt(const std::string& prompt_text,
                                     const std::string& model_answer,
                                     const std::vector<std::string>& options) {
  std::string opts;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) opts += ", ";
    opts += options[i];
  }
  return "Another LLM was given the following prompt: " + prompt_text +
         "\nIt gave the following answer: " + model_answer +
         "\nThe valid answer options are: " + opts +
         "\nWhich of the above answer options did the LLM select?\nIf none of them, respond "
         "with \"INVALID ANSWER\".\nYour answer:";
}

std::optional<std::string> JudgeClient::ask(const std::string& prompt_text,
                                            const std::string& model_answer,
                                            const std::vector<std::string>& options) {
  auto res = client_.complete(system_prompt(), user_prompt(prompt_text, model_answer, options));
  if (res.status != "ok") return std::nullopt;
  return res.text;
}

std::optional<int> JudgeClient::interpret(const std::string& reply,
                                          const std::vector<std::string>& options) {
  std::string t = trim(reply);
  if (lower(t).find("invalid answer") != std::string::npos) return std::nullopt;
  std::string tl = lower(strip_decoration(t));
  for (std::size_t i = 0; i < options.size(); ++i)
    if (tl == lower(options[i])) return static_cast<int>(i);
  return parse_choice_strict(reply, options);
}

std::string RawRecord::to_json() const {
  json j = {{"trial_id", trial_id},   {"payload_hash", payload_hash}, {"status", status},
            {"text", text},           {"error", error},               {"attempts", attempts},
            {"latency_ms", latency_ms}, {"timestamp", timestamp}};
  return j.dump();
}

RawRecord RawRecord::from_json(const std::string& line) {
  json j = json::parse(line);
  RawRecord r;
  r.trial_id = j.at("trial_id");
  r.payload_hash = j.value("payload_hash", "");
  r.status = j.at("status");
  r.text = j.value("text", "");
  r.error = j.value("error", "");
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.timestamp = j.value("timestamp", "");
  return r;
}

struct RawLog::State {
  std::mutex mutex;
};

RawLog::RawLog(std::filesystem::path path)
    : path_(std::move(path)), state_(std::make_shared<State>()) {}

std::unordered_map<std::string, RawRecord> RawLog::load() const {
  std::unordered_map<std::string, RawRecord> out;
  if (!std::filesystem::exists(path_)) return out;
  for (const auto& line : io::read_lines(path_)) {
    if (line.empty()) continue;
    auto rec = RawRecord::from_json(line);
    out[rec.trial_id] = rec;
  }
  return out;
}

void RawLog::append(const RawRecord& rec) {
  std::lock_guard lock(state_->mutex);
  io::append_line(path_, rec.to_json());
}

ExecSummary run_requests(ChatClient& client, const std::vector<TrialJob>& jobs, RawLog& log,
                         std::size_t limit) {
  ExecSummary summary;
  auto existing = log.load();
  std::vector<const TrialJob*> pending;
  for (const auto& job : jobs) {
    auto it = existing.find(job.trial_id);
    if (it != existing.end() && it->second.status == "ok") {
      ++summary.skipped;
      continue;
    }
    if (pending.size() < limit) pending.push_back(&job);
  }
  summary.requested = pending.size();

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};
  std::mutex fatal_mutex;
  std::string fatal;

  auto worker = [&]() {
    while (true) {
      {
        std::lock_guard lock(fatal_mutex);
        if (!fatal.empty()) return;
      }
      std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const TrialJob& job = *pending[i];
      auto res = client.complete(job.system, job.user);
      RawRecord rec;
      rec.trial_id = job.trial_id;
      rec.payload_hash = res.payload_hash;
      rec.status = res.status;
      rec.text = res.text;
      rec.error = res.error;
      rec.attempts = res.attempts;
      rec.latency_ms = res.latency_ms;
      rec.timestamp = utc_now();
      log.append(rec);
      if (res.status != "ok") {
        failed.fetch_add(1);
        if (is_fatal_error(res.error)) {
          std::lock_guard lock(fatal_mutex);
          if (fatal.empty()) fatal = res.error;
        }
      }
    }
  };

  std::size_t n_threads = std::min<std::size_t>(
      static_cast<std::size_t>(client.profile().max_parallel), std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  summary.failed = failed.load();
  summary.fatal_error = fatal;
  return summary;
}

}  // namespace polite::gateway
